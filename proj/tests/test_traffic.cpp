/*
 * Copyright 2026 The TeraPool-Sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "terapool/errors.hpp"
#include "terapool/traffic.hpp"

#include <doctest.h>

#include <algorithm>

using namespace terapool;
using namespace terapool::traffic;

namespace {

ClusterConfig small_cluster() {
    ClusterConfig cfg;
    cfg.cores_per_tile = 4;
    cfg.banks_per_tile = 8;
    cfg.bank_words = 64;
    cfg.tiles_per_subgroup = 2;
    cfg.subgroups_per_group = 2;
    cfg.groups = 2;
    cfg.latency_profile = LatencyProfile::parse("1-3-5-7");
    return cfg;
}

}  // namespace

TEST_SUITE("traffic") {

TEST_CASE("sources are reproducible per (seed, core)") {
    const auto cfg = ClusterConfig::terapool();
    PoissonProfile p{0.2, 42, 5000, 500};
    const auto a = generate(p, 17, cfg);
    const auto b = generate(p, 17, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].cycle == b[i].cycle);
        CHECK(a[i].addr == b[i].addr);
    }
    const auto other = generate(p, 18, cfg);
    CHECK((other.size() != a.size() || other.front().addr != a.front().addr));
}

TEST_CASE("issue rate and destinations follow the profile") {
    const auto cfg = ClusterConfig::terapool();
    PoissonProfile p{0.25, 3, 200000, 0};
    const auto reqs = generate(p, 5, cfg);
    const double rate = static_cast<double>(reqs.size()) / 200000.0;
    CHECK(rate == doctest::Approx(0.25).epsilon(0.02));
    std::array<std::uint64_t, 4> by_class{};
    for (const auto& r : reqs) {
        CHECK(r.addr < cfg.total_words());
        ++by_class[index_of(destination_class(5, locate_bank(r.addr, cfg).bank, cfg))];
    }
    const auto probs = class_probabilities(cfg);
    for (std::size_t c = 1; c < 4; ++c) {
        CHECK(static_cast<double>(by_class[c]) / static_cast<double>(reqs.size()) == doctest::Approx(probs[c]).epsilon(0.1));
    }
}

TEST_CASE("profile validation") {
    CHECK_THROWS_AS((PoissonProfile{1.5, 1, 100, 10}.validate()), ConfigError);
    CHECK_THROWS_AS((PoissonProfile{-0.1, 1, 100, 10}.validate()), ConfigError);
    CHECK_THROWS_AS((PoissonProfile{0.1, 1, 100, 100}.validate()), ConfigError);
    CHECK_NOTHROW((PoissonProfile{0.0, 1, 100, 10}.validate()));
}

TEST_CASE("lambda grid") {
    const auto g = SweepSpec::grid(0.1, 0.3, 0.1);
    REQUIRE(g.size() == 3);
    CHECK(g[2] == 0.3);
    CHECK(SweepSpec::grid(0.05, 0.05, 0.01).size() == 1);
    CHECK_THROWS_AS((void)SweepSpec::grid(0.1, 0.2, 0.0), ConfigError);
    CHECK_THROWS_AS((void)SweepSpec::grid(0.3, 0.2, 0.1), ConfigError);
}

TEST_CASE("zero load gives zero throughput and no samples") {
    SweepSpec spec;
    spec.duration = 500;
    spec.warmup = 100;
    const auto p = run_point(small_cluster(), 0.0, 1, spec);
    CHECK(p.throughput == 0.0);
    CHECK(p.stats.injected == 0);
}

TEST_CASE("low load latency approaches the analytic mean") {
    const auto cfg = ClusterConfig::terapool(LatencyProfile::parse("1-3-5-9"));
    SweepSpec spec;
    spec.duration = 4000;
    spec.warmup = 500;
    const auto p = run_point(cfg, 0.01, 7, spec);
    CHECK(p.throughput == doctest::Approx(0.01).epsilon(0.1));
    CHECK(p.mean_latency == doctest::Approx(expected_zero_load_latency(cfg)).epsilon(0.05));
}

TEST_CASE("sweep output does not depend on thread count") {
    SweepSpec spec;
    spec.lambdas = {0.3, 0.1, 0.5};
    spec.seeds = {3, 1};
    spec.duration = 1500;
    spec.warmup = 300;
    spec.threads = 1;
    const auto serial = run_load_sweep(small_cluster(), spec);
    spec.threads = 4;
    const auto parallel = run_load_sweep(small_cluster(), spec);
    CHECK(sweep_csv(serial) == sweep_csv(parallel));
    REQUIRE(serial.points.size() == 6);
    CHECK(serial.points[0].lambda == 0.1);
    CHECK(serial.points[0].seed == 1);
    CHECK(serial.points[1].seed == 3);
    CHECK(serial.points[5].lambda == 0.5);
}

TEST_CASE("sweep CSV schema") {
    SweepSpec spec;
    spec.lambdas = {0.1};
    spec.duration = 400;
    spec.warmup = 100;
    const auto csv = sweep_csv(run_load_sweep(small_cluster(), spec));
    CHECK(csv.rfind("lambda,seed,throughput,mean_latency,p99_latency\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("saturation from a synthetic curve") {
    std::vector<CurvePoint> curve;
    for (int i = 1; i <= 10; ++i) {
        const double l = 0.05 * i;
        curve.push_back({l, std::min(l, 0.22), 5.0 + (l > 0.22 ? 40.0 : l * 10)});
    }
    const auto s = find_saturation(curve);
    CHECK(s.sat_throughput == doctest::Approx(0.22));
    CHECK(s.knee_lambda == doctest::Approx(0.20));
    CHECK(s.knee_latency == doctest::Approx(7.0));

    std::vector<CurvePoint> linear;
    for (int i = 1; i <= 5; ++i) linear.push_back({0.01 * i, 0.01 * i, 5.0});
    CHECK_THROWS_AS((void)find_saturation(linear), NotSaturated);
    CHECK_THROWS_AS((void)find_saturation({}), NotSaturated);
}

TEST_CASE("overloaded small cluster saturates") {
    SweepSpec spec;
    spec.lambdas = SweepSpec::grid(0.1, 1.0, 0.1);
    spec.duration = 2000;
    spec.warmup = 500;
    const auto sweep = run_load_sweep(small_cluster(), spec);
    const auto s = find_saturation(sweep.curve());
    CHECK(s.sat_throughput > 0.05);
    CHECK(s.sat_throughput < 1.0);
    for (const auto& p : sweep.points) CHECK(p.throughput <= p.lambda * 1.1 + 0.01);
}

}  // TEST_SUITE
