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

#include "terapool/analytics.hpp"
#include "terapool/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

using namespace terapool;
using namespace terapool::analytics;

namespace {

// Nearest KiB, ties down, written as floating point to stay independent of
// the integer implementation.
std::uint64_t kib_oracle(std::uint64_t bytes) { return static_cast<std::uint64_t>(std::ceil(bytes / 1024.0 - 0.5)); }

}  // namespace

TEST_SUITE("analytics") {

TEST_CASE("PUSCH transfer table") {
    const auto split = pusch_transfer_model({});
    CHECK(split.out_kib() == 205);
    CHECK(split.in_kib() == 213);
    CHECK(split.total_kib() == 418);
    CHECK(split.occupation_kib() == 520);
    CHECK(split.fits(PuschScenario{}));
    CHECK(split.matmul_dims == std::array<std::uint32_t, 3>{32, 819, 64});

    PuschScenario one;
    one.n_clusters = 1;
    one.l1_per_cluster_bytes = 4u << 20;
    const auto shared = pusch_transfer_model(one);
    CHECK(shared.out_kib() == 0);
    CHECK(shared.in_kib() == 8);
    CHECK(shared.total_kib() == 8);
    CHECK(shared.occupation_kib() == 2055);
    CHECK(shared.fits(one));
    CHECK_FALSE(shared.fits(PuschScenario{}));
}

TEST_CASE("KiB rounding") {
    CHECK(to_kib(0) == 0);
    CHECK(to_kib(512) == 0);
    CHECK(to_kib(513) == 1);
    CHECK(to_kib(1024 + 512) == 1);
    CHECK(to_kib(209664) == 205);
    for (std::uint64_t b = 0; b < 100000; b += 37) CHECK(to_kib(b) == kib_oracle(b));
}

TEST_CASE("PUSCH model properties over random scenarios") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::uint32_t> clusters(1, 8), mult(1, 16), beams(1, 64);
    for (int i = 0; i < 500; ++i) {
        PuschScenario s;
        s.n_clusters = clusters(rng);
        s.n_antennas = s.n_clusters * mult(rng);
        s.n_subcarriers = s.n_clusters * mult(rng) * 12;
        s.n_beams = beams(rng);
        const auto r = pusch_transfer_model(s);
        const std::uint64_t w = s.word_bytes;
        const std::uint64_t coeff = std::uint64_t{s.n_beams} * s.n_antennas * w;
        CHECK(r.total_transfer_bytes == r.transfer_out_ofdm_bytes + r.transfer_in_bf_bytes);
        CHECK(r.total_kib() == r.out_kib() + r.in_kib());
        CHECK(r.coefficient_bytes == coeff);
        CHECK(r.max_l1_occupation_bytes ==
              r.ofdm_buffer_bytes + r.bf_input_bytes + r.coefficient_bytes + r.bf_output_bytes);
        if (s.n_clusters == 1) {
            CHECK(r.transfer_out_ofdm_bytes == 0);
            CHECK(r.transfer_in_bf_bytes == coeff);
        } else {
            // Each cluster ships out its antenna slice and receives its subcarrier slice.
            CHECK(r.transfer_out_ofdm_bytes * s.n_clusters == std::uint64_t{s.n_antennas} * s.n_subcarriers * w);
            CHECK((r.transfer_in_bf_bytes - coeff) * s.n_clusters == std::uint64_t{s.n_antennas} * s.n_subcarriers * w);
            auto shared = s;
            shared.n_clusters = 1;
            CHECK(pusch_transfer_model(shared).total_transfer_bytes <= r.total_transfer_bytes);
            CHECK(pusch_transfer_model(shared).max_l1_occupation_bytes >= r.max_l1_occupation_bytes);
        }
    }
}

TEST_CASE("PUSCH scenario validation") {
    PuschScenario s;
    s.n_antennas = 63;
    CHECK_THROWS_AS((void)pusch_transfer_model(s), ConfigError);
    s = {};
    s.n_subcarriers = 3277;
    CHECK_THROWS_AS((void)pusch_transfer_model(s), ConfigError);
    s = {};
    s.n_clusters = 0;
    CHECK_THROWS_AS((void)pusch_transfer_model(s), ConfigError);
}

TEST_CASE("workload requirement") {
    const double nr = 64, nsc = 3276, nb = 32;
    const double macs = nr * nsc * std::log2(nsc) + nr * nsc * nb;
    CHECK(workload_requirement(64, 3276, 32, 14, 1e-3) == doctest::Approx(macs * 14 * 6 / 1e-3));
    CHECK(workload_requirement(64, 3276, 32, 14, 1e-3) / 1e12 == doctest::Approx(0.769).epsilon(0.005));
    CHECK(workload_requirement(128, 3276, 32, 14, 1e-3) / 1e12 == doctest::Approx(1.538).epsilon(0.005));
    CHECK(workload_requirement(128, 3276, 32, 14, 1e-3) ==
          doctest::Approx(2 * workload_requirement(64, 3276, 32, 14, 1e-3)));
    const auto e = workload_estimate(64, 3276, 32, 14, 1e-3, 4.0);
    CHECK(e.ops_per_mac == 4.0);
    CHECK(e.macs_per_stream == doctest::Approx(macs));
    CHECK_THROWS_AS((void)workload_requirement(64, 3276, 32, 0, 1e-3), ConfigError);
    CHECK_THROWS_AS((void)workload_requirement(0, 3276, 32, 14, 1e-3), ConfigError);
}

TEST_CASE("peak and achieved performance") {
    const auto tera = ClusterConfig::terapool();
    CHECK(peak_performance(tera, 730e6) / 1e12 == doctest::Approx(1.495).epsilon(1e-3));
    CHECK(peak_performance(tera, 924e6) / 1e12 == doctest::Approx(1.892).epsilon(1e-3));
    CHECK(peak_performance(ClusterConfig::mempool256(), 915e6) / 1e12 == doctest::Approx(0.468).epsilon(1e-3));
    for (double f = 100e6; f < 2e9; f += 137e6) {
        CHECK(peak_performance(tera, 2 * f) == doctest::Approx(2 * peak_performance(tera, f)));
    }
    CHECK_THROWS_AS((void)peak_performance(tera, 0.0), ConfigError);
    CHECK(achieved_performance(0.0, 100, 1e9) == 0.0);
    CHECK(achieved_performance(2e6, 1e3, 1e9) == doctest::Approx(2e12));
    CHECK(energy_efficiency(125e9, 1.0) == doctest::Approx(125e9));

    const double mm = 2.0 * 512 * 512 * 512;
    CHECK(energy_efficiency(achieved_performance(mm, 298239, 880e6) / 1e9, 6.4) == doctest::Approx(125).epsilon(0.02));
}

TEST_CASE("request energy interpolates over register stages") {
    const EnergyModel em;
    for (const std::string name : {"1-3-5-5", "1-3-5-7", "1-3-5-9", "1-3-5-11"}) {
        CAPTURE(name);
        const auto p = LatencyProfile::parse(name);
        CHECK(em.request_pj(DestClass::LocalTile, p) == doctest::Approx(9.0));
        CHECK(em.request_pj(DestClass::RemoteGroup, p) == doctest::Approx(13.5));
        CHECK(em.request_pj(DestClass::LocalSubGroup, p) > 9.0);
        CHECK(em.request_pj(DestClass::LocalGroup, p) > em.request_pj(DestClass::LocalSubGroup, p));
        CHECK(em.request_pj(DestClass::LocalGroup, p) <= 13.5);
    }
    engine::SimStats st;
    st.retired_by_class = {1000, 0, 0, 2000};
    CHECK(traffic_energy(st, LatencyProfile::parse("1-3-5-7")) == doctest::Approx((9000 + 27000) * 1e-12));
    for (const auto& kp : kReportedPower) CHECK(kp.watts > 0);
}

TEST_CASE("reference report") {
    const auto rows = reference_report();
    REQUIRE(rows.size() > 15);
    int mismatches = 0;
    for (const auto& r : rows) {
        CAPTURE(r.quantity);
        if (!r.match()) {
            ++mismatches;
            CHECK(r.quantity == "zero-load latency 1-3-5-11");
        }
    }
    CHECK(mismatches == 1);
    const auto csv = report_csv(rows);
    CHECK(csv.rfind("quantity,unit,reference,computed,match\n", 0) == 0);
    CHECK(csv.find("pusch 4x1MiB transfer total,KiB,418,418,match") != std::string::npos);
    CHECK(report_markdown(rows).find("| quantity |") != std::string::npos);

    CHECK(ReportRow{"x", "u", 4.9, 4.859, 0.0, 1}.match());
    CHECK_FALSE(ReportRow{"x", "u", 9.3, 9.359, 0.0, 1}.match());
    CHECK(ReportRow{"x", "u", 125, 123.8, 2.0, -1}.match());
}

}  // TEST_SUITE
