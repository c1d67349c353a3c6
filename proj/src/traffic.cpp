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

#include "terapool/traffic.hpp"

#include "terapool/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace terapool::traffic {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

void PoissonProfile::validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw ConfigError("lambda must be in [0, 1] requests/core/cycle, got " + std::to_string(lambda));
    }
    if (warmup >= duration) throw ConfigError("warmup must be shorter than duration");
}

PoissonSource::PoissonSource(const PoissonProfile& profile, CoreId core, std::uint64_t total_words)
    : rng_(splitmix64(profile.seed ^ splitmix64(core))), lambda_(profile.lambda), words_(total_words) {
    profile.validate();
}

bool PoissonSource::fire(WordAddr& dest) {
    if (unit(rng_) >= lambda_) return false;
    dest = std::min<WordAddr>(static_cast<WordAddr>(unit(rng_) * static_cast<double>(words_)), words_ - 1);
    return true;
}

std::vector<ScheduledRequest> generate(const PoissonProfile& profile, CoreId core, const ClusterConfig& cfg) {
    PoissonSource src(profile, core, cfg.total_words());
    std::vector<ScheduledRequest> out;
    for (Cycle t = 0; t < profile.duration; ++t) {
        WordAddr a = 0;
        if (src.fire(a)) out.push_back({t, a});
    }
    return out;
}

TrafficGenerator::TrafficGenerator(const PoissonProfile& profile, CoreId core, const ClusterConfig& cfg)
    : source_(profile, core, cfg.total_words()), duration_(profile.duration), queue_(kQueueDepth, 0) {}

void TrafficGenerator::tick(engine::Simulator& sim, CoreId core, Cycle now) {
    if (now < duration_) {
        WordAddr a = 0;
        if (source_.fire(a)) {
            ++generated_;
            if (size_ < kQueueDepth) {
                queue_[(head_ + size_) % kQueueDepth] = a;
                ++size_;
            } else {
                ++dropped_;
            }
        }
    }
    if (size_ > 0 && sim.inject(core, queue_[head_], false) == engine::InjectResult::Accepted) {
        head_ = (head_ + 1) % kQueueDepth;
        --size_;
    }
    done_ = now + 1 >= duration_ && size_ == 0;
}

std::vector<double> SweepSpec::grid(double lambda_min, double lambda_max, double step) {
    if (!(step > 0.0)) throw ConfigError("sweep.lambda_step must be positive");
    if (lambda_max < lambda_min) throw ConfigError("sweep.lambda_max must be >= sweep.lambda_min");
    std::vector<double> out;
    for (std::size_t i = 0;; ++i) {
        // Round to 1e-9 so that 0.1 + 0.2-style drift does not leak into CSV output.
        const double v = std::round((lambda_min + static_cast<double>(i) * step) * 1e9) / 1e9;
        if (v > lambda_max + 1e-9) break;
        out.push_back(v);
    }
    return out;
}

SweepPoint run_point(const ClusterConfig& cfg, double lambda, std::uint64_t seed, const SweepSpec& spec) {
    PoissonProfile profile{lambda, seed, spec.duration, spec.warmup};
    profile.validate();

    engine::EngineParams params = spec.engine;
    params.seed = seed;
    engine::Simulator sim(cfg, params);
    sim.set_measurement_window(spec.warmup, spec.duration);
    std::vector<const TrafficGenerator*> gens;
    for (CoreId c = 0; c < cfg.total_cores(); ++c) {
        auto g = std::make_unique<TrafficGenerator>(profile, c, cfg);
        gens.push_back(g.get());
        sim.attach(c, std::move(g));
    }
    // Generous budget: a drained network always finishes within a few
    // hundred cycles after the last generator stops.
    const auto stats = sim.run_to_quiescence(spec.duration * 4 + 100000);

    SweepPoint p;
    p.lambda = lambda;
    p.seed = seed;
    p.throughput = stats.throughput;
    const auto all = stats.all_latency();
    p.mean_latency = all.mean();
    p.p99_latency = all.quantile(0.99);
    for (const auto* g : gens) p.dropped += g->dropped();
    p.stats = stats;
    return p;
}

LoadSweep run_load_sweep(const ClusterConfig& cfg, const SweepSpec& spec) {
    cfg.validate();
    if (spec.warmup >= spec.duration) throw ConfigError("sweep.warmup must be shorter than sweep.duration");
    std::vector<std::pair<double, std::uint64_t>> jobs;
    auto lambdas = spec.lambdas;
    std::sort(lambdas.begin(), lambdas.end());
    auto seeds = spec.seeds;
    std::sort(seeds.begin(), seeds.end());
    for (const auto l : lambdas) {
        for (const auto s : seeds) jobs.emplace_back(l, s);
    }

    LoadSweep sweep;
    sweep.cfg = cfg;
    sweep.points.resize(jobs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                sweep.points[i] = run_point(cfg, jobs[i].first, jobs[i].second, spec);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(spec.threads, static_cast<unsigned>(jobs.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return sweep;
}

std::vector<CurvePoint> LoadSweep::curve() const {
    std::map<double, std::pair<CurvePoint, std::size_t>> acc;
    for (const auto& p : points) {
        auto& [c, n] = acc[p.lambda];
        c.lambda = p.lambda;
        c.throughput += p.throughput;
        c.mean_latency += p.mean_latency;
        ++n;
    }
    std::vector<CurvePoint> out;
    for (auto& [l, entry] : acc) {
        auto [c, n] = entry;
        c.throughput /= static_cast<double>(n);
        c.mean_latency /= static_cast<double>(n);
        out.push_back(c);
    }
    return out;
}

Saturation find_saturation(const std::vector<CurvePoint>& curve) {
    if (curve.empty()) throw NotSaturated("empty load curve");
    auto sorted = curve;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.lambda < b.lambda; });

    // Knee: the last load still accepted in full, before the first point that is not.
    std::size_t knee = 0;
    while (knee + 1 < sorted.size() && sorted[knee + 1].throughput >= 0.98 * sorted[knee + 1].lambda) ++knee;
    if (knee + 1 == sorted.size()) {
        throw NotSaturated("throughput keeps tracking the offered load up to lambda = " +
                           std::to_string(sorted.back().lambda));
    }

    double max_thr = 0.0;
    for (const auto& p : sorted) max_thr = std::max(max_thr, p.throughput);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : sorted) {
        if (p.throughput >= 0.99 * max_thr) {
            sum += p.throughput;
            ++n;
        }
    }
    return {sum / static_cast<double>(n), sorted[knee].lambda, sorted[knee].mean_latency};
}

std::string sweep_csv(const LoadSweep& sweep) {
    std::ostringstream os;
    os << "lambda,seed,throughput,mean_latency,p99_latency\n";
    char buf[160];
    for (const auto& p : sweep.points) {
        std::snprintf(buf, sizeof buf, "%.4f,%llu,%.6f,%.4f,%llu\n", p.lambda,
                      static_cast<unsigned long long>(p.seed), p.throughput, p.mean_latency,
                      static_cast<unsigned long long>(p.p99_latency));
        os << buf;
    }
    return os.str();
}

}  // namespace terapool::traffic
