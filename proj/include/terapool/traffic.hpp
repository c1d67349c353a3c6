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

#pragma once

// Synthetic uniform-random traffic and latency/throughput load sweeps.

#include "terapool/engine.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace terapool::traffic {

struct PoissonProfile {
    double lambda = 0.1;  ///< requests per core per cycle, 0 <= lambda <= 1
    std::uint64_t seed = 1;
    Cycle duration = 20000;
    Cycle warmup = 2000;

    /// Throws ConfigError when lambda is outside [0, 1] or warmup >= duration.
    void validate() const;
};

/// Per-core Bernoulli(lambda) issue process with i.i.d. uniform destinations.
/// Two sources built from the same (profile, core) produce the same stream.
class PoissonSource {
public:
    PoissonSource(const PoissonProfile& profile, CoreId core, std::uint64_t total_words);

    /// Draws this cycle's issue decision and, if issuing, the destination.
    [[nodiscard]] bool fire(WordAddr& dest);

private:
    std::mt19937_64 rng_;
    double lambda_;
    std::uint64_t words_;
};

struct ScheduledRequest {
    Cycle cycle;
    WordAddr addr;
};

/// Injection schedule of one core over the profile's duration.
[[nodiscard]] std::vector<ScheduledRequest> generate(const PoissonProfile& profile, CoreId core,
                                                     const ClusterConfig& cfg);

/// Core replacement that issues a PoissonSource's requests. Requests blocked
/// by the outstanding limit wait in a bounded queue; overflow is dropped and counted.
class TrafficGenerator final : public engine::CoreAgent {
public:
    static constexpr std::size_t kQueueDepth = 16;

    TrafficGenerator(const PoissonProfile& profile, CoreId core, const ClusterConfig& cfg);

    void tick(engine::Simulator& sim, CoreId core, Cycle now) override;
    [[nodiscard]] bool done() const override { return done_; }

    [[nodiscard]] std::uint64_t generated() const { return generated_; }
    [[nodiscard]] std::uint64_t dropped() const { return dropped_; }

private:
    PoissonSource source_;
    Cycle duration_;
    std::vector<WordAddr> queue_;  // ring of kQueueDepth
    std::size_t head_ = 0;
    std::size_t size_ = 0;
    std::uint64_t generated_ = 0;
    std::uint64_t dropped_ = 0;
    bool done_ = false;
};

struct SweepSpec {
    std::vector<double> lambdas;
    std::vector<std::uint64_t> seeds{1};
    Cycle duration = 20000;
    Cycle warmup = 2000;
    unsigned threads = 1;
    engine::EngineParams engine{};

    /// lambda_min, lambda_min + step, ... up to lambda_max inclusive (to 1e-9).
    [[nodiscard]] static std::vector<double> grid(double lambda_min, double lambda_max, double step);
};

struct SweepPoint {
    double lambda = 0.0;
    std::uint64_t seed = 0;
    double throughput = 0.0;
    double mean_latency = 0.0;
    std::uint64_t p99_latency = 0;
    std::uint64_t dropped = 0;
    engine::SimStats stats;
};

/// Mean over seeds at one offered load.
struct CurvePoint {
    double lambda = 0.0;
    double throughput = 0.0;
    double mean_latency = 0.0;
};

struct Saturation {
    double sat_throughput = 0.0;
    double knee_lambda = 0.0;
    double knee_latency = 0.0;
};

struct LoadSweep {
    ClusterConfig cfg;
    std::vector<SweepPoint> points;  ///< sorted by lambda, then seed

    [[nodiscard]] std::vector<CurvePoint> curve() const;
};

/// One simulation at a single (lambda, seed).
[[nodiscard]] SweepPoint run_point(const ClusterConfig& cfg, double lambda, std::uint64_t seed, const SweepSpec& spec);

/// Runs every (lambda, seed) pair, `spec.threads` at a time. Output order and
/// content do not depend on the thread count.
[[nodiscard]] LoadSweep run_load_sweep(const ClusterConfig& cfg, const SweepSpec& spec);

/// Plateau = mean throughput of points within 1% of the maximum; knee = the
/// last point of the leading run whose throughput is within 2% of its offered
/// load. Throws NotSaturated when every point still tracks the offered load.
[[nodiscard]] Saturation find_saturation(const std::vector<CurvePoint>& curve);

/// CSV with header `lambda,seed,throughput,mean_latency,p99_latency`.
[[nodiscard]] std::string sweep_csv(const LoadSweep& sweep);

}  // namespace terapool::traffic
