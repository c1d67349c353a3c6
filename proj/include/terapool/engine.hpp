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

/**
 * @file engine.hpp
 * @brief Cores, load/store units and the cycle loop around the interconnect.
 *
 * Each cycle runs three phases:
 *   1. responses advance; arrivals retire at their LSU,
 *   2. every core agent executes (issue, stall accounting, injection),
 *   3. requests advance; a request injected in phase 2 can reach a
 *      tile-local bank in the same cycle.
 */

#include "terapool/network.hpp"
#include "terapool/trace.hpp"

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <random>
#include <vector>

namespace terapool::engine {

struct StallBreakdown {
    std::uint64_t lsu = 0;
    std::uint64_t raw_or_external_unit = 0;
    std::uint64_t icache = 0;
    std::uint64_t barrier = 0;

    [[nodiscard]] std::uint64_t total() const { return lsu + raw_or_external_unit + icache + barrier; }
    StallBreakdown& operator+=(const StallBreakdown& o) {
        lsu += o.lsu;
        raw_or_external_unit += o.raw_or_external_unit;
        icache += o.icache;
        barrier += o.barrier;
        return *this;
    }
    friend bool operator==(const StallBreakdown&, const StallBreakdown&) = default;
};

class LatencyHistogram {
public:
    static constexpr std::size_t kBins = 512;

    void add(std::uint64_t latency);
    [[nodiscard]] std::uint64_t count() const { return count_; }
    [[nodiscard]] std::uint64_t sum() const { return sum_; }
    [[nodiscard]] std::uint64_t min() const { return count_ ? min_ : 0; }
    [[nodiscard]] std::uint64_t max() const { return max_; }
    [[nodiscard]] double mean() const { return count_ ? static_cast<double>(sum_) / static_cast<double>(count_) : 0.0; }
    /// Smallest latency L with at least q of the samples <= L.
    [[nodiscard]] std::uint64_t quantile(double q) const;
    [[nodiscard]] const std::vector<std::uint64_t>& bins() const { return bins_; }
    LatencyHistogram& operator+=(const LatencyHistogram& o);

    friend bool operator==(const LatencyHistogram&, const LatencyHistogram&) = default;

private:
    std::vector<std::uint64_t> bins_ = std::vector<std::uint64_t>(kBins, 0);
    std::vector<std::uint64_t> overflow_;
    std::uint64_t count_ = 0;
    std::uint64_t sum_ = 0;
    std::uint64_t min_ = ~std::uint64_t{0};
    std::uint64_t max_ = 0;
};

struct SimStats {
    Cycle total_cycles = 0;
    std::array<LatencyHistogram, kNumDestClasses> latency{};
    std::array<std::uint64_t, kNumDestClasses> injected_by_class{};
    std::array<std::uint64_t, kNumDestClasses> retired_by_class{};
    std::uint64_t injected = 0;
    std::uint64_t retired = 0;
    /// Requests in the measurement window, per core per cycle.
    double throughput = 0.0;
    std::vector<StallBreakdown> per_core_stalls;
    std::vector<std::uint64_t> per_core_retired;
    std::vector<Cycle> per_core_active;
    double ipc = 0.0;

    [[nodiscard]] LatencyHistogram all_latency() const;
    [[nodiscard]] StallBreakdown total_stalls() const;

    friend bool operator==(const SimStats&, const SimStats&) = default;
};

/// In-order data delivery over out-of-order load completions.
class ReorderBuffer {
public:
    struct Delivery {
        std::uint32_t seq;
        Cycle cycle;
    };

    /// Registers an issued load, in program order.
    void expect(std::uint32_t seq);
    /// Marks `seq` as arrived at `now`; appends every load that became
    /// consumable, in sequence order, to `out`.
    void arrive(std::uint32_t seq, Cycle now, std::vector<Delivery>& out);
    /// Data for `seq` has been delivered to the execution units.
    [[nodiscard]] bool consumable(std::uint32_t seq) const;
    [[nodiscard]] std::size_t pending() const { return entries_.size(); }

private:
    struct Entry {
        std::uint32_t seq;
        bool arrived;
    };
    std::deque<Entry> entries_;
};

/// Standalone form of the reorder contract: arrivals (seq, cycle) in any
/// order, result sorted by seq with the cycle each became consumable.
[[nodiscard]] std::vector<ReorderBuffer::Delivery> deliver_in_order(
    std::vector<std::uint32_t> issue_order, std::vector<ReorderBuffer::Delivery> arrivals);

struct Lsu {
    std::uint32_t outstanding = 0;
    std::uint32_t next_seq = 0;
    ReorderBuffer rob;
};

enum class InjectResult : std::uint8_t { Accepted, Rejected };

class Simulator;

/// Anything that drives a core's port: a trace-executing core or a traffic generator.
class CoreAgent {
public:
    virtual ~CoreAgent() = default;
    virtual void tick(Simulator& sim, CoreId core, Cycle now) = 0;
    [[nodiscard]] virtual bool done() const = 0;
};

struct EngineParams {
    NetworkParams network{};
    double icache_miss_rate = 0.0;
    std::uint32_t icache_penalty = 10;
    /// Cycles between the last barrier arrival and the release; 0 selects
    /// the cluster's remote-group round trip.
    std::uint32_t barrier_release_latency = 0;
    std::uint64_t seed = 1;
};

class Simulator {
public:
    Simulator(const ClusterConfig& cfg, EngineParams params = {});

    [[nodiscard]] const ClusterConfig& config() const { return cfg_; }
    [[nodiscard]] const EngineParams& params() const { return params_; }
    [[nodiscard]] Cycle now() const { return now_; }

    /// Attach an agent to `core`; unattached cores stay idle.
    void attach(CoreId core, std::unique_ptr<CoreAgent> agent);

    /// Rejected iff the core's LSU is at its outstanding limit or its request
    /// port still holds an earlier request. Accepted requests get the next seq.
    InjectResult inject(CoreId core, WordAddr addr, bool is_store, std::uint32_t* seq_out = nullptr);
    [[nodiscard]] bool can_inject(CoreId core) const;
    [[nodiscard]] const Lsu& lsu(CoreId core) const { return lsus_[core]; }

    /// Only requests issued inside [from, until) count toward latency and throughput.
    void set_measurement_window(Cycle from, Cycle until);

    /// Advance one cycle.
    void step();

    /// Steps until every agent is done and the network drained. Throws
    /// DeadlockSuspected when `cycle_budget` runs out first.
    SimStats run_to_quiescence(Cycle cycle_budget);

    [[nodiscard]] bool quiescent() const;
    [[nodiscard]] SimStats stats() const;

    // Barrier support for trace cores.
    void set_barrier_domains(std::vector<std::uint32_t> sizes);
    /// Returns the generation the core joined.
    std::uint64_t barrier_arrive(std::uint32_t domain, Cycle now);
    /// Release cycle of `generation` in `domain`, once every participant arrived.
    [[nodiscard]] std::optional<Cycle> barrier_release(std::uint32_t domain, std::uint64_t generation) const;
    /// Cycle of the last arrival of a completed generation.
    [[nodiscard]] Cycle barrier_last_arrival(std::uint32_t domain) const { return barriers_[domain].last_arrival; }

    // Per-core accounting written by agents.
    StallBreakdown& stalls(CoreId core) { return stalls_[core]; }
    std::uint64_t& retired_instructions(CoreId core) { return retired_instr_[core]; }
    Cycle& active_cycles(CoreId core) { return active_[core]; }

    /// Load deliveries for `core` that became consumable during the current cycle.
    [[nodiscard]] const std::vector<ReorderBuffer::Delivery>& deliveries(CoreId core) const;

    [[nodiscard]] const Network& network() const { return network_; }

private:
    struct Barrier {
        std::uint32_t size = 0;
        std::uint32_t arrived = 0;
        std::uint64_t generation = 0;
        Cycle release = 0;
        Cycle last_arrival = 0;
    };

    ClusterConfig cfg_;
    EngineParams params_;
    Network network_;
    Cycle now_ = 0;
    Cycle window_from_ = 0;
    Cycle window_until_ = ~Cycle{0};

    std::vector<std::unique_ptr<CoreAgent>> agents_;
    std::vector<CoreId> attached_;
    std::vector<Lsu> lsus_;
    std::vector<StallBreakdown> stalls_;
    std::vector<std::uint64_t> retired_instr_;
    std::vector<Cycle> active_;
    std::vector<Barrier> barriers_;

    std::vector<MemResponse> delivered_;
    std::vector<std::vector<ReorderBuffer::Delivery>> core_deliveries_;
    std::vector<CoreId> cores_with_deliveries_;

    std::array<LatencyHistogram, kNumDestClasses> latency_{};
    std::array<std::uint64_t, kNumDestClasses> injected_by_class_{};
    std::array<std::uint64_t, kNumDestClasses> retired_by_class_{};
    std::uint64_t injected_ = 0;
    std::uint64_t retired_ = 0;
    std::uint64_t window_injected_ = 0;
};

/// Core executing a TraceProgram stream: single issue, in-order, with an LSU
/// of `outstanding_per_core` slots and pipelined offload units.
class TraceCore final : public CoreAgent {
public:
    TraceCore(std::unique_ptr<InstrStream> stream, std::uint64_t seed);

    void tick(Simulator& sim, CoreId core, Cycle now) override;
    [[nodiscard]] bool done() const override { return finished_; }

    /// Cycle of the first instruction executed after each barrier release,
    /// paired with the barrier's last arrival; used to check barrier ordering.
    struct BarrierPass {
        std::uint32_t domain;
        Cycle last_arrival;
        Cycle resumed;
    };
    [[nodiscard]] const std::vector<BarrierPass>& barrier_passes() const { return passes_; }

private:
    enum class TagKind : std::uint8_t { None, Load, Offload };
    enum class Wait : std::uint8_t { Ready, Lsu, Raw };

    [[nodiscard]] Wait tag_state(const Simulator& sim, CoreId core, std::uint8_t tag, Cycle now) const;
    [[nodiscard]] Wait deps_state(const Simulator& sim, CoreId core, const Instr& in, Cycle now) const;
    bool fetch();

    std::unique_ptr<InstrStream> stream_;
    std::vector<Instr> buffer_;
    std::size_t pc_ = 0;
    bool exhausted_ = false;
    bool finished_ = false;

    std::optional<Instr> current_;
    std::uint32_t compute_left_ = 0;
    std::uint32_t icache_left_ = 0;

    bool in_barrier_ = false;
    std::uint32_t barrier_domain_ = 0;
    std::uint64_t barrier_generation_ = 0;
    bool record_pass_ = false;
    Cycle pass_last_arrival_ = 0;

    std::array<TagKind, kMaxTags> tag_kind_{};
    std::array<std::uint64_t, kMaxTags> tag_value_{};  // load seq or offload ready cycle

    std::mt19937_64 rng_;
    std::vector<BarrierPass> passes_;
};

/// Simulates `traces` on `cfg` until all cores finish. Returns the stats and,
/// through `passes` when non-null, every core's barrier passes.
SimStats simulate_traces(const TraceSet& traces, const ClusterConfig& cfg, const EngineParams& params,
                         Cycle cycle_budget, std::vector<std::vector<TraceCore::BarrierPass>>* passes = nullptr);

}  // namespace terapool::engine
