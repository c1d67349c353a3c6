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

#include "terapool/engine.hpp"

#include "terapool/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace terapool::engine {

// ---------------------------------------------------------------------------
// LatencyHistogram
// ---------------------------------------------------------------------------

void LatencyHistogram::add(std::uint64_t latency) {
    if (latency < kBins) {
        ++bins_[latency];
    } else {
        overflow_.push_back(latency);
    }
    ++count_;
    sum_ += latency;
    min_ = std::min(min_, latency);
    max_ = std::max(max_, latency);
}

std::uint64_t LatencyHistogram::quantile(double q) const {
    if (count_ == 0) return 0;
    const auto need = static_cast<std::uint64_t>(std::max(1.0, std::ceil(q * static_cast<double>(count_) - 1e-9)));
    std::uint64_t seen = 0;
    for (std::size_t i = 0; i < kBins; ++i) {
        seen += bins_[i];
        if (seen >= need) return i;
    }
    auto rest = overflow_;
    std::sort(rest.begin(), rest.end());
    const auto idx = std::min<std::uint64_t>(need - seen - 1, rest.size() - 1);
    return rest[idx];
}

LatencyHistogram& LatencyHistogram::operator+=(const LatencyHistogram& o) {
    for (std::size_t i = 0; i < kBins; ++i) bins_[i] += o.bins_[i];
    overflow_.insert(overflow_.end(), o.overflow_.begin(), o.overflow_.end());
    count_ += o.count_;
    sum_ += o.sum_;
    min_ = std::min(min_, o.min_);
    max_ = std::max(max_, o.max_);
    return *this;
}

LatencyHistogram SimStats::all_latency() const {
    LatencyHistogram h;
    for (const auto& l : latency) h += l;
    return h;
}

StallBreakdown SimStats::total_stalls() const {
    StallBreakdown s;
    for (const auto& c : per_core_stalls) s += c;
    return s;
}

// ---------------------------------------------------------------------------
// ReorderBuffer
// ---------------------------------------------------------------------------

void ReorderBuffer::expect(std::uint32_t seq) { entries_.push_back({seq, false}); }

void ReorderBuffer::arrive(std::uint32_t seq, Cycle now, std::vector<Delivery>& out) {
    for (auto& e : entries_) {
        if (e.seq == seq) {
            e.arrived = true;
            break;
        }
    }
    while (!entries_.empty() && entries_.front().arrived) {
        out.push_back({entries_.front().seq, now});
        entries_.pop_front();
    }
}

bool ReorderBuffer::consumable(std::uint32_t seq) const {
    // Sequence numbers are issued in order, so anything older than the oldest
    // pending load has been delivered.
    return entries_.empty() || seq < entries_.front().seq;
}

std::vector<ReorderBuffer::Delivery> deliver_in_order(std::vector<std::uint32_t> issue_order,
                                                      std::vector<ReorderBuffer::Delivery> arrivals) {
    std::stable_sort(arrivals.begin(), arrivals.end(),
                     [](const auto& a, const auto& b) { return a.cycle < b.cycle; });
    ReorderBuffer rob;
    for (const auto s : issue_order) rob.expect(s);
    std::vector<ReorderBuffer::Delivery> out;
    for (const auto& a : arrivals) rob.arrive(a.seq, a.cycle, out);
    return out;
}

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

Simulator::Simulator(const ClusterConfig& cfg, EngineParams params)
    : cfg_(cfg), params_(params), network_(cfg, params.network) {
    const auto cores = cfg_.total_cores();
    agents_.resize(cores);
    lsus_.resize(cores);
    stalls_.resize(cores);
    retired_instr_.assign(cores, 0);
    active_.assign(cores, 0);
    core_deliveries_.resize(cores);
    if (params_.barrier_release_latency == 0) params_.barrier_release_latency = cfg_.latency_profile.cluster;
}

void Simulator::attach(CoreId core, std::unique_ptr<CoreAgent> agent) {
    if (core >= agents_.size()) throw ConfigError("attach: core " + std::to_string(core) + " does not exist");
    if (!agents_[core]) attached_.push_back(core);
    agents_[core] = std::move(agent);
    std::sort(attached_.begin(), attached_.end());
}

bool Simulator::can_inject(CoreId core) const {
    return lsus_[core].outstanding < cfg_.outstanding_per_core && network_.can_inject(core);
}

InjectResult Simulator::inject(CoreId core, WordAddr addr, bool is_store, std::uint32_t* seq_out) {
    if (!can_inject(core)) return InjectResult::Rejected;
    auto& lsu = lsus_[core];
    MemRequest req;
    req.core = core;
    req.addr = addr;
    req.is_store = is_store;
    req.issue_cycle = now_;
    req.seq = lsu.next_seq++;
    const auto cls = network_.inject(req);
    ++lsu.outstanding;
    if (!is_store) lsu.rob.expect(req.seq);
    ++injected_;
    ++injected_by_class_[index_of(cls)];
    if (now_ >= window_from_ && now_ < window_until_) ++window_injected_;
    if (seq_out) *seq_out = req.seq;
    return InjectResult::Accepted;
}

void Simulator::set_measurement_window(Cycle from, Cycle until) {
    window_from_ = from;
    window_until_ = until;
}

const std::vector<ReorderBuffer::Delivery>& Simulator::deliveries(CoreId core) const { return core_deliveries_[core]; }

void Simulator::step() {
    for (const auto c : cores_with_deliveries_) core_deliveries_[c].clear();
    cores_with_deliveries_.clear();

    delivered_.clear();
    network_.step_responses(now_, delivered_);
    for (const auto& r : delivered_) {
        auto& lsu = lsus_[r.core];
        --lsu.outstanding;
        ++retired_;
        ++retired_by_class_[index_of(r.dest_class)];
        if (r.issue_cycle >= window_from_ && r.issue_cycle < window_until_) {
            latency_[index_of(r.dest_class)].add(r.completion_cycle - r.issue_cycle);
        }
        if (!r.is_store) {
            auto& out = core_deliveries_[r.core];
            if (out.empty()) cores_with_deliveries_.push_back(r.core);
            lsu.rob.arrive(r.seq, now_, out);
        }
    }

    for (const auto c : attached_) {
        auto& agent = agents_[c];
        if (!agent->done()) agent->tick(*this, c, now_);
    }

    network_.step_requests(now_);
    ++now_;
}

bool Simulator::quiescent() const {
    if (network_.in_flight() != 0) return false;
    return std::all_of(attached_.begin(), attached_.end(), [this](CoreId c) { return agents_[c]->done(); });
}

SimStats Simulator::run_to_quiescence(Cycle cycle_budget) {
    while (!quiescent()) {
        if (now_ >= cycle_budget) {
            throw DeadlockSuspected("cycle budget of " + std::to_string(cycle_budget) + " exhausted with " +
                                        std::to_string(network_.in_flight()) + " requests in flight",
                                    network_.in_flight());
        }
        step();
    }
    return stats();
}

SimStats Simulator::stats() const {
    SimStats s;
    s.total_cycles = now_;
    s.latency = latency_;
    s.injected_by_class = injected_by_class_;
    s.retired_by_class = retired_by_class_;
    s.injected = injected_;
    s.retired = retired_;
    const Cycle window_end = std::min(window_until_, now_);
    if (window_end > window_from_) {
        s.throughput = static_cast<double>(window_injected_) /
                       (static_cast<double>(cfg_.total_cores()) * static_cast<double>(window_end - window_from_));
    }
    s.per_core_stalls = stalls_;
    s.per_core_retired = retired_instr_;
    s.per_core_active = active_;
    std::uint64_t retired = 0;
    std::uint64_t active = 0;
    for (std::size_t i = 0; i < active_.size(); ++i) {
        retired += retired_instr_[i];
        active += active_[i];
    }
    s.ipc = active ? static_cast<double>(retired) / static_cast<double>(active) : 0.0;
    return s;
}

void Simulator::set_barrier_domains(std::vector<std::uint32_t> sizes) {
    barriers_.clear();
    for (const auto n : sizes) {
        Barrier b;
        b.size = n;
        barriers_.push_back(b);
    }
}

std::uint64_t Simulator::barrier_arrive(std::uint32_t domain, Cycle now) {
    if (domain >= barriers_.size()) throw ConfigError("unknown barrier domain " + std::to_string(domain));
    auto& b = barriers_[domain];
    const auto gen = b.generation;
    if (++b.arrived == b.size) {
        b.arrived = 0;
        b.last_arrival = now;
        b.release = now + params_.barrier_release_latency;
        ++b.generation;
    }
    return gen;
}

std::optional<Cycle> Simulator::barrier_release(std::uint32_t domain, std::uint64_t generation) const {
    const auto& b = barriers_[domain];
    if (b.generation > generation) return b.release;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// TraceCore
// ---------------------------------------------------------------------------

TraceCore::TraceCore(std::unique_ptr<InstrStream> stream, std::uint64_t seed)
    : stream_(std::move(stream)), rng_(seed) {}

bool TraceCore::fetch() {
    while (pc_ >= buffer_.size()) {
        if (exhausted_) return false;
        buffer_.clear();
        pc_ = 0;
        if (!stream_ || !stream_->refill(buffer_)) {
            exhausted_ = true;
            return false;
        }
    }
    current_ = buffer_[pc_++];
    return true;
}

TraceCore::Wait TraceCore::tag_state(const Simulator& sim, CoreId core, std::uint8_t tag, Cycle now) const {
    switch (tag_kind_[tag]) {
        case TagKind::None: return Wait::Ready;
        case TagKind::Load:
            return sim.lsu(core).rob.consumable(static_cast<std::uint32_t>(tag_value_[tag])) ? Wait::Ready
                                                                                             : Wait::Lsu;
        case TagKind::Offload: return now >= tag_value_[tag] ? Wait::Ready : Wait::Raw;
    }
    return Wait::Ready;
}

TraceCore::Wait TraceCore::deps_state(const Simulator& sim, CoreId core, const Instr& in, Cycle now) const {
    Wait worst = Wait::Ready;
    for (std::uint8_t k = 0; k < in.ndeps; ++k) {
        const auto w = tag_state(sim, core, in.deps[k], now);
        if (w == Wait::Lsu) return Wait::Lsu;
        if (w == Wait::Raw) worst = Wait::Raw;
    }
    return worst;
}

void TraceCore::tick(Simulator& sim, CoreId core, Cycle now) {
    auto& stalls = sim.stalls(core);

    if (in_barrier_) {
        const auto release = sim.barrier_release(barrier_domain_, barrier_generation_);
        if (!release || now < *release) {
            ++sim.active_cycles(core);
            ++stalls.barrier;
            return;
        }
        in_barrier_ = false;
        record_pass_ = true;
        pass_last_arrival_ = sim.barrier_last_arrival(barrier_domain_);
    }

    if (icache_left_ > 0) {
        --icache_left_;
        ++sim.active_cycles(core);
        ++stalls.icache;
        return;
    }

    if (compute_left_ > 0) {
        --compute_left_;
        ++sim.active_cycles(core);
        ++sim.retired_instructions(core);
        return;
    }

    if (!current_) {
        if (!fetch()) {
            finished_ = true;
            return;
        }
        const double miss = sim.params().icache_miss_rate;
        if (miss > 0.0) {
            const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
            if (u < miss && sim.params().icache_penalty > 0) {
                icache_left_ = sim.params().icache_penalty - 1;
                ++sim.active_cycles(core);
                ++stalls.icache;
                return;
            }
        }
    }

    ++sim.active_cycles(core);
    const Instr& in = *current_;
    bool retired = false;
    switch (in.op) {
        case Op::Compute:
            compute_left_ = in.value > 0 ? in.value - 1 : 0;
            retired = in.value > 0;
            if (!retired) {
                // Compute(0) is a no-op; give the cycle to the next instruction.
                current_.reset();
                --sim.active_cycles(core);
                tick(sim, core, now);
                return;
            }
            break;
        case Op::Load:
        case Op::Store: {
            const auto w = in.op == Op::Store ? deps_state(sim, core, in, now) : Wait::Ready;
            if (w == Wait::Raw) {
                ++stalls.raw_or_external_unit;
                break;
            }
            std::uint32_t seq = 0;
            if (w == Wait::Ready && sim.inject(core, in.addr, in.op == Op::Store, &seq) == InjectResult::Accepted) {
                if (in.op == Op::Load) {
                    tag_kind_[in.tag] = TagKind::Load;
                    tag_value_[in.tag] = seq;
                }
                retired = true;
            } else {
                ++stalls.lsu;
            }
            break;
        }
        case Op::Offload: {
            const auto w = deps_state(sim, core, in, now);
            if (w == Wait::Ready) {
                tag_kind_[in.tag] = TagKind::Offload;
                tag_value_[in.tag] = now + in.value;
                retired = true;
            } else if (w == Wait::Lsu) {
                ++stalls.lsu;
            } else {
                ++stalls.raw_or_external_unit;
            }
            break;
        }
        case Op::Use: {
            const auto w = tag_state(sim, core, in.tag, now);
            if (w == Wait::Ready) {
                retired = true;
            } else if (w == Wait::Lsu) {
                ++stalls.lsu;
            } else {
                ++stalls.raw_or_external_unit;
            }
            break;
        }
        case Op::Barrier:
            barrier_domain_ = in.value;
            barrier_generation_ = sim.barrier_arrive(in.value, now);
            in_barrier_ = true;
            retired = true;
            break;
    }

    if (retired) {
        ++sim.retired_instructions(core);
        if (record_pass_) {
            passes_.push_back({barrier_domain_, pass_last_arrival_, now});
            record_pass_ = false;
        }
        current_.reset();
    }
}

SimStats simulate_traces(const TraceSet& traces, const ClusterConfig& cfg, const EngineParams& params,
                         Cycle cycle_budget, std::vector<std::vector<TraceCore::BarrierPass>>* passes) {
    if (traces.cores > cfg.total_cores()) {
        throw ConfigError("trace set has " + std::to_string(traces.cores) + " cores, cluster only " +
                          std::to_string(cfg.total_cores()));
    }
    Simulator sim(cfg, params);
    sim.set_barrier_domains(traces.barrier_domains);
    std::vector<TraceCore*> cores;
    for (CoreId c = 0; c < traces.cores; ++c) {
        auto core = std::make_unique<TraceCore>(traces.stream_for ? traces.stream_for(c) : nullptr,
                                                params.seed * 0x9E3779B97F4A7C15ull + c);
        cores.push_back(core.get());
        sim.attach(c, std::move(core));
    }
    auto stats = sim.run_to_quiescence(cycle_budget);
    if (passes) {
        passes->clear();
        for (auto* c : cores) passes->push_back(c->barrier_passes());
    }
    return stats;
}

}  // namespace terapool::engine
