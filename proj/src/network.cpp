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

#include "terapool/network.hpp"

#include "terapool/errors.hpp"

#include <algorithm>
#include <limits>

namespace terapool::engine {

namespace {

// Index of `other` among the peers of `self` (self excluded).
std::uint32_t peer_index(std::uint32_t other, std::uint32_t self) { return other < self ? other : other - 1; }

std::uint32_t out_regs_for(std::uint32_t stages) {
    if (stages == 0) return 0;
    if (stages == 1) return 1;
    return stages - 1;
}

}  // namespace

Network::Network(const ClusterConfig& cfg, NetworkParams params) : cfg_(cfg), params_(params) {
    cfg_.validate();
    if (params_.register_capacity == 0 || params_.register_capacity > 255 || params_.bank_output_capacity == 0 ||
        params_.bank_output_capacity > 255) {
        throw ConfigError("register and bank output capacities must be in [1, 255]");
    }
    cores_ = cfg_.total_cores();
    banks_ = cfg_.total_banks();
    tiles_ = cfg_.total_tiles();
    ports_ = cfg_.remote_ports();
    tile_ports_ = tiles_ * ports_;
    for (const auto c : kAllDestClasses) {
        stages_[index_of(c)] = static_cast<std::uint8_t>(register_stages(c, cfg_.latency_profile));
    }
    max_out_regs_ = 1;
    for (const auto c : {DestClass::LocalSubGroup, DestClass::LocalGroup, DestClass::RemoteGroup}) {
        max_out_regs_ = std::max(max_out_regs_, out_regs_for(stages_[index_of(c)]));
    }

    req_out_base_ = cores_ + banks_;
    req_in_base_ = req_out_base_ + tile_ports_ * max_out_regs_;
    rsp_out_base_ = req_in_base_ + tile_ports_;
    rsp_in_base_ = rsp_out_base_ + tile_ports_ * max_out_regs_;
    num_queues_ = rsp_in_base_ + tile_ports_;
    num_resources_ = 4 * tile_ports_ + banks_ + cores_;

    slot_stride_ = std::max({1u, params_.register_capacity, params_.bank_output_capacity});
    slots_.assign(static_cast<std::size_t>(num_queues_) * slot_stride_, 0);
    head_.assign(num_queues_, 0);
    size_.assign(num_queues_, 0);
    capacity_.assign(num_queues_, static_cast<std::uint8_t>(params_.register_capacity));
    std::fill_n(capacity_.begin(), cores_, std::uint8_t{1});
    std::fill_n(capacity_.begin() + cores_, banks_, static_cast<std::uint8_t>(params_.bank_output_capacity));
    is_active_.assign(num_queues_, 0);

    last_grant_.assign(num_resources_, num_queues_ - 1);
    best_.assign(num_resources_, Best{});
    bank_grants_.assign(cores_, 0);
}

std::uint32_t Network::alloc_message() {
    if (!free_messages_.empty()) {
        const auto id = free_messages_.back();
        free_messages_.pop_back();
        return id;
    }
    messages_.emplace_back();
    return static_cast<std::uint32_t>(messages_.size() - 1);
}

void Network::push(std::uint32_t q, std::uint32_t msg) {
    const auto tail = (head_[q] + size_[q]) % capacity_[q];
    slots_[q * slot_stride_ + tail] = msg;
    ++size_[q];
}

void Network::pop(std::uint32_t q) {
    head_[q] = static_cast<std::uint8_t>((head_[q] + 1) % capacity_[q]);
    --size_[q];
}

void Network::activate(std::uint32_t q, bool response_side) {
    if (is_active_[q]) return;
    is_active_[q] = 1;
    active_[response_side ? 1 : 0].push_back(q);
}

DestClass Network::inject(const MemRequest& req) {
    const auto id = alloc_message();
    Message& m = messages_[id];
    m = Message{};
    m.req = req;

    const auto loc = locate_bank(req.addr, cfg_).bank;
    const auto src = locate_core(req.core, cfg_);
    m.bank = global_bank(loc, cfg_);
    m.src_tile = tile_of_core(req.core, cfg_);
    m.dst_tile = global_tile(loc, cfg_);
    m.req.dest_class = destination_class(req.core, loc, cfg_);
    switch (m.req.dest_class) {
        case DestClass::LocalTile:
        case DestClass::LocalSubGroup:
            m.out_port = 0;
            m.in_port = 0;
            break;
        case DestClass::LocalGroup:
            m.out_port = static_cast<std::uint8_t>(1 + peer_index(loc.subgroup, src.subgroup));
            m.in_port = static_cast<std::uint8_t>(1 + peer_index(src.subgroup, loc.subgroup));
            break;
        case DestClass::RemoteGroup:
            m.out_port = static_cast<std::uint8_t>(cfg_.subgroups_per_group + peer_index(loc.group, src.group));
            m.in_port = static_cast<std::uint8_t>(cfg_.subgroups_per_group + peer_index(src.group, loc.group));
            break;
    }
    m.stages = stages_[index_of(m.req.dest_class)];
    m.pos = 0;
    m.response = false;

    push(req.core, id);
    activate(req.core, false);
    ++in_flight_;
    return m.req.dest_class;
}

Network::Segment Network::request_segment(const Message& m) const {
    Segment s;
    const auto add = [&s](std::uint32_t res, std::uint8_t rank) {
        s.res[s.n] = res;
        s.rank[s.n] = rank;
        ++s.n;
    };
    if (m.req.dest_class == DestClass::LocalTile) {
        add(res_bank(m.bank), 2);
        s.sink = Sink::Bank;
        return s;
    }
    const std::uint32_t r = m.stages;
    const std::uint32_t p = m.pos;
    if (r == 0) {
        add(res_req_port(m.src_tile, m.out_port), 0);
        add(res_in_port(m.dst_tile, m.in_port), 1);
        add(res_bank(m.bank), 2);
        s.sink = Sink::Bank;
    } else if (r == 1) {
        if (p == 0) {
            add(res_req_port(m.src_tile, m.out_port), 0);
            s.target = req_out_queue(m.src_tile, m.out_port, 0);
        } else {
            add(res_in_port(m.dst_tile, m.in_port), 1);
            add(res_bank(m.bank), 2);
            s.sink = Sink::Bank;
        }
    } else {
        if (p == 0) {
            add(res_req_port(m.src_tile, m.out_port), 0);
            s.target = req_out_queue(m.src_tile, m.out_port, 0);
        } else if (p + 1 < r) {
            s.target = req_out_queue(m.src_tile, m.out_port, p);
        } else if (p + 1 == r) {
            add(res_in_port(m.dst_tile, m.in_port), 1);
            s.target = req_in_queue(m.dst_tile, m.in_port);
        } else {
            add(res_bank(m.bank), 2);
            s.sink = Sink::Bank;
        }
    }
    return s;
}

Network::Segment Network::response_segment(const Message& m) const {
    Segment s;
    const auto add = [&s](std::uint32_t res, std::uint8_t rank) {
        s.res[s.n] = res;
        s.rank[s.n] = rank;
        ++s.n;
    };
    if (m.req.dest_class == DestClass::LocalTile) {
        add(res_core(m.req.core), 5);
        s.sink = Sink::Core;
        return s;
    }
    const std::uint32_t r = m.stages;
    const std::uint32_t p = m.pos;
    if (r == 0) {
        add(res_rsp_port(m.dst_tile, m.in_port), 3);
        add(res_rsp_in(m.src_tile, m.out_port), 4);
        add(res_core(m.req.core), 5);
        s.sink = Sink::Core;
    } else if (r == 1) {
        if (p == 0) {
            add(res_rsp_port(m.dst_tile, m.in_port), 3);
            s.target = rsp_out_queue(m.dst_tile, m.in_port, 0);
        } else {
            add(res_rsp_in(m.src_tile, m.out_port), 4);
            add(res_core(m.req.core), 5);
            s.sink = Sink::Core;
        }
    } else {
        if (p == 0) {
            add(res_rsp_port(m.dst_tile, m.in_port), 3);
            s.target = rsp_out_queue(m.dst_tile, m.in_port, 0);
        } else if (p + 1 < r) {
            s.target = rsp_out_queue(m.dst_tile, m.in_port, p);
        } else if (p + 1 == r) {
            add(res_rsp_in(m.src_tile, m.out_port), 4);
            s.target = rsp_in_queue(m.src_tile, m.out_port);
        } else {
            add(res_core(m.req.core), 5);
            s.sink = Sink::Core;
        }
    }
    return s;
}

void Network::step_responses(Cycle now, std::vector<MemResponse>& delivered) { step(true, now, &delivered); }

void Network::step_requests(Cycle now) { step(false, now, nullptr); }

void Network::step(bool responses, Cycle now, std::vector<MemResponse>* delivered) {
    auto& active = active_[responses ? 1 : 0];
    if (active.empty()) return;

    // Every queue head whose downstream has room at the start of the cycle
    // competes for the arbiters on its segment.
    candidates_.clear();
    for (const auto q : active) {
        const auto msg = head(q);
        const Message& m = messages_[msg];
        const Segment seg = responses ? response_segment(m) : request_segment(m);
        bool ready = true;
        switch (seg.sink) {
            case Sink::Queue: ready = size_[seg.target] < capacity_[seg.target]; break;
            case Sink::Bank: {
                const auto bq = bank_out_queue(m.bank);
                ready = size_[bq] < capacity_[bq];
                break;
            }
            case Sink::Core: ready = true; break;
        }
        if (!ready) continue;
        Candidate c{q, msg, seg, true, {}};
        const auto ci = static_cast<std::uint32_t>(candidates_.size());
        for (std::uint8_t k = 0; k < seg.n; ++k) {
            const auto slot = seg.rank[k] % 3;
            c.rank_slot[slot] = k;
            by_rank_[slot].push_back(ci);
        }
        candidates_.push_back(c);
    }

    // Resolve arbiters rank by rank. A candidate must win every arbiter on its
    // segment; a grant that is lost further downstream is wasted.
    const std::uint8_t first_rank = responses ? 3 : 0;
    for (std::uint8_t rank = first_rank; rank < first_rank + 3; ++rank) {
        auto& members = by_rank_[rank - first_rank];
        touched_.clear();
        for (const auto ci : members) {
            const auto& c = candidates_[ci];
            if (!c.alive) continue;
            const auto res = c.seg.res[c.rank_slot[rank - first_rank]];
            const auto last = last_grant_[res];
            const auto dist = c.queue > last ? c.queue - last - 1 : c.queue + num_queues_ - last - 1;
            auto& b = best_[res];
            if (b.index < 0) {
                touched_.push_back(res);
                b = {static_cast<std::int32_t>(ci), dist};
            } else if (dist < b.dist) {
                b = {static_cast<std::int32_t>(ci), dist};
            }
        }
        for (const auto ci : members) {
            auto& c = candidates_[ci];
            if (c.alive && best_[c.seg.res[c.rank_slot[rank - first_rank]]].index != static_cast<std::int32_t>(ci)) {
                c.alive = false;
            }
        }
        for (const auto res : touched_) best_[res].index = -1;
        members.clear();
    }

    // Commit: pop winners, then push them downstream.
    for (const auto& c : candidates_) {
        if (!c.alive) continue;
        pop(c.queue);
        for (std::uint8_t k = 0; k < c.seg.n; ++k) last_grant_[c.seg.res[k]] = c.queue;
    }
    for (const auto& c : candidates_) {
        if (!c.alive) continue;
        Message& m = messages_[c.msg];
        switch (c.seg.sink) {
            case Sink::Queue:
                ++m.pos;
                push(c.seg.target, c.msg);
                activate(c.seg.target, responses);
                break;
            case Sink::Bank: {
                // The bank serves the request this cycle; its response leaves next cycle.
                ++bank_grants_[m.req.core];
                m.response = true;
                m.pos = 0;
                const auto bq = bank_out_queue(m.bank);
                push(bq, c.msg);
                activate(bq, true);
                break;
            }
            case Sink::Core: {
                MemResponse r;
                r.core = m.req.core;
                r.seq = m.req.seq;
                r.completion_cycle = now;
                r.issue_cycle = m.req.issue_cycle;
                r.dest_class = m.req.dest_class;
                r.is_store = m.req.is_store;
                delivered->push_back(r);
                free_messages_.push_back(c.msg);
                --in_flight_;
                break;
            }
        }
    }

    // Drop drained queues from the active list.
    std::size_t keep = 0;
    for (std::size_t i = 0; i < active.size(); ++i) {
        const auto q = active[i];
        if (size_[q] > 0) {
            active[keep++] = q;
        } else {
            is_active_[q] = 0;
        }
    }
    active.resize(keep);
}

}  // namespace terapool::engine
