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
 * @file network.hpp
 * @brief Cycle-stepped request/response interconnect with banked L1.
 *
 * Requests travel core -> tile remote port -> (pipeline registers) ->
 * target tile input port -> bank; responses retrace the path on a separate,
 * mirrored network. Crossbars are combinational: a message crosses every
 * arbiter between two registers in one cycle, and must win all of them.
 * Each arbiter output is round-robin over its inputs. Registers are
 * two-entry spill registers whose ready signal is the registered "not full".
 *
 * A class with r one-way register stages (latency 2r + 1) uses:
 *
 *   r == 0: [port, in-port, bank]
 *   r == 1: [port] reg [in-port, bank]
 *   r >= 2: [port] reg (reg)*(r - 2) [in-port] reg [bank]
 *
 * with the same layout on the response side
 * ([rsp-port] ... [rsp-in-port] ... [core-port]).
 */

#include "terapool/topology.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace terapool::engine {

struct MemRequest {
    CoreId core = 0;
    WordAddr addr = 0;
    bool is_store = false;
    Cycle issue_cycle = 0;
    DestClass dest_class = DestClass::LocalTile;
    std::uint32_t seq = 0;
};

struct MemResponse {
    CoreId core = 0;
    std::uint32_t seq = 0;
    Cycle completion_cycle = 0;
    // Copied from the request for accounting.
    Cycle issue_cycle = 0;
    DestClass dest_class = DestClass::LocalTile;
    bool is_store = false;
};

struct NetworkParams {
    std::uint32_t register_capacity = 2;
    std::uint32_t bank_output_capacity = 2;
};

class Network {
public:
    explicit Network(const ClusterConfig& cfg, NetworkParams params = {});

    /// The core's first network stage (its request port) is free.
    [[nodiscard]] bool can_inject(CoreId core) const { return size_[core] == 0; }
    /// Places a request in the core's request port. Requires can_inject().
    DestClass inject(const MemRequest& req);

    /// Moves responses one cycle; messages reaching their core are appended to `delivered`.
    void step_responses(Cycle now, std::vector<MemResponse>& delivered);
    /// Moves requests one cycle; requests granted by a bank turn into responses.
    void step_requests(Cycle now);

    [[nodiscard]] std::uint64_t in_flight() const { return in_flight_; }
    [[nodiscard]] const ClusterConfig& config() const { return cfg_; }

    /// Requests each core has had granted by any bank (for fairness checks).
    [[nodiscard]] const std::vector<std::uint64_t>& bank_grants_per_core() const { return bank_grants_; }

private:
    enum class Sink : std::uint8_t { Queue, Bank, Core };

    struct Message {
        MemRequest req;
        std::uint32_t bank = 0;  // global bank index
        std::uint32_t src_tile = 0;
        std::uint32_t dst_tile = 0;
        std::uint8_t out_port = 0;  // port at src tile toward dst
        std::uint8_t in_port = 0;   // port at dst tile from src
        std::uint8_t stages = 0;    // one-way register stages
        std::uint8_t pos = 0;       // index of the queue currently holding the message
        bool response = false;
    };

    struct Segment {
        std::array<std::uint32_t, 3> res{};
        std::array<std::uint8_t, 3> rank{};
        std::uint8_t n = 0;
        Sink sink = Sink::Queue;
        std::uint32_t target = 0;
    };

    struct Candidate {
        std::uint32_t queue;
        std::uint32_t msg;
        Segment seg;
        bool alive;
        std::array<std::uint8_t, 3> rank_slot;  // rank % 3 -> index into seg.res
    };

    struct Best {
        std::int32_t index = -1;
        std::uint32_t dist = 0;
    };

    [[nodiscard]] Segment request_segment(const Message& m) const;
    [[nodiscard]] Segment response_segment(const Message& m) const;
    void step(bool responses, Cycle now, std::vector<MemResponse>* delivered);

    // Queue addressing.
    [[nodiscard]] std::uint32_t bank_out_queue(std::uint32_t bank) const { return cores_ + bank; }
    [[nodiscard]] std::uint32_t req_out_queue(std::uint32_t tile, std::uint32_t port, std::uint32_t k) const {
        return req_out_base_ + (tile * ports_ + port) * max_out_regs_ + k;
    }
    [[nodiscard]] std::uint32_t req_in_queue(std::uint32_t tile, std::uint32_t port) const {
        return req_in_base_ + tile * ports_ + port;
    }
    [[nodiscard]] std::uint32_t rsp_out_queue(std::uint32_t tile, std::uint32_t port, std::uint32_t k) const {
        return rsp_out_base_ + (tile * ports_ + port) * max_out_regs_ + k;
    }
    [[nodiscard]] std::uint32_t rsp_in_queue(std::uint32_t tile, std::uint32_t port) const {
        return rsp_in_base_ + tile * ports_ + port;
    }

    // Resource addressing, in arbitration rank order.
    [[nodiscard]] std::uint32_t res_req_port(std::uint32_t tile, std::uint32_t port) const { return tile * ports_ + port; }
    [[nodiscard]] std::uint32_t res_in_port(std::uint32_t tile, std::uint32_t port) const {
        return tile_ports_ + tile * ports_ + port;
    }
    [[nodiscard]] std::uint32_t res_bank(std::uint32_t bank) const { return 2 * tile_ports_ + bank; }
    [[nodiscard]] std::uint32_t res_rsp_port(std::uint32_t tile, std::uint32_t port) const {
        return 2 * tile_ports_ + banks_ + tile * ports_ + port;
    }
    [[nodiscard]] std::uint32_t res_rsp_in(std::uint32_t tile, std::uint32_t port) const {
        return 3 * tile_ports_ + banks_ + tile * ports_ + port;
    }
    [[nodiscard]] std::uint32_t res_core(CoreId core) const { return 4 * tile_ports_ + banks_ + core; }

    [[nodiscard]] std::uint32_t head(std::uint32_t q) const { return slots_[q * slot_stride_ + head_[q]]; }
    void push(std::uint32_t q, std::uint32_t msg);
    void pop(std::uint32_t q);
    void activate(std::uint32_t q, bool response_side);
    [[nodiscard]] std::uint32_t alloc_message();

    ClusterConfig cfg_;
    NetworkParams params_;
    std::uint32_t cores_ = 0;
    std::uint32_t banks_ = 0;
    std::uint32_t tiles_ = 0;
    std::uint32_t ports_ = 0;
    std::uint32_t tile_ports_ = 0;
    std::uint32_t max_out_regs_ = 1;
    std::uint32_t req_out_base_ = 0;
    std::uint32_t req_in_base_ = 0;
    std::uint32_t rsp_out_base_ = 0;
    std::uint32_t rsp_in_base_ = 0;
    std::uint32_t num_queues_ = 0;
    std::uint32_t num_resources_ = 0;
    std::array<std::uint8_t, kNumDestClasses> stages_{};

    // Queues as fixed-size rings in one flat array.
    std::uint32_t slot_stride_ = 2;
    std::vector<std::uint32_t> slots_;
    std::vector<std::uint8_t> head_;
    std::vector<std::uint8_t> size_;
    std::vector<std::uint8_t> capacity_;

    // Non-empty queues per network side.
    std::array<std::vector<std::uint32_t>, 2> active_;
    std::vector<std::uint8_t> is_active_;

    // Round-robin state: last granted input key per resource.
    std::vector<std::uint32_t> last_grant_;
    std::vector<Best> best_;

    std::vector<Message> messages_;
    std::vector<std::uint32_t> free_messages_;
    std::uint64_t in_flight_ = 0;

    std::vector<Candidate> candidates_;
    std::array<std::vector<std::uint32_t>, 3> by_rank_;
    std::vector<std::uint32_t> touched_;
    std::vector<std::uint64_t> bank_grants_;
};

}  // namespace terapool::engine
