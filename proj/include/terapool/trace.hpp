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

// Abstract per-core instruction streams executed by the engine's cores.

#include "terapool/topology.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <vector>

namespace terapool {

enum class Op : std::uint8_t { Compute, Load, Store, Offload, Use, Barrier };
enum class Unit : std::uint8_t { None, Mac, Div };

/// Arithmetic an Offload performs, for functional replay. `a`..`e` are the
/// values of deps[0..4]; the timing model ignores this field.
enum class Fn : std::uint8_t {
    None,
    Mul,       ///< a * b
    Mac,       ///< a * b + c
    MulConj,   ///< a * conj(b)
    MsubConj,  ///< c - a * conj(b)
    ConjMul,   ///< conj(a) * b
    ConjMac,   ///< conj(a) * b + c
    NegMul,    ///< -(a * b)
    Norm,      ///< |a|^2
    Div,       ///< a / b
    Recip,     ///< 1 / a
    Sqrt,      ///< sqrt(re(a))
    R4Out0,    ///< radix-4 DIF output 0 of (a, b, c, d)
    R4Out1,    ///< radix-4 DIF output 1 of (a, b, c, d), times e
    R4Out2,    ///< radix-4 DIF output 2 of (a, b, c, d), times e
    R4Out3,    ///< radix-4 DIF output 3 of (a, b, c, d), times e
};

/// Upper bound on distinct dependency tags a program may use.
inline constexpr std::uint32_t kMaxTags = 64;
inline constexpr std::size_t kMaxDeps = 5;

struct Instr {
    Op op = Op::Compute;
    Unit unit = Unit::None;
    Fn fn = Fn::None;
    std::uint8_t tag = 0;    ///< result tag (Load, Offload) or consumed tag (Use)
    std::uint8_t ndeps = 0;  ///< Offload operands; Store data (0 or 1)
    std::array<std::uint8_t, kMaxDeps> deps{};
    std::uint32_t value = 0;  ///< Compute: cycles, Offload: latency, Barrier: domain
    WordAddr addr = 0;        ///< Load / Store

    [[nodiscard]] static Instr compute(std::uint32_t cycles) {
        Instr i;
        i.op = Op::Compute;
        i.value = cycles;
        return i;
    }
    [[nodiscard]] static Instr load(WordAddr addr, std::uint8_t tag) {
        Instr i;
        i.op = Op::Load;
        i.addr = addr;
        i.tag = tag;
        return i;
    }
    /// Store without a data dependency.
    [[nodiscard]] static Instr store(WordAddr addr) {
        Instr i;
        i.op = Op::Store;
        i.addr = addr;
        return i;
    }
    /// Store of the value held in `data`; issue waits until it is available.
    [[nodiscard]] static Instr store(WordAddr addr, std::uint8_t data) {
        Instr i = store(addr);
        i.ndeps = 1;
        i.deps[0] = data;
        return i;
    }
    [[nodiscard]] static Instr offload(Unit unit, std::uint32_t latency, std::uint8_t tag,
                                       std::initializer_list<std::uint8_t> deps, Fn fn = Fn::None);
    [[nodiscard]] static Instr use(std::uint8_t tag) {
        Instr i;
        i.op = Op::Use;
        i.tag = tag;
        return i;
    }
    [[nodiscard]] static Instr barrier(std::uint32_t domain) {
        Instr i;
        i.op = Op::Barrier;
        i.value = domain;
        return i;
    }

    /// Instructions this record retires when executed (Compute(n) retires n).
    [[nodiscard]] std::uint64_t weight() const { return op == Op::Compute ? value : 1; }
};

/// Lazily produced instruction stream. Large kernels would not fit in memory
/// as flat per-core vectors, so mappers hand out generators instead.
class InstrStream {
public:
    virtual ~InstrStream() = default;
    /// Appends the next batch to `out`. Returns false once the stream is exhausted
    /// and nothing was appended.
    virtual bool refill(std::vector<Instr>& out) = 0;
};

/// Materialized per-core program.
class TraceProgram {
public:
    TraceProgram() = default;
    explicit TraceProgram(std::vector<Instr> instrs) : instrs_(std::move(instrs)) {}

    void push(const Instr& i) { instrs_.push_back(i); }
    [[nodiscard]] const std::vector<Instr>& instrs() const { return instrs_; }
    [[nodiscard]] std::size_t size() const { return instrs_.size(); }
    [[nodiscard]] std::unique_ptr<InstrStream> stream() const;

private:
    std::vector<Instr> instrs_;
};

/// One program per core plus the barrier domains they synchronize on.
struct TraceSet {
    std::uint32_t cores = 0;
    /// Number of participating cores per barrier domain id.
    std::vector<std::uint32_t> barrier_domains;
    std::function<std::unique_ptr<InstrStream>(CoreId)> stream_for;

    [[nodiscard]] TraceProgram materialize(CoreId core) const;
    /// Builds a set from explicit per-core programs.
    [[nodiscard]] static TraceSet from_programs(std::vector<TraceProgram> programs,
                                                std::vector<std::uint32_t> barrier_domains);
};

/// Walks a stream and calls `fn(const Instr&)` for every record.
template <typename Fn>
void for_each_instr(InstrStream& stream, Fn&& fn) {
    std::vector<Instr> buf;
    while (true) {
        buf.clear();
        if (!stream.refill(buf)) break;
        for (const auto& i : buf) fn(i);
    }
}

}  // namespace terapool
