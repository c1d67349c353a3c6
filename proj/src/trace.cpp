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

#include "terapool/trace.hpp"

#include "terapool/errors.hpp"

#include <algorithm>

namespace terapool {

Instr Instr::offload(Unit unit, std::uint32_t latency, std::uint8_t tag, std::initializer_list<std::uint8_t> deps,
                     Fn fn) {
    if (deps.size() > kMaxDeps) throw ConfigError("offload supports at most 5 dependencies");
    Instr i;
    i.fn = fn;
    i.op = Op::Offload;
    i.unit = unit;
    i.value = latency;
    i.tag = tag;
    i.ndeps = static_cast<std::uint8_t>(deps.size());
    std::size_t k = 0;
    for (const auto d : deps) i.deps[k++] = d;
    return i;
}

namespace {

class VectorStream final : public InstrStream {
public:
    explicit VectorStream(const std::vector<Instr>& instrs) : instrs_(instrs) {}

    bool refill(std::vector<Instr>& out) override {
        if (pos_ >= instrs_.size()) return false;
        const auto end = std::min(instrs_.size(), pos_ + 4096);
        out.insert(out.end(), instrs_.begin() + static_cast<std::ptrdiff_t>(pos_),
                   instrs_.begin() + static_cast<std::ptrdiff_t>(end));
        pos_ = end;
        return true;
    }

private:
    std::vector<Instr> instrs_;
    std::size_t pos_ = 0;
};

}  // namespace

std::unique_ptr<InstrStream> TraceProgram::stream() const { return std::make_unique<VectorStream>(instrs_); }

TraceProgram TraceSet::materialize(CoreId core) const {
    TraceProgram prog;
    if (!stream_for) return prog;
    auto s = stream_for(core);
    for_each_instr(*s, [&](const Instr& i) { prog.push(i); });
    return prog;
}

TraceSet TraceSet::from_programs(std::vector<TraceProgram> programs, std::vector<std::uint32_t> barrier_domains) {
    TraceSet set;
    set.cores = static_cast<std::uint32_t>(programs.size());
    set.barrier_domains = std::move(barrier_domains);
    auto shared = std::make_shared<std::vector<TraceProgram>>(std::move(programs));
    set.stream_for = [shared](CoreId core) { return (*shared)[core].stream(); };
    return set;
}

}  // namespace terapool
