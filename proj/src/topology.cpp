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

#include "terapool/topology.hpp"

#include "terapool/errors.hpp"

#include <charconv>
#include <string>

namespace terapool {

std::string_view to_string(DestClass c) {
    switch (c) {
        case DestClass::LocalTile: return "LocalTile";
        case DestClass::LocalSubGroup: return "LocalSubGroup";
        case DestClass::LocalGroup: return "LocalGroup";
        case DestClass::RemoteGroup: return "RemoteGroup";
    }
    return "unknown";
}

std::string_view to_string(BankInterleave b) {
    switch (b) {
        case BankInterleave::WordInterleaved: return "WordInterleaved";
        case BankInterleave::TileSequential: return "TileSequential";
    }
    return "unknown";
}

BankInterleave parse_bank_interleave(std::string_view text) {
    if (text == "WordInterleaved" || text == "word") return BankInterleave::WordInterleaved;
    if (text == "TileSequential" || text == "tile") return BankInterleave::TileSequential;
    throw ConfigError("unknown bank_interleave '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// LatencyProfile
// ---------------------------------------------------------------------------

std::string LatencyProfile::name() const {
    if (levels == 3) {
        return std::to_string(tile) + "-" + std::to_string(subgroup) + "-" + std::to_string(cluster);
    }
    return std::to_string(tile) + "-" + std::to_string(subgroup) + "-" + std::to_string(group) + "-" +
           std::to_string(cluster);
}

void LatencyProfile::validate() const {
    const auto check = [](std::uint32_t v, const char* field) {
        if (v == 0 || v % 2 == 0) {
            throw ConfigError(std::string("latency_profile.") + field + " must be odd and >= 1, got " +
                              std::to_string(v));
        }
    };
    check(tile, "tile");
    check(subgroup, "subgroup");
    check(group, "group");
    check(cluster, "cluster");
    if (!(tile <= subgroup && subgroup <= group && group <= cluster)) {
        throw ConfigError("latency_profile must satisfy tile <= subgroup <= group <= cluster, got " + name());
    }
    if (levels != 3 && levels != 4) throw ConfigError("latency_profile.levels must be 3 or 4");
}

LatencyProfile LatencyProfile::parse(std::string_view text) {
    std::vector<std::uint32_t> parts;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto dash = text.find('-', start);
        const auto piece = text.substr(start, dash == std::string_view::npos ? text.npos : dash - start);
        std::uint32_t v = 0;
        const auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), v);
        if (ec != std::errc{} || ptr != piece.data() + piece.size() || piece.empty()) {
            throw ConfigError("malformed latency profile '" + std::string(text) + "'");
        }
        parts.push_back(v);
        if (dash == std::string_view::npos) break;
        start = dash + 1;
    }
    LatencyProfile p;
    if (parts.size() == 4) {
        p = {parts[0], parts[1], parts[2], parts[3], 4};
    } else if (parts.size() == 3) {
        // Tile / group / cluster. The missing subgroup level collapses onto the group level.
        p = {parts[0], parts[1], parts[1], parts[2], 3};
    } else {
        throw ConfigError("latency profile '" + std::string(text) + "' needs 3 or 4 levels");
    }
    p.validate();
    return p;
}

std::uint32_t zero_load_latency(DestClass c, const LatencyProfile& p) {
    switch (c) {
        case DestClass::LocalTile: return p.tile;
        case DestClass::LocalSubGroup: return p.subgroup;
        case DestClass::LocalGroup: return p.group;
        case DestClass::RemoteGroup: return p.cluster;
    }
    return p.cluster;
}

std::uint32_t register_stages(DestClass c, const LatencyProfile& p) { return (zero_load_latency(c, p) - 1) / 2; }

// ---------------------------------------------------------------------------
// ClusterConfig
// ---------------------------------------------------------------------------

void ClusterConfig::validate() const {
    const auto positive = [](std::uint32_t v, const char* field) {
        if (v == 0) throw ConfigError(std::string(field) + " must be positive");
    };
    positive(cores_per_tile, "cores_per_tile");
    positive(banks_per_tile, "banks_per_tile");
    positive(bank_words, "bank_words");
    positive(tiles_per_subgroup, "tiles_per_subgroup");
    positive(subgroups_per_group, "subgroups_per_group");
    positive(groups, "groups");
    positive(outstanding_per_core, "outstanding_per_core");
    latency_profile.validate();
    if (latency_profile.levels == 3 && subgroups_per_group != 1) {
        throw ConfigError("a three-level latency_profile requires subgroups_per_group = 1");
    }
    if (frequency_hz && !(*frequency_hz > 0.0)) throw ConfigError("frequency_hz must be positive");
    if (total_words() > (std::uint64_t{1} << 40)) throw ConfigError("L1 size exceeds 2^40 words");
}

ClusterConfig ClusterConfig::terapool(const LatencyProfile& profile) {
    ClusterConfig cfg;
    cfg.latency_profile = profile;
    return cfg;
}

ClusterConfig ClusterConfig::mempool256() {
    ClusterConfig cfg;
    cfg.cores_per_tile = 4;
    cfg.banks_per_tile = 16;
    cfg.bank_words = 256;
    cfg.tiles_per_subgroup = 16;
    cfg.subgroups_per_group = 1;
    cfg.groups = 4;
    cfg.latency_profile = LatencyProfile::parse("1-3-5");
    return cfg;
}

// ---------------------------------------------------------------------------
// Address mapping
// ---------------------------------------------------------------------------

std::uint32_t global_tile(const BankLocation& loc, const ClusterConfig& cfg) {
    return (loc.group * cfg.subgroups_per_group + loc.subgroup) * cfg.tiles_per_subgroup + loc.tile;
}

std::uint32_t global_bank(const BankLocation& loc, const ClusterConfig& cfg) {
    return global_tile(loc, cfg) * cfg.banks_per_tile + loc.bank;
}

BankLocation bank_from_global(std::uint32_t index, const ClusterConfig& cfg) {
    BankLocation loc;
    loc.bank = index % cfg.banks_per_tile;
    std::uint32_t tile = index / cfg.banks_per_tile;
    loc.tile = tile % cfg.tiles_per_subgroup;
    tile /= cfg.tiles_per_subgroup;
    loc.subgroup = tile % cfg.subgroups_per_group;
    loc.group = tile / cfg.subgroups_per_group;
    return loc;
}

CoreLocation locate_core(CoreId core, const ClusterConfig& cfg) {
    CoreLocation loc;
    loc.core = core % cfg.cores_per_tile;
    std::uint32_t tile = core / cfg.cores_per_tile;
    loc.tile = tile % cfg.tiles_per_subgroup;
    tile /= cfg.tiles_per_subgroup;
    loc.subgroup = tile % cfg.subgroups_per_group;
    loc.group = tile / cfg.subgroups_per_group;
    return loc;
}

std::uint32_t tile_of_core(CoreId core, const ClusterConfig& cfg) { return core / cfg.cores_per_tile; }

WordLocation locate_bank(WordAddr addr, const ClusterConfig& cfg) {
    if (addr >= cfg.total_words()) {
        throw AddressError("word address " + std::to_string(addr) + " outside L1 of " +
                           std::to_string(cfg.total_words()) + " words");
    }
    WordLocation out;
    switch (cfg.bank_interleave) {
        case BankInterleave::WordInterleaved: {
            const auto banks = cfg.total_banks();
            out.bank = bank_from_global(static_cast<std::uint32_t>(addr % banks), cfg);
            out.offset = static_cast<std::uint32_t>(addr / banks);
            break;
        }
        case BankInterleave::TileSequential: {
            const auto tile_words = cfg.tile_words();
            const auto tile = static_cast<std::uint32_t>(addr / tile_words);
            const auto within = addr % tile_words;
            const auto bank = static_cast<std::uint32_t>(within % cfg.banks_per_tile);
            out.bank = bank_from_global(tile * cfg.banks_per_tile + bank, cfg);
            out.offset = static_cast<std::uint32_t>(within / cfg.banks_per_tile);
            break;
        }
    }
    return out;
}

WordAddr address_of(const WordLocation& loc, const ClusterConfig& cfg) {
    switch (cfg.bank_interleave) {
        case BankInterleave::WordInterleaved:
            return static_cast<WordAddr>(loc.offset) * cfg.total_banks() + global_bank(loc.bank, cfg);
        case BankInterleave::TileSequential:
            return static_cast<WordAddr>(global_tile(loc.bank, cfg)) * cfg.tile_words() +
                   static_cast<WordAddr>(loc.offset) * cfg.banks_per_tile + loc.bank.bank;
    }
    return 0;
}

DestClass destination_class(CoreId core, const BankLocation& loc, const ClusterConfig& cfg) {
    const auto c = locate_core(core, cfg);
    if (c.group != loc.group) return DestClass::RemoteGroup;
    if (c.subgroup != loc.subgroup) return DestClass::LocalGroup;
    if (c.tile != loc.tile) return DestClass::LocalSubGroup;
    return DestClass::LocalTile;
}

std::array<std::uint64_t, kNumDestClasses> class_bank_counts(const ClusterConfig& cfg) {
    const std::uint64_t tile = cfg.banks_per_tile;
    const std::uint64_t subgroup = tile * cfg.tiles_per_subgroup;
    const std::uint64_t group = subgroup * cfg.subgroups_per_group;
    const std::uint64_t cluster = group * cfg.groups;
    return {tile, subgroup - tile, group - subgroup, cluster - group};
}

std::array<double, kNumDestClasses> class_probabilities(const ClusterConfig& cfg) {
    const auto counts = class_bank_counts(cfg);
    const double total = static_cast<double>(cfg.total_banks());
    std::array<double, kNumDestClasses> p{};
    for (std::size_t i = 0; i < kNumDestClasses; ++i) p[i] = static_cast<double>(counts[i]) / total;
    return p;
}

double expected_zero_load_latency(const ClusterConfig& cfg) {
    const auto counts = class_bank_counts(cfg);
    std::uint64_t weighted = 0;
    for (const auto c : kAllDestClasses) weighted += counts[index_of(c)] * zero_load_latency(c, cfg.latency_profile);
    return static_cast<double>(weighted) / static_cast<double>(cfg.total_banks());
}

std::vector<CrossbarSpec> crossbar_inventory(const ClusterConfig& cfg) {
    const auto k = cfg.remote_ports();
    const auto subgroups = cfg.groups * cfg.subgroups_per_group;
    std::vector<CrossbarSpec> out;
    out.push_back({"tile", cfg.cores_per_tile + k, cfg.banks_per_tile, 1, cfg.total_tiles()});
    out.push_back({"subgroup", cfg.tiles_per_subgroup, cfg.tiles_per_subgroup, 1, subgroups});
    const auto inter_sg = cfg.subgroups_per_group * (cfg.subgroups_per_group - 1);
    out.push_back({"group/inter-subgroup", cfg.tiles_per_subgroup, cfg.tiles_per_subgroup, inter_sg,
                   inter_sg * cfg.groups});
    const auto inter_g = cfg.groups - 1;
    out.push_back(
        {"group/inter-group", cfg.tiles_per_group(), cfg.tiles_per_group(), inter_g, inter_g * cfg.groups});
    return out;
}

}  // namespace terapool
