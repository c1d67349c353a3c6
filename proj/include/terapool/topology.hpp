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
 * @file topology.hpp
 * @brief Cluster hierarchy, address-to-bank mapping and zero-load latency model.
 *
 * The cluster is a four-level hierarchy:
 *
 *   Cluster ── groups ── subgroups_per_group ── tiles_per_subgroup ── tile
 *                                                                     ├─ cores_per_tile cores
 *                                                                     └─ banks_per_tile banks
 *
 * Every tile owns K = 1 + (S - 1) + (G - 1) remote request ports: one to the
 * tiles of its own subgroup, one per remote subgroup of its group and one per
 * remote group. A request therefore falls into exactly one of four destination
 * classes, each with its own zero-load round-trip latency.
 */

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace terapool {

using CoreId = std::uint32_t;
using WordAddr = std::uint64_t;
using Cycle = std::uint64_t;

enum class DestClass : std::uint8_t { LocalTile = 0, LocalSubGroup = 1, LocalGroup = 2, RemoteGroup = 3 };

inline constexpr std::size_t kNumDestClasses = 4;
inline constexpr std::array<DestClass, kNumDestClasses> kAllDestClasses{
    DestClass::LocalTile, DestClass::LocalSubGroup, DestClass::LocalGroup, DestClass::RemoteGroup};

[[nodiscard]] std::string_view to_string(DestClass c);
[[nodiscard]] constexpr std::size_t index_of(DestClass c) { return static_cast<std::size_t>(c); }

enum class BankInterleave : std::uint8_t { WordInterleaved, TileSequential };

[[nodiscard]] std::string_view to_string(BankInterleave b);
[[nodiscard]] BankInterleave parse_bank_interleave(std::string_view text);

/// Zero-load round-trip latency per destination class, in cycles.
///
/// A value L decomposes as L = 2r + 1: r one-way register stages on the
/// request path, one bank cycle and r stages back on the response path.
struct LatencyProfile {
    std::uint32_t tile = 1;
    std::uint32_t subgroup = 3;
    std::uint32_t group = 5;
    std::uint32_t cluster = 7;
    /// 3 for profiles of clusters without a subgroup level ("1-3-5").
    std::uint32_t levels = 4;

    [[nodiscard]] std::string name() const;
    /// Throws ConfigError on even, zero or decreasing values.
    void validate() const;

    /// "1-3-5-5", "1-3-5-7", "1-3-5-9", "1-3-5-11" or the three-level "1-3-5".
    [[nodiscard]] static LatencyProfile parse(std::string_view text);

    friend bool operator==(const LatencyProfile&, const LatencyProfile&) = default;
};

[[nodiscard]] std::uint32_t zero_load_latency(DestClass c, const LatencyProfile& p);
/// One-way register stages for a class: (latency - 1) / 2.
[[nodiscard]] std::uint32_t register_stages(DestClass c, const LatencyProfile& p);

struct ClusterConfig {
    std::uint32_t cores_per_tile = 8;
    std::uint32_t banks_per_tile = 32;
    std::uint32_t bank_words = 256;
    std::uint32_t tiles_per_subgroup = 8;
    std::uint32_t subgroups_per_group = 4;
    std::uint32_t groups = 4;
    LatencyProfile latency_profile{};
    std::uint32_t outstanding_per_core = 8;
    BankInterleave bank_interleave = BankInterleave::WordInterleaved;
    std::optional<double> frequency_hz;

    [[nodiscard]] std::uint32_t tiles_per_group() const { return tiles_per_subgroup * subgroups_per_group; }
    [[nodiscard]] std::uint32_t total_tiles() const { return tiles_per_group() * groups; }
    [[nodiscard]] std::uint32_t total_cores() const { return cores_per_tile * total_tiles(); }
    [[nodiscard]] std::uint32_t total_banks() const { return banks_per_tile * total_tiles(); }
    [[nodiscard]] std::uint64_t total_words() const {
        return static_cast<std::uint64_t>(total_banks()) * bank_words;
    }
    [[nodiscard]] std::uint64_t total_bytes() const { return total_words() * 4; }
    [[nodiscard]] std::uint32_t tile_words() const { return banks_per_tile * bank_words; }
    /// K: remote request ports per tile.
    [[nodiscard]] std::uint32_t remote_ports() const { return 1 + (subgroups_per_group - 1) + (groups - 1); }

    /// Throws ConfigError naming the offending field.
    void validate() const;

    /// 1024-core cluster: 4 groups x 4 subgroups x 8 tiles x 8 cores.
    [[nodiscard]] static ClusterConfig terapool(const LatencyProfile& profile = {});
    /// 256-core baseline: 4 groups x 16 tiles x 4 cores, three-level 1-3-5.
    [[nodiscard]] static ClusterConfig mempool256();

    friend bool operator==(const ClusterConfig&, const ClusterConfig&) = default;
};

struct BankLocation {
    std::uint32_t group = 0;
    std::uint32_t subgroup = 0;
    std::uint32_t tile = 0;  ///< within subgroup
    std::uint32_t bank = 0;  ///< within tile

    friend auto operator<=>(const BankLocation&, const BankLocation&) = default;
};

struct WordLocation {
    BankLocation bank;
    std::uint32_t offset = 0;  ///< word within the bank

    friend auto operator<=>(const WordLocation&, const WordLocation&) = default;
};

struct CoreLocation {
    std::uint32_t group = 0;
    std::uint32_t subgroup = 0;
    std::uint32_t tile = 0;  ///< within subgroup
    std::uint32_t core = 0;  ///< within tile
};

// Flat indices. Tiles are numbered group-major, then subgroup, then tile.
[[nodiscard]] std::uint32_t global_tile(const BankLocation& loc, const ClusterConfig& cfg);
[[nodiscard]] std::uint32_t global_bank(const BankLocation& loc, const ClusterConfig& cfg);
[[nodiscard]] BankLocation bank_from_global(std::uint32_t global_bank_index, const ClusterConfig& cfg);
[[nodiscard]] CoreLocation locate_core(CoreId core, const ClusterConfig& cfg);
[[nodiscard]] std::uint32_t tile_of_core(CoreId core, const ClusterConfig& cfg);

/// Word address -> (bank, offset). Throws AddressError past the end of L1.
[[nodiscard]] WordLocation locate_bank(WordAddr addr, const ClusterConfig& cfg);
/// Inverse of locate_bank.
[[nodiscard]] WordAddr address_of(const WordLocation& loc, const ClusterConfig& cfg);

[[nodiscard]] DestClass destination_class(CoreId core, const BankLocation& loc, const ClusterConfig& cfg);

/// Number of banks in each destination class, seen from any single core.
[[nodiscard]] std::array<std::uint64_t, kNumDestClasses> class_bank_counts(const ClusterConfig& cfg);
[[nodiscard]] std::array<double, kNumDestClasses> class_probabilities(const ClusterConfig& cfg);

/// Mean zero-load round trip for uniformly distributed destination banks.
[[nodiscard]] double expected_zero_load_latency(const ClusterConfig& cfg);

struct CrossbarSpec {
    std::string location;       ///< "tile", "subgroup", "group/inter-subgroup", "group/inter-group"
    std::uint32_t rows = 0;     ///< inputs
    std::uint32_t cols = 0;     ///< outputs
    std::uint32_t per_parent = 0;
    std::uint32_t total = 0;
};

/// Request-network crossbars; the response network mirrors them.
[[nodiscard]] std::vector<CrossbarSpec> crossbar_inventory(const ClusterConfig& cfg);

}  // namespace terapool
