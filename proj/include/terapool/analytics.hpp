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

// Closed-form models: PUSCH data movement, workload requirement, peak and
// achieved performance, request energy, and a reference-vs-computed report.

#include "terapool/engine.hpp"
#include "terapool/kernels.hpp"
#include "terapool/topology.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace terapool::analytics {

struct PuschScenario {
    std::uint32_t n_antennas = 64;      // N_R
    std::uint32_t n_subcarriers = 3276; // N_SC
    std::uint32_t n_beams = 32;         // N_B
    std::uint32_t word_bytes = 4;
    std::uint32_t n_clusters = 4;
    std::uint64_t l1_per_cluster_bytes = 1u << 20;

    /// Throws ConfigError on zero fields or an antenna/subcarrier count the
    /// clusters cannot split evenly.
    void validate() const;
};

/// Bytes to KiB, rounded to nearest with ties going down.
[[nodiscard]] std::uint64_t to_kib(std::uint64_t bytes);

struct TransferReport {
    std::uint64_t transfer_out_ofdm_bytes = 0;
    std::uint64_t transfer_in_bf_bytes = 0;
    std::uint64_t total_transfer_bytes = 0;

    // Per-cluster L1 buffers; occupation is their sum.
    std::uint64_t ofdm_buffer_bytes = 0;
    std::uint64_t bf_input_bytes = 0;
    std::uint64_t coefficient_bytes = 0;
    std::uint64_t bf_output_bytes = 0;
    std::uint64_t max_l1_occupation_bytes = 0;

    /// Per-cluster beamforming product: (beams x antennas) * (antennas x subcarriers/cluster).
    std::array<std::uint32_t, 3> matmul_dims{};  // M, N, K

    // KiB figures round every component, then add.
    [[nodiscard]] std::uint64_t out_kib() const { return to_kib(transfer_out_ofdm_bytes); }
    [[nodiscard]] std::uint64_t in_kib() const { return to_kib(transfer_in_bf_bytes); }
    [[nodiscard]] std::uint64_t total_kib() const { return out_kib() + in_kib(); }
    [[nodiscard]] std::uint64_t occupation_kib() const;
    /// Occupation fits the scenario's per-cluster L1.
    [[nodiscard]] bool fits(const PuschScenario& s) const { return max_l1_occupation_bytes <= s.l1_per_cluster_bytes; }
};

/// One cluster keeps everything shared: only the beamforming coefficients are
/// moved in. Several clusters split antennas for the FFT and subcarriers for
/// the beamforming, exchanging the OFDM output between the two.
[[nodiscard]] TransferReport pusch_transfer_model(const PuschScenario& s);

struct WorkloadEstimate {
    double macs_per_stream = 0.0;
    double streams_per_tti = 0.0;
    double tti_seconds = 0.0;
    double ops_per_mac = 6.0;
    double required_ops_per_second = 0.0;
};

inline constexpr double kDefaultOpsPerMac = 6.0;

/// (N_R N_SC log2 N_SC + N_R N_SC N_B) MACs per stream.
[[nodiscard]] WorkloadEstimate workload_estimate(std::uint32_t n_antennas, std::uint32_t n_subcarriers,
                                                 std::uint32_t n_beams, double streams, double tti_seconds,
                                                 double ops_per_mac = kDefaultOpsPerMac);
[[nodiscard]] double workload_requirement(std::uint32_t n_antennas, std::uint32_t n_subcarriers, std::uint32_t n_beams,
                                          double streams, double tti_seconds, double ops_per_mac = kDefaultOpsPerMac);

/// cores x ops_per_core_cycle x freq. Throws ConfigError on a non-positive frequency.
[[nodiscard]] double peak_performance(const ClusterConfig& cfg, double freq_hz, double ops_per_core_cycle = 2.0);
/// ops x freq / cycles; 0 when there are no ops.
[[nodiscard]] double achieved_performance(double total_ops, double total_cycles, double freq_hz);
/// ops/s per watt.
[[nodiscard]] double energy_efficiency(double ops_per_second, double watts);

struct KernelPower {
    kernels::KernelKind kernel;
    double watts;
    double gops_per_watt;
};

/// Post-layout power figures of the 1-3-5-11 cluster, as reported by its
/// designers. Constants, never simulated.
inline constexpr std::array<KernelPower, 4> kReportedPower{{
    {kernels::KernelKind::FFT, 6.5, 93.0},
    {kernels::KernelKind::MatMul, 8.8, 125.0},
    {kernels::KernelKind::CHE, 6.6, 96.0},
    {kernels::KernelKind::SysInv, 4.9, 61.0},
}};

struct EnergyModel {
    double local_request_pj = 9.0;
    double cluster_request_pj = 13.5;

    /// Energy of one request of class `c`, linear in register depth between
    /// the local-tile and remote-group endpoints.
    [[nodiscard]] double request_pj(DestClass c, const LatencyProfile& p) const;
};

/// Sum over classes of retired requests times their per-request energy.
[[nodiscard]] double traffic_energy(const engine::SimStats& stats, const LatencyProfile& profile,
                                    const EnergyModel& model = {});

// ---- Report ------------------------------------------------------------------

struct ReportRow {
    std::string quantity;
    std::string unit;
    double reference = 0.0;
    double computed = 0.0;
    /// Absolute tolerance on the compared values.
    double tolerance = 0.0;
    /// Decimals both values are rounded to before comparing; negative disables rounding.
    int decimals = -1;

    [[nodiscard]] bool match() const;
};

/// Reference figures next to the models' results.
[[nodiscard]] std::vector<ReportRow> reference_report();
/// Header `quantity,unit,reference,computed,match`.
[[nodiscard]] std::string report_csv(const std::vector<ReportRow>& rows);
[[nodiscard]] std::string report_markdown(const std::vector<ReportRow>& rows);

}  // namespace terapool::analytics
