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

#include "terapool/analytics.hpp"

#include "terapool/errors.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace terapool::analytics {

void PuschScenario::validate() const {
    const auto positive = [](std::uint64_t v, const char* name) {
        if (v == 0) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(n_antennas, "n_antennas");
    positive(n_subcarriers, "n_subcarriers");
    positive(word_bytes, "word_bytes");
    positive(n_clusters, "n_clusters");
    positive(l1_per_cluster_bytes, "l1_per_cluster_bytes");
    if (n_antennas % n_clusters != 0) {
        throw ConfigError("n_antennas (" + std::to_string(n_antennas) + ") is not divisible by n_clusters (" +
                          std::to_string(n_clusters) + ")");
    }
    if (n_subcarriers % n_clusters != 0) {
        throw ConfigError("n_subcarriers (" + std::to_string(n_subcarriers) + ") is not divisible by n_clusters (" +
                          std::to_string(n_clusters) + ")");
    }
}

std::uint64_t to_kib(std::uint64_t bytes) {
    const auto whole = bytes / 1024;
    return bytes % 1024 > 512 ? whole + 1 : whole;
}

std::uint64_t TransferReport::occupation_kib() const {
    return to_kib(ofdm_buffer_bytes) + to_kib(bf_input_bytes) + to_kib(coefficient_bytes) + to_kib(bf_output_bytes);
}

TransferReport pusch_transfer_model(const PuschScenario& s) {
    s.validate();
    const std::uint64_t w = s.word_bytes;
    const std::uint64_t nr = s.n_antennas, nsc = s.n_subcarriers, nb = s.n_beams, nc = s.n_clusters;

    TransferReport r;
    r.coefficient_bytes = nb * nr * w;
    if (nc == 1) {
        r.transfer_out_ofdm_bytes = 0;
        r.transfer_in_bf_bytes = r.coefficient_bytes;
    } else {
        r.transfer_out_ofdm_bytes = (nr / nc) * nsc * w;
        r.transfer_in_bf_bytes = nr * (nsc / nc) * w + r.coefficient_bytes;
    }
    r.total_transfer_bytes = r.transfer_out_ofdm_bytes + r.transfer_in_bf_bytes;

    r.ofdm_buffer_bytes = (nr / nc) * nsc * w;
    r.bf_input_bytes = nr * (nsc / nc) * w;
    r.bf_output_bytes = nb * (nsc / nc) * w;
    r.max_l1_occupation_bytes = r.ofdm_buffer_bytes + r.bf_input_bytes + r.coefficient_bytes + r.bf_output_bytes;
    r.matmul_dims = {s.n_beams, static_cast<std::uint32_t>(nsc / nc), s.n_antennas};
    return r;
}

WorkloadEstimate workload_estimate(std::uint32_t n_antennas, std::uint32_t n_subcarriers, std::uint32_t n_beams,
                                   double streams, double tti_seconds, double ops_per_mac) {
    if (n_antennas == 0 || n_subcarriers == 0) throw ConfigError("antennas and subcarriers must be positive");
    if (!(streams > 0.0) || !(tti_seconds > 0.0) || !(ops_per_mac > 0.0)) {
        throw ConfigError("streams, tti and ops_per_mac must be positive");
    }
    const double nr = n_antennas, nsc = n_subcarriers, nb = n_beams;
    WorkloadEstimate e;
    e.macs_per_stream = nr * nsc * std::log2(nsc) + nr * nsc * nb;
    e.streams_per_tti = streams;
    e.tti_seconds = tti_seconds;
    e.ops_per_mac = ops_per_mac;
    e.required_ops_per_second = e.macs_per_stream * streams * ops_per_mac / tti_seconds;
    return e;
}

double workload_requirement(std::uint32_t n_antennas, std::uint32_t n_subcarriers, std::uint32_t n_beams,
                            double streams, double tti_seconds, double ops_per_mac) {
    return workload_estimate(n_antennas, n_subcarriers, n_beams, streams, tti_seconds, ops_per_mac)
        .required_ops_per_second;
}

double peak_performance(const ClusterConfig& cfg, double freq_hz, double ops_per_core_cycle) {
    if (!(freq_hz > 0.0)) throw ConfigError("frequency must be positive");
    return static_cast<double>(cfg.total_cores()) * ops_per_core_cycle * freq_hz;
}

double achieved_performance(double total_ops, double total_cycles, double freq_hz) {
    if (total_ops == 0.0) return 0.0;
    if (!(total_cycles > 0.0) || !(freq_hz > 0.0)) throw ConfigError("cycles and frequency must be positive");
    return total_ops * freq_hz / total_cycles;
}

double energy_efficiency(double ops_per_second, double watts) {
    if (!(watts > 0.0)) throw ConfigError("power must be positive");
    return ops_per_second / watts;
}

double EnergyModel::request_pj(DestClass c, const LatencyProfile& p) const {
    const double r0 = register_stages(DestClass::LocalTile, p);
    const double r1 = register_stages(DestClass::RemoteGroup, p);
    if (r1 <= r0) return local_request_pj;
    const double r = register_stages(c, p);
    return local_request_pj + (cluster_request_pj - local_request_pj) * (r - r0) / (r1 - r0);
}

double traffic_energy(const engine::SimStats& stats, const LatencyProfile& profile, const EnergyModel& model) {
    double pj = 0.0;
    for (const auto c : kAllDestClasses) {
        pj += static_cast<double>(stats.retired_by_class[index_of(c)]) * model.request_pj(c, profile);
    }
    return pj * 1e-12;
}

// ---- Report ------------------------------------------------------------------

bool ReportRow::match() const {
    double a = reference, b = computed;
    if (decimals >= 0) {
        const double scale = std::pow(10.0, decimals);
        a = std::round(a * scale) / scale;
        b = std::round(b * scale) / scale;
    }
    return std::abs(a - b) <= tolerance + 1e-12;
}

std::vector<ReportRow> reference_report() {
    std::vector<ReportRow> rows;

    const auto split = pusch_transfer_model({});
    PuschScenario one;
    one.n_clusters = 1;
    one.l1_per_cluster_bytes = 4u << 20;
    const auto shared = pusch_transfer_model(one);
    const auto kib = [&](std::string q, double ref, std::uint64_t got) {
        rows.push_back({std::move(q), "KiB", ref, static_cast<double>(got), 0.0, 0});
    };
    kib("pusch 4x1MiB transfer out", 205, split.out_kib());
    kib("pusch 4x1MiB transfer in", 213, split.in_kib());
    kib("pusch 4x1MiB transfer total", 418, split.total_kib());
    kib("pusch 4x1MiB max L1 occupation", 520, split.occupation_kib());
    kib("pusch 1x4MiB transfer in", 8, shared.in_kib());
    kib("pusch 1x4MiB transfer total", 8, shared.total_kib());
    kib("pusch 1x4MiB max L1 occupation", 2055, shared.occupation_kib());

    const std::array<std::pair<const char*, double>, 4> zl{
        {{"1-3-5-5", 4.9}, {"1-3-5-7", 6.4}, {"1-3-5-9", 7.9}, {"1-3-5-11", 9.3}}};
    for (const auto& [name, ref] : zl) {
        const auto cfg = ClusterConfig::terapool(LatencyProfile::parse(name));
        rows.push_back({std::string("zero-load latency ") + name, "cycles", ref, expected_zero_load_latency(cfg), 0.0, 1});
    }

    const auto tera = ClusterConfig::terapool();
    const std::array<std::pair<double, double>, 3> peaks{{{730e6, 1.50}, {880e6, 1.80}, {924e6, 1.89}}};
    for (const auto& [f, ref] : peaks) {
        char q[64];
        std::snprintf(q, sizeof q, "peak 1024 cores %.0f MHz", f / 1e6);
        rows.push_back({q, "TOPS", ref, peak_performance(tera, f) / 1e12, 0.0, 2});
    }
    rows.push_back({"peak 256 cores 915 MHz", "TOPS", 0.47, peak_performance(ClusterConfig::mempool256(), 915e6) / 1e12,
                    0.0, 2});

    const double mm_ops = 2.0 * 512.0 * 512.0 * 512.0;
    const double gops = achieved_performance(mm_ops, 298239, 880e6) / 1e9;
    rows.push_back({"matmul 512 efficiency at 6.4 W", "GOPS/W", 125, energy_efficiency(gops, 6.4), 2.0, -1});
    rows.push_back({"matmul 512 at 924 MHz", "TOPS", 0.84, achieved_performance(mm_ops, 301113, 924e6) / 1e12, 0.03, -1});

    const double w64 = workload_requirement(64, 3276, 32, 14, 1e-3) / 1e12;
    const double w128 = workload_requirement(128, 3276, 32, 14, 1e-3) / 1e12;
    rows.push_back({"pusch requirement 64 antennas", "TOPS", 0.8, w64, 0.8 * 0.3, -1});
    rows.push_back({"pusch requirement 128 antennas", "TOPS", 1.8, w128, 1.8 * 0.3, -1});

    const EnergyModel em;
    const auto p7 = LatencyProfile::parse("1-3-5-7");
    rows.push_back({"remote-group request energy", "pJ", 13.5, em.request_pj(DestClass::RemoteGroup, p7), 1e-9, -1});
    rows.push_back({"local-tile request energy", "pJ", 9.0, em.request_pj(DestClass::LocalTile, p7), 1e-9, -1});
    return rows;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

std::string report_csv(const std::vector<ReportRow>& rows) {
    std::ostringstream os;
    os << "quantity,unit,reference,computed,match\n";
    for (const auto& r : rows) {
        os << r.quantity << ',' << r.unit << ',' << fmt(r.reference) << ',' << fmt(r.computed) << ','
           << (r.match() ? "match" : "mismatch") << '\n';
    }
    return os.str();
}

std::string report_markdown(const std::vector<ReportRow>& rows) {
    std::ostringstream os;
    os << "| quantity | unit | reference | computed | match |\n";
    os << "|---|---|---:|---:|---|\n";
    for (const auto& r : rows) {
        os << "| " << r.quantity << " | " << r.unit << " | " << fmt(r.reference) << " | " << fmt(r.computed) << " | "
           << (r.match() ? "match" : "mismatch") << " |\n";
    }
    return os.str();
}

}  // namespace terapool::analytics
