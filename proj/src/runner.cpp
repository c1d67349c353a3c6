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

#include "terapool/runner.hpp"

#include "terapool/traffic.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace terapool::runner {

namespace {

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

ResultBundle run_sweep(const config::ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds, unsigned threads) {
    traffic::SweepSpec spec;
    spec.lambdas = traffic::SweepSpec::grid(cfg.sweep.lambda_min, cfg.sweep.lambda_max, cfg.sweep.lambda_step);
    spec.seeds = seeds;
    spec.duration = cfg.sweep.duration;
    spec.warmup = cfg.sweep.warmup;
    spec.threads = threads;
    spec.engine = cfg.engine;
    const auto sweep = traffic::run_load_sweep(cfg.cluster, spec);
    const auto curve = sweep.curve();

    ResultBundle b;
    b.files["sweep.csv"] = traffic::sweep_csv(sweep);

    Series thr{cfg.cluster.latency_profile.name(), {}};
    Series lat{thr.label, {}};
    for (const auto& c : curve) {
        thr.points.emplace_back(c.lambda, c.throughput);
        lat.points.emplace_back(c.throughput, c.mean_latency);
    }
    b.files["sweep_throughput.svg"] =
        line_chart_svg("Accepted vs offered load", "offered [req/core/cycle]", "accepted [req/core/cycle]", {thr});
    b.files["sweep_latency.svg"] =
        line_chart_svg("Round-trip latency", "throughput [req/core/cycle]", "mean latency [cycles]", {lat});

    std::ostringstream sat;
    sat << "profile,saturated,sat_throughput,knee_lambda,knee_latency\n";
    char buf[160];
    try {
        const auto s = traffic::find_saturation(curve);
        std::snprintf(buf, sizeof buf, "%s,1,%.6f,%.4f,%.4f\n", cfg.cluster.latency_profile.name().c_str(),
                      s.sat_throughput, s.knee_lambda, s.knee_latency);
    } catch (const NotSaturated&) {
        std::snprintf(buf, sizeof buf, "%s,0,,,\n", cfg.cluster.latency_profile.name().c_str());
    }
    sat << buf;
    b.files["saturation.csv"] = sat.str();
    return b;
}

ResultBundle run_kernel(const config::ExperimentConfig& cfg, std::uint64_t seed, unsigned threads) {
    auto profiles = cfg.kernel.profiles;
    if (profiles.empty()) profiles.push_back(cfg.cluster.latency_profile);

    std::vector<kernels::StallReport> reports(profiles.size());
    std::vector<kernels::AccessProfile> access(profiles.size());
    std::vector<std::exception_ptr> errors(profiles.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < profiles.size(); i = next++) {
            try {
                auto cluster = cfg.cluster;
                cluster.latency_profile = profiles[i];
                cluster.validate();
                const auto mk = kernels::map_kernel(cfg.kernel.spec, cluster);
                auto params = cfg.engine;
                params.seed = seed;
                reports[i] = kernels::simulate_kernel(mk, params).report;
                access[i] = kernels::access_profile(mk);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(profiles.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    ResultBundle b;
    b.files["kernel.csv"] = kernels::kernel_csv(reports);
    b.files["kernel_stalls.svg"] = kernels::stall_svg(reports);
    std::ostringstream loc;
    loc << "kernel,profile,class,loads,stores\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        for (const auto c : kAllDestClasses) {
            loc << reports[i].kernel << ',' << reports[i].profile << ',' << to_string(c) << ','
                << access[i].loads[index_of(c)] << ',' << access[i].stores[index_of(c)] << '\n';
        }
    }
    b.files["kernel_locality.csv"] = loc.str();
    return b;
}

ResultBundle run_pusch(const config::ExperimentConfig& cfg) {
    const auto& s = cfg.pusch.scenario;
    const auto r = analytics::pusch_transfer_model(s);
    ResultBundle b;
    std::ostringstream os;
    os << "quantity,bytes,kib\n";
    const auto row = [&](const char* q, std::uint64_t bytes, std::uint64_t kib) {
        os << q << ',' << bytes << ',' << kib << '\n';
    };
    row("transfer_out_ofdm", r.transfer_out_ofdm_bytes, r.out_kib());
    row("transfer_in_bf", r.transfer_in_bf_bytes, r.in_kib());
    row("total_transfer", r.total_transfer_bytes, r.total_kib());
    row("ofdm_buffer", r.ofdm_buffer_bytes, analytics::to_kib(r.ofdm_buffer_bytes));
    row("bf_input", r.bf_input_bytes, analytics::to_kib(r.bf_input_bytes));
    row("coefficients", r.coefficient_bytes, analytics::to_kib(r.coefficient_bytes));
    row("bf_output", r.bf_output_bytes, analytics::to_kib(r.bf_output_bytes));
    row("max_l1_occupation", r.max_l1_occupation_bytes, r.occupation_kib());
    b.files["pusch.csv"] = os.str();

    const auto w = analytics::workload_estimate(s.n_antennas, s.n_subcarriers, s.n_beams, cfg.pusch.streams,
                                                cfg.pusch.tti_seconds, cfg.pusch.ops_per_mac);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "n_antennas,n_subcarriers,n_beams,streams,tti_seconds,ops_per_mac,macs_per_stream,"
                  "required_ops_per_second,matmul_m,matmul_n,matmul_k,fits_l1\n"
                  "%u,%u,%u,%g,%g,%g,%.6e,%.6e,%u,%u,%u,%d\n",
                  s.n_antennas, s.n_subcarriers, s.n_beams, w.streams_per_tti, w.tti_seconds, w.ops_per_mac,
                  w.macs_per_stream, w.required_ops_per_second, r.matmul_dims[0], r.matmul_dims[1], r.matmul_dims[2],
                  r.fits(s) ? 1 : 0);
    b.files["workload.csv"] = buf;
    return b;
}

ResultBundle run_report(const config::ExperimentConfig& cfg) {
    const auto rows = analytics::reference_report();
    ResultBundle b;
    if (cfg.report.format != config::ReportFormat::Markdown) b.files["report.csv"] = analytics::report_csv(rows);
    if (cfg.report.format != config::ReportFormat::Csv) b.files["report.md"] = analytics::report_markdown(rows);
    return b;
}

}  // namespace

unsigned resolve_threads(unsigned flag) {
    if (const char* env = std::getenv("TERAPOOL_SIM_THREADS"); env && *env) {
        char* end = nullptr;
        const auto v = std::strtoul(env, &end, 10);
        if (end && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, flag);
}

std::string topo_summary(const ClusterConfig& cfg) {
    std::ostringstream os;
    os << "cores " << cfg.total_cores() << " = " << cfg.groups << " groups x " << cfg.subgroups_per_group
       << " subgroups x " << cfg.tiles_per_subgroup << " tiles x " << cfg.cores_per_tile << " cores\n";
    os << "banks " << cfg.total_banks() << " x " << cfg.bank_words << " words, L1 " << cfg.total_bytes() / 1024
       << " KiB, " << to_string(cfg.bank_interleave) << "\n";
    os << "remote ports per tile K = " << cfg.remote_ports() << "\n";
    os << "latency profile " << cfg.latency_profile.name() << "\n\n";
    os << "crossbar                  inputs x outputs  per parent  total\n";
    char buf[160];
    for (const auto& x : crossbar_inventory(cfg)) {
        std::snprintf(buf, sizeof buf, "%-24s  %6u x %-7u  %10u  %5u\n", x.location.c_str(), x.rows, x.cols,
                      x.per_parent, x.total);
        os << buf;
    }
    os << "\nclass            banks  probability  zero-load\n";
    const auto counts = class_bank_counts(cfg);
    const auto probs = class_probabilities(cfg);
    for (const auto c : kAllDestClasses) {
        std::snprintf(buf, sizeof buf, "%-15s  %5llu  %11.4f  %9u\n", std::string(to_string(c)).c_str(),
                      static_cast<unsigned long long>(counts[index_of(c)]), probs[index_of(c)],
                      zero_load_latency(c, cfg.latency_profile));
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "\nexpected zero-load latency %.4f cycles\n", expected_zero_load_latency(cfg));
    os << buf;
    return os.str();
}

ResultBundle run(const config::ExperimentConfig& cfg, const RunOptions& options) {
    if (!cfg.experiment) throw ConfigError("config has no experiment section (sweep, kernel, pusch or report)");
    const auto seeds = options.seeds.empty() ? cfg.seeds : options.seeds;
    const auto threads = std::max(1u, options.threads);
    const auto t0 = std::chrono::steady_clock::now();

    ResultBundle b;
    switch (*cfg.experiment) {
        case config::Experiment::Sweep: b = run_sweep(cfg, seeds, threads); break;
        case config::Experiment::Kernel: b = run_kernel(cfg, seeds.front(), threads); break;
        case config::Experiment::Pusch: b = run_pusch(cfg); break;
        case config::Experiment::Report: b = run_report(cfg); break;
    }
    b.files["config.txt"] = cfg.source;
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    nlohmann::ordered_json m;
    m["tool_version"] = kToolVersion;
    m["experiment"] = std::string(config::to_string(*cfg.experiment));
    m["command"] = options.command;
    m["config_hash"] = hex64(config::fnv1a64(cfg.source));
    m["seeds"] = seeds;
    m["threads"] = threads;
    m["wall_time_seconds"] = wall;
    auto& files = m["files"];
    for (const auto& [name, content] : b.files) files[name] = hex64(config::fnv1a64(content));
    b.manifest = m.dump(2) + "\n";
    return b;
}

void write_bundle(const ResultBundle& bundle, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const auto put = [&](const std::string& name, const std::string& content) {
        std::ofstream f(fs::path(dir) / name, std::ios::binary);
        if (!f) throw Error("cannot write '" + (fs::path(dir) / name).string() + "'");
        f << content;
    };
    for (const auto& [name, content] : bundle.files) put(name, content);
    put("manifest.json", bundle.manifest);
}

std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series) {
    constexpr double kW = 560, kH = 360, kL = 70, kR = 20, kT = 40, kB = 50;
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    bool first = true;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (first) {
                x0 = x1 = x;
                y0 = y1 = y;
                first = false;
            }
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    y0 = std::min(y0, 0.0);
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;
    const auto px = [&](double x) { return kL + (x - x0) / (x1 - x0) * (kW - kL - kR); };
    const auto py = [&](double y) { return kH - kB - (y - y0) / (y1 - y0) * (kH - kT - kB); };

    const std::array<const char*, 6> colors{"#4e79a7", "#e15759", "#59a14f", "#f28e2b", "#b07aa1", "#76b7b2"};
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" font-family=\"sans-serif\" "
                  "font-size=\"12\">\n",
                  kW, kH);
    os << buf;
    os << "<text x=\"" << kL << "\" y=\"22\" font-size=\"14\">" << title << "</text>\n";
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n"
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  kL, kH - kB, kW - kR, kH - kB, kL, kT, kL, kH - kB);
    os << buf;
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.3g</text>\n"
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3g</text>\n",
                      px(xv), kH - kB + 16, xv, kL - 6, py(yv) + 4, yv);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">", (kL + kW - kR) / 2, kH - 12);
    os << buf << x_label << "</text>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"14\" y=\"%.1f\" transform=\"rotate(-90 14 %.1f)\" text-anchor=\"middle\">",
                  (kT + kH - kB) / 2, (kT + kH - kB) / 2);
    os << buf << y_label << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto* color = colors[i % colors.size()];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : series[i].points) {
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x), py(y));
            os << buf;
        }
        os << "\"/>\n";
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\">", kW - kR - 120, kT + 14.0 * (i + 1),
                      color);
        os << buf << series[i].label << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace terapool::runner
