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

#include "terapool/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace terapool::config {

std::string ConfigIssue::to_string() const {
    std::string s = line ? "line " + std::to_string(line) + ": " : std::string{};
    if (!key.empty()) s += "'" + key + "': ";
    return s + reason;
}

namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues) {
    std::string s = "invalid config";
    for (const auto& i : issues) s += "\n  " + i.to_string();
    return s;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> split_list(std::string_view v) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= v.size()) {
        auto end = v.find(',', start);
        if (end == std::string_view::npos) end = v.size();
        const auto item = trim(v.substr(start, end - start));
        if (!item.empty()) out.emplace_back(item);
        start = end + 1;
    }
    return out;
}

std::uint64_t to_u64(std::string_view v) {
    std::uint64_t x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || ptr != v.data() + v.size()) throw ConfigError("expected a non-negative integer, got '" + std::string(v) + "'");
    return x;
}

std::uint32_t to_u32(std::string_view v) {
    const auto x = to_u64(v);
    if (x > 0xFFFFFFFFu) throw ConfigError("value out of range: " + std::string(v));
    return static_cast<std::uint32_t>(x);
}

double to_double(std::string_view v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(std::string(v), &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw ConfigError("expected a number, got '" + std::string(v) + "'");
    return x;
}

struct Entry {
    std::string key;
    std::string value;
    std::size_t line;
};

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

struct KeyInfo {
    Setter set;
    std::optional<Experiment> section;
};

const std::map<std::string, KeyInfo>& key_table() {
    static const std::map<std::string, KeyInfo> table = [] {
        std::map<std::string, KeyInfo> t;
        const auto cluster_u32 = [&](const char* name, std::uint32_t ClusterConfig::*field) {
            t[name] = {[field](ExperimentConfig& c, const std::string& v) { c.cluster.*field = to_u32(v); }, {}};
        };
        cluster_u32("cores_per_tile", &ClusterConfig::cores_per_tile);
        cluster_u32("banks_per_tile", &ClusterConfig::banks_per_tile);
        cluster_u32("bank_words", &ClusterConfig::bank_words);
        cluster_u32("tiles_per_subgroup", &ClusterConfig::tiles_per_subgroup);
        cluster_u32("subgroups_per_group", &ClusterConfig::subgroups_per_group);
        cluster_u32("groups", &ClusterConfig::groups);
        cluster_u32("outstanding_per_core", &ClusterConfig::outstanding_per_core);
        t["latency_profile"] = {[](ExperimentConfig& c, const std::string& v) { c.cluster.latency_profile = LatencyProfile::parse(v); }, {}};
        t["bank_interleave"] = {[](ExperimentConfig& c, const std::string& v) { c.cluster.bank_interleave = parse_bank_interleave(v); }, {}};
        t["frequency_hz"] = {[](ExperimentConfig& c, const std::string& v) { c.cluster.frequency_hz = to_double(v); }, {}};
        // Applied before every other key; see parse_config_text.
        t["preset"] = {[](ExperimentConfig&, const std::string&) {}, {}};
        t["profile"] = {[](ExperimentConfig&, const std::string&) {}, {}};

        t["out_dir"] = {[](ExperimentConfig& c, const std::string& v) { c.out_dir = v; }, {}};
        const auto seeds = [](ExperimentConfig& c, const std::string& v) {
            c.seeds.clear();
            for (const auto& s : split_list(v)) c.seeds.push_back(to_u64(s));
            if (c.seeds.empty()) throw ConfigError("seed list is empty");
        };
        t["seeds"] = {seeds, {}};

        t["engine.icache_miss_rate"] = {[](ExperimentConfig& c, const std::string& v) {
            const auto x = to_double(v);
            if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("must be in [0, 1]");
            c.engine.icache_miss_rate = x;
        }, {}};
        t["engine.icache_penalty"] = {[](ExperimentConfig& c, const std::string& v) { c.engine.icache_penalty = to_u32(v); }, {}};
        t["engine.barrier_release_latency"] = {[](ExperimentConfig& c, const std::string& v) { c.engine.barrier_release_latency = to_u32(v); }, {}};

        const auto sw = Experiment::Sweep;
        t["sweep.lambda_min"] = {[](ExperimentConfig& c, const std::string& v) { c.sweep.lambda_min = to_double(v); }, sw};
        t["sweep.lambda_max"] = {[](ExperimentConfig& c, const std::string& v) { c.sweep.lambda_max = to_double(v); }, sw};
        t["sweep.lambda_step"] = {[](ExperimentConfig& c, const std::string& v) { c.sweep.lambda_step = to_double(v); }, sw};
        t["sweep.duration"] = {[](ExperimentConfig& c, const std::string& v) { c.sweep.duration = to_u64(v); }, sw};
        t["sweep.warmup"] = {[](ExperimentConfig& c, const std::string& v) { c.sweep.warmup = to_u64(v); }, sw};
        t["sweep.seeds"] = {seeds, sw};

        const auto kn = Experiment::Kernel;
        t["kernel.kind"] = {[](ExperimentConfig& c, const std::string& v) { c.kernel.spec.kind = kernels::parse_kernel_kind(v); }, kn};
        // Parsed once the kind is known.
        t["kernel.dims"] = {[](ExperimentConfig&, const std::string&) {}, kn};
        t["kernel.placement"] = {[](ExperimentConfig& c, const std::string& v) { c.kernel.spec.placement = parse_bank_interleave(v); }, kn};
        t["kernel.profiles"] = {[](ExperimentConfig& c, const std::string& v) {
            c.kernel.profiles.clear();
            for (const auto& p : split_list(v)) c.kernel.profiles.push_back(LatencyProfile::parse(p));
        }, kn};

        const auto pu = Experiment::Pusch;
        const auto pusch_u32 = [&](const char* name, std::uint32_t analytics::PuschScenario::*field) {
            t[std::string("pusch.") + name] = {[field](ExperimentConfig& c, const std::string& v) { c.pusch.scenario.*field = to_u32(v); }, pu};
        };
        pusch_u32("n_antennas", &analytics::PuschScenario::n_antennas);
        pusch_u32("n_subcarriers", &analytics::PuschScenario::n_subcarriers);
        pusch_u32("n_beams", &analytics::PuschScenario::n_beams);
        pusch_u32("word_bytes", &analytics::PuschScenario::word_bytes);
        pusch_u32("n_clusters", &analytics::PuschScenario::n_clusters);
        t["pusch.l1_per_cluster_bytes"] = {[](ExperimentConfig& c, const std::string& v) { c.pusch.scenario.l1_per_cluster_bytes = to_u64(v); }, pu};
        t["pusch.streams"] = {[](ExperimentConfig& c, const std::string& v) { c.pusch.streams = to_double(v); }, pu};
        t["pusch.tti_seconds"] = {[](ExperimentConfig& c, const std::string& v) { c.pusch.tti_seconds = to_double(v); }, pu};
        t["pusch.ops_per_mac"] = {[](ExperimentConfig& c, const std::string& v) { c.pusch.ops_per_mac = to_double(v); }, pu};

        t["report.format"] = {[](ExperimentConfig& c, const std::string& v) {
            const auto f = lower(v);
            if (f == "csv") c.report.format = ReportFormat::Csv;
            else if (f == "markdown" || f == "md") c.report.format = ReportFormat::Markdown;
            else if (f == "both") c.report.format = ReportFormat::Both;
            else throw ConfigError("expected csv, markdown or both");
        }, Experiment::Report};
        return t;
    }();
    return table;
}

}  // namespace

ConfigParseError::ConfigParseError(std::vector<ConfigIssue> issues)
    : ConfigError(join_issues(issues)), issues_(std::move(issues)) {}

std::string_view to_string(Experiment e) {
    switch (e) {
        case Experiment::Sweep: return "sweep";
        case Experiment::Kernel: return "kernel";
        case Experiment::Pusch: return "pusch";
        case Experiment::Report: return "report";
    }
    return "?";
}

ClusterConfig preset(std::string_view name) {
    const auto n = lower(name);
    if (n == "terapool") return ClusterConfig::terapool();
    if (n == "mempool256" || n == "mempool") return ClusterConfig::mempool256();
    try {
        return ClusterConfig::terapool(LatencyProfile::parse(n));
    } catch (const ConfigError&) {
        throw ConfigError("unknown preset '" + std::string(name) + "'");
    }
}

ExperimentConfig parse_config_text(const std::string& text) {
    std::vector<ConfigIssue> issues;
    std::vector<Entry> entries;
    std::map<std::string, std::size_t> seen;

    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto line = std::string_view(raw);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            issues.push_back({std::string(line), lineno, "expected 'key = value'"});
            continue;
        }
        const auto key = lower(trim(line.substr(0, eq)));
        const auto value = std::string(trim(line.substr(eq + 1)));
        if (!key_table().contains(key)) {
            issues.push_back({key, lineno, "unknown key"});
            continue;
        }
        if (value.empty()) {
            issues.push_back({key, lineno, "missing value"});
            continue;
        }
        if (const auto it = seen.find(key); it != seen.end()) {
            issues.push_back({key, lineno, "duplicate key (first set on line " + std::to_string(it->second) + ")"});
            continue;
        }
        seen[key] = lineno;
        entries.push_back({key, value, lineno});
    }

    ExperimentConfig cfg;
    cfg.source = text;
    const auto find = [&](const std::string& key) -> const Entry* {
        for (const auto& e : entries) {
            if (e.key == key) return &e;
        }
        return nullptr;
    };

    if (const auto* e = find("preset")) {
        try {
            cfg.cluster = preset(e->value);
        } catch (const Error& ex) {
            issues.push_back({e->key, e->line, ex.what()});
        }
    }
    if (const auto* e = find("profile")) {
        try {
            cfg.cluster.latency_profile = LatencyProfile::parse(e->value);
        } catch (const Error& ex) {
            issues.push_back({e->key, e->line, ex.what()});
        }
    }

    for (const auto& e : entries) {
        const auto& info = key_table().at(e.key);
        if (info.section) {
            if (cfg.experiment && *cfg.experiment != *info.section) {
                issues.push_back({e.key, e.line, "a config holds exactly one experiment section; '" +
                                                     std::string(to_string(*cfg.experiment)) + "' is already set"});
                continue;
            }
            cfg.experiment = info.section;
        }
        try {
            info.set(cfg, e.value);
        } catch (const Error& ex) {
            issues.push_back({e.key, e.line, ex.what()});
        }
    }

    if (cfg.experiment == Experiment::Kernel) {
        const auto* kind = find("kernel.kind");
        const auto* dims = find("kernel.dims");
        if (!kind) issues.push_back({"kernel.kind", 0, "missing key in kernel section"});
        if (!dims) issues.push_back({"kernel.dims", 0, "missing key in kernel section"});
        if (kind && dims) {
            try {
                const auto placement = cfg.kernel.spec.placement;
                cfg.kernel.spec = kernels::KernelSpec::parse(cfg.kernel.spec.kind, dims->value);
                cfg.kernel.spec.placement = placement;
            } catch (const Error& ex) {
                issues.push_back({dims->key, dims->line, ex.what()});
            }
        }
    }
    if (cfg.experiment == Experiment::Sweep) {
        const auto& s = cfg.sweep;
        const auto* where = find("sweep.lambda_max");
        if (!(s.lambda_min >= 0.0 && s.lambda_max <= 1.0 && s.lambda_min <= s.lambda_max)) {
            issues.push_back({"sweep.lambda_max", where ? where->line : 0, "need 0 <= lambda_min <= lambda_max <= 1"});
        }
        if (!(s.lambda_step > 0.0)) issues.push_back({"sweep.lambda_step", 0, "must be positive"});
        if (s.warmup >= s.duration) issues.push_back({"sweep.warmup", 0, "must be shorter than sweep.duration"});
    }

    try {
        cfg.cluster.validate();
    } catch (const ConfigError& ex) {
        // Messages start with the offending field name.
        const std::string msg = ex.what();
        const auto key = msg.substr(0, msg.find(' '));
        const auto* e = find(key);
        if (!e && key == "a") e = find("latency_profile");
        issues.push_back({e ? e->key : key, e ? e->line : 0, msg});
    }

    if (!issues.empty()) {
        std::stable_sort(issues.begin(), issues.end(),
                         [](const ConfigIssue& a, const ConfigIssue& b) {
                             // Issues without a line go last.
                             return (a.line ? a.line : SIZE_MAX) < (b.line ? b.line : SIZE_MAX);
                         });
        throw ConfigParseError(std::move(issues));
    }
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace terapool::config
