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

// Experiment configuration files: flat `key = value` lines, `#` comments.
// Cluster keys are bare ClusterConfig field names; experiment keys carry a
// section prefix (`sweep.`, `kernel.`, `pusch.`, `report.`).

#include "terapool/analytics.hpp"
#include "terapool/errors.hpp"
#include "terapool/kernels.hpp"
#include "terapool/topology.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace terapool::config {

struct ConfigIssue {
    std::string key;
    std::size_t line = 0;  ///< 1-based; 0 when the issue has no single line
    std::string reason;

    [[nodiscard]] std::string to_string() const;
};

/// Every problem found in a config file, in line order.
class ConfigParseError : public ConfigError {
public:
    explicit ConfigParseError(std::vector<ConfigIssue> issues);
    [[nodiscard]] const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

enum class Experiment : std::uint8_t { Sweep, Kernel, Pusch, Report };

[[nodiscard]] std::string_view to_string(Experiment e);

struct SweepSection {
    double lambda_min = 0.01;
    double lambda_max = 0.4;
    double lambda_step = 0.01;
    Cycle duration = 20000;
    Cycle warmup = 2000;
};

struct KernelSection {
    kernels::KernelSpec spec;
    /// Latency profiles to run; empty selects the cluster's own.
    std::vector<LatencyProfile> profiles;
};

struct PuschSection {
    analytics::PuschScenario scenario;
    double streams = 14;
    double tti_seconds = 1e-3;
    double ops_per_mac = analytics::kDefaultOpsPerMac;
};

enum class ReportFormat : std::uint8_t { Csv, Markdown, Both };

struct ReportSection {
    ReportFormat format = ReportFormat::Both;
};

struct ExperimentConfig {
    ClusterConfig cluster = ClusterConfig::terapool();
    engine::EngineParams engine{};
    std::optional<Experiment> experiment;
    SweepSection sweep;
    KernelSection kernel;
    PuschSection pusch;
    ReportSection report;
    std::string out_dir;
    std::vector<std::uint64_t> seeds{1};
    /// The text the config was parsed from.
    std::string source;
};

/// Throws ConfigParseError listing every issue (unknown key, bad value,
/// more than one experiment section, invalid cluster).
[[nodiscard]] ExperimentConfig parse_config_text(const std::string& text);
/// Reads and parses a file. Throws ConfigError when it cannot be read.
[[nodiscard]] ExperimentConfig parse_config(const std::string& path);

/// "terapool", "mempool256" or a latency profile name such as "1-3-5-9".
[[nodiscard]] ClusterConfig preset(std::string_view name);

/// 64-bit FNV-1a.
[[nodiscard]] std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace terapool::config
