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

// Experiment orchestration: turns a parsed config into a bundle of CSV, SVG
// and a manifest, and writes it to disk.

#include "terapool/config.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace terapool::runner {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunOptions {
    /// Replaces the config's seed list when non-empty.
    std::vector<std::uint64_t> seeds;
    unsigned threads = 1;
    /// Recorded in the manifest.
    std::string command;
};

struct ResultBundle {
    /// File name -> content, CSV and SVG artifacts plus config.txt.
    std::map<std::string, std::string> files;
    /// JSON run manifest; not part of `files` so artifact hashes stay stable.
    std::string manifest;
};

/// `--threads` value, overridden by TERAPOOL_SIM_THREADS when set. At least 1.
[[nodiscard]] unsigned resolve_threads(unsigned flag);

/// Hierarchy, crossbar inventory and zero-load latencies.
[[nodiscard]] std::string topo_summary(const ClusterConfig& cfg);

/// Runs the config's experiment. Throws ConfigError when it names none, and
/// lets module errors propagate.
[[nodiscard]] ResultBundle run(const config::ExperimentConfig& cfg, const RunOptions& options);

/// Writes every file and manifest.json into `dir`, creating it.
void write_bundle(const ResultBundle& bundle, const std::string& dir);

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

/// Self-contained SVG line chart.
[[nodiscard]] std::string line_chart_svg(const std::string& title, const std::string& x_label,
                                         const std::string& y_label, const std::vector<Series>& series);

}  // namespace terapool::runner
