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

// terapool-sim: command-line front end for topology, sweeps, kernels and models.

#include "terapool/config.hpp"
#include "terapool/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace terapool;

int run_experiment(const std::string& name, const std::string& config_path, const std::string& out_dir,
                   const std::vector<std::uint64_t>& seeds, unsigned threads, const std::string& command) {
    const auto cfg = config::parse_config(config_path);
    if (cfg.experiment && std::string(config::to_string(*cfg.experiment)) != name) {
        std::cerr << "error: '" << name << "' needs a config with a " << name << " section, '" << config_path
                  << "' holds a " << config::to_string(*cfg.experiment) << " section\n";
        return 2;
    }
    auto effective = cfg;
    if (!effective.experiment) {
        // A config with only cluster keys runs the subcommand's experiment with defaults.
        if (name == "sweep") effective.experiment = config::Experiment::Sweep;
        if (name == "pusch") effective.experiment = config::Experiment::Pusch;
        if (name == "report") effective.experiment = config::Experiment::Report;
        if (name == "kernel") {
            std::cerr << "error: config '" << config_path << "' has no kernel section (kernel.kind, kernel.dims)\n";
            return 2;
        }
    }
    runner::RunOptions opt;
    opt.seeds = seeds;
    opt.threads = runner::resolve_threads(threads);
    opt.command = command;
    const auto bundle = runner::run(effective, opt);
    const auto dir = !out_dir.empty() ? out_dir : !cfg.out_dir.empty() ? cfg.out_dir : std::string("results");
    runner::write_bundle(bundle, dir);
    for (const auto& [file, content] : bundle.files) std::cout << dir << "/" << file << "\n";
    std::cout << dir << "/manifest.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cycle-level simulator and models for hierarchical shared-L1 clusters"};
    app.require_subcommand(1);
    app.set_version_flag("--version", runner::kToolVersion);

    std::string config_path;
    std::string out_dir;
    std::vector<std::uint64_t> seeds;
    unsigned threads = 1;
    std::string preset_name;

    auto* topo = app.add_subcommand("topo", "Print the hierarchy, crossbars and zero-load latencies");
    topo->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
    topo->add_option("--preset", preset_name, "terapool, mempool256 or a latency profile such as 1-3-5-9");

    std::vector<CLI::App*> experiments;
    for (const auto* name : {"sweep", "kernel", "pusch", "report"}) {
        const std::string desc = std::string("Run a ") + name + " experiment";
        auto* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "Output directory (default: out_dir key or ./results)");
        sub->add_option("--seed", seeds, "Seed; repeat for several")->take_all();
        sub->add_option("--threads", threads, "Concurrent experiment points (TERAPOOL_SIM_THREADS overrides)")
            ->check(CLI::PositiveNumber);
        experiments.push_back(sub);
    }

    CLI11_PARSE(app, argc, argv);

    std::string command;
    for (int i = 0; i < argc; ++i) command += (i ? " " : "") + std::string(argv[i]);

    try {
        if (topo->parsed()) {
            ClusterConfig cfg;
            if (!config_path.empty()) cfg = config::parse_config(config_path).cluster;
            if (!preset_name.empty()) cfg = config::preset(preset_name);
            std::cout << runner::topo_summary(cfg);
            return 0;
        }
        for (auto* sub : experiments) {
            if (sub->parsed()) return run_experiment(sub->get_name(), config_path, out_dir, seeds, threads, command);
        }
    } catch (const config::ConfigParseError& e) {
        std::cerr << "error: " << config_path << ": " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
