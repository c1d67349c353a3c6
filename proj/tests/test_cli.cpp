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
#include "terapool/runner.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace terapool;
using namespace terapool::config;
namespace fs = std::filesystem;

namespace {

std::vector<ConfigIssue> issues_of(const std::string& text) {
    try {
        (void)parse_config_text(text);
    } catch (const ConfigParseError& e) {
        return e.issues();
    }
    return {};
}

// Reference FNV-1a, byte by byte.
std::string fnv_hex(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("terapool_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(TERAPOOL_SIM_BIN) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const char* kSmallSweep = R"(# small sweep
preset = mempool256
sweep.lambda_min = 0.05
sweep.lambda_max = 0.25
sweep.lambda_step = 0.1
sweep.duration = 1500
sweep.warmup = 300
seeds = 1, 2
)";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("FNV-1a") {
    CHECK(fnv1a64("") == 14695981039346656037ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("presets") {
    const auto m = preset("mempool256");
    CHECK(m.total_cores() == 256);
    CHECK(preset("mempool").total_cores() == 256);
    const auto t = preset("1-3-5-9");
    CHECK(t.total_cores() == 1024);
    CHECK(t.latency_profile.name() == "1-3-5-9");
    CHECK(preset("terapool").latency_profile.name() == "1-3-5-7");
    CHECK_THROWS_AS((void)preset("bogus"), ConfigError);
}

TEST_CASE("cluster and experiment keys") {
    const auto c = parse_config_text("preset = terapool\nprofile = 1-3-5-11\nkernel.kind = matmul\nkernel.dims = 64x64\n"
                                     "kernel.profiles = 1-3-5-7, 1-3-5-9\nseeds = 4,5\nout_dir = res\n");
    CHECK(c.cluster.latency_profile.name() == "1-3-5-11");
    REQUIRE(c.experiment);
    CHECK(*c.experiment == Experiment::Kernel);
    CHECK(c.kernel.spec.name() == "matmul_64x64x64");
    CHECK(c.kernel.profiles.size() == 2);
    CHECK(c.seeds == std::vector<std::uint64_t>{4, 5});
    CHECK(c.out_dir == "res");

    const auto bare = parse_config_text("# nothing but comments\n\n");
    CHECK_FALSE(bare.experiment);
    CHECK(bare.cluster.total_cores() == 1024);
}

TEST_CASE("parse errors name the key and line") {
    auto is = issues_of("preset = terapool\nfoo = 3\n");
    REQUIRE(is.size() == 1);
    CHECK(is[0].key == "foo");
    CHECK(is[0].line == 2);
    CHECK(is[0].to_string() == "line 2: 'foo': unknown key");

    is = issues_of("cores_per_tile = 0\n");
    REQUIRE(is.size() == 1);
    CHECK(is[0].key == "cores_per_tile");
    CHECK(is[0].line == 1);

    is = issues_of("groups = 4\n\ngroups = 2\n");
    REQUIRE(is.size() == 1);
    CHECK(is[0].line == 3);

    is = issues_of("sweep.duration = 100\nkernel.kind = fft\n");
    REQUIRE_FALSE(is.empty());
    CHECK(is[0].key == "kernel.kind");
    CHECK(is[0].line == 2);

    is = issues_of("kernel.kind = fft\n");
    REQUIRE(is.size() == 1);
    CHECK(is[0].key == "kernel.dims");

    is = issues_of("sweep.warmup = 500\nsweep.duration = 400\n");
    REQUIRE(is.size() == 1);
    CHECK(is[0].key == "sweep.warmup");

    is = issues_of("banks_per_tile = x\nprofile = 1-3\ngroups\n");
    CHECK(is.size() == 3);

    CHECK_THROWS_AS((void)parse_config("/nonexistent/terapool.cfg"), ConfigError);
}

TEST_CASE("resolve_threads honours the environment") {
    ::unsetenv("TERAPOOL_SIM_THREADS");
    CHECK(runner::resolve_threads(3) == 3);
    CHECK(runner::resolve_threads(0) == 1);
    ::setenv("TERAPOOL_SIM_THREADS", "5", 1);
    CHECK(runner::resolve_threads(2) == 5);
    ::unsetenv("TERAPOOL_SIM_THREADS");
}

TEST_CASE("topology summary") {
    const auto s = runner::topo_summary(ClusterConfig::terapool());
    CHECK(s.find("1024") != std::string::npos);
    CHECK(s.find("1-3-5-7") != std::string::npos);
}

TEST_CASE("bundles are deterministic across runs and thread counts") {
    const auto cfg = parse_config_text(kSmallSweep);
    runner::RunOptions one;
    one.threads = 1;
    runner::RunOptions four;
    four.threads = 4;
    const auto a = runner::run(cfg, one);
    const auto b = runner::run(cfg, one);
    const auto c = runner::run(cfg, four);
    CHECK(a.files == b.files);
    CHECK(a.files == c.files);
    CHECK(a.files.contains("sweep.csv"));
    CHECK(a.files.contains("saturation.csv"));
    CHECK(a.files.contains("config.txt"));

    runner::RunOptions other;
    other.seeds = {9};
    CHECK(runner::run(cfg, other).files.at("sweep.csv") != a.files.at("sweep.csv"));
}

TEST_CASE("manifest hashes match the written files") {
    const auto cfg = parse_config_text("pusch.n_antennas = 64\n");
    runner::RunOptions opt;
    opt.command = "terapool-sim pusch";
    const auto b = runner::run(cfg, opt);
    const auto dir = scratch("manifest");
    runner::write_bundle(b, dir.string());
    const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(m.at("experiment") == "pusch");
    CHECK(m.at("tool_version") == runner::kToolVersion);
    CHECK(m.at("command") == "terapool-sim pusch");
    CHECK(m.at("config_hash") == fnv_hex(cfg.source));
    REQUIRE(m.at("files").size() == b.files.size());
    for (const auto& [name, hash] : m.at("files").items()) {
        CAPTURE(name);
        CHECK(hash == fnv_hex(slurp(dir / name)));
    }
    CHECK(slurp(dir / "pusch.csv").rfind("quantity,bytes,kib\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("kernel and report experiments") {
    const auto k = runner::run(parse_config_text("preset = mempool256\nkernel.kind = fft\nkernel.dims = 4x256\n"), {});
    CHECK(k.files.at("kernel.csv").find("fft_4x256,1-3-5,") != std::string::npos);
    CHECK(k.files.at("kernel_locality.csv").rfind("kernel,profile,class,loads,stores\n", 0) == 0);
    CHECK(k.files.contains("kernel_stalls.svg"));

    const auto r = runner::run(parse_config_text("report.format = markdown\n"), {});
    CHECK(r.files.contains("report.md"));
    CHECK_FALSE(r.files.contains("report.csv"));
    CHECK_THROWS_AS((void)runner::run(parse_config_text(""), {}), ConfigError);
}

TEST_CASE("command-line tool") {
    const auto dir = scratch("bin");
    const auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream(dir / name) << text;
        return (dir / name).string();
    };
    const auto good = write("pusch.cfg", "pusch.n_clusters = 4\n");
    const auto bad = write("bad.cfg", "cores_per_tile = 0\n");
    const auto cluster_only = write("cluster.cfg", "preset = mempool256\n");

    CHECK(run_cli("topo --preset 1-3-5-9") == 0);
    CHECK(run_cli("pusch --config " + good + " --out " + (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "manifest.json"));
    CHECK(fs::exists(dir / "out" / "pusch.csv"));
    CHECK(run_cli("pusch --config " + bad) == 2);
    CHECK(run_cli("sweep --config " + good) == 2);
    CHECK(run_cli("kernel --config " + cluster_only) == 2);
    CHECK(run_cli("report --config " + cluster_only + " --out " + (dir / "rep").string()) == 0);
    CHECK(fs::exists(dir / "rep" / "report.csv"));
    CHECK(run_cli("frobnicate") != 0);
    fs::remove_all(dir);
}

}  // TEST_SUITE
