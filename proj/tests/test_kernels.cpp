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

#include "oracles.hpp"

#include "terapool/errors.hpp"
#include "terapool/kernels.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

using namespace terapool;
using namespace terapool::kernels;

namespace {

ClusterConfig small_cluster() {
    ClusterConfig cfg;
    cfg.cores_per_tile = 4;
    cfg.banks_per_tile = 16;
    cfg.bank_words = 256;
    cfg.tiles_per_subgroup = 2;
    cfg.subgroups_per_group = 2;
    cfg.groups = 2;
    cfg.latency_profile = LatencyProfile::parse("1-3-5-7");
    return cfg;
}

double rel_error(const std::vector<Complex>& got, const std::vector<Complex>& want) {
    double err = 0.0, mag = 0.0;
    for (std::size_t i = 0; i < want.size(); ++i) {
        err = std::max(err, std::abs(got[i] - want[i]));
        mag = std::max(mag, std::abs(want[i]));
    }
    return err / mag;
}

std::vector<Complex> random_signal(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Complex> x(n);
    for (auto& v : x) v = {u(rng), u(rng)};
    return x;
}

// Every address stored by the traces, with multiplicity.
std::map<WordAddr, int> stored_addresses(const MappedKernel& mk, std::map<WordAddr, std::set<CoreId>>* by_core = nullptr) {
    std::map<WordAddr, int> out;
    for (CoreId c = 0; c < mk.traces.cores; ++c) {
        auto s = mk.traces.stream_for(c);
        for_each_instr(*s, [&](const Instr& in) {
            if (in.op != Op::Store) return;
            ++out[in.addr];
            if (by_core) (*by_core)[in.addr].insert(c);
        });
    }
    return out;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("kernel specs parse in table order") {
    const auto f = KernelSpec::parse(KernelKind::FFT, "64x4096");
    CHECK(f.dims[0] == 4096);
    CHECK(f.dims[1] == 64);
    CHECK(f.name() == "fft_64x4096");
    const auto m = KernelSpec::parse(KernelKind::MatMul, "512x512");
    CHECK(m.dims[2] == 512);
    CHECK(m.dims_string() == "512x512x512");
    CHECK(KernelSpec::parse(KernelKind::CHE, "4096x32x4").name() == "che_4096x32x4");
    CHECK(KernelSpec::parse(parse_kernel_kind("CholDec"), "65536x4").kind == KernelKind::SysInv);
    CHECK_THROWS_AS((void)KernelSpec::parse(KernelKind::FFT, "64"), ConfigError);
    CHECK_THROWS_AS((void)KernelSpec::parse(KernelKind::MatMul, "4xfoo"), ConfigError);
    CHECK_THROWS_AS((void)parse_kernel_kind("qr"), ConfigError);
    CHECK(KernelSpec::matmul(512, 512, 512).ops() == 2ull * 512 * 512 * 512);
}

TEST_CASE("shape validation") {
    CHECK_THROWS_AS(KernelSpec::fft(8, 1).validate(), DimensionError);
    CHECK_THROWS_AS(KernelSpec::matmul(6, 8, 8).validate(), DimensionError);
    CHECK_THROWS_AS(KernelSpec::che(16, 4, 9).validate(), DimensionError);
    CHECK_THROWS_AS(KernelSpec::sysinv(16, 0).validate(), DimensionError);
    CHECK_NOTHROW(KernelSpec::fft(4096, 64).validate());
}

TEST_CASE("working sets beyond L1 are rejected") {
    const auto cfg = ClusterConfig::terapool();
    CHECK_THROWS_AS((void)map_matmul(KernelSpec::matmul(1024, 1024, 1024), cfg), CapacityError);
    CHECK_THROWS_AS((void)map_fft(KernelSpec::fft(4096, 256), cfg), Error);
}

TEST_CASE("FFT reference matches the naive DFT") {
    std::mt19937_64 rng(1);
    for (std::size_t n : {4u, 16u, 64u, 256u, 1024u}) {
        CAPTURE(n);
        const auto x = random_signal(n, rng);
        CHECK(rel_error(fft_reference(x), oracle::naive_dft(x)) <= 1e-9);
    }
    CHECK_THROWS_AS((void)fft_reference(std::vector<Complex>(8)), DimensionError);
}

TEST_CASE("FFT stage helpers") {
    CHECK(fft_stages(4096) == 6);
    CHECK(fft_stride(4096, 0) == 1024);
    CHECK(fft_stride(4096, 5) == 1);
    for (std::uint32_t i = 0; i < 256; ++i) CHECK(digit_reverse4(digit_reverse4(i, 256), 256) == i);
    CHECK(digit_reverse4(1, 256) == 64);
}

TEST_CASE("FFT butterflies partition every stage") {
    for (std::uint32_t n : {64u, 256u, 1024u, 4096u}) {
        for (std::uint32_t p : {1u, 2u, 4u, 8u, 16u}) {
            if ((n / 4) % p != 0) continue;
            for (std::uint32_t k = 0; k < fft_stages(n); ++k) {
                CAPTURE(n);
                CAPTURE(p);
                CAPTURE(k);
                std::vector<int> seen(n, 0);
                const auto s = fft_stride(n, k);
                for (std::uint32_t lane = 0; lane < p; ++lane) {
                    for (const auto base : fft_butterflies(n, p, 4, lane, k)) {
                        for (std::uint32_t m = 0; m < 4; ++m) ++seen.at(base + m * s);
                    }
                }
                CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
            }
        }
    }
}

TEST_CASE("mapped FFT computes the DFT") {
    std::mt19937_64 rng(5);
    SUBCASE("64 transforms of 1024 points on the full cluster") {
        const auto cfg = ClusterConfig::terapool();
        const auto mk = map_fft(KernelSpec::fft(1024, 64), cfg);
        const auto x = random_signal(1024 * 64, rng);
        const auto y = gather_results(mk, replay(mk, {x}));
        for (std::size_t f = 0; f < 64; f += 9) {
            const std::vector<Complex> in(x.begin() + f * 1024, x.begin() + (f + 1) * 1024);
            const std::vector<Complex> out(y.begin() + f * 1024, y.begin() + (f + 1) * 1024);
            CHECK(rel_error(out, oracle::naive_dft(in)) <= 1e-6);
        }
    }
    SUBCASE("one 256-point transform on a small cluster") {
        const auto mk = map_fft(KernelSpec::fft(256, 1), small_cluster());
        const auto x = random_signal(256, rng);
        CHECK(rel_error(gather_results(mk, replay(mk, {x})), oracle::naive_dft(x)) <= 1e-6);
    }
}

TEST_CASE("FFT loads stay inside the subgroup") {
    const auto mk = map_fft(KernelSpec::fft(4096, 64), ClusterConfig::terapool());
    const auto ap = access_profile(mk);
    CHECK(ap.loads[2] == 0);
    CHECK(ap.loads[3] == 0);
    CHECK(ap.total_loads() > 0);
}

TEST_CASE("mapped MatMul is exact") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> v(-50, 50);
    for (const auto& [m, n, k] : std::vector<std::array<std::uint32_t, 3>>{{64, 64, 64}, {32, 48, 40}, {128, 64, 8}}) {
        CAPTURE(m);
        CAPTURE(n);
        CAPTURE(k);
        std::vector<std::int64_t> a(std::size_t{m} * k), b(std::size_t{k} * n);
        for (auto& x : a) x = v(rng);
        for (auto& x : b) x = v(rng);
        std::vector<Complex> ca(a.begin(), a.end()), cb(b.begin(), b.end());
        const auto mk = map_matmul(KernelSpec::matmul(m, n, k), ClusterConfig::terapool());
        const auto got = gather_results(mk, replay(mk, {ca, cb}));
        const auto want = oracle::triple_loop(a, b, m, n, k);
        REQUIRE(got.size() == want.size());
        bool exact = true;
        for (std::size_t i = 0; i < want.size(); ++i) exact &= got[i] == Complex(static_cast<double>(want[i]), 0.0);
        CHECK(exact);
    }
}

TEST_CASE("MatMul reference") {
    IntMatrix a(2, 3), b(3, 2);
    a.data = {1, 2, 3, 4, 5, 6};
    b.data = {7, 8, 9, 10, 11, 12};
    const auto c = matmul_reference(a, b);
    CHECK(c.data == std::vector<std::int64_t>{58, 64, 139, 154});
    CHECK_THROWS_AS((void)matmul_reference(a, a), DimensionError);
}

TEST_CASE("MatMul output tiles partition the product") {
    const auto mk = map_matmul(KernelSpec::matmul(128, 128, 128), ClusterConfig::terapool());
    const auto stores = stored_addresses(mk);
    CHECK(stores.size() == 128u * 128u);
    CHECK(std::all_of(stores.begin(), stores.end(), [](const auto& kv) { return kv.second == 1; }));
    const auto ap = access_profile(mk);
    for (std::size_t c = 0; c < 4; ++c) CHECK(ap.loads[c] > 0);
}

TEST_CASE("cores of a tile start at distinct rotations") {
    ClusterConfig one;
    one.tiles_per_subgroup = 1;
    one.subgroups_per_group = 1;
    one.groups = 1;
    std::set<std::uint32_t> starts;
    for (CoreId c = 0; c < 8; ++c) {
        const auto s = matmul_start_offset(c, 8, one);
        CHECK(s == c);
        starts.insert(s);
    }
    CHECK(starts.size() == 8);
    const auto mk = map_matmul(KernelSpec::matmul(8, 8, 8), one);
    std::vector<Complex> a(64), b(64);
    for (int i = 0; i < 64; ++i) {
        a[i] = i % 7;
        b[i] = i % 5 - 2;
    }
    const auto got = gather_results(mk, replay(mk, {a, b}));
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            Complex want{};
            for (int p = 0; p < 8; ++p) want += a[i * 8 + p] * b[p * 8 + j];
            CHECK(got[i * 8 + j] == want);
        }
}

TEST_CASE("mapped CHE is exact") {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> v(-100, 100), pick(0, 7);
    // Reference pilots with power-of-two magnitudes keep every step exact.
    const std::array<Complex, 8> pilots{Complex{1, 0}, {0, 1}, {-1, 0}, {0, -1}, {1, 1}, {1, -1}, {-2, 2}, {2, 0}};
    const std::uint32_t sc = 2048, rx = 8, tx = 4;
    std::vector<Complex> r(std::size_t{sc} * rx), p(std::size_t{sc} * tx);
    for (auto& x : r) x = {static_cast<double>(v(rng)), static_cast<double>(v(rng))};
    for (auto& x : p) x = pilots[pick(rng)];
    const auto mk = map_che(KernelSpec::che(sc, rx, tx), ClusterConfig::terapool());
    const auto got = gather_results(mk, replay(mk, {r, p}));
    bool exact = true;
    for (std::uint32_t s = 0; s < sc; ++s)
        for (std::uint32_t i = 0; i < rx; ++i)
            for (std::uint32_t t = 0; t < tx; ++t)
                exact &= got[(std::size_t{s} * rx + i) * tx + t] == oracle::scalar_che(r[s * rx + i], p[s * tx + t]);
    CHECK(exact);

    ComplexMatrix crx(1, 1), cref(1, 1);
    CHECK_THROWS_AS((void)che_reference(crx, cref), NumericalError);
}

TEST_CASE("CHE outputs stay in the computing core's tile") {
    const auto mk = map_che(KernelSpec::che(4096, 32, 4), ClusterConfig::terapool());
    const auto ap = access_profile(mk);
    CHECK(ap.stores[0] == ap.total_stores());
    CHECK(ap.stores[0] == 4096u * 32u * 4u);
    std::map<WordAddr, std::set<CoreId>> owner;
    const auto stores = stored_addresses(mk, &owner);
    CHECK(std::all_of(owner.begin(), owner.end(), [](const auto& kv) { return kv.second.size() == 1; }));
}

TEST_CASE("Cholesky and inversion references") {
    std::mt19937_64 rng(17);
    const auto a = oracle::random_hpd(4, rng);
    ComplexMatrix m(4, 4);
    for (std::uint32_t i = 0; i < 4; ++i)
        for (std::uint32_t j = 0; j < 4; ++j) m(i, j) = a[i][j];
    const auto l = cholesky(m);
    for (std::uint32_t i = 0; i < 4; ++i)
        for (std::uint32_t j = 0; j < 4; ++j) {
            Complex s{};
            for (std::uint32_t k = 0; k < 4; ++k) s += l(i, k) * std::conj(l(j, k));
            CHECK(std::abs(s - m(i, j)) < 1e-12);
        }
    const auto inv = sysinv_reference(m);
    const auto gj = oracle::gauss_jordan_inverse(a);
    for (std::uint32_t i = 0; i < 4; ++i)
        for (std::uint32_t j = 0; j < 4; ++j) CHECK(std::abs(inv(i, j) - gj[i][j]) < 1e-12);

    ComplexMatrix bad(2, 2);
    bad(0, 0) = 1.0;
    bad(1, 1) = -1.0;
    CHECK_THROWS_AS((void)cholesky(bad), NotPositiveDefinite);
}

TEST_CASE("mapped SysInv inverts 1000 random 4x4 systems") {
    std::mt19937_64 rng(21);
    const std::uint32_t problems = 1000, dim = 4;
    std::vector<oracle::CMat> mats;
    std::vector<Complex> packed;
    for (std::uint32_t p = 0; p < problems; ++p) {
        mats.push_back(oracle::random_hpd(dim, rng));
        for (std::uint32_t i = 0; i < dim; ++i)
            for (std::uint32_t j = 0; j <= i; ++j) packed.push_back(mats.back()[i][j]);
    }
    const auto mk = map_sysinv(KernelSpec::sysinv(problems, dim), ClusterConfig::terapool());
    const auto got = gather_results(mk, replay(mk, {packed}));
    double worst = 0.0, worst_vs_gj = 0.0;
    std::size_t at = 0;
    for (std::uint32_t p = 0; p < problems; ++p) {
        oracle::CMat inv(dim, std::vector<Complex>(dim));
        for (std::uint32_t i = 0; i < dim; ++i)
            for (std::uint32_t j = 0; j <= i; ++j) {
                inv[i][j] = got[at++];
                inv[j][i] = std::conj(inv[i][j]);
            }
        worst = std::max(worst, oracle::inf_norm_minus_identity(oracle::matmul(mats[p], inv)));
        const auto gj = oracle::gauss_jordan_inverse(mats[p]);
        for (std::uint32_t i = 0; i < dim; ++i)
            for (std::uint32_t j = 0; j < dim; ++j) worst_vs_gj = std::max(worst_vs_gj, std::abs(gj[i][j] - inv[i][j]));
    }
    CHECK(worst <= 1e-9);
    CHECK(worst_vs_gj <= 1e-9);
}

TEST_CASE("SysInv stays tile-local and problems partition over cores") {
    const auto mk = map_sysinv(KernelSpec::sysinv(4096, 4), ClusterConfig::terapool());
    const auto ap = access_profile(mk);
    CHECK(ap.loads[0] == ap.total_loads());
    CHECK(ap.stores[0] == ap.total_stores());
    std::map<WordAddr, std::set<CoreId>> owner;
    (void)stored_addresses(mk, &owner);
    CHECK(std::all_of(owner.begin(), owner.end(), [](const auto& kv) { return kv.second.size() == 1; }));
}

TEST_CASE("replay rejects operands of the wrong size") {
    const auto mk = map_matmul(KernelSpec::matmul(8, 8, 8), ClusterConfig::terapool());
    CHECK_THROWS_AS((void)replay(mk, {std::vector<Complex>(64)}), DimensionError);
    CHECK_THROWS_AS((void)replay(mk, {std::vector<Complex>(64), std::vector<Complex>(63)}), DimensionError);
}

TEST_CASE("stall reports") {
    const auto mk = map_kernel(KernelSpec::fft(1024, 16), ClusterConfig::mempool256());
    const auto run = simulate_kernel(mk);
    const auto f = run.report.fractions();
    double sum = 0;
    for (const auto x : f) sum += x;
    CHECK(sum == doctest::Approx(1.0));
    CHECK(run.report.ipc == doctest::Approx(f[0]));
    CHECK(run.report.ipc > 0.5);
    CHECK(run.stats.retired == run.stats.injected);

    const auto csv = kernel_csv({run.report});
    CHECK(csv.rfind("kernel,profile,total_cycles,ipc,lsu,raw,icache,barrier\n", 0) == 0);
    CHECK(csv.find("fft_16x1024,1-3-5,") != std::string::npos);
    const auto svg = stall_svg({run.report});
    CHECK(svg.rfind("<svg", 0) == 0);

    const auto si = simulate_kernel(map_kernel(KernelSpec::sysinv(2048, 4), ClusterConfig::terapool()));
    CHECK(si.report.stalls.raw_or_external_unit > 0);
    CHECK(si.report.stalls.lsu == 0);
}

}  // TEST_SUITE
