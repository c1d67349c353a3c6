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

// Independent reference computations for the tests. Nothing here calls into
// the library's own reference implementations.

#include "terapool/topology.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

using cd = std::complex<double>;

/// O(n^2) DFT, X[k] = sum_j x[j] exp(-2 pi i jk / n).
inline std::vector<cd> naive_dft(const std::vector<cd>& x) {
    const std::size_t n = x.size();
    std::vector<cd> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cd acc{};
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
            acc += x[j] * cd(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

/// Row-major integer product, (m x k) * (k x n).
inline std::vector<std::int64_t> triple_loop(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b,
                                             std::size_t m, std::size_t n, std::size_t k) {
    std::vector<std::int64_t> c(m * n, 0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < k; ++p) c[i * n + j] += a[i * k + p] * b[p * n + j];
    return c;
}

/// h = rx * conj(ref) / |ref|^2 on real and imaginary parts separately.
inline cd scalar_che(cd rx, cd ref) {
    const double d = ref.real() * ref.real() + ref.imag() * ref.imag();
    const double re = rx.real() * ref.real() + rx.imag() * ref.imag();
    const double im = rx.imag() * ref.real() - rx.real() * ref.imag();
    return {re / d, im / d};
}

using CMat = std::vector<std::vector<cd>>;

/// Gauss-Jordan inverse with partial pivoting.
inline CMat gauss_jordan_inverse(CMat a) {
    const std::size_t n = a.size();
    CMat inv(n, std::vector<cd>(n));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) == 0.0) throw std::runtime_error("singular");
        std::swap(a[piv], a[col]);
        std::swap(inv[piv], inv[col]);
        const cd p = a[col][col];
        for (std::size_t j = 0; j < n; ++j) {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const cd f = a[r][col];
            for (std::size_t j = 0; j < n; ++j) {
                a[r][j] -= f * a[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    return inv;
}

inline CMat matmul(const CMat& a, const CMat& b) {
    const std::size_t n = a.size();
    CMat c(n, std::vector<cd>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
}

/// max_i sum_j |m[i][j] - I[i][j]|
inline double inf_norm_minus_identity(const CMat& m) {
    double worst = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m.size(); ++j) row += std::abs(m[i][j] - (i == j ? cd(1.0) : cd(0.0)));
        worst = std::max(worst, row);
    }
    return worst;
}

/// Random Hermitian positive-definite matrix: B B^H + n I.
inline CMat random_hpd(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    CMat b(n, std::vector<cd>(n));
    for (auto& row : b)
        for (auto& v : row) v = {u(rng), u(rng)};
    CMat a(n, std::vector<cd>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) a[i][j] += b[i][k] * std::conj(b[j][k]);
            if (i == j) a[i][j] += static_cast<double>(n);
        }
    return a;
}

/// Destination class counts by visiting every bank from `core`.
inline std::array<std::uint64_t, 4> brute_force_class_counts(terapool::CoreId core, const terapool::ClusterConfig& cfg) {
    std::array<std::uint64_t, 4> counts{};
    const auto tiles_per_sg = cfg.tiles_per_subgroup;
    const auto core_tile = core / cfg.cores_per_tile;
    const auto core_sg = core_tile / tiles_per_sg;
    const auto core_group = core_sg / cfg.subgroups_per_group;
    for (std::uint32_t tile = 0; tile < cfg.total_tiles(); ++tile) {
        const auto sg = tile / tiles_per_sg;
        const auto group = sg / cfg.subgroups_per_group;
        std::size_t cls = 3;
        if (tile == core_tile) cls = 0;
        else if (sg == core_sg) cls = 1;
        else if (group == core_group) cls = 2;
        counts[cls] += cfg.banks_per_tile;
    }
    return counts;
}

}  // namespace oracle
