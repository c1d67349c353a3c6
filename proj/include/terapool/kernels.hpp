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

// SDR kernels: reference implementations, locality-aware trace mappers,
// functional replay of the traces and simulation with stall reporting.

#include "terapool/engine.hpp"
#include "terapool/trace.hpp"

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace terapool::kernels {

using Complex = std::complex<double>;

enum class KernelKind : std::uint8_t { FFT, MatMul, CHE, SysInv };

[[nodiscard]] std::string_view to_string(KernelKind k);
/// Accepts fft, matmul, che, sysinv (any case).
[[nodiscard]] KernelKind parse_kernel_kind(std::string_view text);

// Cost model constants.
inline constexpr std::uint32_t kMacLatency = 3;
inline constexpr std::uint32_t kDivLatency = 12;
/// Bookkeeping cycles per radix-4 butterfly besides its three twiddle MACs.
inline constexpr std::uint32_t kButterflyCompute = 2;
inline constexpr std::uint32_t kMatMulTile = 4;

struct KernelSpec {
    KernelKind kind = KernelKind::FFT;
    /// FFT: {n_points, n_transforms}; MatMul: {M, N, K}; CHE: {n_subcarriers,
    /// n_rx, n_tx}; SysInv: {n_problems, dim}.
    std::array<std::uint32_t, 3> dims{};
    /// Overrides the cluster's bank interleave when set.
    std::optional<BankInterleave> placement;

    [[nodiscard]] static KernelSpec fft(std::uint32_t n_points, std::uint32_t n_transforms);
    [[nodiscard]] static KernelSpec matmul(std::uint32_t m, std::uint32_t n, std::uint32_t k);
    [[nodiscard]] static KernelSpec che(std::uint32_t n_subcarriers, std::uint32_t n_rx, std::uint32_t n_tx);
    [[nodiscard]] static KernelSpec sysinv(std::uint32_t n_problems, std::uint32_t dim);

    /// Parses a dims string in table order: FFT `transforms x points`,
    /// MatMul `M x N x K` or `M x N` (K = N), CHE `subcarriers x rx x tx`,
    /// SysInv `problems x dim`.
    [[nodiscard]] static KernelSpec parse(KernelKind kind, std::string_view dims);

    /// Dims in the same order `parse` reads them, e.g. "64x4096".
    [[nodiscard]] std::string dims_string() const;
    /// e.g. "fft_64x4096".
    [[nodiscard]] std::string name() const;
    /// Total 32-bit words of operands, results and tables.
    [[nodiscard]] std::uint64_t working_set_words() const;
    /// Arithmetic operations credited to the kernel (2 per MAC for MatMul).
    [[nodiscard]] std::uint64_t ops() const;

    /// Shape checks independent of the cluster. Throws DimensionError.
    void validate() const;
};

// ---- Reference implementations -------------------------------------------

/// Radix-4 decimation-in-frequency FFT, natural-order output.
/// Throws DimensionError unless `input.size()` is a power of 4.
[[nodiscard]] std::vector<Complex> fft_reference(const std::vector<Complex>& input);

template <typename T>
struct Matrix {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<T> data;  // row-major

    Matrix() = default;
    Matrix(std::uint32_t r, std::uint32_t c, T fill = T{}) : rows(r), cols(c), data(std::size_t{r} * c, fill) {}
    [[nodiscard]] T& operator()(std::uint32_t r, std::uint32_t c) { return data[std::size_t{r} * cols + c]; }
    [[nodiscard]] const T& operator()(std::uint32_t r, std::uint32_t c) const {
        return data[std::size_t{r} * cols + c];
    }
    friend bool operator==(const Matrix&, const Matrix&) = default;
};

using IntMatrix = Matrix<std::int64_t>;
using ComplexMatrix = Matrix<Complex>;

/// Exact product. Throws DimensionError when A.cols != B.rows.
[[nodiscard]] IntMatrix matmul_reference(const IntMatrix& a, const IntMatrix& b);

/// Estimates H[sc][r * n_tx + t] = rx[sc][r] / ref[sc][t], evaluated as
/// rx * conj(ref) / |ref|^2. `rx` is n_sc x n_rx, `ref` is n_sc x n_tx.
/// Throws DimensionError on mismatched subcarrier counts, NumericalError on a zero divisor.
[[nodiscard]] ComplexMatrix che_reference(const ComplexMatrix& rx, const ComplexMatrix& ref);

/// Cholesky factor L with A = L * L^H. Throws NotPositiveDefinite.
[[nodiscard]] ComplexMatrix cholesky(const ComplexMatrix& a);
/// Inverse of a Hermitian positive-definite matrix through its Cholesky
/// factor and triangular solves per unit vector.
[[nodiscard]] ComplexMatrix sysinv_reference(const ComplexMatrix& a);

// ---- Mapping ---------------------------------------------------------------

/// A kernel laid out on a cluster: per-core trace streams plus where each
/// operand and result element lives.
struct MappedKernel {
    KernelSpec spec;
    ClusterConfig cfg;  ///< with the spec's placement applied
    TraceSet traces;
    /// Tables the kernel reads besides its operands (FFT twiddles).
    std::vector<std::pair<WordAddr, Complex>> constants;
    /// Word address of every operand element, in reference (row-major) order.
    std::vector<std::vector<WordAddr>> operands;
    /// Word address of every result element, in reference order.
    std::vector<WordAddr> results;
};

/// 16 inputs (4 butterflies) per core step, barrier per stage on the
/// transform's own core set. Each transform's data sits in the banks owned by
/// its cores, so loads stay within the subgroup.
/// Throws DimensionError or CapacityError.
[[nodiscard]] MappedKernel map_fft(const KernelSpec& spec, const ClusterConfig& cfg);
/// 4x4 register-tiled product over word-interleaved operands. Output tiles are
/// handed out along diagonals and each core starts its k loop at
/// matmul_start_offset. One final barrier.
[[nodiscard]] MappedKernel map_matmul(const KernelSpec& spec, const ClusterConfig& cfg);
/// Subcarriers round-robin over cores; each core's inputs and outputs live in its tile.
[[nodiscard]] MappedKernel map_che(const KernelSpec& spec, const ClusterConfig& cfg);
/// Independent problems round-robin over cores, stored in the core's tile and
/// inverted in place. One final barrier.
[[nodiscard]] MappedKernel map_sysinv(const KernelSpec& spec, const ClusterConfig& cfg);
/// Dispatches on `spec.kind`.
[[nodiscard]] MappedKernel map_kernel(const KernelSpec& spec, const ClusterConfig& cfg);

/// Start of the k loop for `core` in a MatMul with inner dimension `k`.
[[nodiscard]] std::uint32_t matmul_start_offset(CoreId core, std::uint32_t k, const ClusterConfig& cfg);

/// Butterfly bases (index of input 0) core `lane` of a transform handles in
/// `stage`, in execution order.
[[nodiscard]] std::vector<std::uint32_t> fft_butterflies(std::uint32_t n_points, std::uint32_t cores_per_transform,
                                                         std::uint32_t banks_per_core, std::uint32_t lane,
                                                         std::uint32_t stage);
/// Input distance in stage k of an N-point radix-4 transform: N / 4^(k+1).
[[nodiscard]] std::uint32_t fft_stride(std::uint32_t n_points, std::uint32_t stage);
[[nodiscard]] std::uint32_t fft_stages(std::uint32_t n_points);
/// Base-4 digit reversal of `index` over log4(n_points) digits.
[[nodiscard]] std::uint32_t digit_reverse4(std::uint32_t index, std::uint32_t n_points);

// ---- Functional replay -----------------------------------------------------

/// Executes the arithmetic the traces encode against a memory image. Cores
/// advance barrier phase by barrier phase. Returns the full memory image.
[[nodiscard]] std::vector<Complex> replay(const MappedKernel& kernel, const std::vector<std::vector<Complex>>& operands);
/// Reads `kernel.results` out of a replayed memory image.
[[nodiscard]] std::vector<Complex> gather_results(const MappedKernel& kernel, const std::vector<Complex>& memory);

// ---- Locality and simulation ----------------------------------------------

struct AccessProfile {
    std::array<std::uint64_t, kNumDestClasses> loads{};
    std::array<std::uint64_t, kNumDestClasses> stores{};

    [[nodiscard]] std::uint64_t total_loads() const;
    [[nodiscard]] std::uint64_t total_stores() const;
};

/// Static destination-class counts of every load and store in the traces.
[[nodiscard]] AccessProfile access_profile(const MappedKernel& kernel);

struct StallReport {
    std::string kernel;
    std::string profile;
    Cycle total_cycles = 0;
    std::uint64_t retired = 0;
    std::uint64_t active_cycles = 0;
    engine::StallBreakdown stalls;
    double ipc = 0.0;

    /// Fractions of all active cycles: {instructions, lsu, raw, icache, barrier}.
    [[nodiscard]] std::array<double, 5> fractions() const;
};

struct KernelRun {
    StallReport report;
    engine::SimStats stats;
    std::vector<std::vector<engine::TraceCore::BarrierPass>> barrier_passes;
};

/// Runs the kernel on the engine until every core has finished.
[[nodiscard]] KernelRun simulate_kernel(const MappedKernel& kernel, const engine::EngineParams& params = {});

/// CSV with header `kernel,profile,total_cycles,ipc,lsu,raw,icache,barrier`.
[[nodiscard]] std::string kernel_csv(const std::vector<StallReport>& reports);
/// Stacked horizontal bars of the cycle fractions, one bar per report.
[[nodiscard]] std::string stall_svg(const std::vector<StallReport>& reports);

}  // namespace terapool::kernels
