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

#include "terapool/kernels.hpp"

#include "terapool/errors.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <sstream>

namespace terapool::kernels {

namespace {

bool is_power_of_4(std::uint64_t n) { return n > 0 && (n & (n - 1)) == 0 && (std::countr_zero(n) % 2 == 0); }

Complex twiddle(std::uint64_t e, std::uint32_t n) {
    return std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(e) / static_cast<double>(n));
}

Complex apply(Fn fn, const Complex* v, std::uint8_t n) {
    const Complex j{0.0, 1.0};
    switch (fn) {
        case Fn::None: return {};
        case Fn::Mul: return v[0] * v[1];
        case Fn::Mac: return v[0] * v[1] + v[2];
        case Fn::MulConj: return v[0] * std::conj(v[1]);
        case Fn::MsubConj: return v[2] - v[0] * std::conj(v[1]);
        case Fn::ConjMul: return std::conj(v[0]) * v[1];
        case Fn::ConjMac: return std::conj(v[0]) * v[1] + v[2];
        case Fn::NegMul: return -(v[0] * v[1]);
        case Fn::Norm: return std::norm(v[0]);
        case Fn::Div: return v[0] / v[1];
        case Fn::Recip: return 1.0 / v[0];
        case Fn::Sqrt: return std::sqrt(v[0].real());
        case Fn::R4Out0: return v[0] + v[1] + v[2] + v[3];
        case Fn::R4Out1: {
            const Complex y = v[0] - j * v[1] - v[2] + j * v[3];
            return n > 4 ? y * v[4] : y;
        }
        case Fn::R4Out2: {
            const Complex y = v[0] - v[1] + v[2] - v[3];
            return n > 4 ? y * v[4] : y;
        }
        case Fn::R4Out3: {
            const Complex y = v[0] + j * v[1] - v[2] - j * v[3];
            return n > 4 ? y * v[4] : y;
        }
    }
    return {};
}

// Word `w` of a tile's memory, word-interleaved over the tile's banks.
WordAddr tile_word(std::uint32_t tile, std::uint64_t w, const ClusterConfig& cfg) {
    WordLocation loc;
    loc.bank = bank_from_global(static_cast<std::uint32_t>(tile * cfg.banks_per_tile + w % cfg.banks_per_tile), cfg);
    loc.offset = static_cast<std::uint32_t>(w / cfg.banks_per_tile);
    return address_of(loc, cfg);
}

// Row `row` of bank `bank` (within tile) of tile `tile`.
WordAddr bank_word(std::uint32_t tile, std::uint32_t bank, std::uint32_t row, const ClusterConfig& cfg) {
    WordLocation loc;
    loc.bank = bank_from_global(tile * cfg.banks_per_tile + bank, cfg);
    loc.offset = row;
    return address_of(loc, cfg);
}

template <typename Gen>
class GenStream final : public InstrStream {
public:
    explicit GenStream(Gen gen) : gen_(std::move(gen)) {}
    bool refill(std::vector<Instr>& out) override { return gen_(out); }

private:
    Gen gen_;
};

template <typename Gen>
std::unique_ptr<InstrStream> make_stream(Gen gen) {
    return std::make_unique<GenStream<Gen>>(std::move(gen));
}

ClusterConfig placed(const KernelSpec& spec, const ClusterConfig& cfg) {
    cfg.validate();
    spec.validate();
    ClusterConfig out = cfg;
    if (spec.placement) out.bank_interleave = *spec.placement;
    if (spec.working_set_words() > out.total_words()) {
        throw CapacityError(spec.name() + " needs " + std::to_string(spec.working_set_words()) +
                            " words, L1 holds " + std::to_string(out.total_words()));
    }
    return out;
}

std::uint32_t banks_per_core(const ClusterConfig& cfg) {
    if (cfg.banks_per_tile % cfg.cores_per_tile != 0) {
        throw ConfigError("banks_per_tile must be a multiple of cores_per_tile for tile-local kernel placement");
    }
    return cfg.banks_per_tile / cfg.cores_per_tile;
}

std::uint32_t packed_size(std::uint32_t d) { return d * (d + 1) / 2; }
std::uint32_t packed_index(std::uint32_t i, std::uint32_t j) { return i * (i + 1) / 2 + j; }

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

}  // namespace

std::string_view to_string(KernelKind k) {
    switch (k) {
        case KernelKind::FFT: return "fft";
        case KernelKind::MatMul: return "matmul";
        case KernelKind::CHE: return "che";
        case KernelKind::SysInv: return "sysinv";
    }
    return "?";
}

KernelKind parse_kernel_kind(std::string_view text) {
    std::string t(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "fft") return KernelKind::FFT;
    if (t == "matmul") return KernelKind::MatMul;
    if (t == "che") return KernelKind::CHE;
    if (t == "sysinv" || t == "choldec") return KernelKind::SysInv;
    throw ConfigError("unknown kernel kind '" + std::string(text) + "' (expected fft, matmul, che or sysinv)");
}

// ---- KernelSpec --------------------------------------------------------------

KernelSpec KernelSpec::fft(std::uint32_t n_points, std::uint32_t n_transforms) {
    return {KernelKind::FFT, {n_points, n_transforms, 0}, std::nullopt};
}
KernelSpec KernelSpec::matmul(std::uint32_t m, std::uint32_t n, std::uint32_t k) {
    return {KernelKind::MatMul, {m, n, k}, std::nullopt};
}
KernelSpec KernelSpec::che(std::uint32_t n_subcarriers, std::uint32_t n_rx, std::uint32_t n_tx) {
    return {KernelKind::CHE, {n_subcarriers, n_rx, n_tx}, std::nullopt};
}
KernelSpec KernelSpec::sysinv(std::uint32_t n_problems, std::uint32_t dim) {
    return {KernelKind::SysInv, {n_problems, dim, 0}, std::nullopt};
}

KernelSpec KernelSpec::parse(KernelKind kind, std::string_view dims) {
    std::vector<std::uint32_t> v;
    std::string cur;
    const auto flush = [&] {
        if (cur.empty()) throw ConfigError("malformed kernel dims '" + std::string(dims) + "'");
        unsigned long long x = 0;
        try {
            std::size_t used = 0;
            x = std::stoull(cur, &used);
            if (used != cur.size()) throw ConfigError("");
        } catch (const std::exception&) {
            throw ConfigError("malformed kernel dims '" + std::string(dims) + "'");
        }
        if (x == 0 || x > 0xFFFFFFFFull) throw ConfigError("kernel dims must be positive: '" + std::string(dims) + "'");
        v.push_back(static_cast<std::uint32_t>(x));
        cur.clear();
    };
    for (const char c : dims) {
        if (c == 'x' || c == 'X') {
            flush();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    flush();

    const auto want = [&](std::size_t lo, std::size_t hi) {
        if (v.size() < lo || v.size() > hi) {
            throw ConfigError("kernel dims '" + std::string(dims) + "' have the wrong number of fields for " +
                              std::string(to_string(kind)));
        }
    };
    KernelSpec s;
    switch (kind) {
        case KernelKind::FFT:
            want(2, 2);
            s = fft(v[1], v[0]);
            break;
        case KernelKind::MatMul:
            want(2, 3);
            s = matmul(v[0], v[1], v.size() == 3 ? v[2] : v[1]);
            break;
        case KernelKind::CHE:
            want(3, 3);
            s = che(v[0], v[1], v[2]);
            break;
        case KernelKind::SysInv:
            want(2, 2);
            s = sysinv(v[0], v[1]);
            break;
    }
    return s;
}

std::string KernelSpec::dims_string() const {
    std::ostringstream os;
    switch (kind) {
        case KernelKind::FFT: os << dims[1] << 'x' << dims[0]; break;
        case KernelKind::MatMul: os << dims[0] << 'x' << dims[1] << 'x' << dims[2]; break;
        case KernelKind::CHE: os << dims[0] << 'x' << dims[1] << 'x' << dims[2]; break;
        case KernelKind::SysInv: os << dims[0] << 'x' << dims[1]; break;
    }
    return os.str();
}

std::string KernelSpec::name() const { return std::string(to_string(kind)) + "_" + dims_string(); }

std::uint64_t KernelSpec::working_set_words() const {
    const std::uint64_t a = dims[0], b = dims[1], c = dims[2];
    switch (kind) {
        case KernelKind::FFT: return 2 * a * b + a - 1;  // two buffers plus one twiddle table
        case KernelKind::MatMul: return a * c + c * b + a * b;
        case KernelKind::CHE: return a * (b + c + b * c);
        case KernelKind::SysInv: return a * packed_size(dims[1]);
    }
    return 0;
}

std::uint64_t KernelSpec::ops() const {
    const std::uint64_t a = dims[0], b = dims[1], c = dims[2];
    switch (kind) {
        case KernelKind::FFT: {
            const auto log2n = static_cast<std::uint64_t>(std::countr_zero(a));
            return 5 * a * log2n * b;
        }
        case KernelKind::MatMul: return 2 * a * b * c;
        case KernelKind::CHE: return 3 * a * b * c;
        case KernelKind::SysInv: return a * b * b * b;
    }
    return 0;
}

void KernelSpec::validate() const {
    switch (kind) {
        case KernelKind::FFT:
            if (!is_power_of_4(dims[0]) || dims[0] < 4) {
                throw DimensionError("FFT size " + std::to_string(dims[0]) + " is not a power of 4 (>= 4)");
            }
            if (dims[1] == 0) throw DimensionError("FFT needs at least one transform");
            break;
        case KernelKind::MatMul:
            if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0) throw DimensionError("MatMul dims must be positive");
            if (dims[0] % kMatMulTile != 0 || dims[1] % kMatMulTile != 0) {
                throw DimensionError("MatMul M and N must be multiples of the 4x4 register tile");
            }
            break;
        case KernelKind::CHE:
            if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0) throw DimensionError("CHE dims must be positive");
            if (dims[2] > 8) throw DimensionError("CHE supports at most 8 transmit layers");
            break;
        case KernelKind::SysInv:
            if (dims[0] == 0) throw DimensionError("SysInv needs at least one problem");
            if (dims[1] == 0 || dims[1] > 32) {
                throw DimensionError("SysInv dim must be in [1, 32], got " + std::to_string(dims[1]));
            }
            break;
    }
}

// ---- References -----------------------------------------------------------

std::uint32_t fft_stages(std::uint32_t n) { return static_cast<std::uint32_t>(std::countr_zero(n)) / 2; }

std::uint32_t fft_stride(std::uint32_t n, std::uint32_t stage) { return n >> (2 * (stage + 1)); }

std::uint32_t digit_reverse4(std::uint32_t index, std::uint32_t n) {
    std::uint32_t out = 0;
    for (std::uint32_t d = 0; d < fft_stages(n); ++d) {
        out = (out << 2) | (index & 3u);
        index >>= 2;
    }
    return out;
}

std::vector<Complex> fft_reference(const std::vector<Complex>& input) {
    const auto n = input.size();
    if (!is_power_of_4(n)) throw DimensionError("FFT size " + std::to_string(n) + " is not a power of 4");
    const auto nn = static_cast<std::uint32_t>(n);
    std::vector<Complex> x = input;
    const Complex j{0.0, 1.0};
    for (std::uint32_t k = 0; k < fft_stages(nn); ++k) {
        const auto s = fft_stride(nn, k);
        const std::uint64_t scale = std::uint64_t{1} << (2 * k);
        for (std::uint32_t g = 0; g < nn; g += 4 * s) {
            for (std::uint32_t o = 0; o < s; ++o) {
                const auto i = g + o;
                const Complex a = x[i], b = x[i + s], c = x[i + 2 * s], d = x[i + 3 * s];
                x[i] = a + b + c + d;
                x[i + s] = (a - j * b - c + j * d) * twiddle(1 * o * scale, nn);
                x[i + 2 * s] = (a - b + c - d) * twiddle(2 * o * scale, nn);
                x[i + 3 * s] = (a + j * b - c - j * d) * twiddle(3 * o * scale, nn);
            }
        }
    }
    std::vector<Complex> out(n);
    for (std::uint32_t i = 0; i < nn; ++i) out[i] = x[digit_reverse4(i, nn)];
    return out;
}

IntMatrix matmul_reference(const IntMatrix& a, const IntMatrix& b) {
    if (a.cols != b.rows) {
        throw DimensionError("cannot multiply " + std::to_string(a.rows) + "x" + std::to_string(a.cols) + " by " +
                             std::to_string(b.rows) + "x" + std::to_string(b.cols));
    }
    IntMatrix c(a.rows, b.cols);
    for (std::uint32_t i = 0; i < a.rows; ++i) {
        for (std::uint32_t k = 0; k < a.cols; ++k) {
            const auto aik = a(i, k);
            for (std::uint32_t jj = 0; jj < b.cols; ++jj) c(i, jj) += aik * b(k, jj);
        }
    }
    return c;
}

ComplexMatrix che_reference(const ComplexMatrix& rx, const ComplexMatrix& ref) {
    if (rx.rows != ref.rows) throw DimensionError("rx and reference pilots cover different subcarrier counts");
    ComplexMatrix h(rx.rows, rx.cols * ref.cols);
    for (std::uint32_t sc = 0; sc < rx.rows; ++sc) {
        for (std::uint32_t r = 0; r < rx.cols; ++r) {
            for (std::uint32_t t = 0; t < ref.cols; ++t) {
                const Complex den = std::norm(ref(sc, t));
                if (den == 0.0) {
                    throw NumericalError("zero reference pilot at subcarrier " + std::to_string(sc) + ", layer " +
                                         std::to_string(t));
                }
                h(sc, r * ref.cols + t) = rx(sc, r) * std::conj(ref(sc, t)) / den;
            }
        }
    }
    return h;
}

ComplexMatrix cholesky(const ComplexMatrix& a) {
    if (a.rows != a.cols) throw DimensionError("Cholesky needs a square matrix");
    const auto n = a.rows;
    ComplexMatrix l(n, n);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j <= i; ++j) {
            Complex s = a(i, j);
            for (std::uint32_t k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
            if (i == j) {
                if (!(s.real() > 0.0)) {
                    throw NotPositiveDefinite("non-positive pivot " + std::to_string(s.real()) + " at row " +
                                              std::to_string(i));
                }
                l(i, i) = std::sqrt(s.real());
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

ComplexMatrix sysinv_reference(const ComplexMatrix& a) {
    const auto l = cholesky(a);
    const auto n = a.rows;
    ComplexMatrix inv(n, n);
    std::vector<Complex> y(n), x(n);
    for (std::uint32_t col = 0; col < n; ++col) {
        // L y = e_col
        for (std::uint32_t i = 0; i < n; ++i) {
            Complex s = i == col ? 1.0 : 0.0;
            for (std::uint32_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
            y[i] = s / l(i, i);
        }
        // L^H x = y
        for (std::uint32_t ii = n; ii-- > 0;) {
            Complex s = y[ii];
            for (std::uint32_t k = ii + 1; k < n; ++k) s -= std::conj(l(k, ii)) * x[k];
            x[ii] = s / l(ii, ii);
        }
        for (std::uint32_t i = 0; i < n; ++i) inv(i, col) = x[i];
    }
    return inv;
}

// ---- FFT mapping ----------------------------------------------------------

std::vector<std::uint32_t> fft_butterflies(std::uint32_t n, std::uint32_t p, std::uint32_t bpc, std::uint32_t lane,
                                           std::uint32_t stage) {
    const auto s = fft_stride(n, stage);
    const auto region = bpc * p;
    const auto per_core = n / 4 / p;
    std::vector<std::uint32_t> out;
    out.reserve(per_core);
    std::uint32_t kstar = 0;
    while ((1u << (2 * kstar)) % p != 0) ++kstar;
    if (stage < kstar && s % region == 0) {
        // All four inputs share a bank; run the butterflies whose bank this core owns.
        for (std::uint32_t g = 0; g < n; g += 4 * s) {
            for (std::uint32_t o = 0; o < s; ++o) {
                if ((o % region) / bpc == lane) out.push_back(g + o);
            }
        }
    } else {
        // Contiguous blocks; from stage kstar on these are whole groups.
        for (std::uint32_t b = lane * per_core; b < (lane + 1) * per_core; ++b) {
            out.push_back((b / s) * 4 * s + b % s);
        }
    }
    return out;
}

namespace {

struct FftLayout {
    ClusterConfig cfg;
    std::uint32_t n = 0;
    std::uint32_t p = 0;    // cores per transform
    std::uint32_t bpc = 0;  // banks owned per core
    std::uint32_t rows = 0;  // rows per buffer in each owned bank
    std::uint32_t kstar = 0;  // first stage whose groups split evenly over the cores
    std::uint32_t tw_row = 0;

    // Buffer 0 spreads a transform word-by-word over the banks of its cores;
    // buffer 1 holds each core's whole groups of stage `kstar` in its own banks.
    [[nodiscard]] WordAddr element(std::uint32_t buffer, std::uint32_t transform, std::uint32_t i) const {
        std::uint32_t lane = 0, w = 0, row0 = 0;
        if (buffer == 0) {
            const auto region = bpc * p;
            lane = (i % region) / bpc;
            w = (i / region) * bpc + i % bpc;
        } else {
            const auto group = n >> (2 * kstar);
            const auto per_core = (1u << (2 * kstar)) / p;
            lane = i / group / per_core;
            w = i % (group * per_core);
            row0 = kstar > 0 ? rows : 0;
        }
        const CoreId core = transform * p + lane;
        return bank_word(tile_of_core(core, cfg), (core % cfg.cores_per_tile) * bpc + w % bpc, row0 + w / bpc, cfg);
    }
    [[nodiscard]] std::uint32_t buffer_read(std::uint32_t stage) const { return stage < kstar ? 0 : 1; }
    [[nodiscard]] std::uint32_t buffer_written(std::uint32_t stage) const { return stage + 1 < kstar ? 0 : 1; }
    // Per-stage tables: stage k holds W^(m * o * 4^k) at (m - 1) * s + o.
    [[nodiscard]] static std::uint64_t twiddle_words(std::uint32_t n) {
        std::uint64_t w = 0;
        for (std::uint32_t k = 0; k < fft_stages(n); ++k) w += 3 * std::uint64_t{fft_stride(n, k)};
        return w;
    }
    [[nodiscard]] WordAddr twiddle_addr(std::uint32_t tile, std::uint32_t stage, std::uint32_t m, std::uint32_t o) const {
        std::uint64_t base = 0;
        for (std::uint32_t k = 0; k < stage; ++k) base += 3 * std::uint64_t{fft_stride(n, k)};
        return tile_word(tile, std::uint64_t{tw_row} * cfg.banks_per_tile + base + (m - 1) * fft_stride(n, stage) + o, cfg);
    }
};

class FftGen {
public:
    FftGen(std::shared_ptr<const FftLayout> layout, CoreId core)
        : l_(std::move(layout)), core_(core), transform_(core / l_->p), lane_(core % l_->p),
          tile_(tile_of_core(core, l_->cfg)) {
        load_stage();
    }

    bool operator()(std::vector<Instr>& out) {
        if (stage_ >= fft_stages(l_->n)) return false;
        if (pos_ >= list_.size()) {
            out.push_back(Instr::barrier(transform_));
            ++stage_;
            load_stage();
            return true;
        }
        const auto nb = std::min<std::size_t>(4, list_.size() - pos_);
        const auto s = fft_stride(l_->n, stage_);
        const auto x = [](std::size_t b, std::uint32_t m) { return static_cast<std::uint8_t>(b * 4 + m); };
        const auto w = [](std::size_t b, std::uint32_t m) { return static_cast<std::uint8_t>(16 + b * 3 + m - 1); };
        const auto y = [](std::size_t b, std::uint32_t m) { return static_cast<std::uint8_t>(28 + b * 4 + m); };
        for (std::size_t b = 0; b < nb; ++b) {
            for (std::uint32_t m = 0; m < 4; ++m) {
                out.push_back(Instr::load(l_->element(l_->buffer_read(stage_), transform_, list_[pos_ + b] + m * s), x(b, m)));
            }
        }
        // Butterflies of a step that share an offset share their twiddles.
        std::array<std::array<std::uint8_t, 4>, 4> tw{};
        for (std::size_t b = 0; b < nb; ++b) {
            const auto o = list_[pos_ + b] % s;
            std::size_t same = b;
            for (std::size_t q = 0; q < b; ++q) {
                if (list_[pos_ + q] % s == o) {
                    same = q;
                    break;
                }
            }
            for (std::uint32_t m = 1; m < 4; ++m) {
                if (same == b) {
                    tw[b][m] = w(b, m);
                    out.push_back(Instr::load(l_->twiddle_addr(tile_, stage_, m, o), w(b, m)));
                } else {
                    tw[b][m] = tw[same][m];
                }
            }
        }
        for (std::size_t b = 0; b < nb; ++b) {
            out.push_back(Instr::compute(kButterflyCompute - 1));
            out.push_back(Instr::offload(Unit::None, 1, y(b, 0), {x(b, 0), x(b, 1), x(b, 2), x(b, 3)}, Fn::R4Out0));
            for (std::uint32_t m = 1; m < 4; ++m) {
                out.push_back(Instr::offload(Unit::Mac, kMacLatency, y(b, m), {x(b, 0), x(b, 1), x(b, 2), x(b, 3), tw[b][m]},
                                             static_cast<Fn>(static_cast<std::uint8_t>(Fn::R4Out0) + m)));
            }
        }
        for (std::size_t b = 0; b < nb; ++b) {
            for (std::uint32_t m = 0; m < 4; ++m) {
                out.push_back(Instr::store(l_->element(l_->buffer_written(stage_), transform_, list_[pos_ + b] + m * s), y(b, m)));
            }
        }
        pos_ += nb;
        return true;
    }

private:
    void load_stage() {
        pos_ = 0;
        list_.clear();
        if (stage_ < fft_stages(l_->n)) list_ = fft_butterflies(l_->n, l_->p, l_->bpc, lane_, stage_);
    }

    std::shared_ptr<const FftLayout> l_;
    CoreId core_;
    std::uint32_t transform_;
    std::uint32_t lane_;
    std::uint32_t tile_;
    std::uint32_t stage_ = 0;
    std::vector<std::uint32_t> list_;
    std::size_t pos_ = 0;
};

}  // namespace

MappedKernel map_fft(const KernelSpec& spec, const ClusterConfig& cfg_in) {
    if (spec.kind != KernelKind::FFT) throw ConfigError("map_fft needs an FFT spec");
    const auto cfg = placed(spec, cfg_in);
    const auto n = spec.dims[0];
    const auto transforms = spec.dims[1];
    const auto cores = cfg.total_cores();
    if (transforms > cores || cores % transforms != 0) {
        throw DimensionError(std::to_string(cores) + " cores do not divide evenly over " + std::to_string(transforms) +
                             " transforms");
    }
    auto layout = std::make_shared<FftLayout>();
    layout->cfg = cfg;
    layout->n = n;
    layout->p = cores / transforms;
    layout->bpc = banks_per_core(cfg);
    if ((n / 4) % layout->p != 0) {
        throw DimensionError("cores per transform (" + std::to_string(layout->p) + ") must divide the " +
                             std::to_string(n / 4) + " butterflies of a stage");
    }
    const auto region = layout->bpc * layout->p;
    if (n % region != 0) throw DimensionError("transform size must be a multiple of its " + std::to_string(region) + " banks");
    layout->rows = n / region;
    while ((1u << (2 * layout->kstar)) % layout->p != 0) ++layout->kstar;
    layout->tw_row = layout->rows * (layout->kstar > 0 ? 2 : 1);
    const auto tw_rows = ceil_div(FftLayout::twiddle_words(n), cfg.banks_per_tile);
    if (layout->tw_row + tw_rows > cfg.bank_words) {
        throw CapacityError("FFT buffers (" + std::to_string(layout->tw_row) + " rows) and twiddles (" +
                            std::to_string(tw_rows) + " rows) exceed the " + std::to_string(cfg.bank_words) +
                            "-word banks");
    }

    MappedKernel mk;
    mk.spec = spec;
    mk.cfg = cfg;
    mk.traces.cores = cores;
    mk.traces.barrier_domains.assign(transforms, layout->p);
    mk.traces.stream_for = [layout](CoreId c) { return make_stream(FftGen(layout, c)); };

    for (std::uint32_t t = 0; t < cfg.total_tiles(); ++t) {
        for (std::uint32_t k = 0; k < fft_stages(n); ++k) {
            const auto s = fft_stride(n, k);
            for (std::uint32_t m = 1; m < 4; ++m) {
                for (std::uint32_t o = 0; o < s; ++o) {
                    mk.constants.emplace_back(layout->twiddle_addr(t, k, m, o),
                                              twiddle(std::uint64_t{m} * o << (2 * k), n));
                }
            }
        }
    }
    mk.operands.resize(1);
    auto& in = mk.operands[0];
    in.reserve(std::size_t{n} * transforms);
    mk.results.reserve(std::size_t{n} * transforms);
    for (std::uint32_t f = 0; f < transforms; ++f) {
        for (std::uint32_t i = 0; i < n; ++i) in.push_back(layout->element(layout->buffer_read(0), f, i));
        for (std::uint32_t k = 0; k < n; ++k) mk.results.push_back(layout->element(1, f, digit_reverse4(k, n)));
    }
    return mk;
}

// ---- MatMul mapping -------------------------------------------------------

std::uint32_t matmul_start_offset(CoreId core, std::uint32_t k, const ClusterConfig& cfg) {
    const std::uint64_t lane = core % cfg.cores_per_tile;
    // Lane rotation inside a tile, plus a scrambled per-tile shift so that
    // tiles sharing a row or column block do not fetch from the same banks.
    const std::uint64_t skew = (std::uint64_t{tile_of_core(core, cfg)} * 2654435761u) >> 8;
    return static_cast<std::uint32_t>((lane * k / cfg.cores_per_tile + skew) % k);
}

namespace {

struct MatMulLayout {
    std::uint32_t m = 0, n = 0, k = 0;
    std::uint32_t cores = 0;
    WordAddr a = 0, b = 0, c = 0;
    ClusterConfig cfg;
};

class MatMulGen {
public:
    MatMulGen(std::shared_ptr<const MatMulLayout> layout, CoreId core)
        : l_(std::move(layout)), core_(core), next_tile_(core), start_(matmul_start_offset(core, l_->k, l_->cfg)) {}

    bool operator()(std::vector<Instr>& out) {
        const std::uint64_t tiles = std::uint64_t{l_->m / kMatMulTile} * (l_->n / kMatMulTile);
        if (done_) return false;
        if (next_tile_ >= tiles) {
            out.push_back(Instr::barrier(0));
            done_ = true;
            return true;
        }
        // Output tiles go down the diagonals: consecutive cores take consecutive
        // row blocks, and the cores sharing a row or column block sit far apart.
        const auto tile_rows = l_->m / kMatMulTile;
        const auto tile_cols = l_->n / kMatMulTile;
        const auto row = static_cast<std::uint32_t>(next_tile_ % tile_rows);
        const auto col = static_cast<std::uint32_t>((next_tile_ / tile_rows + row) % tile_cols);
        const auto i0 = row * kMatMulTile;
        const auto j0 = col * kMatMulTile;
        const auto acc = [](std::uint32_t r, std::uint32_t c) { return static_cast<std::uint8_t>(r * 4 + c); };
        const auto av = [](std::uint32_t buf, std::uint32_t r) { return static_cast<std::uint8_t>(16 + buf * 4 + r); };
        const auto bv = [](std::uint32_t buf, std::uint32_t c) { return static_cast<std::uint8_t>(24 + buf * 4 + c); };
        const auto load = [&](std::uint32_t k, std::uint32_t buf, std::uint32_t q) {
            if (q < kMatMulTile) {
                out.push_back(Instr::load(l_->a + std::uint64_t{i0 + q} * l_->k + k, av(buf, q)));
            } else {
                out.push_back(Instr::load(l_->b + std::uint64_t{k} * l_->n + j0 + q - kMatMulTile, bv(buf, q - kMatMulTile)));
            }
        };
        out.reserve(out.size() + std::size_t{l_->k} * 25 + 32);
        for (std::uint32_t q = 0; q < 2 * kMatMulTile; ++q) load(start_, 0, q);
        for (std::uint32_t kk = 0; kk < l_->k; ++kk) {
            const auto buf = kk % 2;
            const bool prefetch = kk + 1 < l_->k;
            const auto next_k = (start_ + kk + 1) % l_->k;
            out.push_back(Instr::compute(1));  // loop bookkeeping
            // The next step's eight loads are spread over this step's sixteen MACs.
            for (std::uint32_t q = 0; q < kMatMulTile * kMatMulTile; ++q) {
                const auto r = q / kMatMulTile, c = q % kMatMulTile;
                if (kk == 0) {
                    out.push_back(Instr::offload(Unit::Mac, kMacLatency, acc(r, c), {av(buf, r), bv(buf, c)}, Fn::Mul));
                } else {
                    out.push_back(Instr::offload(Unit::Mac, kMacLatency, acc(r, c), {av(buf, r), bv(buf, c), acc(r, c)}, Fn::Mac));
                }
                if (prefetch && q % 2 == 1) load(next_k, buf ^ 1u, q / 2);
            }
        }
        for (std::uint32_t r = 0; r < kMatMulTile; ++r) {
            for (std::uint32_t c = 0; c < kMatMulTile; ++c) out.push_back(Instr::store(l_->c + std::uint64_t{i0 + r} * l_->n + j0 + c, acc(r, c)));
        }
        next_tile_ += l_->cores;
        return true;
    }

private:
    std::shared_ptr<const MatMulLayout> l_;
    CoreId core_;
    std::uint64_t next_tile_;
    std::uint32_t start_;
    bool done_ = false;
};

}  // namespace

MappedKernel map_matmul(const KernelSpec& spec, const ClusterConfig& cfg_in) {
    if (spec.kind != KernelKind::MatMul) throw ConfigError("map_matmul needs a MatMul spec");
    const auto cfg = placed(spec, cfg_in);
    auto layout = std::make_shared<MatMulLayout>();
    layout->m = spec.dims[0];
    layout->n = spec.dims[1];
    layout->k = spec.dims[2];
    layout->cores = cfg.total_cores();
    layout->cfg = cfg;
    layout->a = 0;
    layout->b = std::uint64_t{layout->m} * layout->k;
    layout->c = layout->b + std::uint64_t{layout->k} * layout->n;

    MappedKernel mk;
    mk.spec = spec;
    mk.cfg = cfg;
    mk.traces.cores = layout->cores;
    mk.traces.barrier_domains = {layout->cores};
    mk.traces.stream_for = [layout](CoreId c) { return make_stream(MatMulGen(layout, c)); };
    mk.operands.resize(2);
    for (std::uint64_t e = 0; e < std::uint64_t{layout->m} * layout->k; ++e) mk.operands[0].push_back(layout->a + e);
    for (std::uint64_t e = 0; e < std::uint64_t{layout->k} * layout->n; ++e) mk.operands[1].push_back(layout->b + e);
    for (std::uint64_t e = 0; e < std::uint64_t{layout->m} * layout->n; ++e) mk.results.push_back(layout->c + e);
    return mk;
}

// ---- CHE mapping ----------------------------------------------------------

namespace {

struct CheLayout {
    ClusterConfig cfg;
    std::uint32_t n_sc = 0, n_rx = 0, n_tx = 0;
    std::uint32_t cores = 0;
    std::uint64_t per_core = 0;

    [[nodiscard]] std::uint64_t slot_words() const { return std::uint64_t{n_tx} + n_rx + std::uint64_t{n_rx} * n_tx; }
    // Tile word where subcarrier `sc`'s block starts: [ref n_tx][rx n_rx][out n_rx*n_tx].
    [[nodiscard]] std::pair<std::uint32_t, std::uint64_t> block(std::uint32_t sc) const {
        const CoreId core = sc % cores;
        const std::uint64_t j = sc / cores;
        const auto lane = core % cfg.cores_per_tile;
        return {tile_of_core(core, cfg), (lane * per_core + j) * slot_words()};
    }
    [[nodiscard]] WordAddr ref(std::uint32_t sc, std::uint32_t t) const {
        const auto [tile, w] = block(sc);
        return tile_word(tile, w + t, cfg);
    }
    [[nodiscard]] WordAddr rx(std::uint32_t sc, std::uint32_t r) const {
        const auto [tile, w] = block(sc);
        return tile_word(tile, w + n_tx + r, cfg);
    }
    [[nodiscard]] WordAddr out(std::uint32_t sc, std::uint32_t r, std::uint32_t t) const {
        const auto [tile, w] = block(sc);
        return tile_word(tile, w + n_tx + n_rx + std::uint64_t{r} * n_tx + t, cfg);
    }
};

class CheGen {
public:
    CheGen(std::shared_ptr<const CheLayout> layout, CoreId core) : l_(std::move(layout)), sc_(core) {}

    bool operator()(std::vector<Instr>& out) {
        if (done_) return false;
        if (sc_ >= l_->n_sc) {
            out.push_back(Instr::barrier(0));
            done_ = true;
            return true;
        }
        const auto n_tx = l_->n_tx;
        const auto rx = [](std::uint32_t buf) { return static_cast<std::uint8_t>(8 + buf); };
        const auto num = [](std::uint32_t buf, std::uint32_t t) { return static_cast<std::uint8_t>(10 + buf * 8 + t); };
        const auto den = [](std::uint32_t buf, std::uint32_t t) { return static_cast<std::uint8_t>(26 + buf * 8 + t); };
        const auto h = [](std::uint32_t buf, std::uint32_t t) { return static_cast<std::uint8_t>(42 + buf * 8 + t); };
        const auto stores = [&](std::uint32_t r) {
            for (std::uint32_t t = 0; t < n_tx; ++t) out.push_back(Instr::store(l_->out(sc_, r, t), h(r % 2, t)));
        };
        for (std::uint32_t t = 0; t < n_tx; ++t) out.push_back(Instr::load(l_->ref(sc_, t), static_cast<std::uint8_t>(t)));
        for (std::uint32_t r = 0; r < l_->n_rx; ++r) {
            const auto buf = r % 2;
            out.push_back(Instr::load(l_->rx(sc_, r), rx(buf)));
            for (std::uint32_t t = 0; t < n_tx; ++t) {
                out.push_back(Instr::offload(Unit::Mac, kMacLatency, num(buf, t), {rx(buf), static_cast<std::uint8_t>(t)}, Fn::MulConj));
            }
            for (std::uint32_t t = 0; t < n_tx; ++t) {
                out.push_back(Instr::offload(Unit::Mac, kMacLatency, den(buf, t), {static_cast<std::uint8_t>(t)}, Fn::Norm));
            }
            for (std::uint32_t t = 0; t < n_tx; ++t) {
                out.push_back(Instr::offload(Unit::Div, kDivLatency, h(buf, t), {num(buf, t), den(buf, t)}, Fn::Div));
            }
            // Stores trail by one row so the divider latency overlaps the next row.
            if (r > 0) stores(r - 1);
        }
        stores(l_->n_rx - 1);
        sc_ += l_->cores;
        return true;
    }

private:
    std::shared_ptr<const CheLayout> l_;
    std::uint32_t sc_;
    bool done_ = false;
};

}  // namespace

MappedKernel map_che(const KernelSpec& spec, const ClusterConfig& cfg_in) {
    if (spec.kind != KernelKind::CHE) throw ConfigError("map_che needs a CHE spec");
    const auto cfg = placed(spec, cfg_in);
    auto layout = std::make_shared<CheLayout>();
    layout->cfg = cfg;
    layout->n_sc = spec.dims[0];
    layout->n_rx = spec.dims[1];
    layout->n_tx = spec.dims[2];
    layout->cores = cfg.total_cores();
    layout->per_core = ceil_div(layout->n_sc, layout->cores);
    const auto need = layout->per_core * layout->slot_words() * cfg.cores_per_tile;
    if (need > cfg.tile_words()) {
        throw CapacityError("CHE needs " + std::to_string(need) + " words per tile, a tile holds " +
                            std::to_string(cfg.tile_words()));
    }

    MappedKernel mk;
    mk.spec = spec;
    mk.cfg = cfg;
    mk.traces.cores = layout->cores;
    mk.traces.barrier_domains = {layout->cores};
    mk.traces.stream_for = [layout](CoreId c) { return make_stream(CheGen(layout, c)); };
    mk.operands.resize(2);
    for (std::uint32_t sc = 0; sc < layout->n_sc; ++sc) {
        for (std::uint32_t r = 0; r < layout->n_rx; ++r) mk.operands[0].push_back(layout->rx(sc, r));
        for (std::uint32_t t = 0; t < layout->n_tx; ++t) mk.operands[1].push_back(layout->ref(sc, t));
        for (std::uint32_t r = 0; r < layout->n_rx; ++r) {
            for (std::uint32_t t = 0; t < layout->n_tx; ++t) mk.results.push_back(layout->out(sc, r, t));
        }
    }
    return mk;
}

// ---- SysInv mapping -------------------------------------------------------

namespace {

struct SysInvLayout {
    ClusterConfig cfg;
    std::uint32_t problems = 0, dim = 0;
    std::uint32_t cores = 0;
    std::uint64_t per_core = 0;

    // Per core: scratch [Linv packed][1/L_ii], then its problems, packed lower triangles.
    [[nodiscard]] std::uint64_t scratch_words() const { return packed_size(dim) + dim; }
    [[nodiscard]] std::uint64_t core_words() const { return scratch_words() + per_core * packed_size(dim); }
    [[nodiscard]] WordAddr scratch(CoreId core, std::uint64_t w) const {
        const auto lane = core % cfg.cores_per_tile;
        return tile_word(tile_of_core(core, cfg), lane * core_words() + w, cfg);
    }
    [[nodiscard]] WordAddr element(std::uint32_t problem, std::uint32_t i, std::uint32_t j) const {
        const CoreId core = problem % cores;
        const std::uint64_t slot = problem / cores;
        const auto lane = core % cfg.cores_per_tile;
        return tile_word(tile_of_core(core, cfg),
                         lane * core_words() + scratch_words() + slot * packed_size(dim) + packed_index(i, j), cfg);
    }
};

class SysInvGen {
public:
    SysInvGen(std::shared_ptr<const SysInvLayout> layout, CoreId core)
        : l_(std::move(layout)), core_(core), problem_(core) {}

    bool operator()(std::vector<Instr>& out) {
        if (done_) return false;
        if (problem_ >= l_->problems) {
            out.push_back(Instr::barrier(0));
            done_ = true;
            return true;
        }
        const auto d = l_->dim;
        const auto p = problem_;
        const auto a = [&](std::uint32_t i, std::uint32_t j) { return l_->element(p, i, j); };
        const auto rinv = [&](std::uint32_t i) { return l_->scratch(core_, packed_size(d) + i); };
        const auto linv = [&](std::uint32_t i, std::uint32_t j) {
            return i == j ? rinv(i) : l_->scratch(core_, packed_index(i, j));
        };
        const auto load = [&](WordAddr addr) {
            const auto t = temp();
            out.push_back(Instr::load(addr, t));
            return t;
        };
        const auto op = [&](Unit unit, Fn fn, std::initializer_list<std::uint8_t> deps) {
            const auto t = temp();
            out.push_back(Instr::offload(unit, unit == Unit::Div ? kDivLatency : kMacLatency, t, deps, fn));
            return t;
        };

        // Cholesky, row by row; row i of L is kept in tags 0..i.
        for (std::uint32_t i = 0; i < d; ++i) {
            for (std::uint32_t j = 0; j <= i; ++j) {
                auto s = load(a(i, j));
                for (std::uint32_t k = 0; k < j; ++k) {
                    const auto ljk = i == j ? static_cast<std::uint8_t>(k) : load(a(j, k));
                    s = op(Unit::Mac, Fn::MsubConj, {static_cast<std::uint8_t>(k), ljk, s});
                }
                const auto lij = static_cast<std::uint8_t>(j);
                if (i == j) {
                    out.push_back(Instr::offload(Unit::Div, kDivLatency, lij, {s}, Fn::Sqrt));
                    const auto r = op(Unit::Div, Fn::Recip, {lij});
                    out.push_back(Instr::store(rinv(i), r));
                } else {
                    const auto r = load(rinv(j));
                    out.push_back(Instr::offload(Unit::Mac, kMacLatency, lij, {s, r}, Fn::Mul));
                }
                out.push_back(Instr::store(a(i, j), lij));
            }
        }
        // L^-1, strictly lower part; its diagonal is 1/L_ii.
        for (std::uint32_t i = 1; i < d; ++i) {
            // Row tags are free after the factorization; tag 0 holds 1/L_ii for the row.
            const std::uint8_t ri = 0;
            out.push_back(Instr::load(rinv(i), ri));
            for (std::uint32_t j = 0; j < i; ++j) {
                std::uint8_t s = 0;
                for (std::uint32_t k = j; k < i; ++k) {
                    const auto lik = load(a(i, k));
                    const auto v = load(linv(k, j));
                    s = k == j ? op(Unit::Mac, Fn::Mul, {lik, v}) : op(Unit::Mac, Fn::Mac, {lik, v, s});
                }
                out.push_back(Instr::store(linv(i, j), op(Unit::Mac, Fn::NegMul, {s, ri})));
            }
        }
        // A^-1 = L^-H L^-1, lower triangle written over the input.
        for (std::uint32_t i = 0; i < d; ++i) {
            for (std::uint32_t j = 0; j <= i; ++j) {
                std::uint8_t s = 0;
                for (std::uint32_t k = i; k < d; ++k) {
                    const auto u = load(linv(k, i));
                    const auto v = i == j ? u : load(linv(k, j));
                    s = k == i ? op(Unit::Mac, Fn::ConjMul, {u, v}) : op(Unit::Mac, Fn::ConjMac, {u, v, s});
                }
                out.push_back(Instr::store(a(i, j), s));
            }
        }
        problem_ += l_->cores;
        return true;
    }

private:
    std::uint8_t temp() {
        const auto t = static_cast<std::uint8_t>(32 + next_temp_);
        next_temp_ = (next_temp_ + 1) % 32;
        return t;
    }

    std::shared_ptr<const SysInvLayout> l_;
    CoreId core_;
    std::uint32_t problem_;
    std::uint32_t next_temp_ = 0;
    bool done_ = false;
};

}  // namespace

MappedKernel map_sysinv(const KernelSpec& spec, const ClusterConfig& cfg_in) {
    if (spec.kind != KernelKind::SysInv) throw ConfigError("map_sysinv needs a SysInv spec");
    const auto cfg = placed(spec, cfg_in);
    auto layout = std::make_shared<SysInvLayout>();
    layout->cfg = cfg;
    layout->problems = spec.dims[0];
    layout->dim = spec.dims[1];
    layout->cores = cfg.total_cores();
    layout->per_core = ceil_div(layout->problems, layout->cores);
    const auto need = layout->core_words() * cfg.cores_per_tile;
    if (need > cfg.tile_words()) {
        throw CapacityError("SysInv needs " + std::to_string(need) + " words per tile, a tile holds " +
                            std::to_string(cfg.tile_words()));
    }

    MappedKernel mk;
    mk.spec = spec;
    mk.cfg = cfg;
    mk.traces.cores = layout->cores;
    mk.traces.barrier_domains = {layout->cores};
    mk.traces.stream_for = [layout](CoreId c) { return make_stream(SysInvGen(layout, c)); };
    mk.operands.resize(1);
    for (std::uint32_t p = 0; p < layout->problems; ++p) {
        for (std::uint32_t i = 0; i < layout->dim; ++i) {
            for (std::uint32_t j = 0; j <= i; ++j) {
                mk.operands[0].push_back(layout->element(p, i, j));
                mk.results.push_back(layout->element(p, i, j));
            }
        }
    }
    return mk;
}

MappedKernel map_kernel(const KernelSpec& spec, const ClusterConfig& cfg) {
    switch (spec.kind) {
        case KernelKind::FFT: return map_fft(spec, cfg);
        case KernelKind::MatMul: return map_matmul(spec, cfg);
        case KernelKind::CHE: return map_che(spec, cfg);
        case KernelKind::SysInv: return map_sysinv(spec, cfg);
    }
    throw ConfigError("unknown kernel kind");
}

// ---- Replay -----------------------------------------------------------------

std::vector<Complex> replay(const MappedKernel& kernel, const std::vector<std::vector<Complex>>& operands) {
    if (operands.size() != kernel.operands.size()) {
        throw DimensionError(kernel.spec.name() + " takes " + std::to_string(kernel.operands.size()) + " operands");
    }
    std::vector<Complex> mem(kernel.cfg.total_words());
    for (const auto& [addr, v] : kernel.constants) mem[addr] = v;
    for (std::size_t o = 0; o < operands.size(); ++o) {
        if (operands[o].size() != kernel.operands[o].size()) {
            throw DimensionError("operand " + std::to_string(o) + " of " + kernel.spec.name() + " needs " +
                                 std::to_string(kernel.operands[o].size()) + " elements");
        }
        for (std::size_t e = 0; e < operands[o].size(); ++e) mem[kernel.operands[o][e]] = operands[o][e];
    }

    struct CoreState {
        std::unique_ptr<InstrStream> stream;
        std::vector<Instr> buf;
        std::size_t pc = 0;
        bool done = false;
        std::array<Complex, kMaxTags> regs{};
    };
    std::vector<CoreState> cores(kernel.traces.cores);
    for (CoreId c = 0; c < kernel.traces.cores; ++c) {
        cores[c].stream = kernel.traces.stream_for ? kernel.traces.stream_for(c) : nullptr;
        cores[c].done = !cores[c].stream;
    }

    // Each round runs every core up to its next barrier.
    for (bool any = true; any;) {
        any = false;
        for (auto& cs : cores) {
            if (cs.done) continue;
            any = true;
            bool at_barrier = false;
            while (!at_barrier) {
                if (cs.pc >= cs.buf.size()) {
                    cs.buf.clear();
                    cs.pc = 0;
                    if (!cs.stream->refill(cs.buf)) {
                        cs.done = true;
                        break;
                    }
                    continue;
                }
                const Instr& in = cs.buf[cs.pc++];
                switch (in.op) {
                    case Op::Load: cs.regs[in.tag] = mem[in.addr]; break;
                    case Op::Store: mem[in.addr] = in.ndeps ? cs.regs[in.deps[0]] : Complex{}; break;
                    case Op::Offload: {
                        std::array<Complex, kMaxDeps> v{};
                        for (std::uint8_t k = 0; k < in.ndeps; ++k) v[k] = cs.regs[in.deps[k]];
                        cs.regs[in.tag] = apply(in.fn, v.data(), in.ndeps);
                        break;
                    }
                    case Op::Barrier: at_barrier = true; break;
                    case Op::Compute:
                    case Op::Use: break;
                }
            }
        }
    }
    return mem;
}

std::vector<Complex> gather_results(const MappedKernel& kernel, const std::vector<Complex>& memory) {
    std::vector<Complex> out;
    out.reserve(kernel.results.size());
    for (const auto a : kernel.results) out.push_back(memory.at(a));
    return out;
}

// ---- Locality and simulation ---------------------------------------------

std::uint64_t AccessProfile::total_loads() const { return loads[0] + loads[1] + loads[2] + loads[3]; }
std::uint64_t AccessProfile::total_stores() const { return stores[0] + stores[1] + stores[2] + stores[3]; }

AccessProfile access_profile(const MappedKernel& kernel) {
    AccessProfile p;
    for (CoreId c = 0; c < kernel.traces.cores; ++c) {
        if (!kernel.traces.stream_for) break;
        auto s = kernel.traces.stream_for(c);
        for_each_instr(*s, [&](const Instr& in) {
            if (in.op != Op::Load && in.op != Op::Store) return;
            const auto cls = index_of(destination_class(c, locate_bank(in.addr, kernel.cfg).bank, kernel.cfg));
            ++(in.op == Op::Load ? p.loads : p.stores)[cls];
        });
    }
    return p;
}

std::array<double, 5> StallReport::fractions() const {
    if (active_cycles == 0) return {};
    const auto a = static_cast<double>(active_cycles);
    return {static_cast<double>(retired) / a, static_cast<double>(stalls.lsu) / a,
            static_cast<double>(stalls.raw_or_external_unit) / a, static_cast<double>(stalls.icache) / a,
            static_cast<double>(stalls.barrier) / a};
}

KernelRun simulate_kernel(const MappedKernel& kernel, const engine::EngineParams& params) {
    KernelRun run;
    // Far above any mapped kernel's length; only a wedged run gets here.
    constexpr Cycle kBudget = 200'000'000;
    run.stats = engine::simulate_traces(kernel.traces, kernel.cfg, params, kBudget, &run.barrier_passes);
    auto& r = run.report;
    r.kernel = kernel.spec.name();
    r.profile = kernel.cfg.latency_profile.name();
    r.total_cycles = run.stats.total_cycles;
    for (const auto v : run.stats.per_core_retired) r.retired += v;
    for (const auto v : run.stats.per_core_active) r.active_cycles += v;
    r.stalls = run.stats.total_stalls();
    r.ipc = run.stats.ipc;
    return run;
}

std::string kernel_csv(const std::vector<StallReport>& reports) {
    std::ostringstream os;
    os << "kernel,profile,total_cycles,ipc,lsu,raw,icache,barrier\n";
    char buf[256];
    for (const auto& r : reports) {
        const auto f = r.fractions();
        std::snprintf(buf, sizeof buf, "%s,%s,%llu,%.4f,%.4f,%.4f,%.4f,%.4f\n", r.kernel.c_str(), r.profile.c_str(),
                      static_cast<unsigned long long>(r.total_cycles), r.ipc, f[1], f[2], f[3], f[4]);
        os << buf;
    }
    return os.str();
}

std::string stall_svg(const std::vector<StallReport>& reports) {
    constexpr int kLeft = 220, kWidth = 520, kBar = 22, kGap = 10, kTop = 40;
    const std::array<const char*, 5> names{"instructions", "lsu", "raw/ext. unit", "icache", "barrier"};
    const std::array<const char*, 5> colors{"#4e79a7", "#e15759", "#f28e2b", "#76b7b2", "#bab0ac"};
    const int height = kTop + static_cast<int>(reports.size()) * (kBar + kGap) + 50;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kLeft + kWidth + 40 << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<text x=\"" << kLeft << "\" y=\"20\" font-size=\"14\">Fraction of cycles</text>\n";
    char buf[256];
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const int y = kTop + static_cast<int>(i) * (kBar + kGap);
        os << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + kBar / 2 + 4 << "\" text-anchor=\"end\">"
           << reports[i].kernel << " " << reports[i].profile << "</text>\n";
        double x = kLeft;
        const auto f = reports[i].fractions();
        for (std::size_t k = 0; k < f.size(); ++k) {
            const double w = f[k] * kWidth;
            std::snprintf(buf, sizeof buf, "<rect x=\"%.2f\" y=\"%d\" width=\"%.2f\" height=\"%d\" fill=\"%s\"/>\n", x,
                          y, w, kBar, colors[k]);
            os << buf;
            x += w;
        }
    }
    const int ly = height - 25;
    for (std::size_t k = 0; k < names.size(); ++k) {
        const int lx = kLeft + static_cast<int>(k) * 105;
        os << "<rect x=\"" << lx << "\" y=\"" << ly - 10 << "\" width=\"12\" height=\"12\" fill=\"" << colors[k]
           << "\"/>\n";
        os << "<text x=\"" << lx + 16 << "\" y=\"" << ly << "\">" << names[k] << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace terapool::kernels
