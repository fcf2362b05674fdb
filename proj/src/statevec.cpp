#include "qki/statevec.hpp"

#include <cmath>
#include <stdexcept>

#include <omp.h>

#include "qki/rng.hpp"

namespace qki {

namespace {

// Below this size the OpenMP fork/join overhead outweighs the sweep itself.
constexpr size_t kParallelThreshold = size_t{1} << 14;

bool want_parallel(size_t dim) {
    return dim >= kParallelThreshold && omp_get_max_threads() > 1 && !omp_in_parallel();
}

/// Spreads k over n-2 bits into an n-bit index with zero bits at pa < pb.
inline size_t expand_two(size_t k, int pa, int pb) {
    size_t t = ((k >> pa) << (pa + 1)) | (k & ((size_t{1} << pa) - 1));
    return ((t >> pb) << (pb + 1)) | (t & ((size_t{1} << pb) - 1));
}

inline void pair_update(cplx* amps, size_t i0, size_t i1, const Gate2x2& g) {
    const cplx a0 = amps[i0];
    const cplx a1 = amps[i1];
    amps[i0] = g.m00 * a0 + g.m01 * a1;
    amps[i1] = g.m10 * a0 + g.m11 * a1;
}

inline void quad_update(cplx* amps, size_t base, size_t mc, size_t mt, const Gate4x4& g) {
    const size_t i00 = base;
    const size_t i01 = base | mt;
    const size_t i10 = base | mc;
    const size_t i11 = base | mc | mt;
    const cplx a0 = amps[i00], a1 = amps[i01], a2 = amps[i10], a3 = amps[i11];
    amps[i00] = g.m[0] * a0 + g.m[1] * a1 + g.m[2] * a2 + g.m[3] * a3;
    amps[i01] = g.m[4] * a0 + g.m[5] * a1 + g.m[6] * a2 + g.m[7] * a3;
    amps[i10] = g.m[8] * a0 + g.m[9] * a1 + g.m[10] * a2 + g.m[11] * a3;
    amps[i11] = g.m[12] * a0 + g.m[13] * a1 + g.m[14] * a2 + g.m[15] * a3;
}

inline bool is_diagonal(const Gate2x2& g) {
    return g.m01 == cplx{0.0, 0.0} && g.m10 == cplx{0.0, 0.0};
}

}  // namespace

namespace kernels {

void apply_1q_serial(std::span<cplx> amps, const Gate2x2& g, int q) {
    const size_t dim = amps.size();
    const size_t stride = size_t{1} << q;
    cplx* a = amps.data();
    if (is_diagonal(g)) {
        const cplx d0 = g.m00, d1 = g.m11;
        for (size_t i = 0; i < dim; ++i) {
            a[i] *= (i & stride) ? d1 : d0;
        }
        return;
    }
    for (size_t base = 0; base < dim; base += 2 * stride) {
        for (size_t off = 0; off < stride; ++off) {
            pair_update(a, base + off, base + off + stride, g);
        }
    }
}

void apply_1q_parallel(std::span<cplx> amps, const Gate2x2& g, int q) {
    const size_t dim = amps.size();
    if (!want_parallel(dim)) {
        apply_1q_serial(amps, g, q);
        return;
    }
    const size_t stride = size_t{1} << q;
    const size_t pairs = dim / 2;
    cplx* a = amps.data();
    if (is_diagonal(g)) {
        const cplx d0 = g.m00, d1 = g.m11;
#pragma omp parallel for schedule(static)
        for (size_t i = 0; i < dim; ++i) {
            a[i] *= (i & stride) ? d1 : d0;
        }
        return;
    }
#pragma omp parallel for schedule(static)
    for (size_t k = 0; k < pairs; ++k) {
        const size_t i0 = ((k >> q) << (q + 1)) | (k & (stride - 1));
        pair_update(a, i0, i0 | stride, g);
    }
}

void apply_2q_serial(std::span<cplx> amps, const Gate4x4& g, int q_ctrl, int q_tgt) {
    const size_t dim = amps.size();
    const size_t mc = size_t{1} << q_ctrl;
    const size_t mt = size_t{1} << q_tgt;
    const int pa = q_ctrl < q_tgt ? q_ctrl : q_tgt;
    const int pb = q_ctrl < q_tgt ? q_tgt : q_ctrl;
    const size_t quads = dim / 4;
    cplx* a = amps.data();
    for (size_t k = 0; k < quads; ++k) {
        quad_update(a, expand_two(k, pa, pb), mc, mt, g);
    }
}

void apply_2q_parallel(std::span<cplx> amps, const Gate4x4& g, int q_ctrl, int q_tgt) {
    const size_t dim = amps.size();
    if (!want_parallel(dim)) {
        apply_2q_serial(amps, g, q_ctrl, q_tgt);
        return;
    }
    const size_t mc = size_t{1} << q_ctrl;
    const size_t mt = size_t{1} << q_tgt;
    const int pa = q_ctrl < q_tgt ? q_ctrl : q_tgt;
    const int pb = q_ctrl < q_tgt ? q_tgt : q_ctrl;
    const size_t quads = dim / 4;
    cplx* a = amps.data();
#pragma omp parallel for schedule(static)
    for (size_t k = 0; k < quads; ++k) {
        quad_update(a, expand_two(k, pa, pb), mc, mt, g);
    }
}

}  // namespace kernels

StateVector::StateVector(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw capacity_error("state vector supports 1.." + std::to_string(kMaxQubits) +
                             " qubits, got " + std::to_string(n_qubits));
    }
    amps_.assign(size_t{1} << n_qubits, cplx{0.0, 0.0});
    amps_[0] = cplx{1.0, 0.0};
}

void StateVector::reset() {
    std::fill(amps_.begin(), amps_.end(), cplx{0.0, 0.0});
    amps_[0] = cplx{1.0, 0.0};
}

void StateVector::apply_1q(const Gate2x2& g, int q) {
    if (q < 0 || q >= n_qubits_) {
        throw std::invalid_argument("qubit index " + std::to_string(q) + " out of range for " +
                                    std::to_string(n_qubits_) + " qubits");
    }
    kernels::apply_1q_parallel(amps_, g, q);
}

void StateVector::apply_2q(const Gate4x4& g, int q_ctrl, int q_tgt) {
    if (q_ctrl < 0 || q_ctrl >= n_qubits_ || q_tgt < 0 || q_tgt >= n_qubits_) {
        throw std::invalid_argument("two-qubit gate index out of range");
    }
    if (q_ctrl == q_tgt) {
        throw std::invalid_argument("two-qubit gate requires distinct qubits");
    }
    kernels::apply_2q_parallel(amps_, g, q_ctrl, q_tgt);
}

double StateVector::prob_all_zeros() const {
    return std::norm(amps_[0]);
}

double StateVector::norm() const {
    double s = 0.0;
    for (const cplx& a : amps_) s += std::norm(a);
    return std::sqrt(s);
}

uint64_t sample_all_zeros(const StateVector& state, uint64_t shots, uint64_t seed) {
    if (shots < 1) {
        throw std::invalid_argument("shots must be >= 1");
    }
    const double p = state.prob_all_zeros();
    SplitMix64 rng(seed);
    uint64_t count = 0;
    for (uint64_t t = 0; t < shots; ++t) {
        if (rng.next_double() < p) ++count;
    }
    return count;
}

namespace gates {

namespace {
constexpr cplx kZero{0.0, 0.0};
constexpr cplx kOne{1.0, 0.0};
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
}  // namespace

Gate2x2 h() {
    return {cplx{kInvSqrt2, 0.0}, cplx{kInvSqrt2, 0.0}, cplx{kInvSqrt2, 0.0},
            cplx{-kInvSqrt2, 0.0}};
}

Gate2x2 x() { return {kZero, kOne, kOne, kZero}; }

Gate2x2 y() { return {kZero, cplx{0.0, -1.0}, cplx{0.0, 1.0}, kZero}; }

Gate2x2 z() { return {kOne, kZero, kZero, cplx{-1.0, 0.0}}; }

Gate2x2 rx(double theta) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    return {cplx{c, 0.0}, cplx{0.0, -s}, cplx{0.0, -s}, cplx{c, 0.0}};
}

Gate2x2 rz(double theta) {
    return {std::polar(1.0, -theta / 2.0), kZero, kZero, std::polar(1.0, theta / 2.0)};
}

Gate4x4 cnot() {
    Gate4x4 g{};
    g.at(0, 0) = kOne;
    g.at(1, 1) = kOne;
    g.at(2, 3) = kOne;
    g.at(3, 2) = kOne;
    return g;
}

Gate4x4 cz() {
    Gate4x4 g{};
    g.at(0, 0) = kOne;
    g.at(1, 1) = kOne;
    g.at(2, 2) = kOne;
    g.at(3, 3) = cplx{-1.0, 0.0};
    return g;
}

Gate4x4 cphase(double theta) {
    Gate4x4 g{};
    g.at(0, 0) = kOne;
    g.at(1, 1) = kOne;
    g.at(2, 2) = kOne;
    g.at(3, 3) = std::polar(1.0, theta);
    return g;
}

Gate2x2 dagger(const Gate2x2& g) {
    return {std::conj(g.m00), std::conj(g.m10), std::conj(g.m01), std::conj(g.m11)};
}

Gate4x4 dagger(const Gate4x4& g) {
    Gate4x4 out{};
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            out.at(r, c) = std::conj(g.at(c, r));
        }
    }
    return out;
}

bool is_unitary(const Gate2x2& g, double tol) {
    const Gate2x2 d = dagger(g);
    const cplx p00 = d.m00 * g.m00 + d.m01 * g.m10;
    const cplx p01 = d.m00 * g.m01 + d.m01 * g.m11;
    const cplx p10 = d.m10 * g.m00 + d.m11 * g.m10;
    const cplx p11 = d.m10 * g.m01 + d.m11 * g.m11;
    return std::abs(p00 - kOne) <= tol && std::abs(p01) <= tol && std::abs(p10) <= tol &&
           std::abs(p11 - kOne) <= tol;
}

bool is_unitary(const Gate4x4& g, double tol) {
    const Gate4x4 d = dagger(g);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            cplx acc{0.0, 0.0};
            for (int k = 0; k < 4; ++k) acc += d.at(r, k) * g.at(k, c);
            const cplx expect = (r == c) ? kOne : kZero;
            if (std::abs(acc - expect) > tol) return false;
        }
    }
    return true;
}

}  // namespace gates

}  // namespace qki
