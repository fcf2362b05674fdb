#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "qki/common.hpp"

namespace qki {

using cplx = std::complex<double>;

/// Simulator capacity. 2^24 amplitudes = 256 MiB of doubles; anything past
/// that is refused up front rather than thrashing the machine.
inline constexpr int kMaxQubits = 24;

/// Dense 2x2 unitary acting on one qubit.
struct Gate2x2 {
    cplx m00, m01, m10, m11;
};

/// Dense 4x4 unitary acting on an ordered (control, target) qubit pair.
/// Subspace index convention: s = 2*bit(control) + bit(target).
struct Gate4x4 {
    std::array<cplx, 16> m;

    cplx& at(int r, int c) { return m[static_cast<size_t>(r) * 4 + c]; }
    const cplx& at(int r, int c) const { return m[static_cast<size_t>(r) * 4 + c]; }
};

namespace kernels {

// Gate-application kernels over the raw amplitude array. The parallel
// variants split the stride loop across OpenMP threads; every iteration
// writes a disjoint amplitude pair, so serial and parallel results are
// bit-identical. The serial variants are the reference the tests and the
// benchmark compare against.

void apply_1q_serial(std::span<cplx> amps, const Gate2x2& g, int q);
void apply_1q_parallel(std::span<cplx> amps, const Gate2x2& g, int q);
void apply_2q_serial(std::span<cplx> amps, const Gate4x4& g, int q_ctrl, int q_tgt);
void apply_2q_parallel(std::span<cplx> amps, const Gate4x4& g, int q_ctrl, int q_tgt);

}  // namespace kernels

/// Dense state vector over 2^n basis states.
/// Basis index bit k corresponds to qubit k (little-endian).
class StateVector {
public:
    /// Prepares |0...0>. Throws capacity_error outside [1, kMaxQubits].
    explicit StateVector(int n_qubits);

    /// Back to |0...0> without reallocating.
    void reset();

    int n_qubits() const { return n_qubits_; }
    size_t size() const { return amps_.size(); }

    std::span<const cplx> amplitudes() const { return amps_; }
    std::span<cplx> amplitudes_mut() { return amps_; }

    /// Applies a 2x2 unitary to qubit q. Throws std::invalid_argument on a
    /// bad index. Parallelizes over amplitude strides for large states.
    void apply_1q(const Gate2x2& g, int q);

    /// Applies a 4x4 unitary to the (q_ctrl, q_tgt) subspace. The qubits must
    /// be distinct and in range.
    void apply_2q(const Gate4x4& g, int q_ctrl, int q_tgt);

    /// |amplitude of |0...0>|^2.
    double prob_all_zeros() const;

    /// L2 norm; diagnostic only, gates preserve it.
    double norm() const;

private:
    int n_qubits_;
    std::vector<cplx> amps_;
};

/// Counts all-zeros outcomes over `shots` independent measurements of the
/// state. Deterministic in (state, shots, seed); shots must be >= 1.
uint64_t sample_all_zeros(const StateVector& state, uint64_t shots, uint64_t seed);

namespace gates {

Gate2x2 h();
Gate2x2 x();
Gate2x2 y();
Gate2x2 z();
/// RX(theta) = exp(-i theta X / 2)
Gate2x2 rx(double theta);
/// RZ(theta) = exp(-i theta Z / 2)
Gate2x2 rz(double theta);
Gate4x4 cnot();
Gate4x4 cz();
/// CPHASE(theta) = diag(1, 1, 1, e^{i theta})
Gate4x4 cphase(double theta);

Gate2x2 dagger(const Gate2x2& g);
Gate4x4 dagger(const Gate4x4& g);

/// M†M = I within tol, elementwise.
bool is_unitary(const Gate2x2& g, double tol = 1e-9);
bool is_unitary(const Gate4x4& g, double tol = 1e-9);

}  // namespace gates

}  // namespace qki
