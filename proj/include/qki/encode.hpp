#pragma once

#include <vector>

#include "qki/circuit.hpp"

namespace qki {

/// Classical feature vector, one entry per qubit. The pipeline scales
/// entries into [0, pi] before they reach an encoder.
using FeatureVector = std::vector<double>;

enum class EncodingKind { Angle, Iqp };

enum class IqpPairing { LinearChain, AllPairs };

struct EncodingSpec {
    EncodingKind kind = EncodingKind::Angle;
    int n_qubits = 1;
    int iqp_depth = 2;                           // ignored for Angle
    IqpPairing pairing = IqpPairing::LinearChain;
    // Realize the ZZ interaction as RZ-RZ-CPHASE instead of CNOT-RZ-CNOT.
    // Same unitary up to global phase, so kernels agree; the shape just
    // mirrors hardware that exposes CPHASE natively.
    bool use_cphase = false;
};

void validate(const EncodingSpec& spec);

/// Entanglement pattern for the given spec: (i, i+1) chain or all pairs i<j.
std::vector<std::pair<int, int>> iqp_pairs(const EncodingSpec& spec);

/// One RX(x_i) per qubit; a single moment, no two-qubit gates.
Circuit angle_map(const FeatureVector& x);

/// Per layer: H on every qubit, RZ(2 x_i) on qubit i, then for each pair
/// (i, j) the interaction exp(-i x_i x_j Z_i Z_j).
Circuit iqp_map(const FeatureVector& x, const EncodingSpec& spec);

/// Dispatches on spec.kind.
Circuit feature_map(const FeatureVector& x, const EncodingSpec& spec);

/// Overlap-test circuit U(x) followed by U(z)^dagger; measuring all-zeros
/// probability from |0...0> yields K(x, z) = |<0|U(z)^dag U(x)|0>|^2.
Circuit kernel_circuit(const FeatureVector& x, const FeatureVector& z, const EncodingSpec& spec);

}  // namespace qki
