#include "qki/encode.hpp"

#include <cmath>
#include <stdexcept>

namespace qki {

void validate(const EncodingSpec& spec) {
    if (spec.n_qubits < 1 || spec.n_qubits > kMaxQubits) {
        throw capacity_error("encoding requires 1.." + std::to_string(kMaxQubits) +
                             " qubits, got " + std::to_string(spec.n_qubits));
    }
    if (spec.kind == EncodingKind::Iqp && spec.iqp_depth < 1) {
        throw std::invalid_argument("iqp_depth must be >= 1");
    }
}

std::vector<std::pair<int, int>> iqp_pairs(const EncodingSpec& spec) {
    std::vector<std::pair<int, int>> pairs;
    if (spec.pairing == IqpPairing::LinearChain) {
        for (int i = 0; i + 1 < spec.n_qubits; ++i) pairs.emplace_back(i, i + 1);
    } else {
        for (int i = 0; i < spec.n_qubits; ++i) {
            for (int j = i + 1; j < spec.n_qubits; ++j) pairs.emplace_back(i, j);
        }
    }
    return pairs;
}

namespace {

void check_features(const FeatureVector& x, int n_qubits) {
    if (static_cast<int>(x.size()) != n_qubits) {
        throw std::invalid_argument("feature vector length " + std::to_string(x.size()) +
                                    " does not match qubit count " + std::to_string(n_qubits));
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw std::invalid_argument("feature values must be finite");
    }
}

}  // namespace

Circuit angle_map(const FeatureVector& x) {
    if (x.empty()) throw std::invalid_argument("feature vector must be nonempty");
    check_features(x, static_cast<int>(x.size()));
    Circuit c(static_cast<int>(x.size()));
    for (int q = 0; q < c.n_qubits(); ++q) c.rx(q, x[q]);
    return c;
}

Circuit iqp_map(const FeatureVector& x, const EncodingSpec& spec) {
    validate(spec);
    check_features(x, spec.n_qubits);
    const auto pairs = iqp_pairs(spec);
    Circuit c(spec.n_qubits);
    for (int layer = 0; layer < spec.iqp_depth; ++layer) {
        for (int q = 0; q < spec.n_qubits; ++q) c.h(q);
        for (int q = 0; q < spec.n_qubits; ++q) c.rz(q, 2.0 * x[q]);
        for (const auto& [i, j] : pairs) {
            const double phi = x[i] * x[j];
            if (spec.use_cphase) {
                // exp(-i phi ZZ) = RZ(2 phi) x RZ(2 phi) . CPHASE(-4 phi),
                // up to global phase.
                c.rz(i, 2.0 * phi);
                c.rz(j, 2.0 * phi);
                c.cphase(i, j, -4.0 * phi);
            } else {
                c.cnot(i, j);
                c.rz(j, 2.0 * phi);
                c.cnot(i, j);
            }
        }
    }
    return c;
}

Circuit feature_map(const FeatureVector& x, const EncodingSpec& spec) {
    if (spec.kind == EncodingKind::Angle) {
        check_features(x, spec.n_qubits);
        return angle_map(x);
    }
    return iqp_map(x, spec);
}

Circuit kernel_circuit(const FeatureVector& x, const FeatureVector& z,
                       const EncodingSpec& spec) {
    if (x.size() != z.size()) {
        throw std::invalid_argument("kernel circuit requires equal-length feature vectors");
    }
    Circuit fwd = feature_map(x, spec);
    const Circuit rev = inverse(feature_map(z, spec));
    for (const Gate& g : rev.gates()) fwd.add(g);
    return fwd;
}

}  // namespace qki
