#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qki/encode.hpp"

using namespace qki;

TEST_CASE("angle map is one RX per qubit") {
    const FeatureVector x = {0.1, 2.2, 1.3};
    const Circuit c = angle_map(x);
    REQUIRE(c.size() == 3);
    for (int q = 0; q < 3; ++q) {
        CHECK(c.gates()[q].kind == GateKind::RX);
        CHECK(c.gates()[q].q0 == q);
        CHECK(c.gates()[q].angle == x[size_t(q)]);
    }
    CHECK_THROWS_AS(angle_map({}), std::invalid_argument);
    CHECK_THROWS_AS(angle_map({0.1, std::nan("")}), std::invalid_argument);
}

TEST_CASE("iqp pair sets") {
    EncodingSpec spec;
    spec.kind = EncodingKind::Iqp;
    spec.n_qubits = 5;

    spec.pairing = IqpPairing::LinearChain;
    auto chain = iqp_pairs(spec);
    REQUIRE(chain.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(chain[size_t(i)] == std::pair{i, i + 1});

    spec.pairing = IqpPairing::AllPairs;
    CHECK(iqp_pairs(spec).size() == 10);  // 5 choose 2
}

TEST_CASE("iqp map layer structure and gate counts") {
    EncodingSpec spec;
    spec.kind = EncodingKind::Iqp;
    spec.n_qubits = 4;
    spec.iqp_depth = 2;
    spec.pairing = IqpPairing::LinearChain;

    const FeatureVector x = {0.4, 1.1, 2.0, 0.7};
    const Circuit c = iqp_map(x, spec);
    // per layer: 4 H + 4 RZ + 3 pairs x (CNOT, RZ, CNOT)
    CHECK(c.size() == 2 * (4 + 4 + 3 * 3));

    // first layer prefix: H on every qubit, then RZ(2 x_q)
    for (int q = 0; q < 4; ++q) CHECK(c.gates()[size_t(q)].kind == GateKind::H);
    for (int q = 0; q < 4; ++q) {
        const Gate& g = c.gates()[size_t(4 + q)];
        CHECK(g.kind == GateKind::RZ);
        CHECK(g.angle == doctest::Approx(2.0 * x[size_t(q)]));
    }
    const Gate& ent = c.gates()[8];
    CHECK(ent.kind == GateKind::CNOT);

    spec.use_cphase = true;
    const Circuit cp = iqp_map(x, spec);
    CHECK(cp.size() == c.size());  // RZ, RZ, CPHASE per pair: same count
    CHECK(cp.gates()[10].kind == GateKind::CPHASE);
}

TEST_CASE("cnot and cphase iqp realizations agree up to global phase") {
    EncodingSpec spec;
    spec.kind = EncodingKind::Iqp;
    spec.n_qubits = 3;
    spec.iqp_depth = 1;

    const FeatureVector x = oracle::random_features(3, 61);
    spec.use_cphase = false;
    const oracle::Mat u1 = oracle::circuit_unitary(iqp_map(x, spec));
    spec.use_cphase = true;
    const oracle::Mat u2 = oracle::circuit_unitary(iqp_map(x, spec));

    const oracle::Mat rel = u1 * u2.adjoint();
    const cplx phase = rel(0, 0);
    CHECK(std::abs(std::abs(phase) - 1.0) < 1e-12);
    CHECK((rel - phase * oracle::Mat::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("feature_map dispatches on kind") {
    EncodingSpec spec;
    spec.n_qubits = 2;
    spec.kind = EncodingKind::Angle;
    const FeatureVector x = {0.3, 0.9};
    CHECK(feature_map(x, spec) == angle_map(x));

    spec.kind = EncodingKind::Iqp;
    CHECK(feature_map(x, spec) == iqp_map(x, spec));
}

TEST_CASE("kernel circuit is forward map followed by inverted map") {
    EncodingSpec spec;
    spec.n_qubits = 3;
    spec.kind = EncodingKind::Iqp;

    const FeatureVector x = oracle::random_features(3, 1);
    const FeatureVector z = oracle::random_features(3, 2);
    const Circuit kc = kernel_circuit(x, z, spec);
    const Circuit fwd = feature_map(x, spec);
    const Circuit inv = inverse(feature_map(z, spec));
    REQUIRE(kc.size() == fwd.size() + inv.size());
    for (size_t i = 0; i < fwd.size(); ++i) CHECK(kc.gates()[i] == fwd.gates()[i]);
    for (size_t i = 0; i < inv.size(); ++i) CHECK(kc.gates()[fwd.size() + i] == inv.gates()[i]);

    // same point twice: perfect overlap
    const StateVector sv = simulate(kernel_circuit(x, x, spec), std::nullopt, 0);
    CHECK(sv.prob_all_zeros() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("encoding validation") {
    EncodingSpec spec;
    spec.n_qubits = 0;
    CHECK_THROWS_AS(validate(spec), capacity_error);
    spec.n_qubits = kMaxQubits + 1;
    CHECK_THROWS_AS(validate(spec), capacity_error);

    spec.n_qubits = 2;
    spec.kind = EncodingKind::Iqp;
    spec.iqp_depth = 0;
    CHECK_THROWS_AS(validate(spec), std::invalid_argument);

    spec.iqp_depth = 1;
    CHECK_THROWS_AS(iqp_map({0.1}, spec), std::invalid_argument);  // length mismatch
}
