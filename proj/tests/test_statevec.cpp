#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <vector>

#include "oracles.hpp"
#include "qki/rng.hpp"
#include "qki/statevec.hpp"

using namespace qki;

namespace {

std::vector<cplx> random_state(int n, uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<cplx> amps(size_t{1} << n);
    double norm2 = 0.0;
    for (cplx& a : amps) {
        a = {rng.next_double() - 0.5, rng.next_double() - 0.5};
        norm2 += std::norm(a);
    }
    for (cplx& a : amps) a /= std::sqrt(norm2);
    return amps;
}

double max_err(std::span<const cplx> got, const oracle::Vec& want) {
    double m = 0.0;
    for (size_t i = 0; i < got.size(); ++i)
        m = std::max(m, std::abs(got[i] - want(static_cast<Eigen::Index>(i))));
    return m;
}

}  // namespace

TEST_CASE("named gates are unitary and match the documented matrices") {
    CHECK(gates::is_unitary(gates::h()));
    CHECK(gates::is_unitary(gates::x()));
    CHECK(gates::is_unitary(gates::y()));
    CHECK(gates::is_unitary(gates::z()));
    CHECK(gates::is_unitary(gates::rx(0.7)));
    CHECK(gates::is_unitary(gates::rz(-2.3)));
    CHECK(gates::is_unitary(gates::cnot()));
    CHECK(gates::is_unitary(gates::cz()));
    CHECK(gates::is_unitary(gates::cphase(1.1)));

    const Gate2x2 rx = gates::rx(0.9);
    const oracle::Mat want = oracle::gate1({GateKind::RX, 0.9, 0});
    CHECK(std::abs(rx.m00 - want(0, 0)) < 1e-15);
    CHECK(std::abs(rx.m01 - want(0, 1)) < 1e-15);
    CHECK(std::abs(rx.m10 - want(1, 0)) < 1e-15);
    CHECK(std::abs(rx.m11 - want(1, 1)) < 1e-15);

    const Gate2x2 rz = gates::rz(-1.3);
    const oracle::Mat wz = oracle::gate1({GateKind::RZ, -1.3, 0});
    CHECK(std::abs(rz.m00 - wz(0, 0)) < 1e-15);
    CHECK(std::abs(rz.m11 - wz(1, 1)) < 1e-15);
}

TEST_CASE("RX(pi) maps |0> to -i|1>") {
    StateVector sv(1);
    sv.apply_1q(gates::rx(3.14159265358979323846), 0);
    const auto amps = sv.amplitudes();
    CHECK(std::abs(amps[0]) < 1e-15);
    CHECK(std::abs(amps[1] - cplx(0.0, -1.0)) < 1e-15);
}

TEST_CASE("strided 1q application matches the Kronecker oracle") {
    for (const int n : {1, 2, 3, 5}) {
        for (int q = 0; q < n; ++q) {
            const auto init = random_state(n, 100 * uint64_t(n) + uint64_t(q));
            StateVector sv(n);
            std::copy(init.begin(), init.end(), sv.amplitudes_mut().begin());
            sv.apply_1q(gates::rx(0.3 + q), q);

            const oracle::Mat u =
                oracle::full_1q(oracle::gate1({GateKind::RX, 0.3 + q, q}), q, n);
            const oracle::Vec want = u * oracle::to_eigen(init);
            CHECK(max_err(sv.amplitudes(), want) < 1e-14);
        }
    }
}

TEST_CASE("strided 2q application matches the projection oracle") {
    // Covers ctrl < tgt, ctrl > tgt, adjacent and distant pairs.
    const std::pair<int, int> pairs[] = {{0, 1}, {1, 0}, {0, 3}, {3, 1}, {2, 0}};
    for (const auto& [ctrl, tgt] : pairs) {
        const int n = 4;
        const auto init = random_state(n, 7 + uint64_t(ctrl) * 13 + uint64_t(tgt));
        StateVector sv(n);
        std::copy(init.begin(), init.end(), sv.amplitudes_mut().begin());
        sv.apply_2q(gates::cphase(0.8), ctrl, tgt);

        const oracle::Mat u =
            oracle::full_2q(oracle::gate2({GateKind::CPHASE, 0.8, ctrl, tgt}), ctrl, tgt, n);
        const oracle::Vec want = u * oracle::to_eigen(init);
        CHECK(max_err(sv.amplitudes(), want) < 1e-14);

        StateVector sv2(n);
        std::copy(init.begin(), init.end(), sv2.amplitudes_mut().begin());
        sv2.apply_2q(gates::cnot(), ctrl, tgt);
        const oracle::Mat u2 =
            oracle::full_2q(oracle::gate2({GateKind::CNOT, 0.0, ctrl, tgt}), ctrl, tgt, n);
        CHECK(max_err(sv2.amplitudes(), u2 * oracle::to_eigen(init)) < 1e-14);
    }
}

TEST_CASE("serial and parallel kernels produce bit-identical amplitudes") {
    const int n = 15;  // past the parallel threshold
    const auto init = random_state(n, 42);
    std::vector<cplx> a = init, b = init;

    kernels::apply_1q_serial(a, gates::h(), 7);
    kernels::apply_1q_parallel(b, gates::h(), 7);
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(cplx)) == 0);

    kernels::apply_2q_serial(a, gates::cnot(), 11, 2);
    kernels::apply_2q_parallel(b, gates::cnot(), 11, 2);
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(cplx)) == 0);
}

TEST_CASE("gates preserve the norm") {
    StateVector sv(6);
    SplitMix64 rng(5);
    for (int g = 0; g < 50; ++g) {
        const int q0 = int(rng.next_below(6));
        int q1 = int(rng.next_below(6));
        if (q1 == q0) q1 = (q1 + 1) % 6;
        sv.apply_1q(gates::rx(rng.next_double() * 6.0), q0);
        sv.apply_2q(gates::cphase(rng.next_double()), q0, q1);
    }
    CHECK(sv.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("prob_all_zeros reads |amp(0)|^2") {
    StateVector sv(2);
    CHECK(sv.prob_all_zeros() == doctest::Approx(1.0));
    sv.apply_1q(gates::h(), 0);
    CHECK(sv.prob_all_zeros() == doctest::Approx(0.5));
    sv.apply_1q(gates::h(), 1);
    CHECK(sv.prob_all_zeros() == doctest::Approx(0.25));
    sv.reset();
    CHECK(sv.prob_all_zeros() == doctest::Approx(1.0));
}

TEST_CASE("sample_all_zeros is deterministic and statistically sane") {
    StateVector sv(3);
    sv.apply_1q(gates::h(), 0);  // p(all zeros) = 0.5

    const uint64_t a = sample_all_zeros(sv, 10000, 9);
    CHECK(a == sample_all_zeros(sv, 10000, 9));
    CHECK(a != sample_all_zeros(sv, 10000, 10));  // overwhelmingly likely

    // 4 sigma around p = 0.5: 5000 +- 200.
    CHECK(a > 4800);
    CHECK(a < 5200);

    StateVector ones(2);
    ones.apply_1q(gates::x(), 0);
    CHECK(sample_all_zeros(ones, 500, 1) == 0);

    StateVector zeros(2);
    CHECK(sample_all_zeros(zeros, 500, 1) == 500);
}

TEST_CASE("capacity and index checks") {
    CHECK_THROWS_AS(StateVector(0), capacity_error);
    CHECK_THROWS_AS(StateVector(kMaxQubits + 1), capacity_error);

    StateVector sv(2);
    CHECK_THROWS_AS(sv.apply_1q(gates::h(), 2), std::invalid_argument);
    CHECK_THROWS_AS(sv.apply_1q(gates::h(), -1), std::invalid_argument);
    CHECK_THROWS_AS(sv.apply_2q(gates::cnot(), 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(sv.apply_2q(gates::cnot(), 0, 2), std::invalid_argument);
}

TEST_CASE("seed mixing separates streams") {
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) != mix_seed(2, 0));
    CHECK(mix_seed(3, 5) == mix_seed(3, 5));

    SplitMix64 rng(0);
    const double d = rng.next_double();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
    uint64_t seen = 0;
    for (int i = 0; i < 60; ++i) seen += rng.next_below(3);
    CHECK(seen > 20);  // not stuck at zero
    CHECK(seen < 100);
}
