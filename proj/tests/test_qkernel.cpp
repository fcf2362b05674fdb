#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "qki/qkernel.hpp"

using namespace qki;

namespace {

double angle_closed_form(const FeatureVector& x, const FeatureVector& z) {
    double k = 1.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double c = std::cos((x[i] - z[i]) / 2.0);
        k *= c * c;
    }
    return k;
}

std::vector<FeatureVector> random_samples(int count, int n, uint64_t seed) {
    std::vector<FeatureVector> out;
    for (int i = 0; i < count; ++i)
        out.push_back(oracle::random_features(n, seed + uint64_t(i)));
    return out;
}

std::filesystem::path temp_path(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("exact angle kernel matches the product-of-cosines closed form") {
    for (const int n : {1, 2, 4}) {
        EncodingSpec spec;
        spec.kind = EncodingKind::Angle;
        spec.n_qubits = n;
        for (uint64_t trial = 0; trial < 20; ++trial) {
            const auto x = oracle::random_features(n, 1000 * uint64_t(n) + trial);
            const auto z = oracle::random_features(n, 5000 * uint64_t(n) + trial);
            CHECK(std::abs(kernel_entry_exact(x, z, spec) - angle_closed_form(x, z)) <
                  1e-10);
        }
    }
}

TEST_CASE("exact kernel matches the dense-unitary oracle for both encodings") {
    for (const EncodingKind kind : {EncodingKind::Angle, EncodingKind::Iqp}) {
        for (const int n : {2, 3}) {
            EncodingSpec spec;
            spec.kind = kind;
            spec.n_qubits = n;
            spec.iqp_depth = 2;
            for (uint64_t trial = 0; trial < 8; ++trial) {
                const auto x = oracle::random_features(n, 11 + trial);
                const auto z = oracle::random_features(n, 71 + trial);
                const oracle::Mat u = oracle::circuit_unitary(kernel_circuit(x, z, spec));
                const double want = std::norm(u(0, 0));
                CHECK(std::abs(kernel_entry_exact(x, z, spec) - want) < 1e-12);
            }
        }
    }
}

TEST_CASE("symmetric kernel matrix: symmetry, unit diagonal, PSD") {
    for (const EncodingKind kind : {EncodingKind::Angle, EncodingKind::Iqp}) {
        KernelConfig cfg;
        cfg.encoding.kind = kind;
        cfg.encoding.n_qubits = 3;
        const auto xs = random_samples(8, 3, kind == EncodingKind::Angle ? 3 : 4);
        const KernelMatrix k = kernel_matrix(xs, cfg);

        REQUIRE(k.rows == 8);
        REQUIRE(k.cols == 8);
        for (size_t i = 0; i < 8; ++i) {
            CHECK(std::abs(k.entries.at(i, i) - 1.0) < 1e-10);
            for (size_t j = 0; j < 8; ++j) {
                CHECK(k.entries.at(i, j) == k.entries.at(j, i));  // mirrored, so exact
                CHECK(k.entries.at(i, j) >= -1e-12);
                CHECK(k.entries.at(i, j) <= 1.0 + 1e-12);
            }
        }
        CHECK(oracle::min_eigenvalue(k.entries) >= -1e-9);
    }
}

TEST_CASE("rectangular blocks follow the documented per-entry seed contract") {
    KernelConfig cfg;
    cfg.encoding.kind = EncodingKind::Angle;
    cfg.encoding.n_qubits = 2;
    cfg.mode = KernelMode::Shots;
    cfg.shots = 300;
    cfg.master_seed = 912;

    const auto a = random_samples(3, 2, 21);  // train
    const auto b = random_samples(2, 2, 22);  // eval rows
    const KernelMatrix k = kernel_matrix(a, b, cfg);
    REQUIRE(k.rows == 2);
    REQUIRE(k.cols == 3);

    for (size_t i = 0; i < k.rows; ++i) {
        for (size_t j = 0; j < k.cols; ++j) {
            const double want =
                kernel_entry_shots(b[i], a[j], cfg.encoding, cfg.shots, std::nullopt,
                                   std::nullopt, mix_seed(cfg.master_seed, i * k.cols + j));
            CHECK(k.entries.at(i, j) == want);
        }
    }
}

TEST_CASE("shot sampling is deterministic per seed and converges loosely") {
    EncodingSpec spec;
    spec.kind = EncodingKind::Iqp;
    spec.n_qubits = 3;

    for (uint64_t trial = 0; trial < 10; ++trial) {
        const auto x = oracle::random_features(3, 300 + trial);
        const auto z = oracle::random_features(3, 400 + trial);
        const double exact = kernel_entry_exact(x, z, spec);
        const int shots = 4000;
        const double est =
            kernel_entry_shots(x, z, spec, shots, std::nullopt, std::nullopt, trial);
        CHECK(est ==
              kernel_entry_shots(x, z, spec, shots, std::nullopt, std::nullopt, trial));
        const double sigma = std::sqrt(std::max(exact * (1.0 - exact), 1e-12) / shots);
        CHECK(std::abs(est - exact) < 5.0 * sigma + 1e-9);
    }
}

TEST_CASE("exact mode ignores any configured noise") {
    KernelConfig clean;
    clean.encoding.n_qubits = 2;
    NoiseModel noise;
    noise.depol_1q = 0.3;
    KernelConfig noisy = clean;
    noisy.noise = noise;

    const auto xs = random_samples(4, 2, 8);
    const KernelMatrix a = kernel_matrix(xs, clean);
    const KernelMatrix b = kernel_matrix(xs, noisy);
    CHECK(std::memcmp(a.entries.data.data(), b.entries.data.data(),
                      a.entries.data.size() * sizeof(double)) == 0);
}

TEST_CASE("noisy shot kernels are seed-deterministic and differ from clean") {
    KernelConfig cfg;
    cfg.encoding.kind = EncodingKind::Iqp;
    cfg.encoding.n_qubits = 2;
    cfg.mode = KernelMode::Shots;
    cfg.shots = 200;
    cfg.master_seed = 5;
    NoiseModel noise;
    noise.depol_1q = 0.05;
    noise.depol_2q = 0.05;
    cfg.noise = noise;

    const auto xs = random_samples(4, 2, 9);
    const KernelMatrix a = kernel_matrix(xs, cfg);
    const KernelMatrix b = kernel_matrix(xs, cfg);
    CHECK(std::memcmp(a.entries.data.data(), b.entries.data.data(),
                      a.entries.data.size() * sizeof(double)) == 0);

    KernelConfig clean = cfg;
    clean.noise.reset();
    const KernelMatrix c = kernel_matrix(xs, clean);
    bool any_diff = false;
    for (size_t i = 0; i < c.entries.data.size(); ++i)
        any_diff = any_diff || c.entries.data[i] != a.entries.data[i];
    CHECK(any_diff);
}

TEST_CASE("dd insertion leaves exact kernels unchanged") {
    EncodingSpec spec;
    spec.kind = EncodingKind::Iqp;
    spec.n_qubits = 3;
    for (uint64_t trial = 0; trial < 5; ++trial) {
        const auto x = oracle::random_features(3, 600 + trial);
        const auto z = oracle::random_features(3, 700 + trial);
        const double base = kernel_entry_exact(x, z, spec);
        for (const DdSequence seq : {DdSequence::XX, DdSequence::XYXY, DdSequence::YY}) {
            CHECK(std::abs(kernel_entry_exact(x, z, spec, seq) - base) < 1e-10);
        }
    }
}

TEST_CASE("psd_project clips negative eigenvalues") {
    // Frozen example: eigenpairs (2.2, [1,1]/sqrt2) and (-0.2, [1,-1]/sqrt2);
    // clipping reconstructs the constant matrix 1.1.
    Matrix m(2, 2);
    m.at(0, 0) = 1.0; m.at(0, 1) = 1.2;
    m.at(1, 0) = 1.2; m.at(1, 1) = 1.0;
    KernelMatrix k;
    k.rows = k.cols = 2;
    k.entries = m;
    const KernelMatrix fixed = psd_project(k);
    for (size_t i = 0; i < 2; ++i)
        for (size_t j = 0; j < 2; ++j)
            CHECK(fixed.entries.at(i, j) == doctest::Approx(1.1).epsilon(1e-12));

    // random indefinite matrices: result PSD and equal to the Eigen clip
    SplitMix64 rng(77);
    for (int trial = 0; trial < 5; ++trial) {
        Matrix r(5, 5);
        for (size_t i = 0; i < 5; ++i)
            for (size_t j = i; j < 5; ++j)
                r.at(i, j) = r.at(j, i) = rng.next_double() * 2.0 - 1.0;
        KernelMatrix kk;
        kk.rows = kk.cols = 5;
        kk.entries = r;
        const KernelMatrix got = psd_project(kk);
        CHECK(oracle::min_eigenvalue(got.entries) >= -1e-12);
        const Matrix want = oracle::psd_clip(r);
        for (size_t i = 0; i < 5; ++i)
            for (size_t j = 0; j < 5; ++j)
                CHECK(got.entries.at(i, j) == doctest::Approx(want.at(i, j)).epsilon(1e-9));
    }

    // already PSD: unchanged within tolerance
    Matrix psd(2, 2);
    psd.at(0, 0) = 2.0; psd.at(0, 1) = 0.5;
    psd.at(1, 0) = 0.5; psd.at(1, 1) = 1.0;
    KernelMatrix kp;
    kp.rows = kp.cols = 2;
    kp.entries = psd;
    const KernelMatrix same = psd_project(kp);
    for (size_t i = 0; i < 2; ++i)
        for (size_t j = 0; j < 2; ++j)
            CHECK(same.entries.at(i, j) == doctest::Approx(psd.at(i, j)).epsilon(1e-10));
}

TEST_CASE("kernel persistence round-trips exactly") {
    KernelConfig cfg;
    cfg.encoding.kind = EncodingKind::Iqp;
    cfg.encoding.n_qubits = 2;
    cfg.encoding.iqp_depth = 3;
    cfg.encoding.use_cphase = true;
    cfg.mode = KernelMode::Shots;
    cfg.shots = 123;
    cfg.master_seed = 0xFEEDFACECAFEBEEFULL;  // above 2^63: must survive JSON
    NoiseModel noise;
    noise.coherent_idle_z = 0.01;
    noise.depol_1q = 0.002;
    noise.noisy_dd_pulses = true;
    cfg.noise = noise;
    cfg.dd = DdSequence::XYXY;

    const auto xs = random_samples(3, 2, 14);
    const KernelMatrix k = kernel_matrix(xs, cfg);
    const auto path = temp_path("qki_kernel_rt.csv");
    save_kernel(k, path.string());
    const KernelMatrix back = load_kernel(path.string());

    REQUIRE(back.rows == k.rows);
    REQUIRE(back.cols == k.cols);
    CHECK(std::memcmp(back.entries.data.data(), k.entries.data.data(),
                      k.entries.data.size() * sizeof(double)) == 0);
    CHECK(back.meta.mode == KernelMode::Shots);
    CHECK(back.meta.shots == 123);
    CHECK(back.meta.master_seed == cfg.master_seed);
    CHECK(back.meta.encoding.kind == EncodingKind::Iqp);
    CHECK(back.meta.encoding.iqp_depth == 3);
    CHECK(back.meta.encoding.use_cphase);
    REQUIRE(back.meta.noise.has_value());
    CHECK(*back.meta.noise == noise);
    CHECK(back.meta.dd == DdSequence::XYXY);

    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".meta.json");
}

TEST_CASE("kernel load rejects malformed files") {
    CHECK_THROWS_AS(load_kernel("/nonexistent/k.csv"), io_error);

    const auto path = temp_path("qki_bad_kernel.csv");
    {
        std::ofstream out(path);
        out << "0.5,0.25\n0.125\n";  // ragged
    }
    {
        std::ofstream meta(path.string() + ".meta.json");
        meta << kernel_meta_json(KernelConfig{});
    }
    CHECK_THROWS_AS(load_kernel(path.string()), io_error);
    {
        std::ofstream out(path);
        out << "0.5,zebra\n";
    }
    CHECK_THROWS_AS(load_kernel(path.string()), io_error);
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".meta.json");
}

TEST_CASE("kernel matrix input validation") {
    KernelConfig cfg;
    cfg.encoding.n_qubits = 2;

    CHECK_THROWS_AS(kernel_matrix({}, cfg), std::invalid_argument);
    CHECK_THROWS_AS(kernel_matrix({{0.1}}, cfg), std::invalid_argument);  // wrong length
    CHECK_THROWS_AS(kernel_matrix({{0.1, 0.2}, {0.3}}, cfg), std::invalid_argument);

    KernelConfig huge = cfg;
    huge.encoding.n_qubits = kMaxQubits + 1;
    CHECK_THROWS_AS(kernel_matrix({{0.1, 0.2}}, huge), capacity_error);

    KernelConfig bad_shots = cfg;
    bad_shots.mode = KernelMode::Shots;
    bad_shots.shots = 0;
    CHECK_THROWS_AS(kernel_matrix({{0.1, 0.2}}, bad_shots), std::invalid_argument);
}

TEST_CASE("name parsing round-trips and rejects junk") {
    CHECK(kernel_mode_from_name("exact") == KernelMode::Exact);
    CHECK(kernel_mode_from_name("shots") == KernelMode::Shots);
    CHECK_THROWS_AS(kernel_mode_from_name("approx"), config_error);
    CHECK(encoding_kind_from_name("angle") == EncodingKind::Angle);
    CHECK(encoding_kind_from_name("iqp") == EncodingKind::Iqp);
    CHECK_THROWS_AS(encoding_kind_from_name(""), config_error);
    CHECK(dd_from_name("xyxy") == DdSequence::XYXY);
    CHECK(dd_from_name("XX") == DdSequence::XX);
    CHECK_THROWS_AS(dd_from_name("zz"), config_error);
    CHECK(pairing_from_name("linear") == IqpPairing::LinearChain);
    CHECK(pairing_from_name("all") == IqpPairing::AllPairs);
}
