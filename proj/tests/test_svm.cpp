#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "oracles.hpp"
#include "qki/qkernel.hpp"
#include "qki/svm.hpp"

using namespace qki;

namespace {

std::vector<std::vector<double>> random_rows(int count, int d, uint64_t seed) {
    std::vector<std::vector<double>> out;
    for (int i = 0; i < count; ++i)
        out.push_back(oracle::random_features(d, seed * 1000 + uint64_t(i), -1.0, 1.0));
    return out;
}

// Oracle-side bias: mean of y_i - g_i over free support vectors.
// Mean of y_i - g_i over free vectors; with none free the optimum only pins
// b to an interval, so take its midpoint (the documented tie-break).
double oracle_bias(const Matrix& k, const std::vector<int>& y,
                   const std::vector<double>& a, double c) {
    const std::size_t t = y.size();
    std::vector<double> e(t);
    for (std::size_t i = 0; i < t; ++i) {
        double g = 0.0;
        for (std::size_t j = 0; j < t; ++j) g += a[j] * y[j] * k.at(j, i);
        e[i] = y[i] - g;
    }
    double sum = 0.0;
    int n_free = 0;
    for (std::size_t i = 0; i < t; ++i) {
        if (a[i] > 1e-7 && a[i] < c - 1e-7) {
            sum += e[i];
            ++n_free;
        }
    }
    if (n_free > 0) return sum / n_free;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t; ++i) {
        const bool at_zero = a[i] <= 1e-7;
        if ((y[i] == 1 && at_zero) || (y[i] == -1 && !at_zero)) {
            lo = std::max(lo, e[i]);
        } else {
            hi = std::min(hi, e[i]);
        }
    }
    if (std::isinf(lo) && std::isinf(hi)) return 0.0;
    if (std::isinf(lo)) return hi;
    if (std::isinf(hi)) return lo;
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("classical kernel values") {
    const std::vector<double> x = {1.0, 2.0};
    const std::vector<double> z = {3.0, 4.0};

    ClassicalKernelSpec lin{ClassicalKernelKind::Linear, 1.0, 3, 0.0};
    CHECK(classical_kernel(x, z, lin) == doctest::Approx(11.0));

    ClassicalKernelSpec rbf{ClassicalKernelKind::RBF, 0.5, 3, 0.0};
    CHECK(classical_kernel(x, z, rbf) == doctest::Approx(std::exp(-4.0)));  // d2 = 8
    CHECK(classical_kernel(x, x, rbf) == doctest::Approx(1.0));

    ClassicalKernelSpec poly{ClassicalKernelKind::Poly, 1.0, 2, 1.0};
    CHECK(classical_kernel(x, z, poly) == doctest::Approx(144.0));  // (11 + 1)^2

    ClassicalKernelSpec sig{ClassicalKernelKind::Sigmoid, 0.1, 3, -0.5};
    CHECK(classical_kernel(x, z, sig) == doctest::Approx(std::tanh(0.6)));

    ClassicalKernelSpec bad = rbf;
    bad.gamma = 0.0;
    CHECK_THROWS_AS(classical_kernel(x, z, bad), std::invalid_argument);
    CHECK_THROWS_AS(classical_kernel(x, {1.0}, lin), std::invalid_argument);
}

TEST_CASE("scale_gamma uses 1 / (d * population variance)") {
    CHECK(scale_gamma({{0.0, 2.0}, {2.0, 0.0}}) == doctest::Approx(0.5));
    CHECK(scale_gamma({{3.0, 3.0}, {3.0, 3.0}}) == doctest::Approx(1.0));  // constant
    CHECK_THROWS_AS(scale_gamma({}), std::invalid_argument);
}

TEST_CASE("classical kernel matrix shapes and orientation") {
    const auto a = random_rows(3, 2, 1);
    const auto b = random_rows(2, 2, 2);
    ClassicalKernelSpec spec{ClassicalKernelKind::RBF, 1.0, 3, 0.0};

    const Matrix gram = classical_kernel_matrix(a, spec);
    REQUIRE(gram.rows == 3);
    REQUIRE(gram.cols == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(gram.at(i, i) == doctest::Approx(1.0));
        for (std::size_t j = 0; j < 3; ++j) CHECK(gram.at(i, j) == gram.at(j, i));
    }

    const Matrix block = classical_kernel_matrix(a, b, spec);
    REQUIRE(block.rows == 2);  // rows over b
    REQUIRE(block.cols == 3);
    CHECK(block.at(1, 2) == doctest::Approx(classical_kernel(b[1], a[2], spec)));
}

TEST_CASE("two-point worked example") {
    Matrix k(2, 2);
    k.at(0, 0) = 1.0; k.at(0, 1) = -1.0;
    k.at(1, 0) = -1.0; k.at(1, 1) = 1.0;
    const std::vector<int> y = {1, -1};

    TrainOptions opts;
    opts.C = 1.0;
    const SvmModel model = train_smo(k, y, opts);

    REQUIRE(model.alphas.size() == 2);
    CHECK(model.alphas[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(model.alphas[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(model.bias == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(dual_objective(k, y, model.alphas) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(model.support_indices == std::vector<std::size_t>{0, 1});
}

TEST_CASE("one-class training degenerates to a constant model") {
    Matrix k(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) k.at(i, j) = i == j ? 1.0 : 0.3;

    for (const int cls : {1, -1}) {
        const SvmModel model = train_smo(k, {cls, cls, cls});
        for (double a : model.alphas) CHECK(a == 0.0);
        CHECK(model.bias == double(cls));
        CHECK(model.support_indices.empty());
        const Prediction p = predict(model, {0.2, 0.4, 0.9});
        CHECK(p.label == cls);
    }
}

TEST_CASE("smo matches the active-set QP oracle on random problems") {
    int checked_problems = 0;
    for (uint64_t trial = 0; trial < 10; ++trial) {
        const int t = 3 + int(trial % 4);
        const auto rows = random_rows(t, 2, 50 + trial);
        ClassicalKernelSpec spec{ClassicalKernelKind::RBF, 0.7, 3, 0.0};
        const Matrix k = classical_kernel_matrix(rows, spec);

        SplitMix64 rng(900 + trial);
        std::vector<int> y(static_cast<std::size_t>(t));
        for (int& v : y) v = rng.next_below(2) ? 1 : -1;
        bool both = false;
        for (int v : y) both = both || v != y[0];
        if (!both) y[0] = -y[0];

        const double c = 1.5;
        TrainOptions opts;
        opts.C = c;
        opts.tol = 1e-6;
        opts.max_passes = 50;
        const SvmModel model = train_smo(k, y, opts);
        const oracle::QpSolution best = oracle::qp_brute_force(k, y, c);

        CHECK(dual_objective(k, y, model.alphas) ==
              doctest::Approx(best.objective).epsilon(1e-6));

        const double ob = oracle_bias(k, y, best.alphas, c);
        const auto probes = random_rows(20, 2, 777 + trial);
        for (const auto& p : probes) {
            std::vector<double> k_row(static_cast<std::size_t>(t));
            for (int i = 0; i < t; ++i)
                k_row[size_t(i)] = classical_kernel(rows[size_t(i)], p, spec);
            double want = ob;
            for (int i = 0; i < t; ++i)
                want += best.alphas[size_t(i)] * y[size_t(i)] * k_row[size_t(i)];
            const Prediction got = predict(model, k_row);
            CHECK(got.label == (want >= 0 ? 1 : -1));
        }
        ++checked_problems;
    }
    CHECK(checked_problems == 10);
}

TEST_CASE("kkt feasibility holds at convergence") {
    for (uint64_t trial = 0; trial < 5; ++trial) {
        const int t = 8;
        const auto rows = random_rows(t, 3, 200 + trial);
        ClassicalKernelSpec spec{ClassicalKernelKind::RBF, 1.0, 3, 0.0};
        const Matrix k = classical_kernel_matrix(rows, spec);
        SplitMix64 rng(300 + trial);
        std::vector<int> y(static_cast<std::size_t>(t));
        for (int& v : y) v = rng.next_below(2) ? 1 : -1;
        y[0] = 1; y[1] = -1;

        TrainOptions opts;
        opts.C = 2.0;
        opts.tol = 1e-3;
        const SvmModel m = train_smo(k, y, opts);

        for (std::size_t i = 0; i < y.size(); ++i) {
            double f = m.bias;
            for (std::size_t j = 0; j < y.size(); ++j)
                f += m.alphas[j] * y[j] * k.at(j, i);
            const double margin = y[i] * f;
            const double slack = opts.tol + 1e-6;
            if (m.alphas[i] < 1e-8) {
                CHECK(margin >= 1.0 - slack);
            } else if (m.alphas[i] > opts.C - 1e-8) {
                CHECK(margin <= 1.0 + slack);
            } else {
                CHECK(std::abs(margin - 1.0) <= slack);
            }
        }
    }
}

TEST_CASE("dual objective never decreases across accepted steps") {
    const auto rows = random_rows(10, 3, 41);
    ClassicalKernelSpec spec{ClassicalKernelKind::RBF, 0.9, 3, 0.0};
    const Matrix k = classical_kernel_matrix(rows, spec);
    std::vector<int> y = {1, -1, 1, -1, 1, -1, 1, -1, 1, -1};

    std::vector<double> trace;
    TrainOptions opts;
    opts.on_step = [&](double obj) { trace.push_back(obj); };
    train_smo(k, y, opts);

    REQUIRE(trace.size() > 1);
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1] - 1e-12);
}

TEST_CASE("xor needs the nonlinear kernel") {
    const std::vector<std::vector<double>> xs = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    const std::vector<int> y = {-1, 1, 1, -1};
    TrainOptions opts;
    opts.C = 10.0;

    ClassicalKernelSpec rbf{ClassicalKernelKind::RBF, 1.0, 3, 0.0};
    const Matrix k_rbf = classical_kernel_matrix(xs, rbf);
    const SvmModel m_rbf = train_smo(k_rbf, y, opts);
    const auto preds = predict_all(m_rbf, k_rbf);
    int correct = 0;
    for (std::size_t i = 0; i < 4; ++i) correct += preds[i].label == y[i];
    CHECK(correct == 4);

    ClassicalKernelSpec lin{ClassicalKernelKind::Linear, 1.0, 3, 0.0};
    const Matrix k_lin = classical_kernel_matrix(xs, lin);
    const SvmModel m_lin = train_smo(k_lin, y, opts);
    const auto lin_preds = predict_all(m_lin, k_lin);
    int lin_correct = 0;
    for (std::size_t i = 0; i < 4; ++i) lin_correct += lin_preds[i].label == y[i];
    CHECK(lin_correct <= 3);
}

TEST_CASE("prediction tie-break and shape checks") {
    SvmModel empty;
    empty.alphas = {0.0};
    empty.labels = {1};
    empty.bias = 0.0;
    CHECK(predict(empty, {0.7}).label == 1);  // sign(0) -> +1
    CHECK_THROWS_AS(predict(empty, {0.7, 0.1}), std::invalid_argument);
}

TEST_CASE("metrics reproduce the frozen degenerate and arithmetic cases") {
    // Constant +1 predictor on a balanced 18-point set.
    std::vector<int> preds(18, 1), truth(18);
    for (int i = 0; i < 18; ++i) truth[size_t(i)] = i < 9 ? 1 : -1;
    const Metrics m = evaluate(preds, truth);
    CHECK(m.macro_precision == doctest::Approx(0.25));
    CHECK(m.macro_recall == doctest::Approx(0.50));
    CHECK(m.macro_f1 == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(m.accuracy == doctest::Approx(0.5));
    CHECK(m.defect.tp == 9);
    CHECK(m.defect.fp == 9);
    CHECK(m.good.recall == 0.0);
    CHECK(m.good.precision == 0.0);  // 0/0 -> 0

    // tp=3, fp=1, fn=2 for the positive class.
    std::vector<int> p2 = {1, 1, 1, 1, -1, -1, -1};
    std::vector<int> t2 = {1, 1, 1, -1, 1, 1, -1};
    const Metrics m2 = evaluate(p2, t2);
    CHECK(m2.binary_precision() == doctest::Approx(0.75));
    CHECK(m2.binary_recall() == doctest::Approx(0.6));
    CHECK(m2.binary_f1() == doctest::Approx(2.0 / 3.0).epsilon(1e-9));

    const Metrics perfect = evaluate({1, -1}, {1, -1});
    CHECK(perfect.macro_f1 == doctest::Approx(1.0));
    CHECK(perfect.accuracy == doctest::Approx(1.0));

    CHECK_THROWS_AS(evaluate({1}, {1, -1}), std::invalid_argument);
    CHECK_THROWS_AS(evaluate({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(evaluate({0}, {1}), std::invalid_argument);
}

TEST_CASE("model persistence round-trips exactly") {
    const auto rows = random_rows(5, 2, 71);
    ClassicalKernelSpec spec{ClassicalKernelKind::RBF, 0.8, 3, 0.0};
    const Matrix k = classical_kernel_matrix(rows, spec);
    const std::vector<int> y = {1, -1, 1, -1, 1};
    SvmModel model = train_smo(k, y);
    model.kernel_meta_json = R"({"kind":"rbf","gamma":0.8})";
    model.train_features_ref = "features_train.csv";

    const auto path = std::filesystem::temp_directory_path() / "qki_model_rt.json";
    save_model(model, path.string());
    const SvmModel back = load_model(path.string());

    REQUIRE(back.alphas.size() == model.alphas.size());
    for (std::size_t i = 0; i < model.alphas.size(); ++i)
        CHECK(back.alphas[i] == model.alphas[i]);
    CHECK(back.bias == model.bias);
    CHECK(back.labels == model.labels);
    CHECK(back.C == model.C);
    CHECK(back.support_indices == model.support_indices);
    CHECK(back.train_features_ref == model.train_features_ref);
    CHECK_FALSE(back.kernel_meta_json.empty());
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), io_error);
}

TEST_CASE("kernel-matrix overload stamps provenance into the model") {
    KernelConfig cfg;
    cfg.encoding.n_qubits = 2;
    cfg.master_seed = 33;
    std::vector<FeatureVector> xs;
    for (int i = 0; i < 4; ++i) xs.push_back(oracle::random_features(2, 40 + uint64_t(i)));
    const KernelMatrix k = kernel_matrix(xs, cfg);
    const SvmModel model = train_smo(k, {1, -1, 1, -1});
    CHECK(model.kernel_meta_json == kernel_meta_json(cfg));
}

TEST_CASE("training input validation") {
    Matrix k(2, 2);
    k.at(0, 0) = 1.0; k.at(0, 1) = 0.5;
    k.at(1, 0) = 0.4; k.at(1, 1) = 1.0;  // asymmetric
    CHECK_THROWS_AS(train_smo(k, {1, -1}), std::invalid_argument);

    k.at(1, 0) = 0.5;
    CHECK_THROWS_AS(train_smo(k, {1, 0}), std::invalid_argument);   // bad label
    CHECK_THROWS_AS(train_smo(k, {1}), std::invalid_argument);      // size mismatch
    TrainOptions bad;
    bad.C = 0.0;
    CHECK_THROWS_AS(train_smo(k, {1, -1}, bad), std::invalid_argument);
    bad.C = 1.0;
    bad.max_passes = 0;
    CHECK_THROWS_AS(train_smo(k, {1, -1}, bad), std::invalid_argument);

    Matrix rect(2, 3);
    CHECK_THROWS_AS(train_smo(rect, {1, -1}), std::invalid_argument);
}
