#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qki/la.hpp"
#include "qki/qkernel.hpp"

namespace qki {

enum class ClassicalKernelKind { Linear, Poly, RBF, Sigmoid };

const char* classical_kernel_name(ClassicalKernelKind kind);
ClassicalKernelKind classical_kernel_from_name(const std::string& name);

struct ClassicalKernelSpec {
    ClassicalKernelKind kind = ClassicalKernelKind::Linear;
    double gamma = 1.0;
    int degree = 3;    // poly only
    double coef0 = 0.0;  // poly, sigmoid
};

double classical_kernel(const std::vector<double>& x, const std::vector<double>& z,
                        const ClassicalKernelSpec& spec);

/// Gram matrix over `a`, or |b| x |a| block with rows over `b`.
Matrix classical_kernel_matrix(const std::vector<std::vector<double>>& a,
                               const ClassicalKernelSpec& spec);
Matrix classical_kernel_matrix(const std::vector<std::vector<double>>& a,
                               const std::vector<std::vector<double>>& b,
                               const ClassicalKernelSpec& spec);

/// 1 / (n_features * variance of all entries); the usual library default.
double scale_gamma(const std::vector<std::vector<double>>& x);

struct SvmModel {
    std::vector<double> alphas;
    std::vector<int> labels;  // training y_i in {-1, +1}
    double bias = 0.0;
    double C = 1.0;
    std::vector<std::size_t> support_indices;  // alpha_i > 1e-8
    std::string kernel_meta_json;   // how the training kernel was produced
    std::string train_features_ref; // path of the training feature matrix
};

struct TrainOptions {
    double C = 1.0;
    double tol = 1e-3;
    int max_passes = 50;  // consecutive clean sweeps before stopping
    // Called with the current dual objective after every accepted pair step.
    std::function<void(double)> on_step;
};

/// Sum alpha_i - 1/2 sum_ij y_i y_j alpha_i alpha_j K_ij.
double dual_objective(const Matrix& k, const std::vector<int>& y,
                      const std::vector<double>& alphas);

/// Simplified SMO, deterministic: the first index sweeps in order, the
/// partner maximizes |E_i - E_j| with lowest-index tie break, falling back
/// to the remaining partners in index order when that pair cannot move.
/// Sweeps continue until no KKT violation above tol survives. The final bias
/// is the mean of y_i - g_i over free support vectors, or the midpoint of
/// the KKT-feasible interval when no vector is free. A one-class label set
/// yields the degenerate model alpha = 0, bias = that label.
SvmModel train_smo(const Matrix& k, const std::vector<int>& y,
                   const TrainOptions& opts = {});
SvmModel train_smo(const KernelMatrix& k, const std::vector<int>& y,
                   const TrainOptions& opts = {});

struct Prediction {
    double decision = 0.0;
    int label = 1;  // sign(decision), with sign(0) = +1
};

/// k_row holds K(x_i, s) for every training index i.
Prediction predict(const SvmModel& model, const std::vector<double>& k_row);

/// One prediction per row of a |test| x |train| kernel block.
std::vector<Prediction> predict_all(const SvmModel& model, const Matrix& k_block);

struct ClassMetrics {
    long tp = 0, fp = 0, tn = 0, fn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

/// Positive class is defect (+1). Macro values are unweighted means over the
/// two classes; every 0/0 ratio is defined as 0.
struct Metrics {
    ClassMetrics defect;  // +1
    ClassMetrics good;    // -1
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double accuracy = 0.0;
    std::size_t n = 0;

    double binary_precision() const { return defect.precision; }
    double binary_recall() const { return defect.recall; }
    double binary_f1() const { return defect.f1; }
};

Metrics evaluate(const std::vector<int>& predictions, const std::vector<int>& truth);

std::string model_to_json(const SvmModel& model);
SvmModel model_from_json(const std::string& text);
void save_model(const SvmModel& model, const std::string& path);
SvmModel load_model(const std::string& path);

}  // namespace qki
