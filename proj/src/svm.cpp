#include "qki/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "qki/common.hpp"

namespace qki {

const char* classical_kernel_name(ClassicalKernelKind kind) {
    switch (kind) {
        case ClassicalKernelKind::Linear: return "linear";
        case ClassicalKernelKind::Poly: return "poly";
        case ClassicalKernelKind::RBF: return "rbf";
        case ClassicalKernelKind::Sigmoid: return "sigmoid";
    }
    return "?";
}

ClassicalKernelKind classical_kernel_from_name(const std::string& name) {
    if (name == "linear") return ClassicalKernelKind::Linear;
    if (name == "poly") return ClassicalKernelKind::Poly;
    if (name == "rbf") return ClassicalKernelKind::RBF;
    if (name == "sigmoid") return ClassicalKernelKind::Sigmoid;
    throw config_error("unknown classical kernel '" + name +
                       "' (expected linear, poly, rbf, or sigmoid)");
}

double classical_kernel(const std::vector<double>& x, const std::vector<double>& z,
                        const ClassicalKernelSpec& spec) {
    if (x.size() != z.size()) {
        throw std::invalid_argument("classical kernel requires equal-length vectors");
    }
    switch (spec.kind) {
        case ClassicalKernelKind::Linear: {
            double dot = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * z[i];
            return dot;
        }
        case ClassicalKernelKind::Poly: {
            double dot = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * z[i];
            return std::pow(spec.gamma * dot + spec.coef0, spec.degree);
        }
        case ClassicalKernelKind::RBF: {
            if (!(spec.gamma > 0.0)) throw std::invalid_argument("rbf gamma must be > 0");
            double d2 = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double d = x[i] - z[i];
                d2 += d * d;
            }
            return std::exp(-spec.gamma * d2);
        }
        case ClassicalKernelKind::Sigmoid: {
            double dot = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * z[i];
            return std::tanh(spec.gamma * dot + spec.coef0);
        }
    }
    throw std::invalid_argument("unhandled classical kernel kind");
}

Matrix classical_kernel_matrix(const std::vector<std::vector<double>>& a,
                               const ClassicalKernelSpec& spec) {
    Matrix out(a.size(), a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i; j < a.size(); ++j) {
            const double v = classical_kernel(a[i], a[j], spec);
            out.at(i, j) = v;
            out.at(j, i) = v;
        }
    }
    return out;
}

Matrix classical_kernel_matrix(const std::vector<std::vector<double>>& a,
                               const std::vector<std::vector<double>>& b,
                               const ClassicalKernelSpec& spec) {
    Matrix out(b.size(), a.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        for (std::size_t j = 0; j < a.size(); ++j) {
            out.at(i, j) = classical_kernel(b[i], a[j], spec);
        }
    }
    return out;
}

double scale_gamma(const std::vector<std::vector<double>>& x) {
    if (x.empty() || x.front().empty()) {
        throw std::invalid_argument("scale_gamma requires a nonempty feature matrix");
    }
    const std::size_t d = x.front().size();
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (const auto& row : x) {
        if (row.size() != d) throw std::invalid_argument("ragged feature matrix");
        for (double v : row) {
            sum += v;
            sq += v * v;
            ++count;
        }
    }
    const double mean = sum / static_cast<double>(count);
    const double var = sq / static_cast<double>(count) - mean * mean;
    if (var <= 0.0) return 1.0;  // constant features: any gamma works the same
    return 1.0 / (static_cast<double>(d) * var);
}

double dual_objective(const Matrix& k, const std::vector<int>& y,
                      const std::vector<double>& alphas) {
    const std::size_t t = y.size();
    double obj = 0.0;
    for (std::size_t i = 0; i < t; ++i) obj += alphas[i];
    for (std::size_t i = 0; i < t; ++i) {
        if (alphas[i] == 0.0) continue;
        for (std::size_t j = 0; j < t; ++j) {
            obj -= 0.5 * y[i] * y[j] * alphas[i] * alphas[j] * k.at(i, j);
        }
    }
    return obj;
}

namespace {

constexpr double kSupportThreshold = 1e-8;

void check_training_inputs(const Matrix& k, const std::vector<int>& y,
                           const TrainOptions& opts) {
    if (k.rows != k.cols) throw std::invalid_argument("training kernel must be square");
    if (k.rows != y.size()) {
        throw std::invalid_argument("kernel size does not match label count");
    }
    if (y.empty()) throw std::invalid_argument("training set is empty");
    for (int v : y) {
        if (v != 1 && v != -1) throw std::invalid_argument("labels must be +1 or -1");
    }
    for (std::size_t i = 0; i < k.rows; ++i) {
        for (std::size_t j = i + 1; j < k.cols; ++j) {
            if (std::abs(k.at(i, j) - k.at(j, i)) > 1e-8) {
                throw std::invalid_argument("training kernel is not symmetric");
            }
        }
    }
    if (!(opts.C > 0.0)) throw std::invalid_argument("C must be > 0");
    if (!(opts.tol > 0.0)) throw std::invalid_argument("tol must be > 0");
    if (opts.max_passes < 1) throw std::invalid_argument("max_passes must be >= 1");
}

}  // namespace

SvmModel train_smo(const Matrix& k, const std::vector<int>& y, const TrainOptions& opts) {
    check_training_inputs(k, y, opts);
    const std::size_t t = y.size();

    SvmModel model;
    model.labels = y;
    model.C = opts.C;
    model.alphas.assign(t, 0.0);

    const bool any_pos = std::count(y.begin(), y.end(), 1) > 0;
    const bool any_neg = std::count(y.begin(), y.end(), -1) > 0;
    if (!any_pos || !any_neg) {
        // One-class data: the equality constraint pins every alpha at 0 and
        // the decision reduces to the constant bias.
        model.bias = any_pos ? 1.0 : -1.0;
        return model;
    }

    std::vector<double>& a = model.alphas;
    double b = 0.0;
    const double C = opts.C;

    const auto decision = [&](std::size_t i) {
        double f = b;
        for (std::size_t j = 0; j < t; ++j) {
            if (a[j] != 0.0) f += a[j] * y[j] * k.at(j, i);
        }
        return f;
    };

    // Attempt one pairwise step on (i, j). Accepted steps maximize the
    // two-variable subproblem along the equality constraint, so the dual
    // objective never decreases.
    const auto try_step = [&](std::size_t i, std::size_t j, double ei, double ej) {
        const double ai_old = a[i], aj_old = a[j];
        double lo, hi;
        if (y[i] != y[j]) {
            lo = std::max(0.0, aj_old - ai_old);
            hi = std::min(C, C + aj_old - ai_old);
        } else {
            lo = std::max(0.0, ai_old + aj_old - C);
            hi = std::min(C, ai_old + aj_old);
        }
        if (lo >= hi) return false;

        const double eta = 2.0 * k.at(i, j) - k.at(i, i) - k.at(j, j);
        if (eta >= 0.0) return false;

        double aj_new = aj_old - y[j] * (ei - ej) / eta;
        aj_new = std::clamp(aj_new, lo, hi);
        if (std::abs(aj_new - aj_old) < 1e-5) return false;
        const double ai_new = ai_old + y[i] * y[j] * (aj_old - aj_new);

        const double b1 = b - ei - y[i] * (ai_new - ai_old) * k.at(i, i) -
                          y[j] * (aj_new - aj_old) * k.at(i, j);
        const double b2 = b - ej - y[i] * (ai_new - ai_old) * k.at(i, j) -
                          y[j] * (aj_new - aj_old) * k.at(j, j);
        a[i] = ai_new;
        a[j] = aj_new;
        if (ai_new > 0.0 && ai_new < C) {
            b = b1;
        } else if (aj_new > 0.0 && aj_new < C) {
            b = b2;
        } else {
            b = 0.5 * (b1 + b2);
        }
        if (opts.on_step) opts.on_step(dual_objective(k, y, a));
        return true;
    };

    int clean_sweeps = 0;
    // Hard cap guarantees termination even if float noise keeps toggling a
    // pair; never reached on real problems.
    const long max_total_sweeps = 100000;
    for (long sweep = 0; sweep < max_total_sweeps && clean_sweeps < opts.max_passes; ++sweep) {
        int changed = 0;
        int violating = 0;
        for (std::size_t i = 0; i < t; ++i) {
            const double ei = decision(i) - y[i];
            const double r = y[i] * ei;
            if (!((r < -opts.tol && a[i] < C) || (r > opts.tol && a[i] > 0.0))) continue;
            ++violating;

            std::vector<double> err(t, 0.0);
            for (std::size_t cand = 0; cand < t; ++cand) {
                if (cand != i) err[cand] = decision(cand) - y[cand];
            }

            // Second-choice heuristic: largest |E_i - E_j| moves the pair
            // the furthest; lowest index wins ties so retraining reproduces
            // the model. When that pair cannot move (empty box segment,
            // eta >= 0, or a sub-threshold step) the remaining partners are
            // tried in index order; a violating pair always leaves some
            // productive partner until KKT holds within tol.
            std::size_t first = t;
            double best = -1.0;
            for (std::size_t cand = 0; cand < t; ++cand) {
                if (cand == i) continue;
                const double gap = std::abs(ei - err[cand]);
                if (gap > best) {
                    best = gap;
                    first = cand;
                }
            }
            if (first == t) continue;
            bool stepped = try_step(i, first, ei, err[first]);
            for (std::size_t cand = 0; !stepped && cand < t; ++cand) {
                if (cand == i || cand == first) continue;
                stepped = try_step(i, cand, ei, err[cand]);
            }
            if (stepped) ++changed;
        }
        if (violating == 0) {
            ++clean_sweeps;
        } else {
            clean_sweeps = 0;
            // No pair can move and the state cannot change again: every
            // later sweep would be identical, so looping on is pointless.
            if (changed == 0) break;
        }
    }

    // Final bias from the converged alphas, independent of the running value.
    std::vector<double> g(t, 0.0);
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t j = 0; j < t; ++j) {
            if (a[j] != 0.0) g[i] += a[j] * y[j] * k.at(j, i);
        }
    }
    double bias_sum = 0.0;
    int free_count = 0;
    for (std::size_t i = 0; i < t; ++i) {
        if (a[i] > kSupportThreshold && a[i] < C - kSupportThreshold) {
            bias_sum += y[i] - g[i];
            ++free_count;
        }
    }
    if (free_count > 0) {
        model.bias = bias_sum / free_count;
    } else {
        // KKT interval: b must keep alpha=0 points outside the margin and
        // alpha=C points inside it. e_i = y_i - g_i.
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < t; ++i) {
            const double e = y[i] - g[i];
            const bool at_zero = a[i] <= kSupportThreshold;
            if ((y[i] == 1 && at_zero) || (y[i] == -1 && !at_zero)) {
                lo = std::max(lo, e);
            } else {
                hi = std::min(hi, e);
            }
        }
        if (std::isinf(lo) && std::isinf(hi)) {
            model.bias = 0.0;
        } else if (std::isinf(lo)) {
            model.bias = hi;
        } else if (std::isinf(hi)) {
            model.bias = lo;
        } else {
            model.bias = 0.5 * (lo + hi);
        }
    }

    for (std::size_t i = 0; i < t; ++i) {
        if (a[i] > kSupportThreshold) model.support_indices.push_back(i);
    }
    return model;
}

SvmModel train_smo(const KernelMatrix& k, const std::vector<int>& y,
                   const TrainOptions& opts) {
    SvmModel model = train_smo(k.entries, y, opts);
    model.kernel_meta_json = kernel_meta_json(k.meta);
    return model;
}

Prediction predict(const SvmModel& model, const std::vector<double>& k_row) {
    if (k_row.size() != model.alphas.size()) {
        throw std::invalid_argument("kernel row length does not match training size");
    }
    double f = model.bias;
    for (std::size_t i = 0; i < k_row.size(); ++i) {
        if (model.alphas[i] != 0.0) f += model.alphas[i] * model.labels[i] * k_row[i];
    }
    return {f, f >= 0.0 ? 1 : -1};
}

std::vector<Prediction> predict_all(const SvmModel& model, const Matrix& k_block) {
    if (k_block.cols != model.alphas.size()) {
        throw std::invalid_argument("kernel block width does not match training size");
    }
    std::vector<Prediction> out;
    out.reserve(k_block.rows);
    std::vector<double> row(k_block.cols);
    for (std::size_t i = 0; i < k_block.rows; ++i) {
        for (std::size_t j = 0; j < k_block.cols; ++j) row[j] = k_block.at(i, j);
        out.push_back(predict(model, row));
    }
    return out;
}

namespace {

double ratio_or_zero(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

ClassMetrics class_metrics(const std::vector<int>& pred, const std::vector<int>& truth,
                           int positive) {
    ClassMetrics m;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] == positive;
        const bool t = truth[i] == positive;
        if (p && t) ++m.tp;
        else if (p && !t) ++m.fp;
        else if (!p && t) ++m.fn;
        else ++m.tn;
    }
    m.precision = ratio_or_zero(static_cast<double>(m.tp), static_cast<double>(m.tp + m.fp));
    m.recall = ratio_or_zero(static_cast<double>(m.tp), static_cast<double>(m.tp + m.fn));
    m.f1 = ratio_or_zero(2.0 * m.precision * m.recall, m.precision + m.recall);
    return m;
}

}  // namespace

Metrics evaluate(const std::vector<int>& predictions, const std::vector<int>& truth) {
    if (predictions.empty()) throw std::invalid_argument("evaluate requires at least one sample");
    if (predictions.size() != truth.size()) {
        throw std::invalid_argument("prediction and truth lengths differ");
    }
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if ((predictions[i] != 1 && predictions[i] != -1) ||
            (truth[i] != 1 && truth[i] != -1)) {
            throw std::invalid_argument("labels must be +1 or -1");
        }
    }
    Metrics out;
    out.n = predictions.size();
    out.defect = class_metrics(predictions, truth, 1);
    out.good = class_metrics(predictions, truth, -1);
    out.macro_precision = 0.5 * (out.defect.precision + out.good.precision);
    out.macro_recall = 0.5 * (out.defect.recall + out.good.recall);
    out.macro_f1 = 0.5 * (out.defect.f1 + out.good.f1);
    long correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == truth[i]) ++correct;
    }
    out.accuracy = static_cast<double>(correct) / static_cast<double>(out.n);
    return out;
}

std::string model_to_json(const SvmModel& model) {
    nlohmann::json j;
    j["alphas"] = model.alphas;
    j["labels"] = model.labels;
    j["bias"] = model.bias;
    j["C"] = model.C;
    j["support_indices"] = model.support_indices;
    if (model.kernel_meta_json.empty()) {
        j["kernel"] = nullptr;
    } else {
        try {
            j["kernel"] = nlohmann::json::parse(model.kernel_meta_json);
        } catch (const nlohmann::json::exception&) {
            j["kernel"] = model.kernel_meta_json;  // keep opaque if not JSON
        }
    }
    j["train_features"] = model.train_features_ref;
    return j.dump(2) + "\n";
}

SvmModel model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string("model file is not valid JSON: ") + e.what());
    }
    SvmModel model;
    try {
        model.alphas = j.at("alphas").get<std::vector<double>>();
        model.labels = j.at("labels").get<std::vector<int>>();
        model.bias = j.at("bias").get<double>();
        model.C = j.at("C").get<double>();
        model.support_indices = j.at("support_indices").get<std::vector<std::size_t>>();
        if (!j.at("kernel").is_null()) {
            model.kernel_meta_json =
                j.at("kernel").is_string() ? j.at("kernel").get<std::string>()
                                           : j.at("kernel").dump(2) + "\n";
        }
        model.train_features_ref = j.at("train_features").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string("model file missing or mistyped field: ") + e.what());
    }
    if (model.alphas.size() != model.labels.size()) {
        throw io_error("model alphas and labels lengths differ");
    }
    return model;
}

void save_model(const SvmModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << model_to_json(model);
    if (!out.good()) throw io_error("write to '" + path + "' failed");
}

SvmModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

}  // namespace qki
