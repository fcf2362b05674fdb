#include "qki/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qki/common.hpp"
#include "qki/rng.hpp"

namespace qki {

namespace {

namespace fs = std::filesystem;

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Top-level seed layout, fixed for reproducibility of persisted artifacts:
// corpus <- mix_seed(master, 1); grid cell c <- mix_seed(master, 16 + c),
// then train block <- mix_seed(cell, 0) and test block <- mix_seed(cell, 1).
uint64_t corpus_seed(uint64_t master) { return mix_seed(master, 1); }
uint64_t cell_seed(uint64_t master, std::size_t cell_index, bool test_block) {
    return mix_seed(mix_seed(master, 16 + cell_index), test_block ? 1 : 0);
}

}  // namespace

std::vector<GridCell> grid_cells(const ExperimentConfig& config) {
    std::vector<GridCell> cells;
    std::size_t index = 0;
    for (const EncodingKind kind : config.encoding_kinds) {
        for (const auto& dd : config.dd_axis) {
            for (const KernelMode mode : config.kernel_modes) {
                cells.push_back({kind, dd, mode, index++});
            }
        }
    }
    return cells;
}

std::string cell_slug(const GridCell& cell) {
    std::string s = encoding_kind_name(cell.encoding);
    s += '_';
    s += cell.dd ? lower(dd_name(*cell.dd)) : "nodd";
    s += '_';
    s += kernel_mode_name(cell.mode);
    return s;
}

std::string cell_label(const GridCell& cell) {
    std::string s = encoding_kind_name(cell.encoding);
    if (cell.dd) {
        s += '+';
        s += dd_name(*cell.dd);
    }
    s += ' ';
    s += kernel_mode_name(cell.mode);
    return s;
}

KernelConfig cell_kernel_config(const ExperimentConfig& config, const GridCell& cell,
                                bool test_block) {
    KernelConfig kc;
    kc.encoding.kind = cell.encoding;
    kc.encoding.n_qubits = config.n_qubits;
    kc.encoding.iqp_depth = config.iqp_depth;
    kc.encoding.pairing = config.pairing;
    kc.encoding.use_cphase = config.use_cphase;
    kc.mode = cell.mode;
    kc.shots = config.shots;
    const bool noisy = config.noise.coherent_idle_z != 0.0 || config.noise.depol_1q > 0.0 ||
                       config.noise.depol_2q > 0.0;
    if (cell.mode == KernelMode::Shots && noisy) kc.noise = config.noise;
    kc.dd = cell.dd;
    kc.master_seed = cell_seed(config.master_seed, cell.index, test_block);
    return kc;
}

std::vector<ImageSample> load_or_generate_images(const ExperimentConfig& config) {
    if (config.synthetic) {
        return generate_synthetic_corpus(config.synthetic->n, config.synthetic->defect_rate,
                                         corpus_seed(config.master_seed));
    }
    std::vector<ImageSample> images;
    for (const ManifestEntry& e : read_manifest(*config.manifest)) {
        ImageSample img = read_image(e.path);
        img.label = e.label;
        img.source_id = e.path;
        images.push_back(std::move(img));
    }
    return images;
}

PreparedData prepare_features(const ExperimentConfig& config,
                              const std::vector<ImageSample>& images) {
    const std::size_t n = images.size();
    if (n < 2) throw std::invalid_argument("need at least 2 images");

    Matrix flat;
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const ImageSample small = resize_28(to_grayscale(images[i]));
        const std::vector<double> row = flatten_pixels(small);
        if (i == 0) flat = Matrix(n, row.size());
        std::copy(row.begin(), row.end(), flat.data.begin() + i * flat.cols);
        labels[i] = images[i].label;
    }

    PreparedData data;
    data.split = split(labels, config.train_frac, config.split_seed);

    Matrix train_raw(data.split.train.size(), flat.cols);
    Matrix test_raw(data.split.test.size(), flat.cols);
    for (std::size_t i = 0; i < data.split.train.size(); ++i) {
        const std::size_t src = data.split.train[i];
        std::copy_n(flat.data.begin() + src * flat.cols, flat.cols,
                    train_raw.data.begin() + i * flat.cols);
        data.train_labels.push_back(labels[src]);
    }
    for (std::size_t i = 0; i < data.split.test.size(); ++i) {
        const std::size_t src = data.split.test[i];
        std::copy_n(flat.data.begin() + src * flat.cols, flat.cols,
                    test_raw.data.begin() + i * flat.cols);
        data.test_labels.push_back(labels[src]);
    }

    data.pca = pca_fit(train_raw, static_cast<std::size_t>(config.n_qubits));
    const Matrix train_pca = pca_transform(data.pca, train_raw);
    const Matrix test_pca = pca_transform(data.pca, test_raw);
    auto [scaler, train_scaled] = scale_fit_transform(train_pca);
    data.scaler = scaler;
    data.train_features = train_scaled;
    data.test_features = scale_apply(scaler, test_pca);
    return data;
}

void save_predictions(const std::vector<Prediction>& preds, const std::vector<int>& truth,
                      const DatasetSplit& split, const std::string& path) {
    if (preds.size() != truth.size() || preds.size() != split.test.size()) {
        throw std::invalid_argument("predictions, truth, and split sizes disagree");
    }
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << "test_index,decision,predicted,truth\n";
    for (std::size_t i = 0; i < preds.size(); ++i) {
        out << split.test[i] << ',' << fmt_g17(preds[i].decision) << ','
            << label_name(preds[i].label) << ',' << label_name(truth[i]) << '\n';
    }
    if (!out.good()) throw io_error("write to '" + path + "' failed");
}

PredictionFile load_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw io_error(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "test_index,decision,predicted,truth") {
        throw io_error(path + ": unexpected header '" + line + "'");
    }
    PredictionFile out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (std::size_t pos = line.find(','); pos != std::string::npos;
             pos = line.find(',', start)) {
            cells.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        cells.push_back(line.substr(start));
        if (cells.size() != 4) throw io_error(path + ": malformed row '" + line + "'");
        try {
            out.test_index.push_back(std::stoull(cells[0]));
            Prediction p;
            p.decision = std::stod(cells[1]);
            p.label = label_from_name(cells[2]);
            out.preds.push_back(p);
            out.truth.push_back(label_from_name(cells[3]));
        } catch (const std::exception&) {
            throw io_error(path + ": malformed row '" + line + "'");
        }
    }
    return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    // Capacity check before any rendering or simulation.
    if (config.n_qubits > kMaxQubits) {
        throw capacity_error("n_qubits " + std::to_string(config.n_qubits) +
                             " exceeds simulator capacity " + std::to_string(kMaxQubits));
    }
    const auto t_start = std::chrono::steady_clock::now();
    const fs::path out_dir(config.out_dir);
    fs::create_directories(out_dir);

    ExperimentReport report;
    report.version = kVersion;
    report.config_fingerprint = config_hash(config);
    report.config_text = serialize_config(config);
    report.master_seed = config.master_seed;
    report.split_seed = config.split_seed;

    {
        std::ofstream cfg_out(out_dir / "config.txt");
        cfg_out << report.config_text;
    }

    const std::vector<ImageSample> images = load_or_generate_images(config);
    PreparedData data = prepare_features(config, images);
    report.n_total = images.size();
    report.n_train = data.split.train.size();
    report.n_test = data.split.test.size();

    save_split(data.split, (out_dir / "split.json").string());
    save_pca(data.pca, (out_dir / "pca.json").string());
    save_scaler(data.scaler, (out_dir / "scaler.json").string());
    save_features(data.train_features, data.train_labels,
                  (out_dir / "features_train.csv").string());
    save_features(data.test_features, data.test_labels,
                  (out_dir / "features_test.csv").string());

    const auto train_rows = matrix_rows(data.train_features);
    const auto test_rows = matrix_rows(data.test_features);

    TrainOptions opts;
    opts.C = config.svm_C;
    opts.tol = config.svm_tol;
    opts.max_passes = config.svm_max_passes;

    for (const GridCell& cell : grid_cells(config)) {
        const std::string slug = cell_slug(cell);
        const KernelConfig kc_train = cell_kernel_config(config, cell, false);
        const KernelConfig kc_test = cell_kernel_config(config, cell, true);

        const auto t_kernel = std::chrono::steady_clock::now();
        KernelMatrix k_train = kernel_matrix(train_rows, kc_train);
        const KernelMatrix k_test = kernel_matrix(train_rows, test_rows, kc_test);
        const double kernel_seconds = seconds_since(t_kernel);

        const bool want_psd = config.psd_repair == PsdRepair::On ||
                              (config.psd_repair == PsdRepair::Auto &&
                               (cell.mode == KernelMode::Shots || kc_train.noise.has_value()));
        save_kernel(k_train, (out_dir / ("K_train_" + slug + ".csv")).string());
        save_kernel(k_test, (out_dir / ("K_test_" + slug + ".csv")).string());
        if (want_psd) k_train = psd_project(k_train);

        const auto t_svm = std::chrono::steady_clock::now();
        SvmModel model = train_smo(k_train, data.train_labels, opts);
        const double svm_seconds = seconds_since(t_svm);
        model.train_features_ref = "features_train.csv";
        save_model(model, (out_dir / ("model_" + slug + ".json")).string());

        const std::vector<Prediction> preds = predict_all(model, k_test.entries);
        save_predictions(preds, data.test_labels, data.split,
                         (out_dir / ("predictions_" + slug + ".csv")).string());
        std::vector<int> pred_labels(preds.size());
        std::transform(preds.begin(), preds.end(), pred_labels.begin(),
                       [](const Prediction& p) { return p.label; });

        RunResult r;
        r.name = slug;
        r.encoding = cell.encoding;
        r.dd = cell.dd;
        r.mode = cell.mode;
        r.psd_applied = want_psd;
        r.metrics = evaluate(pred_labels, data.test_labels);
        r.kernel_seconds = kernel_seconds;
        r.svm_seconds = svm_seconds;
        report.results.push_back(std::move(r));
    }

    if (!config.baselines.empty()) {
        const double gamma = config.baseline_gamma ? *config.baseline_gamma
                                                   : scale_gamma(train_rows);
        for (const ClassicalKernelKind kind : config.baselines) {
            ClassicalKernelSpec spec;
            spec.kind = kind;
            spec.gamma = gamma;
            spec.degree = config.baseline_degree;
            spec.coef0 = config.baseline_coef0;

            const auto t_svm = std::chrono::steady_clock::now();
            const Matrix k_train = classical_kernel_matrix(train_rows, spec);
            const Matrix k_test = classical_kernel_matrix(train_rows, test_rows, spec);
            SvmModel model = train_smo(k_train, data.train_labels, opts);
            const std::vector<Prediction> preds = predict_all(model, k_test);
            const double svm_seconds = seconds_since(t_svm);

            std::vector<int> pred_labels(preds.size());
            std::transform(preds.begin(), preds.end(), pred_labels.begin(),
                           [](const Prediction& p) { return p.label; });

            BaselineResult b;
            b.name = std::string("classical_") + classical_kernel_name(kind);
            b.kind = kind;
            b.gamma = gamma;
            b.degree = spec.degree;
            b.coef0 = spec.coef0;
            b.metrics = evaluate(pred_labels, data.test_labels);
            b.svm_seconds = svm_seconds;
            report.baselines.push_back(std::move(b));
        }
    }

    report.total_seconds = seconds_since(t_start);
    save_report(report, (out_dir / "report.json").string());
    return report;
}

namespace {

nlohmann::json metrics_to_json(const Metrics& m) {
    const auto cls = [](const ClassMetrics& c) {
        return nlohmann::json{{"tp", c.tp},       {"fp", c.fp},
                              {"tn", c.tn},       {"fn", c.fn},
                              {"precision", c.precision}, {"recall", c.recall},
                              {"f1", c.f1}};
    };
    return {{"defect", cls(m.defect)},
            {"good", cls(m.good)},
            {"macro_precision", m.macro_precision},
            {"macro_recall", m.macro_recall},
            {"macro_f1", m.macro_f1},
            {"accuracy", m.accuracy},
            {"n", m.n}};
}

Metrics metrics_from_json(const nlohmann::json& j) {
    const auto cls = [](const nlohmann::json& c) {
        ClassMetrics m;
        m.tp = c.at("tp").get<long>();
        m.fp = c.at("fp").get<long>();
        m.tn = c.at("tn").get<long>();
        m.fn = c.at("fn").get<long>();
        m.precision = c.at("precision").get<double>();
        m.recall = c.at("recall").get<double>();
        m.f1 = c.at("f1").get<double>();
        return m;
    };
    Metrics m;
    m.defect = cls(j.at("defect"));
    m.good = cls(j.at("good"));
    m.macro_precision = j.at("macro_precision").get<double>();
    m.macro_recall = j.at("macro_recall").get<double>();
    m.macro_f1 = j.at("macro_f1").get<double>();
    m.accuracy = j.at("accuracy").get<double>();
    m.n = j.at("n").get<std::size_t>();
    return m;
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
    nlohmann::json j;
    j["version"] = report.version;
    j["config_fingerprint"] = report.config_fingerprint;
    j["config_text"] = report.config_text;
    j["master_seed"] = report.master_seed;
    j["split_seed"] = report.split_seed;
    j["n_total"] = report.n_total;
    j["n_train"] = report.n_train;
    j["n_test"] = report.n_test;
    j["results"] = nlohmann::json::array();
    for (const RunResult& r : report.results) {
        j["results"].push_back(
            {{"name", r.name},
             {"encoding", encoding_kind_name(r.encoding)},
             {"dd", r.dd ? nlohmann::json(dd_name(*r.dd)) : nlohmann::json(nullptr)},
             {"mode", kernel_mode_name(r.mode)},
             {"psd_applied", r.psd_applied},
             {"metrics", metrics_to_json(r.metrics)},
             {"kernel_seconds", r.kernel_seconds},
             {"svm_seconds", r.svm_seconds}});
    }
    j["baselines"] = nlohmann::json::array();
    for (const BaselineResult& b : report.baselines) {
        j["baselines"].push_back({{"name", b.name},
                                  {"kind", classical_kernel_name(b.kind)},
                                  {"gamma", b.gamma},
                                  {"degree", b.degree},
                                  {"coef0", b.coef0},
                                  {"metrics", metrics_to_json(b.metrics)},
                                  {"svm_seconds", b.svm_seconds}});
    }
    j["total_seconds"] = report.total_seconds;
    return j.dump(2) + "\n";
}

ExperimentReport report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string("report is not valid JSON: ") + e.what());
    }
    ExperimentReport report;
    try {
        report.version = j.at("version").get<std::string>();
        report.config_fingerprint = j.at("config_fingerprint").get<uint64_t>();
        report.config_text = j.at("config_text").get<std::string>();
        report.master_seed = j.at("master_seed").get<uint64_t>();
        report.split_seed = j.at("split_seed").get<uint64_t>();
        report.n_total = j.at("n_total").get<std::size_t>();
        report.n_train = j.at("n_train").get<std::size_t>();
        report.n_test = j.at("n_test").get<std::size_t>();
        for (const auto& r : j.at("results")) {
            RunResult res;
            res.name = r.at("name").get<std::string>();
            res.encoding = encoding_kind_from_name(r.at("encoding").get<std::string>());
            if (!r.at("dd").is_null()) res.dd = dd_from_name(r.at("dd").get<std::string>());
            res.mode = kernel_mode_from_name(r.at("mode").get<std::string>());
            res.psd_applied = r.at("psd_applied").get<bool>();
            res.metrics = metrics_from_json(r.at("metrics"));
            res.kernel_seconds = r.at("kernel_seconds").get<double>();
            res.svm_seconds = r.at("svm_seconds").get<double>();
            report.results.push_back(std::move(res));
        }
        for (const auto& b : j.at("baselines")) {
            BaselineResult base;
            base.name = b.at("name").get<std::string>();
            base.kind = classical_kernel_from_name(b.at("kind").get<std::string>());
            base.gamma = b.at("gamma").get<double>();
            base.degree = b.at("degree").get<int>();
            base.coef0 = b.at("coef0").get<double>();
            base.metrics = metrics_from_json(b.at("metrics"));
            base.svm_seconds = b.at("svm_seconds").get<double>();
            report.baselines.push_back(std::move(base));
        }
        report.total_seconds = j.at("total_seconds").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string("report missing or mistyped field: ") + e.what());
    }
    return report;
}

void save_report(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << report_to_json(report);
    if (!out.good()) throw io_error("write to '" + path + "' failed");
}

ExperimentReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return report_from_json(buf.str());
}

void emit_report_csv(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << "name,type,encoding,dd,mode,psd,accuracy,macro_precision,macro_recall,macro_f1,"
           "binary_precision,binary_recall,binary_f1,tp,fp,tn,fn,kernel_seconds,svm_seconds\n";
    const auto metric_cells = [&](const Metrics& m) {
        out << fmt_g17(m.accuracy) << ',' << fmt_g17(m.macro_precision) << ','
            << fmt_g17(m.macro_recall) << ',' << fmt_g17(m.macro_f1) << ','
            << fmt_g17(m.binary_precision()) << ',' << fmt_g17(m.binary_recall()) << ','
            << fmt_g17(m.binary_f1()) << ',' << m.defect.tp << ',' << m.defect.fp << ','
            << m.defect.tn << ',' << m.defect.fn;
    };
    for (const RunResult& r : report.results) {
        out << r.name << ",quantum," << encoding_kind_name(r.encoding) << ','
            << (r.dd ? dd_name(*r.dd) : "none") << ',' << kernel_mode_name(r.mode) << ','
            << (r.psd_applied ? "true" : "false") << ',';
        metric_cells(r.metrics);
        out << ',' << fmt_g17(r.kernel_seconds) << ',' << fmt_g17(r.svm_seconds) << '\n';
    }
    for (const BaselineResult& b : report.baselines) {
        out << b.name << ",classical,,,,false,";
        metric_cells(b.metrics);
        out << ",0," << fmt_g17(b.svm_seconds) << '\n';
    }
    if (!out.good()) throw io_error("write to '" + path + "' failed");
}

namespace {

std::string fmt_metric(double v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

void markdown_table(std::ofstream& out, const std::vector<std::string>& headers,
                    const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
    out << "| Metric |";
    for (const auto& h : headers) out << ' ' << h << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < headers.size(); ++i) out << "---|";
    out << '\n';
    for (const auto& [name, values] : rows) {
        out << "| " << name << " |";
        for (const double v : values) out << ' ' << fmt_metric(v) << " |";
        out << '\n';
    }
}

}  // namespace

void emit_report_markdown(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << "# Defect classification results\n\n";
    out << "N=" << report.n_total << ", train=" << report.n_train
        << ", test=" << report.n_test << ". Macro-averaged metrics; positive class is"
        << " defect.\n\n";

    const auto label_of = [](const RunResult& r) {
        GridCell cell{r.encoding, r.dd, r.mode, 0};
        return cell_label(cell);
    };

    if (!report.results.empty()) {
        out << "## Kernel runs\n\n";
        std::vector<std::string> headers;
        std::vector<std::pair<std::string, std::vector<double>>> rows = {
            {"Precision", {}}, {"Recall", {}}, {"F1-score", {}},
            {"Accuracy", {}},  {"Kernel time (s)", {}}, {"SVM time (s)", {}}};
        for (const RunResult& r : report.results) {
            headers.push_back(label_of(r));
            rows[0].second.push_back(r.metrics.macro_precision);
            rows[1].second.push_back(r.metrics.macro_recall);
            rows[2].second.push_back(r.metrics.macro_f1);
            rows[3].second.push_back(r.metrics.accuracy);
            rows[4].second.push_back(r.kernel_seconds);
            rows[5].second.push_back(r.svm_seconds);
        }
        markdown_table(out, headers, rows);
        out << '\n';
    }

    out << "## Method comparison\n\n";
    {
        std::vector<std::string> headers;
        std::vector<std::pair<std::string, std::vector<double>>> rows = {
            {"Precision", {}}, {"Recall", {}}, {"F1-score", {}}, {"Accuracy", {}}};
        for (const RunResult& r : report.results) {
            headers.push_back(label_of(r));
            rows[0].second.push_back(r.metrics.macro_precision);
            rows[1].second.push_back(r.metrics.macro_recall);
            rows[2].second.push_back(r.metrics.macro_f1);
            rows[3].second.push_back(r.metrics.accuracy);
        }
        for (const BaselineResult& b : report.baselines) {
            std::string h = classical_kernel_name(b.kind);
            h[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(h[0])));
            if (b.kind == ClassicalKernelKind::RBF) h = "RBF";
            headers.push_back(h);
            rows[0].second.push_back(b.metrics.macro_precision);
            rows[1].second.push_back(b.metrics.macro_recall);
            rows[2].second.push_back(b.metrics.macro_f1);
            rows[3].second.push_back(b.metrics.accuracy);
        }
        markdown_table(out, headers, rows);
    }
    if (!out.good()) throw io_error("write to '" + path + "' failed");
}

}  // namespace qki
