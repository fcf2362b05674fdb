#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "qki/common.hpp"
#include "qki/config.hpp"
#include "qki/pipeline.hpp"
#include "qki/qkernel.hpp"
#include "qki/runner.hpp"
#include "qki/svm.hpp"

namespace fs = std::filesystem;
using namespace qki;

namespace {

struct GlobalFlags {
    std::string config_path;
    int threads = 0;          // 0 = leave runtime default (all cores)
    std::string out;          // overrides config out_dir
    std::optional<uint64_t> seed;  // overrides config master seed
};

ExperimentConfig effective_config(const GlobalFlags& g) {
    if (g.config_path.empty()) throw config_error("--config is required");
    ExperimentConfig cfg = load_config(g.config_path);
    if (g.seed) cfg.master_seed = *g.seed;
    if (!g.out.empty()) cfg.out_dir = g.out;
    return cfg;
}

void apply_threads(int threads) {
    if (threads < 0) throw config_error("--threads must be >= 1");
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

std::string require_artifact(const fs::path& out_dir, const std::string& name,
                             const std::string& producer) {
    const fs::path p = out_dir / name;
    if (!fs::exists(p)) {
        throw io_error("missing artifact '" + p.string() + "'; run `qki " + producer +
                       "` first");
    }
    return p.string();
}

void cmd_generate(const ExperimentConfig& cfg) {
    if (!cfg.synthetic) {
        throw config_error("generate requires a dataset.synthetic.* source in the config");
    }
    const fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir / "images");
    const std::vector<ImageSample> images = load_or_generate_images(cfg);
    std::vector<ManifestEntry> entries;
    for (const ImageSample& img : images) {
        const std::string rel = "images/" + img.source_id + ".png";
        write_png(img, (out_dir / rel).string());
        entries.push_back({rel, img.label});
    }
    write_manifest(entries, (out_dir / "manifest.csv").string());
    std::cout << "wrote " << images.size() << " images and manifest.csv under " << cfg.out_dir
              << "\n";
}

void cmd_preprocess(const ExperimentConfig& cfg) {
    const fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);
    const std::vector<ImageSample> images = load_or_generate_images(cfg);
    const PreparedData data = prepare_features(cfg, images);
    save_split(data.split, (out_dir / "split.json").string());
    save_pca(data.pca, (out_dir / "pca.json").string());
    save_scaler(data.scaler, (out_dir / "scaler.json").string());
    save_features(data.train_features, data.train_labels,
                  (out_dir / "features_train.csv").string());
    save_features(data.test_features, data.test_labels,
                  (out_dir / "features_test.csv").string());
    std::cout << "features: " << data.split.train.size() << " train / "
              << data.split.test.size() << " test, " << data.train_features.cols
              << " components\n";
}

void cmd_kernel(const ExperimentConfig& cfg, bool dump_circuits) {
    if (cfg.n_qubits > kMaxQubits) {
        throw capacity_error("n_qubits " + std::to_string(cfg.n_qubits) +
                             " exceeds simulator capacity " + std::to_string(kMaxQubits));
    }
    const fs::path out_dir(cfg.out_dir);
    const FeatureSet train =
        load_features(require_artifact(out_dir, "features_train.csv", "preprocess"));
    const FeatureSet test =
        load_features(require_artifact(out_dir, "features_test.csv", "preprocess"));
    const auto train_rows = matrix_rows(train.x);
    const auto test_rows = matrix_rows(test.x);

    for (const GridCell& cell : grid_cells(cfg)) {
        const std::string slug = cell_slug(cell);
        const KernelConfig kc_train = cell_kernel_config(cfg, cell, false);
        const KernelConfig kc_test = cell_kernel_config(cfg, cell, true);
        const KernelMatrix k_train = kernel_matrix(train_rows, kc_train);
        const KernelMatrix k_test = kernel_matrix(train_rows, test_rows, kc_test);
        save_kernel(k_train, (out_dir / ("K_train_" + slug + ".csv")).string());
        save_kernel(k_test, (out_dir / ("K_test_" + slug + ".csv")).string());
        std::cout << slug << ": " << k_train.rows << "x" << k_train.cols << " train, "
                  << k_test.rows << "x" << k_test.cols << " test\n";

        if (dump_circuits && train_rows.size() >= 2) {
            Circuit c = kernel_circuit(train_rows[0], train_rows[1], kc_train.encoding);
            if (cell.dd) c = insert_dd(c, *cell.dd);
            std::ofstream txt(out_dir / ("circuits_" + slug + ".txt"));
            txt << to_text(c);
        }
    }
}

void cmd_train(const ExperimentConfig& cfg) {
    const fs::path out_dir(cfg.out_dir);
    const FeatureSet train =
        load_features(require_artifact(out_dir, "features_train.csv", "preprocess"));

    TrainOptions opts;
    opts.C = cfg.svm_C;
    opts.tol = cfg.svm_tol;
    opts.max_passes = cfg.svm_max_passes;

    for (const GridCell& cell : grid_cells(cfg)) {
        const std::string slug = cell_slug(cell);
        KernelMatrix k_train =
            load_kernel(require_artifact(out_dir, "K_train_" + slug + ".csv", "kernel"));
        const bool want_psd =
            cfg.psd_repair == PsdRepair::On ||
            (cfg.psd_repair == PsdRepair::Auto &&
             (cell.mode == KernelMode::Shots || k_train.meta.noise.has_value()));
        if (want_psd) k_train = psd_project(k_train);
        SvmModel model = train_smo(k_train, train.labels, opts);
        model.train_features_ref = "features_train.csv";
        save_model(model, (out_dir / ("model_" + slug + ".json")).string());
        std::cout << slug << ": " << model.support_indices.size() << " support vectors, bias "
                  << model.bias << "\n";
    }
}

void cmd_predict(const ExperimentConfig& cfg) {
    const fs::path out_dir(cfg.out_dir);
    const FeatureSet test =
        load_features(require_artifact(out_dir, "features_test.csv", "preprocess"));
    const DatasetSplit split =
        load_split(require_artifact(out_dir, "split.json", "preprocess"));

    for (const GridCell& cell : grid_cells(cfg)) {
        const std::string slug = cell_slug(cell);
        const SvmModel model =
            load_model(require_artifact(out_dir, "model_" + slug + ".json", "train"));
        const KernelMatrix k_test =
            load_kernel(require_artifact(out_dir, "K_test_" + slug + ".csv", "kernel"));
        const std::vector<Prediction> preds = predict_all(model, k_test.entries);
        save_predictions(preds, test.labels, split,
                         (out_dir / ("predictions_" + slug + ".csv")).string());
        std::cout << slug << ": " << preds.size() << " predictions\n";
    }
}

void cmd_evaluate(const ExperimentConfig& cfg) {
    const fs::path out_dir(cfg.out_dir);
    const FeatureSet train =
        load_features(require_artifact(out_dir, "features_train.csv", "preprocess"));
    const FeatureSet test =
        load_features(require_artifact(out_dir, "features_test.csv", "preprocess"));

    ExperimentReport report;
    report.version = kVersion;
    report.config_fingerprint = config_hash(cfg);
    report.config_text = serialize_config(cfg);
    report.master_seed = cfg.master_seed;
    report.split_seed = cfg.split_seed;
    report.n_train = train.labels.size();
    report.n_test = test.labels.size();
    report.n_total = report.n_train + report.n_test;

    for (const GridCell& cell : grid_cells(cfg)) {
        const std::string slug = cell_slug(cell);
        const PredictionFile pf = load_predictions(
            require_artifact(out_dir, "predictions_" + slug + ".csv", "predict"));
        std::vector<int> pred_labels(pf.preds.size());
        std::transform(pf.preds.begin(), pf.preds.end(), pred_labels.begin(),
                       [](const Prediction& p) { return p.label; });
        RunResult r;
        r.name = slug;
        r.encoding = cell.encoding;
        r.dd = cell.dd;
        r.mode = cell.mode;
        const bool noisy = cfg.noise.coherent_idle_z != 0.0 || cfg.noise.depol_1q > 0.0 ||
                           cfg.noise.depol_2q > 0.0;
        r.psd_applied = cfg.psd_repair == PsdRepair::On ||
                        (cfg.psd_repair == PsdRepair::Auto &&
                         (cell.mode == KernelMode::Shots || noisy));
        r.metrics = evaluate(pred_labels, pf.truth);
        report.results.push_back(std::move(r));
    }

    if (!cfg.baselines.empty()) {
        const auto train_rows = matrix_rows(train.x);
        const auto test_rows = matrix_rows(test.x);
        const double gamma =
            cfg.baseline_gamma ? *cfg.baseline_gamma : scale_gamma(train_rows);
        TrainOptions opts;
        opts.C = cfg.svm_C;
        opts.tol = cfg.svm_tol;
        opts.max_passes = cfg.svm_max_passes;
        for (const ClassicalKernelKind kind : cfg.baselines) {
            ClassicalKernelSpec spec{kind, gamma, cfg.baseline_degree, cfg.baseline_coef0};
            const SvmModel model =
                train_smo(classical_kernel_matrix(train_rows, spec), train.labels, opts);
            const std::vector<Prediction> preds =
                predict_all(model, classical_kernel_matrix(train_rows, test_rows, spec));
            std::vector<int> pred_labels(preds.size());
            std::transform(preds.begin(), preds.end(), pred_labels.begin(),
                           [](const Prediction& p) { return p.label; });
            BaselineResult b;
            b.name = std::string("classical_") + classical_kernel_name(kind);
            b.kind = kind;
            b.gamma = gamma;
            b.degree = spec.degree;
            b.coef0 = spec.coef0;
            b.metrics = evaluate(pred_labels, test.labels);
            report.baselines.push_back(std::move(b));
        }
    }

    save_report(report, (out_dir / "report.json").string());
    std::cout << "report.json written under " << cfg.out_dir << "\n";
}

void emit_format(const ExperimentReport& report, const fs::path& out_dir,
                 const std::string& format) {
    if (format == "csv") {
        const fs::path p = out_dir / "report.csv";
        emit_report_csv(report, p.string());
        std::cout << "wrote " << p.string() << "\n";
    } else if (format == "markdown") {
        const fs::path p = out_dir / "report.md";
        emit_report_markdown(report, p.string());
        std::cout << "wrote " << p.string() << "\n";
    } else {
        throw config_error("--format must be csv or markdown, got '" + format + "'");
    }
}

void cmd_run(const ExperimentConfig& cfg) {
    const ExperimentReport report = run_experiment(cfg);
    const fs::path out_dir(cfg.out_dir);
    emit_report_csv(report, (out_dir / "report.csv").string());
    emit_report_markdown(report, (out_dir / "report.md").string());
    for (const RunResult& r : report.results) {
        std::printf("%-24s accuracy %.3f  macro-F1 %.3f  (%.1fs kernel, %.2fs svm)\n",
                    r.name.c_str(), r.metrics.accuracy, r.metrics.macro_f1, r.kernel_seconds,
                    r.svm_seconds);
    }
    for (const BaselineResult& b : report.baselines) {
        std::printf("%-24s accuracy %.3f  macro-F1 %.3f\n", b.name.c_str(),
                    b.metrics.accuracy, b.metrics.macro_f1);
    }
    std::printf("total %.1fs; artifacts under %s\n", report.total_seconds,
                cfg.out_dir.c_str());
}

void cmd_report(const ExperimentConfig& cfg, const std::string& format) {
    const fs::path out_dir(cfg.out_dir);
    const ExperimentReport report =
        load_report(require_artifact(out_dir, "report.json", "run"));
    emit_format(report, out_dir, format);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum-kernel defect classification toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand name

    GlobalFlags g;
    uint64_t seed_value = 0;
    bool seed_given = false;
    app.add_option("--config", g.config_path, "experiment config file");
    app.add_option("--threads", g.threads, "worker thread count (default: all cores)");
    app.add_option("--out", g.out, "output directory (overrides config)");
    app.add_option("--seed", seed_value, "master seed (overrides config)")
        ->each([&](const std::string&) { seed_given = true; });

    std::string format = "markdown";
    bool dump_circuits = false;

    CLI::App* c_generate = app.add_subcommand("generate", "write a synthetic image corpus");
    CLI::App* c_preprocess =
        app.add_subcommand("preprocess", "images -> split -> PCA -> scaled features");
    CLI::App* c_kernel = app.add_subcommand("kernel", "compute kernel matrices per grid cell");
    c_kernel->add_flag("--dump-circuits", dump_circuits,
                       "also write a representative circuit text per cell");
    CLI::App* c_train = app.add_subcommand("train", "train SVM models from saved kernels");
    CLI::App* c_predict = app.add_subcommand("predict", "predict the test block per cell");
    CLI::App* c_evaluate =
        app.add_subcommand("evaluate", "metrics + classical baselines -> report.json");
    CLI::App* c_run = app.add_subcommand("run", "full pipeline end to end");
    CLI::App* c_report = app.add_subcommand("report", "render report.json as csv or markdown");
    c_report->add_option("--format", format, "csv or markdown");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        apply_threads(g.threads);
        if (seed_given) g.seed = seed_value;
        const ExperimentConfig cfg = effective_config(g);
        if (c_generate->parsed()) cmd_generate(cfg);
        if (c_preprocess->parsed()) cmd_preprocess(cfg);
        if (c_kernel->parsed()) cmd_kernel(cfg, dump_circuits);
        if (c_train->parsed()) cmd_train(cfg);
        if (c_predict->parsed()) cmd_predict(cfg);
        if (c_evaluate->parsed()) cmd_evaluate(cfg);
        if (c_run->parsed()) cmd_run(cfg);
        if (c_report->parsed()) cmd_report(cfg, format);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const capacity_error& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
