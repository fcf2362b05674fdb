#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qki/config.hpp"
#include "qki/pipeline.hpp"
#include "qki/qkernel.hpp"
#include "qki/svm.hpp"

namespace qki {

/// One point of the encoding x dd x mode grid, in enumeration order.
struct GridCell {
    EncodingKind encoding;
    std::optional<DdSequence> dd;
    KernelMode mode;
    std::size_t index = 0;
};

std::vector<GridCell> grid_cells(const ExperimentConfig& config);
std::string cell_slug(const GridCell& cell);   // e.g. iqp_xyxy_shots
std::string cell_label(const GridCell& cell);  // e.g. "iqp+XYXY shots"

/// Kernel settings for one grid cell. Noise applies only to shot-mode
/// cells; exact cells are noiseless by definition. Master seeds are derived
/// per cell, with separate streams for the train and test blocks.
KernelConfig cell_kernel_config(const ExperimentConfig& config, const GridCell& cell,
                                bool test_block);

struct PreparedData {
    Matrix train_features;  // scaled into [0, pi], one row per sample
    Matrix test_features;
    std::vector<int> train_labels;
    std::vector<int> test_labels;
    DatasetSplit split;
    PcaModel pca;
    ScalerModel scaler;
};

std::vector<ImageSample> load_or_generate_images(const ExperimentConfig& config);

/// CSV with header `test_index,decision,predicted,truth`; test_index is the
/// sample's position in the full corpus (from the split), decisions at full
/// precision, labels as names.
void save_predictions(const std::vector<Prediction>& preds, const std::vector<int>& truth,
                      const DatasetSplit& split, const std::string& path);

struct PredictionFile {
    std::vector<std::size_t> test_index;
    std::vector<Prediction> preds;
    std::vector<int> truth;
};

PredictionFile load_predictions(const std::string& path);

/// grayscale -> 28x28 -> flatten -> stratified split -> PCA (fit on train)
/// -> min-max scale to [0, pi] (fit on train).
PreparedData prepare_features(const ExperimentConfig& config,
                              const std::vector<ImageSample>& images);

struct RunResult {
    std::string name;  // cell slug
    EncodingKind encoding;
    std::optional<DdSequence> dd;
    KernelMode mode;
    bool psd_applied = false;
    Metrics metrics;
    double kernel_seconds = 0.0;
    double svm_seconds = 0.0;
};

struct BaselineResult {
    std::string name;  // e.g. classical_rbf
    ClassicalKernelKind kind;
    double gamma = 1.0;
    int degree = 3;
    double coef0 = 0.0;
    Metrics metrics;
    double svm_seconds = 0.0;
};

struct ExperimentReport {
    std::string version;
    uint64_t config_fingerprint = 0;
    std::string config_text;  // canonical serialization
    uint64_t master_seed = 0;
    uint64_t split_seed = 0;
    std::size_t n_total = 0, n_train = 0, n_test = 0;
    std::vector<RunResult> results;
    std::vector<BaselineResult> baselines;
    double total_seconds = 0.0;
};

/// End to end: data, features, per-cell kernels (train and test), optional
/// PSD repair, SMO, prediction, metrics, classical baselines. Persists every
/// stage artifact plus report.json under config.out_dir. Everything except
/// the *_seconds timing fields is deterministic per seeds.
ExperimentReport run_experiment(const ExperimentConfig& config);

std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& text);
void save_report(const ExperimentReport& report, const std::string& path);
ExperimentReport load_report(const std::string& path);

/// CSV: one row per configuration (quantum cells, then baselines), metric
/// columns at full precision. Markdown: metrics as rows, configurations as
/// columns, plus a comparison table holding quantum cells and baselines
/// side by side.
void emit_report_csv(const ExperimentReport& report, const std::string& path);
void emit_report_markdown(const ExperimentReport& report, const std::string& path);

}  // namespace qki
