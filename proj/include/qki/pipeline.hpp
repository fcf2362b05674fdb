#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qki/la.hpp"

namespace qki {

/// 8-bit image, row-major, channels interleaved. label: good = -1,
/// defect = +1.
struct ImageSample {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<uint8_t> pixels;
    int label = -1;
    std::string source_id;

    uint8_t at(int r, int c, int ch = 0) const {
        return pixels[(static_cast<std::size_t>(r) * width + c) * channels + ch];
    }
};

const char* label_name(int label);
int label_from_name(const std::string& name);

/// 3-channel input collapses to round(0.299 R + 0.587 G + 0.114 B);
/// single-channel input passes through unchanged.
ImageSample to_grayscale(const ImageSample& img);

/// Box-average (area) resampling of a single-channel image. Each output
/// pixel is the area-weighted mean of the input pixels its box covers,
/// rounded to nearest.
ImageSample resize_area(const ImageSample& img, int out_h, int out_w);
inline ImageSample resize_28(const ImageSample& img) { return resize_area(img, 28, 28); }

/// Row-major pixel values as doubles in [0, 255]; single channel only.
std::vector<double> flatten_pixels(const ImageSample& img);

struct PcaModel {
    std::vector<double> mean;                // length D
    Matrix components;                       // k x D, rows orthonormal
    std::vector<double> explained_variance;  // nonincreasing, >= 0
    double total_variance = 0.0;             // sum over all directions

    std::size_t k() const { return components.rows; }
    std::size_t dim() const { return components.cols; }
    double explained_ratio(std::size_t i) const {
        return total_variance > 0.0 ? explained_variance[i] / total_variance : 0.0;
    }
};

/// Principal directions of the centered data, largest variance first.
/// Uses the n x n Gram matrix when n < D, the D x D covariance otherwise.
/// Sign convention: the largest-magnitude entry of each component is
/// positive (first such index on ties), so fits reproduce across platforms.
/// Requires n >= 2 and 1 <= k <= min(n - 1, D).
PcaModel pca_fit(const Matrix& x, std::size_t k);

/// (X - mean) . components^T, an n x k matrix.
Matrix pca_transform(const PcaModel& model, const Matrix& x);

/// Y . components + mean; exact inverse only when k spans the data.
Matrix pca_inverse_transform(const PcaModel& model, const Matrix& y);

struct ScalerModel {
    std::vector<double> min;
    std::vector<double> max;
};

/// Per-feature affine map [min, max] -> [0, pi]; constant features map to 0.
ScalerModel scale_fit(const Matrix& train);
/// Applies the map, clamping out-of-range values into [0, pi].
Matrix scale_apply(const ScalerModel& model, const Matrix& x);
std::pair<ScalerModel, Matrix> scale_fit_transform(const Matrix& train);

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    uint64_t seed = 0;
};

/// Seeded shuffle; the first round(n * train_frac) indices train. Both
/// output lists come back sorted ascending.
DatasetSplit split(std::size_t n, double train_frac, uint64_t seed);
/// Stratified variant: per-class train quotas by largest remainder, so class
/// balance is preserved within one sample.
DatasetSplit split(const std::vector<int>& labels, double train_frac, uint64_t seed);

/// Rendered grayscale housings, 112 x 112, with per-image jitter and pixel
/// noise. Exactly round(n * defect_rate) samples carry 1 to 3 defects
/// (scratch, hole, clipped corner) and label +1. Image i draws only from a
/// stream derived as mix_seed(seed, i), so corpora are byte-stable.
std::vector<ImageSample> generate_synthetic_corpus(int n, double defect_rate, uint64_t seed);

// Image files. read_image sniffs PNG / P5 / P6 magic; PNG inputs may be
// 8- or 16-bit gray, RGB, RGBA, or palette and are normalized to 8-bit
// gray or RGB.
ImageSample read_image(const std::string& path);
void write_pgm(const ImageSample& img, const std::string& path);
void write_png(const ImageSample& img, const std::string& path);

struct ManifestEntry {
    std::string path;
    int label;
};

/// CSV with header `path,label`; relative paths resolve against the
/// manifest's own directory on read.
std::vector<ManifestEntry> read_manifest(const std::string& csv_path);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& csv_path);

struct FeatureSet {
    Matrix x;
    std::vector<int> labels;
};

/// CSV: header f0..f{k-1},label; one sample per row, full precision.
void save_features(const Matrix& x, const std::vector<int>& labels, const std::string& path);
FeatureSet load_features(const std::string& path);

std::string pca_to_json(const PcaModel& model);
PcaModel pca_from_json(const std::string& text);
void save_pca(const PcaModel& model, const std::string& path);
PcaModel load_pca(const std::string& path);

std::string scaler_to_json(const ScalerModel& model);
ScalerModel scaler_from_json(const std::string& text);
void save_scaler(const ScalerModel& model, const std::string& path);
ScalerModel load_scaler(const std::string& path);

std::string split_to_json(const DatasetSplit& s);
DatasetSplit split_from_json(const std::string& text);
void save_split(const DatasetSplit& s, const std::string& path);
DatasetSplit load_split(const std::string& path);

}  // namespace qki
