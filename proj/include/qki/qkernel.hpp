#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qki/circuit.hpp"
#include "qki/encode.hpp"
#include "qki/la.hpp"

namespace qki {

enum class KernelMode { Exact, Shots };

const char* kernel_mode_name(KernelMode mode);
KernelMode kernel_mode_from_name(const std::string& name);

const char* encoding_kind_name(EncodingKind kind);
EncodingKind encoding_kind_from_name(const std::string& name);
const char* pairing_name(IqpPairing pairing);
IqpPairing pairing_from_name(const std::string& name);
DdSequence dd_from_name(const std::string& name);

struct KernelConfig {
    EncodingSpec encoding;
    KernelMode mode = KernelMode::Exact;
    int shots = 1000;
    std::optional<NoiseModel> noise;  // shot mode only; exact mode is noiseless
    std::optional<DdSequence> dd;
    uint64_t master_seed = 0;
};

struct KernelMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Matrix entries;
    KernelConfig meta;
};

/// |<0|U(z)^dag U(x)|0>|^2 by noiseless simulation. An optional DD sequence
/// pads idle windows first; noiseless it only shifts global phase, so the
/// value is unchanged within float error.
double kernel_entry_exact(const FeatureVector& x, const FeatureVector& z,
                          const EncodingSpec& spec,
                          const std::optional<DdSequence>& dd = std::nullopt);

/// Shot estimate: one noise trajectory per shot, counting all-zeros outcomes.
/// Trajectory t draws its noise stream from mix_seed(seed, 2t) and its
/// measurement draw from mix_seed(seed, 2t + 1); that split keeps the
/// zero-noise fast path (simulate once, sample per shot) bit-identical to
/// running the full per-trajectory loop. The seed layout is a compatibility
/// contract; changing it changes every persisted shot-mode kernel.
double kernel_entry_shots(const FeatureVector& x, const FeatureVector& z,
                          const EncodingSpec& spec, int shots,
                          const std::optional<NoiseModel>& noise,
                          const std::optional<DdSequence>& dd, uint64_t seed);

/// Symmetric Gram matrix over `a`: only i <= j entries are computed, the
/// lower triangle is mirrored. Entry (i, j) uses the derived seed
/// mix_seed(master_seed, i * cols + j), so results do not depend on whether
/// entries run sequentially or across threads.
KernelMatrix kernel_matrix(const std::vector<FeatureVector>& a, const KernelConfig& config);

/// Rectangular |b| x |a| block; entry (i, j) = K(b[i], a[j]) with the same
/// derived-seed contract.
KernelMatrix kernel_matrix(const std::vector<FeatureVector>& a,
                           const std::vector<FeatureVector>& b, const KernelConfig& config);

/// Symmetrize, eigendecompose, clip negative eigenvalues to zero, rebuild.
/// The diagonal is left as reconstructed, not renormalized to 1.
KernelMatrix psd_project(const KernelMatrix& k);

/// CSV persistence (row-major, full-precision decimals) plus a sidecar
/// metadata file at `<csv_path>.meta.json`. Values round-trip exactly.
void save_kernel(const KernelMatrix& k, const std::string& csv_path);
KernelMatrix load_kernel(const std::string& csv_path);

std::string kernel_meta_json(const KernelConfig& config);
KernelConfig kernel_meta_from_json(const std::string& text);

}  // namespace qki
