#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qki/circuit.hpp"
#include "qki/encode.hpp"
#include "qki/qkernel.hpp"
#include "qki/svm.hpp"

namespace qki {

struct SyntheticSpec {
    int n = 60;
    double defect_rate = 0.5;
    bool operator==(const SyntheticSpec&) const = default;
};

enum class PsdRepair { Auto, On, Off };

/// Parsed experiment description. encoding.kind, dd.sequence, and
/// kernel.mode are grid axes: each may list several values and the run
/// covers their cartesian product.
struct ExperimentConfig {
    std::optional<std::string> manifest;
    std::optional<SyntheticSpec> synthetic;

    int n_qubits = 20;
    std::vector<EncodingKind> encoding_kinds{EncodingKind::Angle};
    int iqp_depth = 2;
    IqpPairing pairing = IqpPairing::LinearChain;
    bool use_cphase = false;

    std::vector<KernelMode> kernel_modes{KernelMode::Exact};
    int shots = 1000;
    PsdRepair psd_repair = PsdRepair::Auto;
    NoiseModel noise;  // all-zero rates = noiseless

    std::vector<std::optional<DdSequence>> dd_axis{std::nullopt};

    double svm_C = 1.0;
    double svm_tol = 1e-3;
    int svm_max_passes = 50;

    std::vector<ClassicalKernelKind> baselines{
        ClassicalKernelKind::Linear, ClassicalKernelKind::Poly, ClassicalKernelKind::RBF,
        ClassicalKernelKind::Sigmoid};
    std::optional<double> baseline_gamma;  // nullopt = 1/(n_features * variance)
    int baseline_degree = 3;
    double baseline_coef0 = 0.0;

    double train_frac = 0.7;
    uint64_t split_seed = 1;
    uint64_t master_seed = 1;
    std::string out_dir = "out";

    bool operator==(const ExperimentConfig&) const = default;
};

/// Flat `key = value` lines; `#` starts a comment; dotted keys group
/// sections. Unknown keys, duplicates, type errors, and range violations
/// raise config_error naming the key. Exactly one dataset source
/// (dataset.manifest or dataset.synthetic.n) must be present.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical form: every key once, fixed order. parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// FNV-1a over the canonical serialization; stable provenance tag.
uint64_t config_hash(const ExperimentConfig& config);

const char* psd_repair_name(PsdRepair p);

}  // namespace qki
