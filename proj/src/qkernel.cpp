#include "qki/qkernel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "qki/common.hpp"
#include "qki/rng.hpp"

namespace qki {

const char* kernel_mode_name(KernelMode mode) {
    return mode == KernelMode::Exact ? "exact" : "shots";
}

KernelMode kernel_mode_from_name(const std::string& name) {
    if (name == "exact") return KernelMode::Exact;
    if (name == "shots") return KernelMode::Shots;
    throw config_error("unknown kernel mode '" + name + "' (expected exact or shots)");
}

const char* encoding_kind_name(EncodingKind kind) {
    return kind == EncodingKind::Angle ? "angle" : "iqp";
}

EncodingKind encoding_kind_from_name(const std::string& name) {
    if (name == "angle") return EncodingKind::Angle;
    if (name == "iqp") return EncodingKind::Iqp;
    throw config_error("unknown encoding '" + name + "' (expected angle or iqp)");
}

const char* pairing_name(IqpPairing pairing) {
    return pairing == IqpPairing::LinearChain ? "linear" : "all";
}

IqpPairing pairing_from_name(const std::string& name) {
    if (name == "linear") return IqpPairing::LinearChain;
    if (name == "all") return IqpPairing::AllPairs;
    throw config_error("unknown pairing '" + name + "' (expected linear or all)");
}

DdSequence dd_from_name(const std::string& name) {
    if (name == "XX" || name == "xx") return DdSequence::XX;
    if (name == "XYXY" || name == "xyxy") return DdSequence::XYXY;
    if (name == "YY" || name == "yy") return DdSequence::YY;
    throw config_error("unknown DD sequence '" + name + "' (expected XX, XYXY, or YY)");
}

namespace {

bool noise_active(const std::optional<NoiseModel>& noise) {
    return noise && (noise->coherent_idle_z != 0.0 || noise->depol_1q > 0.0 ||
                     noise->depol_2q > 0.0);
}

MomentSchedule entry_schedule(const FeatureVector& x, const FeatureVector& z,
                              const EncodingSpec& spec, const std::optional<DdSequence>& dd) {
    Circuit c = kernel_circuit(x, z, spec);
    if (dd) c = insert_dd(c, *dd);
    return schedule_moments(c);
}

double exact_value(const MomentSchedule& sched, StateVector& scratch) {
    simulate_into(sched, std::nullopt, 0, scratch);
    return scratch.prob_all_zeros();
}

double shot_value(const MomentSchedule& sched, int shots,
                  const std::optional<NoiseModel>& noise, uint64_t seed,
                  StateVector& scratch) {
    if (shots < 1) throw std::invalid_argument("shot count must be >= 1");
    uint64_t hits = 0;
    if (!noise_active(noise)) {
        // State is trajectory-independent: simulate once, keep the
        // per-trajectory measurement streams so results match the slow path.
        simulate_into(sched, noise, mix_seed(seed, 0), scratch);
        for (int t = 0; t < shots; ++t) {
            hits += sample_all_zeros(scratch, 1, mix_seed(seed, 2 * uint64_t(t) + 1));
        }
    } else {
        for (int t = 0; t < shots; ++t) {
            simulate_into(sched, noise, mix_seed(seed, 2 * uint64_t(t)), scratch);
            hits += sample_all_zeros(scratch, 1, mix_seed(seed, 2 * uint64_t(t) + 1));
        }
    }
    return static_cast<double>(hits) / static_cast<double>(shots);
}

double entry_value(const FeatureVector& x, const FeatureVector& z, const KernelConfig& cfg,
                   uint64_t entry_seed, StateVector& scratch) {
    const MomentSchedule sched = entry_schedule(x, z, cfg.encoding, cfg.dd);
    if (cfg.mode == KernelMode::Exact) return exact_value(sched, scratch);
    return shot_value(sched, cfg.shots, cfg.noise, entry_seed, scratch);
}

}  // namespace

double kernel_entry_exact(const FeatureVector& x, const FeatureVector& z,
                          const EncodingSpec& spec, const std::optional<DdSequence>& dd) {
    StateVector scratch(spec.n_qubits);
    return exact_value(entry_schedule(x, z, spec, dd), scratch);
}

double kernel_entry_shots(const FeatureVector& x, const FeatureVector& z,
                          const EncodingSpec& spec, int shots,
                          const std::optional<NoiseModel>& noise,
                          const std::optional<DdSequence>& dd, uint64_t seed) {
    StateVector scratch(spec.n_qubits);
    return shot_value(entry_schedule(x, z, spec, dd), shots, noise, seed, scratch);
}

namespace {

void check_inputs(const std::vector<FeatureVector>& vs, const KernelConfig& cfg,
                  const char* label) {
    if (vs.empty()) throw std::invalid_argument(std::string(label) + " vector set is empty");
    for (const auto& v : vs) {
        if (static_cast<int>(v.size()) != cfg.encoding.n_qubits) {
            throw std::invalid_argument(std::string(label) +
                                        " vector length does not match encoding qubit count");
        }
    }
}

KernelMatrix kernel_matrix_impl(const std::vector<FeatureVector>& a,
                                const std::vector<FeatureVector>* b,
                                const KernelConfig& cfg) {
    validate(cfg.encoding);
    if (cfg.noise) validate(*cfg.noise);
    if (cfg.mode == KernelMode::Shots && cfg.shots < 1) {
        throw std::invalid_argument("shot count must be >= 1");
    }
    check_inputs(a, cfg, "train");
    if (b) check_inputs(*b, cfg, "eval");

    KernelMatrix out;
    out.cols = a.size();
    out.rows = b ? b->size() : a.size();
    out.entries = Matrix(out.rows, out.cols);
    out.meta = cfg;

    struct Job {
        std::size_t i, j;
    };
    std::vector<Job> jobs;
    if (b) {
        jobs.reserve(out.rows * out.cols);
        for (std::size_t i = 0; i < out.rows; ++i) {
            for (std::size_t j = 0; j < out.cols; ++j) jobs.push_back({i, j});
        }
    } else {
        jobs.reserve(out.rows * (out.rows + 1) / 2);
        for (std::size_t i = 0; i < out.rows; ++i) {
            for (std::size_t j = i; j < out.cols; ++j) jobs.push_back({i, j});
        }
    }

    const auto run_job = [&](const Job& job, StateVector& scratch) {
        const FeatureVector& xi = b ? (*b)[job.i] : a[job.i];
        const FeatureVector& xj = a[job.j];
        const uint64_t entry_seed = mix_seed(cfg.master_seed, job.i * out.cols + job.j);
        const double v = entry_value(xi, xj, cfg, entry_seed, scratch);
        out.entries.at(job.i, job.j) = v;
        if (!b && job.i != job.j) out.entries.at(job.j, job.i) = v;
    };

#ifdef _OPENMP
    #pragma omp parallel
    {
        StateVector scratch(cfg.encoding.n_qubits);
        #pragma omp for schedule(dynamic)
        for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(jobs.size()); ++k) {
            run_job(jobs[k], scratch);
        }
    }
#else
    StateVector scratch(cfg.encoding.n_qubits);
    for (const Job& job : jobs) run_job(job, scratch);
#endif
    return out;
}

}  // namespace

KernelMatrix kernel_matrix(const std::vector<FeatureVector>& a, const KernelConfig& config) {
    return kernel_matrix_impl(a, nullptr, config);
}

KernelMatrix kernel_matrix(const std::vector<FeatureVector>& a,
                           const std::vector<FeatureVector>& b, const KernelConfig& config) {
    return kernel_matrix_impl(a, &b, config);
}

KernelMatrix psd_project(const KernelMatrix& k) {
    if (k.rows != k.cols) throw std::invalid_argument("psd_project requires a square matrix");
    const std::size_t n = k.rows;
    Matrix sym(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            sym.at(i, j) = 0.5 * (k.entries.at(i, j) + k.entries.at(j, i));
        }
    }
    SymmetricEigen eig = eigen_symmetric(sym);
    KernelMatrix out;
    out.rows = n;
    out.cols = n;
    out.meta = k.meta;
    out.entries = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double v = 0.0;
            for (std::size_t m = 0; m < n; ++m) {
                const double lam = std::max(eig.eigenvalues[m], 0.0);
                if (lam == 0.0) continue;
                v += lam * eig.eigenvectors.at(i, m) * eig.eigenvectors.at(j, m);
            }
            out.entries.at(i, j) = v;
            out.entries.at(j, i) = v;
        }
    }
    return out;
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string kernel_meta_json(const KernelConfig& config) {
    nlohmann::json j;
    j["encoding"] = {
        {"kind", encoding_kind_name(config.encoding.kind)},
        {"n_qubits", config.encoding.n_qubits},
        {"iqp_depth", config.encoding.iqp_depth},
        {"pairing", pairing_name(config.encoding.pairing)},
        {"use_cphase", config.encoding.use_cphase},
    };
    j["mode"] = kernel_mode_name(config.mode);
    j["shots"] = config.shots;
    if (config.noise) {
        j["noise"] = {
            {"coherent_idle_z", config.noise->coherent_idle_z},
            {"depol_1q", config.noise->depol_1q},
            {"depol_2q", config.noise->depol_2q},
            {"noisy_dd_pulses", config.noise->noisy_dd_pulses},
        };
    } else {
        j["noise"] = nullptr;
    }
    j["dd"] = config.dd ? nlohmann::json(dd_name(*config.dd)) : nlohmann::json(nullptr);
    j["master_seed"] = config.master_seed;
    return j.dump(2) + "\n";
}

KernelConfig kernel_meta_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string("kernel metadata is not valid JSON: ") + e.what());
    }
    KernelConfig cfg;
    try {
        const auto& enc = j.at("encoding");
        cfg.encoding.kind = encoding_kind_from_name(enc.at("kind").get<std::string>());
        cfg.encoding.n_qubits = enc.at("n_qubits").get<int>();
        cfg.encoding.iqp_depth = enc.at("iqp_depth").get<int>();
        cfg.encoding.pairing = pairing_from_name(enc.at("pairing").get<std::string>());
        cfg.encoding.use_cphase = enc.at("use_cphase").get<bool>();
        cfg.mode = kernel_mode_from_name(j.at("mode").get<std::string>());
        cfg.shots = j.at("shots").get<int>();
        if (!j.at("noise").is_null()) {
            const auto& n = j.at("noise");
            NoiseModel noise;
            noise.coherent_idle_z = n.at("coherent_idle_z").get<double>();
            noise.depol_1q = n.at("depol_1q").get<double>();
            noise.depol_2q = n.at("depol_2q").get<double>();
            noise.noisy_dd_pulses = n.at("noisy_dd_pulses").get<bool>();
            cfg.noise = noise;
        }
        if (!j.at("dd").is_null()) cfg.dd = dd_from_name(j.at("dd").get<std::string>());
        cfg.master_seed = j.at("master_seed").get<uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string("kernel metadata missing or mistyped field: ") + e.what());
    }
    return cfg;
}

void save_kernel(const KernelMatrix& k, const std::string& csv_path) {
    std::ofstream csv(csv_path);
    if (!csv) throw io_error("cannot open '" + csv_path + "' for writing");
    for (std::size_t i = 0; i < k.rows; ++i) {
        for (std::size_t j = 0; j < k.cols; ++j) {
            if (j) csv << ',';
            csv << format_double(k.entries.at(i, j));
        }
        csv << '\n';
    }
    if (!csv.good()) throw io_error("write to '" + csv_path + "' failed");
    csv.close();

    const std::string meta_path = csv_path + ".meta.json";
    std::ofstream meta(meta_path);
    if (!meta) throw io_error("cannot open '" + meta_path + "' for writing");
    meta << kernel_meta_json(k.meta);
    if (!meta.good()) throw io_error("write to '" + meta_path + "' failed");
}

KernelMatrix load_kernel(const std::string& csv_path) {
    std::ifstream csv(csv_path);
    if (!csv) throw io_error("cannot open '" + csv_path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw io_error("bad numeric cell '" + cell + "' in '" + csv_path + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw io_error("ragged rows in '" + csv_path + "'");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw io_error("kernel file '" + csv_path + "' is empty");

    KernelMatrix out;
    out.rows = rows.size();
    out.cols = rows.front().size();
    out.entries = Matrix(out.rows, out.cols);
    for (std::size_t i = 0; i < out.rows; ++i) {
        for (std::size_t j = 0; j < out.cols; ++j) out.entries.at(i, j) = rows[i][j];
    }

    const std::string meta_path = csv_path + ".meta.json";
    std::ifstream meta(meta_path);
    if (!meta) throw io_error("missing kernel metadata file '" + meta_path + "'");
    std::stringstream buf;
    buf << meta.rdbuf();
    out.meta = kernel_meta_from_json(buf.str());
    return out;
}

}  // namespace qki
