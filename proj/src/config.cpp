#include "qki/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "qki/common.hpp"

namespace qki {

const char* psd_repair_name(PsdRepair p) {
    switch (p) {
        case PsdRepair::Auto: return "auto";
        case PsdRepair::On: return "on";
        case PsdRepair::Off: return "off";
    }
    return "?";
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& key, const std::string& value) {
    std::vector<std::string> items;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw config_error(key + ": empty list item");
        items.push_back(item);
    }
    if (items.empty()) throw config_error(key + ": empty value");
    return items;
}

long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw config_error(key + ": '" + value + "' is not an integer");
    }
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        if (!value.empty() && value[0] == '-') throw std::invalid_argument(value);
        const uint64_t v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw config_error(key + ": '" + value + "' is not an unsigned integer");
    }
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        if (!std::isfinite(v)) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw config_error(key + ": '" + value + "' is not a finite number");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw config_error(key + ": '" + value + "' is not true or false");
}

template <typename T, typename Parse>
std::vector<T> parse_axis(const std::string& key, const std::string& value, Parse parse) {
    std::vector<T> out;
    for (const auto& item : split_list(key, value)) {
        T v;
        try {
            v = parse(item);
        } catch (const config_error& e) {
            throw config_error(key + ": " + e.what());
        }
        if (std::find(out.begin(), out.end(), v) != out.end()) {
            throw config_error(key + ": duplicate value '" + item + "'");
        }
        out.push_back(v);
    }
    return out;
}

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::stringstream lines(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error("line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw config_error("line " + std::to_string(line_no) + ": empty key");
        if (value.empty()) throw config_error(key + ": empty value");
        if (!kv.emplace(key, value).second) throw config_error(key + ": duplicate key");
    }

    ExperimentConfig cfg;
    const auto take = [&](const char* key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };

    if (const auto v = take("dataset.manifest")) cfg.manifest = *v;
    {
        const auto n = take("dataset.synthetic.n");
        const auto rate = take("dataset.synthetic.defect_rate");
        if (n || rate) {
            SyntheticSpec s;
            if (n) {
                const long count = parse_int("dataset.synthetic.n", *n);
                if (count < 2) throw config_error("dataset.synthetic.n: must be >= 2");
                s.n = static_cast<int>(count);
            }
            if (rate) {
                s.defect_rate = parse_real("dataset.synthetic.defect_rate", *rate);
                if (!(s.defect_rate >= 0.0 && s.defect_rate <= 1.0)) {
                    throw config_error("dataset.synthetic.defect_rate: must lie in [0, 1]");
                }
            }
            cfg.synthetic = s;
        }
    }
    if (cfg.manifest && cfg.synthetic) {
        throw config_error("dataset.manifest and dataset.synthetic.* are mutually exclusive");
    }
    if (!cfg.manifest && !cfg.synthetic) {
        throw config_error("one dataset source required: dataset.manifest or dataset.synthetic.n");
    }

    if (const auto v = take("n_qubits")) {
        const long n = parse_int("n_qubits", *v);
        if (n < 1) throw config_error("n_qubits: must be >= 1");
        cfg.n_qubits = static_cast<int>(n);
    }
    if (const auto v = take("encoding.kind")) {
        cfg.encoding_kinds = parse_axis<EncodingKind>(
            "encoding.kind", *v, [](const std::string& s) { return encoding_kind_from_name(s); });
    }
    if (const auto v = take("encoding.iqp_depth")) {
        const long d = parse_int("encoding.iqp_depth", *v);
        if (d < 1) throw config_error("encoding.iqp_depth: must be >= 1");
        cfg.iqp_depth = static_cast<int>(d);
    }
    if (const auto v = take("encoding.pairing")) {
        try {
            cfg.pairing = pairing_from_name(*v);
        } catch (const config_error& e) {
            throw config_error(std::string("encoding.pairing: ") + e.what());
        }
    }
    if (const auto v = take("encoding.use_cphase")) {
        cfg.use_cphase = parse_bool("encoding.use_cphase", *v);
    }

    if (const auto v = take("kernel.mode")) {
        cfg.kernel_modes = parse_axis<KernelMode>(
            "kernel.mode", *v, [](const std::string& s) { return kernel_mode_from_name(s); });
    }
    if (const auto v = take("kernel.shots")) {
        const long s = parse_int("kernel.shots", *v);
        if (s < 1) throw config_error("kernel.shots: must be >= 1");
        cfg.shots = static_cast<int>(s);
    }
    if (const auto v = take("kernel.psd_repair")) {
        if (*v == "auto") cfg.psd_repair = PsdRepair::Auto;
        else if (*v == "on") cfg.psd_repair = PsdRepair::On;
        else if (*v == "off") cfg.psd_repair = PsdRepair::Off;
        else throw config_error("kernel.psd_repair: '" + *v + "' is not auto, on, or off");
    }

    if (const auto v = take("noise.coherent_idle_z")) {
        cfg.noise.coherent_idle_z = parse_real("noise.coherent_idle_z", *v);
    }
    if (const auto v = take("noise.depol_1q")) {
        cfg.noise.depol_1q = parse_real("noise.depol_1q", *v);
        if (!(cfg.noise.depol_1q >= 0.0 && cfg.noise.depol_1q <= 1.0)) {
            throw config_error("noise.depol_1q: must lie in [0, 1]");
        }
    }
    if (const auto v = take("noise.depol_2q")) {
        cfg.noise.depol_2q = parse_real("noise.depol_2q", *v);
        if (!(cfg.noise.depol_2q >= 0.0 && cfg.noise.depol_2q <= 1.0)) {
            throw config_error("noise.depol_2q: must lie in [0, 1]");
        }
    }
    if (const auto v = take("noise.noisy_dd_pulses")) {
        cfg.noise.noisy_dd_pulses = parse_bool("noise.noisy_dd_pulses", *v);
    }

    if (const auto v = take("dd.sequence")) {
        cfg.dd_axis = parse_axis<std::optional<DdSequence>>(
            "dd.sequence", *v, [](const std::string& s) -> std::optional<DdSequence> {
                if (s == "none") return std::nullopt;
                return dd_from_name(s);
            });
    }

    if (const auto v = take("svm.C")) {
        cfg.svm_C = parse_real("svm.C", *v);
        if (!(cfg.svm_C > 0.0)) throw config_error("svm.C: must be > 0");
    }
    if (const auto v = take("svm.tol")) {
        cfg.svm_tol = parse_real("svm.tol", *v);
        if (!(cfg.svm_tol > 0.0)) throw config_error("svm.tol: must be > 0");
    }
    if (const auto v = take("svm.max_passes")) {
        const long p = parse_int("svm.max_passes", *v);
        if (p < 1) throw config_error("svm.max_passes: must be >= 1");
        cfg.svm_max_passes = static_cast<int>(p);
    }

    if (const auto v = take("baselines")) {
        if (*v == "none") {
            cfg.baselines.clear();
        } else {
            cfg.baselines = parse_axis<ClassicalKernelKind>(
                "baselines", *v,
                [](const std::string& s) { return classical_kernel_from_name(s); });
        }
    }
    if (const auto v = take("baseline.gamma")) {
        if (*v == "auto") {
            cfg.baseline_gamma.reset();
        } else {
            const double g = parse_real("baseline.gamma", *v);
            if (!(g > 0.0)) throw config_error("baseline.gamma: must be > 0 or auto");
            cfg.baseline_gamma = g;
        }
    }
    if (const auto v = take("baseline.degree")) {
        const long d = parse_int("baseline.degree", *v);
        if (d < 1) throw config_error("baseline.degree: must be >= 1");
        cfg.baseline_degree = static_cast<int>(d);
    }
    if (const auto v = take("baseline.coef0")) {
        cfg.baseline_coef0 = parse_real("baseline.coef0", *v);
    }

    if (const auto v = take("split.train_frac")) {
        cfg.train_frac = parse_real("split.train_frac", *v);
        if (!(cfg.train_frac > 0.0 && cfg.train_frac < 1.0)) {
            throw config_error("split.train_frac: must lie strictly between 0 and 1");
        }
    }
    if (const auto v = take("split.seed")) cfg.split_seed = parse_u64("split.seed", *v);
    if (const auto v = take("seed")) cfg.master_seed = parse_u64("seed", *v);
    if (const auto v = take("out_dir")) cfg.out_dir = *v;

    if (!kv.empty()) throw config_error("unknown key '" + kv.begin()->first + "'");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& config) {
    std::ostringstream out;
    if (config.manifest) {
        out << "dataset.manifest = " << *config.manifest << '\n';
    } else if (config.synthetic) {
        out << "dataset.synthetic.n = " << config.synthetic->n << '\n';
        out << "dataset.synthetic.defect_rate = " << fmt_real(config.synthetic->defect_rate)
            << '\n';
    }
    out << "n_qubits = " << config.n_qubits << '\n';

    out << "encoding.kind = ";
    for (std::size_t i = 0; i < config.encoding_kinds.size(); ++i) {
        if (i) out << ',';
        out << encoding_kind_name(config.encoding_kinds[i]);
    }
    out << '\n';
    out << "encoding.iqp_depth = " << config.iqp_depth << '\n';
    out << "encoding.pairing = " << pairing_name(config.pairing) << '\n';
    out << "encoding.use_cphase = " << (config.use_cphase ? "true" : "false") << '\n';

    out << "kernel.mode = ";
    for (std::size_t i = 0; i < config.kernel_modes.size(); ++i) {
        if (i) out << ',';
        out << kernel_mode_name(config.kernel_modes[i]);
    }
    out << '\n';
    out << "kernel.shots = " << config.shots << '\n';
    out << "kernel.psd_repair = " << psd_repair_name(config.psd_repair) << '\n';

    out << "noise.coherent_idle_z = " << fmt_real(config.noise.coherent_idle_z) << '\n';
    out << "noise.depol_1q = " << fmt_real(config.noise.depol_1q) << '\n';
    out << "noise.depol_2q = " << fmt_real(config.noise.depol_2q) << '\n';
    out << "noise.noisy_dd_pulses = " << (config.noise.noisy_dd_pulses ? "true" : "false")
        << '\n';

    out << "dd.sequence = ";
    for (std::size_t i = 0; i < config.dd_axis.size(); ++i) {
        if (i) out << ',';
        out << (config.dd_axis[i] ? dd_name(*config.dd_axis[i]) : "none");
    }
    out << '\n';

    out << "svm.C = " << fmt_real(config.svm_C) << '\n';
    out << "svm.tol = " << fmt_real(config.svm_tol) << '\n';
    out << "svm.max_passes = " << config.svm_max_passes << '\n';

    out << "baselines = ";
    if (config.baselines.empty()) {
        out << "none";
    } else {
        for (std::size_t i = 0; i < config.baselines.size(); ++i) {
            if (i) out << ',';
            out << classical_kernel_name(config.baselines[i]);
        }
    }
    out << '\n';
    out << "baseline.gamma = "
        << (config.baseline_gamma ? fmt_real(*config.baseline_gamma) : "auto") << '\n';
    out << "baseline.degree = " << config.baseline_degree << '\n';
    out << "baseline.coef0 = " << fmt_real(config.baseline_coef0) << '\n';

    out << "split.train_frac = " << fmt_real(config.train_frac) << '\n';
    out << "split.seed = " << config.split_seed << '\n';
    out << "seed = " << config.master_seed << '\n';
    out << "out_dir = " << config.out_dir << '\n';
    return out.str();
}

uint64_t config_hash(const ExperimentConfig& config) {
    const std::string text = serialize_config(config);
    uint64_t h = 1469598103934665603ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace qki
