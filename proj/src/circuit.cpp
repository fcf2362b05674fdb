#include "qki/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "qki/rng.hpp"

namespace qki {

int gate_arity(GateKind kind) {
    switch (kind) {
        case GateKind::CNOT:
        case GateKind::CZ:
        case GateKind::CPHASE:
            return 2;
        default:
            return 1;
    }
}

bool gate_has_angle(GateKind kind) {
    return kind == GateKind::RX || kind == GateKind::RZ || kind == GateKind::CPHASE;
}

const char* gate_name(GateKind kind) {
    switch (kind) {
        case GateKind::H: return "H";
        case GateKind::X: return "X";
        case GateKind::Y: return "Y";
        case GateKind::Z: return "Z";
        case GateKind::RX: return "RX";
        case GateKind::RZ: return "RZ";
        case GateKind::CNOT: return "CNOT";
        case GateKind::CZ: return "CZ";
        case GateKind::CPHASE: return "CPHASE";
    }
    return "?";
}

Circuit::Circuit(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 1) {
        throw std::invalid_argument("circuit needs at least one qubit");
    }
}

Circuit& Circuit::add(const Gate& g) {
    const int arity = gate_arity(g.kind);
    if (g.q0 < 0 || g.q0 >= n_qubits_) {
        throw std::invalid_argument("gate qubit " + std::to_string(g.q0) + " out of range");
    }
    if (arity == 2) {
        if (g.q1 < 0 || g.q1 >= n_qubits_) {
            throw std::invalid_argument("gate qubit " + std::to_string(g.q1) + " out of range");
        }
        if (g.q0 == g.q1) {
            throw std::invalid_argument("two-qubit gate requires distinct qubits");
        }
    } else if (g.q1 != -1) {
        throw std::invalid_argument("one-qubit gate carries a second operand");
    }
    if (gate_has_angle(g.kind)) {
        if (!std::isfinite(g.angle)) {
            throw std::invalid_argument("rotation angle must be finite");
        }
    } else if (g.angle != 0.0) {
        throw std::invalid_argument("fixed gate carries an angle");
    }
    gates_.push_back(g);
    return *this;
}

MomentSchedule schedule_moments(const Circuit& circuit) {
    MomentSchedule sched;
    sched.n_qubits = circuit.n_qubits();
    std::vector<size_t> frontier(circuit.n_qubits(), 0);
    for (const Gate& g : circuit.gates()) {
        size_t m = frontier[g.q0];
        if (gate_arity(g.kind) == 2) m = std::max(m, frontier[g.q1]);
        if (m >= sched.moments.size()) sched.moments.resize(m + 1);
        sched.moments[m].push_back(g);
        frontier[g.q0] = m + 1;
        if (gate_arity(g.kind) == 2) frontier[g.q1] = m + 1;
    }
    return sched;
}

Circuit flatten(const MomentSchedule& schedule) {
    Circuit out(schedule.n_qubits);
    for (const auto& moment : schedule.moments) {
        for (const Gate& g : moment) out.add(g);
    }
    return out;
}

namespace {

Gate dagger_gate(const Gate& g) {
    Gate out = g;
    if (gate_has_angle(g.kind)) out.angle = -g.angle;
    return out;  // H, X, Y, Z, CNOT, CZ are self-inverse
}

}  // namespace

Circuit inverse(const Circuit& circuit) {
    Circuit out(circuit.n_qubits());
    const auto& gs = circuit.gates();
    for (auto it = gs.rbegin(); it != gs.rend(); ++it) {
        out.add(dagger_gate(*it));
    }
    return out;
}

std::vector<GateKind> dd_pulse_kinds(DdSequence seq) {
    switch (seq) {
        case DdSequence::XX: return {GateKind::X, GateKind::X};
        case DdSequence::XYXY: return {GateKind::X, GateKind::Y, GateKind::X, GateKind::Y};
        case DdSequence::YY: return {GateKind::Y, GateKind::Y};
    }
    return {};
}

const char* dd_name(DdSequence seq) {
    switch (seq) {
        case DdSequence::XX: return "XX";
        case DdSequence::XYXY: return "XYXY";
        case DdSequence::YY: return "YY";
    }
    return "?";
}

Circuit insert_dd(const Circuit& circuit, DdSequence seq) {
    const auto pulses = dd_pulse_kinds(seq);
    const size_t len = pulses.size();
    MomentSchedule sched = schedule_moments(circuit);
    const size_t n_moments = sched.moments.size();
    if (n_moments == 0) return circuit;

    // busy[m][q]: qubit q has a gate in moment m
    std::vector<std::vector<bool>> busy(n_moments, std::vector<bool>(circuit.n_qubits(), false));
    for (size_t m = 0; m < n_moments; ++m) {
        for (const Gate& g : sched.moments[m]) {
            busy[m][g.q0] = true;
            if (gate_arity(g.kind) == 2) busy[m][g.q1] = true;
        }
    }

    bool any = false;
    for (int q = 0; q < circuit.n_qubits(); ++q) {
        size_t m = 0;
        while (m < n_moments) {
            if (busy[m][q]) {
                ++m;
                continue;
            }
            size_t end = m;
            while (end < n_moments && !busy[end][q]) ++end;
            const size_t window = end - m;
            const size_t reps = window / len;
            for (size_t r = 0; r < reps; ++r) {
                for (size_t p = 0; p < len; ++p) {
                    Gate pulse{pulses[p], 0.0, q, -1, true};
                    sched.moments[m + r * len + p].push_back(pulse);
                }
            }
            if (reps > 0) any = true;
            m = end;
        }
    }
    if (!any) return circuit;
    Circuit out = flatten(sched);
    return out;
}

void validate(const NoiseModel& noise) {
    if (!std::isfinite(noise.coherent_idle_z)) {
        throw std::invalid_argument("coherent_idle_z must be finite");
    }
    if (!(noise.depol_1q >= 0.0 && noise.depol_1q <= 1.0) ||
        !(noise.depol_2q >= 0.0 && noise.depol_2q <= 1.0)) {
        throw std::invalid_argument("depolarizing probabilities must lie in [0, 1]");
    }
}

namespace {

void apply_gate(StateVector& state, const Gate& g) {
    switch (g.kind) {
        case GateKind::H: state.apply_1q(gates::h(), g.q0); break;
        case GateKind::X: state.apply_1q(gates::x(), g.q0); break;
        case GateKind::Y: state.apply_1q(gates::y(), g.q0); break;
        case GateKind::Z: state.apply_1q(gates::z(), g.q0); break;
        case GateKind::RX: state.apply_1q(gates::rx(g.angle), g.q0); break;
        case GateKind::RZ: state.apply_1q(gates::rz(g.angle), g.q0); break;
        case GateKind::CNOT: state.apply_2q(gates::cnot(), g.q0, g.q1); break;
        case GateKind::CZ: state.apply_2q(gates::cz(), g.q0, g.q1); break;
        case GateKind::CPHASE: state.apply_2q(gates::cphase(g.angle), g.q0, g.q1); break;
    }
}

void apply_pauli(StateVector& state, uint32_t which, int q) {
    switch (which) {
        case 0: state.apply_1q(gates::x(), q); break;
        case 1: state.apply_1q(gates::y(), q); break;
        default: state.apply_1q(gates::z(), q); break;
    }
}

}  // namespace

void simulate_into(const MomentSchedule& schedule, const std::optional<NoiseModel>& noise,
                   uint64_t seed, StateVector& state) {
    if (schedule.n_qubits != state.n_qubits()) {
        throw std::invalid_argument("schedule and state qubit counts differ");
    }
    if (noise) validate(*noise);
    state.reset();
    SplitMix64 rng(seed);
    std::vector<bool> touched(schedule.n_qubits, false);
    for (const auto& moment : schedule.moments) {
        std::fill(touched.begin(), touched.end(), false);
        for (const Gate& g : moment) {
            apply_gate(state, g);
            touched[g.q0] = true;
            const bool two = gate_arity(g.kind) == 2;
            if (two) touched[g.q1] = true;
            if (!noise) continue;
            if (g.dd_pulse && !noise->noisy_dd_pulses) continue;
            if (two) {
                if (noise->depol_2q > 0.0 && rng.next_double() < noise->depol_2q) {
                    const uint32_t code = rng.next_below(15) + 1;  // skip identity x identity
                    const uint32_t p0 = code >> 2, p1 = code & 3;
                    if (p0 != 0) apply_pauli(state, p0 - 1, g.q0);
                    if (p1 != 0) apply_pauli(state, p1 - 1, g.q1);
                }
            } else {
                if (noise->depol_1q > 0.0 && rng.next_double() < noise->depol_1q) {
                    apply_pauli(state, rng.next_below(3), g.q0);
                }
            }
        }
        if (noise && noise->coherent_idle_z != 0.0) {
            const Gate2x2 drift = gates::rz(noise->coherent_idle_z);
            for (int q = 0; q < schedule.n_qubits; ++q) {
                if (!touched[q]) state.apply_1q(drift, q);
            }
        }
    }
}

StateVector simulate(const Circuit& circuit, const std::optional<NoiseModel>& noise,
                     uint64_t seed) {
    StateVector state(circuit.n_qubits());
    simulate_into(schedule_moments(circuit), noise, seed, state);
    return state;
}

std::string to_text(const Circuit& circuit) {
    std::string out = "# n_qubits " + std::to_string(circuit.n_qubits()) + "\n";
    char buf[64];
    for (const Gate& g : circuit.gates()) {
        out += gate_name(g.kind);
        if (gate_has_angle(g.kind)) {
            std::snprintf(buf, sizeof(buf), " %.17g", g.angle);
            out += buf;
        }
        out += ' ';
        out += std::to_string(g.q0);
        if (gate_arity(g.kind) == 2) {
            out += ' ';
            out += std::to_string(g.q1);
        }
        out += '\n';
    }
    return out;
}

Circuit circuit_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int n_qubits = -1;
    struct Parsed {
        GateKind kind;
        double angle;
        int q0, q1;
    };
    std::vector<Parsed> parsed;
    int max_q = -1;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hdr(line.substr(1));
            std::string key;
            hdr >> key;
            if (key == "n_qubits") hdr >> n_qubits;
            continue;
        }
        std::istringstream ls(line);
        std::string name;
        ls >> name;
        GateKind kind;
        if (name == "H") kind = GateKind::H;
        else if (name == "X") kind = GateKind::X;
        else if (name == "Y") kind = GateKind::Y;
        else if (name == "Z") kind = GateKind::Z;
        else if (name == "RX") kind = GateKind::RX;
        else if (name == "RZ") kind = GateKind::RZ;
        else if (name == "CNOT") kind = GateKind::CNOT;
        else if (name == "CZ") kind = GateKind::CZ;
        else if (name == "CPHASE") kind = GateKind::CPHASE;
        else throw io_error("circuit text line " + std::to_string(lineno) + ": unknown gate '" + name + "'");
        Parsed p{kind, 0.0, -1, -1};
        if (gate_has_angle(kind)) {
            if (!(ls >> p.angle)) {
                throw io_error("circuit text line " + std::to_string(lineno) + ": missing angle");
            }
        }
        if (!(ls >> p.q0)) {
            throw io_error("circuit text line " + std::to_string(lineno) + ": missing qubit");
        }
        if (gate_arity(kind) == 2 && !(ls >> p.q1)) {
            throw io_error("circuit text line " + std::to_string(lineno) + ": missing second qubit");
        }
        max_q = std::max({max_q, p.q0, p.q1});
        parsed.push_back(p);
    }
    if (n_qubits < 0) n_qubits = max_q + 1;
    if (n_qubits < 1) throw io_error("circuit text declares no qubits");
    Circuit out(n_qubits);
    for (const Parsed& p : parsed) {
        out.add({p.kind, p.angle, p.q0, p.q1});
    }
    return out;
}

}  // namespace qki
