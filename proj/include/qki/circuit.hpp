#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qki/statevec.hpp"

namespace qki {

enum class GateKind { H, X, Y, Z, RX, RZ, CNOT, CZ, CPHASE };

int gate_arity(GateKind kind);
bool gate_has_angle(GateKind kind);
const char* gate_name(GateKind kind);

struct Gate {
    GateKind kind;
    double angle = 0.0;  // rotation kinds only; must be finite
    int q0 = -1;
    int q1 = -1;         // second operand for 2-qubit kinds
    bool dd_pulse = false;

    bool operator==(const Gate& other) const {
        return kind == other.kind && angle == other.angle && q0 == other.q0 && q1 == other.q1;
    }
};

/// Ordered gate list over a fixed qubit count.
class Circuit {
public:
    explicit Circuit(int n_qubits);

    /// Validates arity, angle finiteness, and qubit ranges.
    Circuit& add(const Gate& g);

    Circuit& h(int q) { return add({GateKind::H, 0.0, q}); }
    Circuit& x(int q) { return add({GateKind::X, 0.0, q}); }
    Circuit& y(int q) { return add({GateKind::Y, 0.0, q}); }
    Circuit& z(int q) { return add({GateKind::Z, 0.0, q}); }
    Circuit& rx(int q, double theta) { return add({GateKind::RX, theta, q}); }
    Circuit& rz(int q, double theta) { return add({GateKind::RZ, theta, q}); }
    Circuit& cnot(int ctrl, int tgt) { return add({GateKind::CNOT, 0.0, ctrl, tgt}); }
    Circuit& cz(int ctrl, int tgt) { return add({GateKind::CZ, 0.0, ctrl, tgt}); }
    Circuit& cphase(int ctrl, int tgt, double theta) {
        return add({GateKind::CPHASE, theta, ctrl, tgt});
    }

    int n_qubits() const { return n_qubits_; }
    const std::vector<Gate>& gates() const { return gates_; }
    size_t size() const { return gates_.size(); }

    bool operator==(const Circuit& other) const {
        return n_qubits_ == other.n_qubits_ && gates_ == other.gates_;
    }

private:
    int n_qubits_;
    std::vector<Gate> gates_;
};

/// Layered time model: each moment is a set of gates on disjoint qubits,
/// every moment costs one time unit.
struct MomentSchedule {
    int n_qubits = 0;
    std::vector<std::vector<Gate>> moments;
};

/// Greedy as-soon-as-possible layering: each gate lands in the earliest
/// moment after every prior gate touching its qubits.
MomentSchedule schedule_moments(const Circuit& circuit);

/// Flattens moments in order back into a circuit.
Circuit flatten(const MomentSchedule& schedule);

/// Reverses the gate list and replaces each gate by its adjoint.
Circuit inverse(const Circuit& circuit);

/// Dynamical-decoupling pulse trains. Each expands to a pulse list whose
/// product is identity up to global phase.
enum class DdSequence { XX, XYXY, YY };

std::vector<GateKind> dd_pulse_kinds(DdSequence seq);
const char* dd_name(DdSequence seq);

/// Fills every maximal idle window of length >= L (L = pulse count) with
/// floor(w/L) back-to-back repetitions of the sequence, placed at the start
/// of the window; leftover slots stay idle. Circuits without a qualifying
/// window come back unchanged, gate for gate.
Circuit insert_dd(const Circuit& circuit, DdSequence seq);

/// Trajectory noise. coherent_idle_z is a systematic RZ(epsilon) applied to
/// each idle qubit after every moment. depol_1q / depol_2q attach a uniformly
/// random non-identity Pauli (pair) after each gate with the given
/// probability. DD pulses are ideal unless noisy_dd_pulses is set.
struct NoiseModel {
    double coherent_idle_z = 0.0;
    double depol_1q = 0.0;
    double depol_2q = 0.0;
    bool noisy_dd_pulses = false;
    bool operator==(const NoiseModel&) const = default;
};

void validate(const NoiseModel& noise);

/// Executes the circuit's moment schedule from |0...0>. With noise absent the
/// result is deterministic and seed-independent; with noise present the seed
/// fully determines every Pauli draw (one trajectory).
StateVector simulate(const Circuit& circuit, const std::optional<NoiseModel>& noise,
                     uint64_t seed);

/// Same, over a prebuilt schedule, reusing `state` as the output buffer.
void simulate_into(const MomentSchedule& schedule, const std::optional<NoiseModel>& noise,
                   uint64_t seed, StateVector& state);

/// Line-oriented text form, one gate per line: `KIND angle? q0 [q1]`, angles
/// as full-precision decimals. A leading `# n_qubits N` comment pins the
/// width; without it the reader infers max index + 1. DD-pulse marks do not
/// survive the round trip.
std::string to_text(const Circuit& circuit);
Circuit circuit_from_text(const std::string& text);

}  // namespace qki
