// Timing harness comparing the serial reference gate kernels against the
// OpenMP variants, plus a whole kernel-matrix assembly at 1 thread vs all.
// Results must be bit-identical across the pairs; the harness checks that
// too and flags any mismatch.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "qki/qkernel.hpp"
#include "qki/rng.hpp"
#include "qki/statevec.hpp"

using namespace qki;

namespace {

double now() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

bool same_bits(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(cplx)) == 0;
}

// Fills the state with a normalized pseudorandom vector so the kernels chew
// on non-trivial data.
std::vector<cplx> random_amps(int n_qubits, uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<cplx> amps(size_t{1} << n_qubits);
    double norm2 = 0.0;
    for (cplx& a : amps) {
        a = {rng.next_double() - 0.5, rng.next_double() - 0.5};
        norm2 += std::norm(a);
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (cplx& a : amps) a *= inv;
    return amps;
}

struct Timed {
    double serial = 0.0;
    double parallel = 0.0;
    bool identical = false;
};

void report(const char* name, const Timed& t) {
    std::printf("%-24s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx   %s\n", name,
                t.serial * 1e3, t.parallel * 1e3,
                t.parallel > 0 ? t.serial / t.parallel : 0.0,
                t.identical ? "bit-identical" : "MISMATCH");
}

Timed bench_1q(int n_qubits, int reps) {
    const Gate2x2 g = gates::h();
    const std::vector<cplx> init = random_amps(n_qubits, 11);
    std::vector<cplx> a = init, b = init;

    Timed t;
    double t0 = now();
    for (int r = 0; r < reps; ++r)
        for (int q = 0; q < n_qubits; ++q) kernels::apply_1q_serial(a, g, q);
    t.serial = (now() - t0) / (reps * n_qubits);

    t0 = now();
    for (int r = 0; r < reps; ++r)
        for (int q = 0; q < n_qubits; ++q) kernels::apply_1q_parallel(b, g, q);
    t.parallel = (now() - t0) / (reps * n_qubits);
    t.identical = same_bits(a, b);
    return t;
}

Timed bench_2q(int n_qubits, int reps) {
    const Gate4x4 g = gates::cnot();
    const std::vector<cplx> init = random_amps(n_qubits, 13);
    std::vector<cplx> a = init, b = init;
    const int pairs = n_qubits - 1;

    Timed t;
    double t0 = now();
    for (int r = 0; r < reps; ++r)
        for (int q = 0; q + 1 < n_qubits; ++q) kernels::apply_2q_serial(a, g, q, q + 1);
    t.serial = (now() - t0) / (reps * pairs);

    t0 = now();
    for (int r = 0; r < reps; ++r)
        for (int q = 0; q + 1 < n_qubits; ++q) kernels::apply_2q_parallel(b, g, q, q + 1);
    t.parallel = (now() - t0) / (reps * pairs);
    t.identical = same_bits(a, b);
    return t;
}

// Whole-matrix assembly: entry-level OpenMP parallelism rather than
// amplitude-level, which is where the production runner spends its time.
Timed bench_matrix(int n_qubits, int samples) {
    SplitMix64 rng(17);
    std::vector<FeatureVector> xs(samples);
    for (auto& x : xs) {
        x.resize(n_qubits);
        for (double& v : x) v = rng.next_double() * 3.14159265358979323846;
    }
    KernelConfig config;
    config.encoding.kind = EncodingKind::Angle;
    config.encoding.n_qubits = n_qubits;
    config.master_seed = 5;

    Timed t;
#ifdef _OPENMP
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
#endif
    double t0 = now();
    const KernelMatrix k1 = kernel_matrix(xs, config);
    t.serial = now() - t0;
#ifdef _OPENMP
    omp_set_num_threads(saved);
#endif
    t0 = now();
    const KernelMatrix kn = kernel_matrix(xs, config);
    t.parallel = now() - t0;
    t.identical = k1.entries.data.size() == kn.entries.data.size() &&
                  std::memcmp(k1.entries.data.data(), kn.entries.data.data(),
                              k1.entries.data.size() * sizeof(double)) == 0;
    return t;
}

}  // namespace

int main(int argc, char** argv) {
    int n_qubits = 20;
    int reps = 3;
    int samples = 12;

    CLI::App app{"gate-kernel and matrix-assembly benchmark"};
    app.add_option("--qubits", n_qubits, "state size for the gate benchmarks")
        ->check(CLI::Range(1, 24));
    app.add_option("--reps", reps, "sweep repetitions")->check(CLI::Range(1, 1000));
    app.add_option("--samples", samples, "kernel matrix side length")
        ->check(CLI::Range(2, 200));
    CLI11_PARSE(app, argc, argv);

    std::printf("%d qubits (%zu amplitudes), %d threads available\n", n_qubits,
                size_t{1} << n_qubits, max_threads());
    std::printf("per-gate times averaged over %d sweeps\n\n", reps);

    report("1q gate sweep", bench_1q(n_qubits, reps));
    report("2q gate sweep", bench_2q(n_qubits, reps));

    const int mat_qubits = n_qubits >= 16 ? 16 : n_qubits;
    std::printf("\nkernel matrix %dx%d at %d qubits, 1 thread vs %d\n", samples, samples,
                mat_qubits, max_threads());
    report("matrix assembly", bench_matrix(mat_qubits, samples));
    return 0;
}
