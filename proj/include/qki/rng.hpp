#pragma once

#include <cstdint>

namespace qki {

// Seed derivation and trajectory RNG. The exact constants are part of the
// on-disk reproducibility contract: derived seeds and shot streams must not
// change between releases, or persisted kernels stop being reproducible.

/// One splitmix64 scramble round (Steele, Lea, Flood 2014 finalizer).
inline constexpr uint64_t splitmix64_mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derive a child seed from a parent seed and a stream index.
/// Avalanche mix of (parent, index); order-independent by construction.
inline constexpr uint64_t mix_seed(uint64_t parent, uint64_t index) {
    return splitmix64_mix(parent + 0x9E3779B97F4A7C15ULL * (index + 1));
}

/// Small counter-based generator used for noise trajectories and shot
/// sampling. Identical seed, identical stream, on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return splitmix64_mix(state_);
    }

    /// Uniform double in [0, 1), 53 bits of entropy.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be small relative to 2^64; the
    /// floor-scale method is bias-free enough for Pauli selection.
    uint32_t next_below(uint32_t n) {
        return static_cast<uint32_t>(next_double() * static_cast<double>(n));
    }

private:
    uint64_t state_;
};

}  // namespace qki
