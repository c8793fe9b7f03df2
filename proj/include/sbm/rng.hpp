#pragma once

#include <cstdint>
#include <random>

namespace sbm {

// All stochastic code takes an injected seedable 64-bit generator; CLI runs
// log their seed so experiments are reproducible for a given build.
using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t seed) { return Rng(seed); }

// Derives an independent stream (parallel chains, restarts).
inline Rng spawn_rng(uint64_t seed, uint64_t stream) {
    std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                      static_cast<uint32_t>(stream),
                      static_cast<uint32_t>(stream >> 32), 0x9e3779b9u};
    return Rng(seq);
}

inline double rand_real(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// uniform integer in [0, n)
inline int64_t rand_index(Rng& rng, int64_t n) {
    return std::uniform_int_distribution<int64_t>(0, n - 1)(rng);
}

} // namespace sbm
