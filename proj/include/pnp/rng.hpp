#pragma once

#include <cmath>
#include <cstdint>
#include <random>

// Seeded randomness used across the library. The engine is std::mt19937_64,
// whose output sequence is pinned by the C++ standard, and all draw
// transforms below are written out explicitly instead of going through
// std::*_distribution (whose algorithms are implementation-defined), so a
// given seed produces the same stream on every platform.

namespace pnp {

using Rng = std::mt19937_64;

// splitmix64 step; used to derive independent sub-seeds from one run seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Sub-seed for stream `tag` of run seed `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t state = seed ^ (0xA0761D6478BD642FULL * (tag + 1));
    return splitmix64(state);
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in {0, ..., bound-1}, unbiased via rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

// Standard normal via Box-Muller; consumes exactly two engine draws.
inline double gaussian(Rng& rng) {
    const double u1 = 1.0 - uniform01(rng);  // (0, 1]
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace pnp
