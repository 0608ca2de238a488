#pragma once

#include <cmath>
#include <cstdint>

namespace pf::rng {

// Counter-based generators: every value is a pure function of (seed, stream
// coordinates), so synthesis is reproducible regardless of evaluation order
// or thread count, and never depends on libstdc++ distribution internals.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return splitmix64(h ^ (v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2)));
}

template <typename... Rest>
inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v, Rest... rest) {
    return hash_combine(hash_combine(h, v), static_cast<std::uint64_t>(rest)...);
}

// Uniform double in [0, 1) using the top 53 bits.
inline double uniform_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Uniform on [-sqrt(3), sqrt(3)]: zero mean, unit variance.
inline double unit_variance_uniform(std::uint64_t bits) {
    constexpr double root3 = 1.7320508075688772;
    return (2.0 * uniform_unit(bits) - 1.0) * root3;
}

// Standard normal via Box-Muller on two independent hashes.
inline double standard_normal(std::uint64_t bits_a, std::uint64_t bits_b) {
    const double u1 = 1.0 - uniform_unit(bits_a);  // (0, 1], keeps log finite
    const double u2 = uniform_unit(bits_b);
    constexpr double two_pi = 6.283185307179586;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace pf::rng
