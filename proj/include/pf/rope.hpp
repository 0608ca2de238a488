#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "pf/error.hpp"

namespace pf {

// Rotary-embedding frequency table: theta_i = 10000^(-2i/d) for each of the
// d/2 two-dimensional subspaces. theta_0 is exactly 1, so the slowest
// component of a query-key score oscillates with period 2*pi in the relative
// frame distance.
struct RopeTable {
    std::size_t head_dim = 0;
    std::vector<double> thetas;
};

inline RopeTable rope_frequencies(std::size_t d) {
    require(d >= 2 && d % 2 == 0, Errc::InvalidArgument, "head dim must be even and >= 2");
    RopeTable table;
    table.head_dim = d;
    table.thetas.resize(d / 2);
    for (std::size_t i = 0; i < d / 2; ++i)
        table.thetas[i] =
            std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(d));
    return table;
}

// Rotates each interleaved pair (x[2i], x[2i+1]) by position * theta_i.
// Positions are integer slot indices; the norm is preserved.
inline std::vector<double> apply_rope(const RopeTable& table, const std::vector<double>& x,
                                      std::int64_t position) {
    require(x.size() == table.head_dim, Errc::ShapeMismatch,
            "vector dim does not match the rope table");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < table.thetas.size(); ++i) {
        const double angle = static_cast<double>(position) * table.thetas[i];
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        out[2 * i] = x[2 * i] * c - x[2 * i + 1] * s;
        out[2 * i + 1] = x[2 * i] * s + x[2 * i + 1] * c;
    }
    return out;
}

// In-place variant over a contiguous row; used by the simulator's gather path.
inline void apply_rope_inplace(const RopeTable& table, double* row, std::int64_t position) {
    for (std::size_t i = 0; i < table.thetas.size(); ++i) {
        const double angle = static_cast<double>(position) * table.thetas[i];
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        const double a = row[2 * i];
        const double b = row[2 * i + 1];
        row[2 * i] = a * c - b * s;
        row[2 * i + 1] = a * s + b * c;
    }
}

// Period of the slowest rotary component, 2*pi / theta_0 = 2*pi. Under
// integer frame sampling the perceived period is round(2*pi) = 6.
inline double dominant_rope_period(std::size_t d) {
    require(d >= 2 && d % 2 == 0, Errc::InvalidArgument, "head dim must be even and >= 2");
    constexpr double two_pi = 6.283185307179586;
    return two_pi;
}

}  // namespace pf
