#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "pf/error.hpp"

namespace pf::fft {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

inline bool is_pow2(std::size_t n) {
    return n != 0 && (n & (n - 1)) == 0;
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

// In-place iterative radix-2 Cooley-Tukey. Twiddles are computed directly
// per butterfly column (no running-product accumulation), which keeps the
// arithmetic order fixed and the rounding independent of vectorization.
inline void transform_pow2(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    require(is_pow2(n), Errc::InvalidArgument, "transform_pow2 needs a power-of-two length");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(a[i], a[j]);
    }
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        for (std::size_t j = 0; j < half; ++j) {
            const double ang = sign * 2.0 * kPi * static_cast<double>(j) / static_cast<double>(len);
            const cplx w(std::cos(ang), std::sin(ang));
            for (std::size_t i = 0; i < n; i += len) {
                const cplx u = a[i + j];
                const cplx v = a[i + j + half] * w;
                a[i + j] = u + v;
                a[i + j + half] = u - v;
            }
        }
    }
    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& x : a)
            x *= inv_n;
    }
}

// Forward DFT of arbitrary length. Power-of-two sizes go straight to the
// radix-2 kernel; everything else uses Bluestein's chirp-z reduction to a
// power-of-two convolution. The quadratic chirp exponent is reduced mod 2n
// before the angle is formed so k*k stays exactly representable.
inline std::vector<cplx> transform(const std::vector<cplx>& input) {
    const std::size_t n = input.size();
    require(n > 0, Errc::InvalidArgument, "empty FFT input");
    if (n == 1)
        return input;
    if (is_pow2(n)) {
        std::vector<cplx> a = input;
        transform_pow2(a, false);
        return a;
    }

    std::vector<cplx> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t k2 = (k * k) % (2 * n);
        const double ang = -kPi * static_cast<double>(k2) / static_cast<double>(n);
        chirp[k] = cplx(std::cos(ang), std::sin(ang));
    }

    const std::size_t m = next_pow2(2 * n - 1);
    std::vector<cplx> a(m, cplx(0.0, 0.0));
    std::vector<cplx> b(m, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k)
        a[k] = input[k] * chirp[k];
    b[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k)
        b[k] = b[m - k] = std::conj(chirp[k]);

    transform_pow2(a, false);
    transform_pow2(b, false);
    for (std::size_t i = 0; i < m; ++i)
        a[i] *= b[i];
    transform_pow2(a, true);

    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k)
        out[k] = a[k] * chirp[k];
    return out;
}

// Real-input FFT: bins 0..floor(n/2) of the full transform.
inline std::vector<cplx> rfft(const std::vector<double>& x) {
    std::vector<cplx> in(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        in[i] = cplx(x[i], 0.0);
    std::vector<cplx> full = transform(in);
    full.resize(x.size() / 2 + 1);
    return full;
}

}  // namespace pf::fft
