#pragma once

// Independent reference implementations used to cross-check the production
// paths: a definition-level DFT, scalar-loop attention without the
// max-subtraction rearrangement, a masked padded-dense oracle for ragged
// attention, and direct-substitution index formulas. These deliberately do
// not share code with the modules they verify.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "pf/error.hpp"

namespace pf::ref {

inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    constexpr double two_pi = 6.283185307179586;
    for (std::size_t k = 0; k < n; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = -two_pi * static_cast<double>(k) * static_cast<double>(j) /
                               static_cast<double>(n);
            re += x[j] * std::cos(ang);
            im += x[j] * std::sin(ang);
        }
        out[k] = {re, im};
    }
    return out;
}

// Period-estimation pipeline re-derived from scratch on top of the naive
// DFT: first difference, mean removal, Hanning window, harmonic folding with
// 1/h weights, argmax over bins 1..floor(N/2).
struct PeriodRef {
    double period = 0.0;
    std::size_t peak_bin = 0;
    std::vector<double> folded_scores;  // index k, k = 0 unused
};

inline PeriodRef period_reference(const std::vector<double>& seq, std::size_t harmonics) {
    require(seq.size() >= 2, Errc::InsufficientHistory, "sequence too short");
    const std::size_t n = seq.size() - 1;
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i)
        d[i] = seq[i + 1] - seq[i];
    double mean = 0.0;
    for (double v : d)
        mean += v;
    mean /= static_cast<double>(n);
    constexpr double two_pi = 6.283185307179586;
    for (std::size_t i = 0; i < n; ++i)
        d[i] = (d[i] - mean) *
               (0.5 - 0.5 * std::cos(two_pi * static_cast<double>(i) / static_cast<double>(n - 1)));

    const auto spectrum = naive_dft(d);
    const std::size_t nyquist = n / 2;
    PeriodRef out;
    out.folded_scores.assign(nyquist + 1, 0.0);
    double best = -1.0;
    for (std::size_t k = 1; k <= nyquist; ++k) {
        double score = 0.0;
        for (std::size_t h = 1; h <= harmonics; ++h) {
            if (h * k > nyquist)
                break;
            score += std::abs(spectrum[h * k]) / static_cast<double>(h);
        }
        out.folded_scores[k] = score;
        if (score > best) {
            best = score;
            out.peak_bin = k;
        }
    }
    require(best > 0.0, Errc::AllZero, "reference spectrum is all zero");
    out.period = static_cast<double>(n) / static_cast<double>(out.peak_bin);
    return out;
}

// Plain-softmax attention for one (query rows x key rows) block; no
// numerical rearrangement.
inline std::vector<double> naive_attention(const std::vector<double>& q,
                                           const std::vector<double>& k,
                                           const std::vector<double>& v, std::size_t lq,
                                           std::size_t lkv, std::size_t d) {
    std::vector<double> out(lq * d, 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < lq; ++i) {
        std::vector<double> w(lkv);
        double denom = 0.0;
        for (std::size_t j = 0; j < lkv; ++j) {
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c)
                dot += q[i * d + c] * k[j * d + c];
            w[j] = std::exp(dot * scale);
            denom += w[j];
        }
        for (std::size_t j = 0; j < lkv; ++j)
            for (std::size_t c = 0; c < d; ++c)
                out[i * d + c] += (w[j] / denom) * v[j * d + c];
    }
    return out;
}

// Padded-dense oracle for ragged attention: pads every segment to the
// longest length and masks padding logits with a large negative additive
// term before the softmax. Valid output rows are returned concatenated in
// segment order.
inline std::vector<double> padded_masked_attention(
    const std::vector<std::vector<double>>& q_blocks,
    const std::vector<std::vector<double>>& k_blocks,
    const std::vector<std::vector<double>>& v_blocks, std::size_t d) {
    const std::size_t segs = q_blocks.size();
    std::size_t max_kv = 0;
    for (const auto& k : k_blocks)
        max_kv = std::max(max_kv, k.size() / d);

    std::vector<double> out;
    constexpr double mask = -1e30;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t s = 0; s < segs; ++s) {
        const std::size_t lq = q_blocks[s].size() / d;
        const std::size_t lkv = k_blocks[s].size() / d;
        for (std::size_t i = 0; i < lq; ++i) {
            std::vector<double> logits(max_kv, mask);
            for (std::size_t j = 0; j < lkv; ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < d; ++c)
                    dot += q_blocks[s][i * d + c] * k_blocks[s][j * d + c];
                logits[j] = dot * scale;
            }
            double row_max = mask;
            for (std::size_t j = 0; j < max_kv; ++j)
                row_max = std::max(row_max, logits[j]);
            double denom = 0.0;
            std::vector<double> w(max_kv);
            for (std::size_t j = 0; j < max_kv; ++j) {
                w[j] = std::exp(logits[j] - row_max);
                denom += w[j];
            }
            for (std::size_t c = 0; c < d; ++c) {
                double acc = 0.0;
                for (std::size_t j = 0; j < lkv; ++j)
                    acc += (w[j] / denom) * v_blocks[s][j * d + c];
                // Padding rows contribute exp(mask - row_max) ~ 0 weight and
                // no V rows are read for them.
                out.push_back(acc);
            }
        }
    }
    return out;
}

// Direct substitution of the strided-window formula, one i at a time.
inline std::vector<std::int64_t> anchor_indices_reference(std::int64_t t, std::int64_t cap,
                                                          std::int64_t lower_bound) {
    std::vector<std::int64_t> out;
    if (t <= cap) {
        for (std::int64_t f = std::max<std::int64_t>(lower_bound, 0); f < t; ++f)
            out.push_back(f);
        return out;
    }
    for (std::int64_t i = 0; i < cap; ++i) {
        const std::int64_t idx = t - (i * t) / cap - t / (2 * cap);
        if (idx >= lower_bound && idx < t)
            out.push_back(idx);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Direct substitution of the periodic-sampling formula.
inline std::vector<std::int64_t> wave_indices_reference(std::int64_t t, std::int64_t cap,
                                                        double period,
                                                        std::int64_t lower_bound) {
    std::vector<std::int64_t> out;
    for (std::int64_t i = 0; i < cap; ++i) {
        const double shift = static_cast<double>(i) * period;
        const std::int64_t idx = t - static_cast<std::int64_t>(std::floor(shift + 0.5));
        if (idx >= lower_bound)
            out.push_back(idx);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace pf::ref
