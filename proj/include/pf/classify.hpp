#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "pf/error.hpp"
#include "pf/fft.hpp"
#include "pf/heads.hpp"
#include "pf/trace.hpp"

namespace pf {

// Thresholds and knobs for the tri-pattern cascade. alpha gates the sign
// rates, beta bounds the wave period, harmonic_count controls spectral
// folding. period_search_max (when > 0) drops candidate periods above it
// from the argmax; 0 disables the cap.
struct ClassifyConfig {
    double alpha = 0.80;
    double beta = 6.4;
    std::size_t harmonic_count = 4;
    std::size_t min_length = 8;
    double period_search_max = 0.0;

    void validate() const {
        require(alpha > 0.5 && alpha <= 1.0, Errc::InvalidArgument, "alpha must be in (0.5, 1]");
        require(beta >= 2.0, Errc::InvalidArgument, "beta must be >= 2");
        require(harmonic_count >= 1, Errc::InvalidArgument, "harmonic_count must be >= 1");
        require(min_length >= 4, Errc::InvalidArgument, "min_length must be >= 4");
        require(period_search_max == 0.0 || period_search_max >= 2.0, Errc::InvalidArgument,
                "period_search_max must be 0 (off) or >= 2");
    }
};

struct PeriodEstimate {
    double dominant_period = 0.0;
    double folded_score = 0.0;
    std::size_t spectrum_peak_index = 0;
};

// Fraction of strictly positive logits and its complement. Zeros count as
// non-positive.
inline std::pair<double, double> sign_rates(const LogitSequence& seq) {
    require(!seq.values.empty(), Errc::EmptyHistory, "sign_rates on empty sequence");
    std::size_t pos = 0;
    for (double v : seq.values)
        if (v > 0.0)
            ++pos;
    const double r_pos = static_cast<double>(pos) / static_cast<double>(seq.values.size());
    return {r_pos, 1.0 - r_pos};
}

inline double mean_logit(const LogitSequence& seq) {
    require(!seq.values.empty(), Errc::EmptyHistory, "mean_logit on empty sequence");
    double sum = 0.0;
    for (double v : seq.values)
        sum += v;
    return sum / static_cast<double>(seq.values.size());
}

// Dominant-period estimation. The stages, in order: first difference to
// emphasize inter-frame variation, mean removal, a Hanning window, a real
// FFT with the zero-frequency bin discarded, and harmonic folding with 1/h
// weights before the argmax. Bin k of the length-N differenced signal maps
// to the candidate period N/k.
inline PeriodEstimate estimate_period(const LogitSequence& seq, const ClassifyConfig& cfg) {
    cfg.validate();
    require(seq.size() >= cfg.min_length, Errc::InsufficientHistory,
            "sequence shorter than min_length");

    const std::size_t n = seq.size() - 1;  // differenced length
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i)
        d[i] = seq.values[i + 1] - seq.values[i];

    double mean = 0.0;
    for (double v : d)
        mean += v;
    mean /= static_cast<double>(n);

    for (std::size_t i = 0; i < n; ++i) {
        const double w =
            0.5 - 0.5 * std::cos(2.0 * fft::kPi * static_cast<double>(i) /
                                 static_cast<double>(n - 1));
        d[i] = (d[i] - mean) * w;
    }

    const std::vector<fft::cplx> spectrum = fft::rfft(d);
    const std::size_t nyquist = spectrum.size() - 1;  // bins 1..nyquist are candidates

    std::vector<double> mag(spectrum.size());
    double max_mag = 0.0;
    for (std::size_t k = 1; k <= nyquist; ++k) {
        mag[k] = std::abs(spectrum[k]);
        max_mag = std::max(max_mag, mag[k]);
    }
    require(max_mag > 0.0, Errc::AllZero, "differenced signal carries no spectral energy");

    PeriodEstimate best;
    bool found = false;
    for (std::size_t k = 1; k <= nyquist; ++k) {
        const double period = static_cast<double>(n) / static_cast<double>(k);
        if (cfg.period_search_max > 0.0 && period > cfg.period_search_max)
            continue;
        double score = 0.0;
        for (std::size_t h = 1; h <= cfg.harmonic_count; ++h) {
            const std::size_t bin = h * k;
            if (bin > nyquist)
                break;
            score += mag[bin] / static_cast<double>(h);
        }
        if (!found || score > best.folded_score) {
            best.dominant_period = period;
            best.folded_score = score;
            best.spectrum_peak_index = k;
            found = true;
        }
    }
    require(found, Errc::AllZero, "no candidate bins under period_search_max");
    return best;
}

// Full decision cascade. Sign-rate gating runs before the FFT so one-sided
// pseudo-periodic sequences never reach the wave test; a zero-energy
// spectrum falls through to the mean-logit rule.
inline HeadClass classify_head(const LogitSequence& seq, const ClassifyConfig& cfg) {
    cfg.validate();
    require(seq.size() >= cfg.min_length, Errc::InsufficientHistory,
            "sequence shorter than min_length");

    const auto [r_pos, r_neg] = sign_rates(seq);
    if (r_pos >= cfg.alpha)
        return {HeadKind::Anchor, std::nullopt};
    if (r_neg >= cfg.alpha)
        return {HeadKind::Veil, std::nullopt};

    bool have_period = false;
    double period = 0.0;
    try {
        const PeriodEstimate est = estimate_period(seq, cfg);
        have_period = true;
        period = est.dominant_period;
    } catch (const Error& e) {
        if (e.code() != Errc::AllZero)
            throw;
    }
    if (have_period && period < cfg.beta)
        return {HeadKind::Wave, period};

    return {mean_logit(seq) > 0.0 ? HeadKind::Anchor : HeadKind::Veil, std::nullopt};
}

namespace detail {

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Per-head classification with majority voting across prompts. Wave winners
// take the median of the wave-voting prompts' period estimates. Vote ties
// fall back to the mean logit of the prompt-pooled concatenated sequence and
// the head is flagged as tie-broken.
inline HeadClassMap classify_model(const LogitTrace& trace, const ClassifyConfig& cfg) {
    cfg.validate();
    HeadClassMap map(trace.num_layers(), trace.num_heads());
    map.prompts_voted = trace.num_prompts();

    for (std::size_t l = 0; l < trace.num_layers(); ++l)
        for (std::size_t h = 0; h < trace.num_heads(); ++h) {
            std::size_t votes[3] = {0, 0, 0};
            std::vector<double> wave_periods;
            std::size_t failures = 0;
            std::optional<Error> first_error;

            for (std::size_t p = 0; p < trace.num_prompts(); ++p) {
                try {
                    const HeadClass c = classify_head(trace.sequence(p, l, h), cfg);
                    ++votes[static_cast<std::size_t>(c.kind)];
                    if (c.kind == HeadKind::Wave)
                        wave_periods.push_back(*c.period);
                } catch (const Error& e) {
                    ++failures;
                    if (!first_error)
                        first_error = e;
                }
            }
            if (failures == trace.num_prompts())
                throw *first_error;

            const std::size_t top = std::max({votes[0], votes[1], votes[2]});
            const int winners = (votes[0] == top) + (votes[1] == top) + (votes[2] == top);

            HeadClass result;
            if (winners > 1) {
                // Pool every prompt's sequence in prompt order, then apply the
                // mean-logit fallback.
                std::vector<double> pooled;
                pooled.reserve(trace.num_prompts() * trace.num_frames());
                for (std::size_t p = 0; p < trace.num_prompts(); ++p) {
                    const LogitSequence s = trace.sequence(p, l, h);
                    pooled.insert(pooled.end(), s.values.begin(), s.values.end());
                }
                const double mean = mean_logit(LogitSequence(std::move(pooled)));
                result.kind = mean > 0.0 ? HeadKind::Anchor : HeadKind::Veil;
                map.set_tie_break(l, h, true);
            } else if (votes[static_cast<std::size_t>(HeadKind::Wave)] == top) {
                result.kind = HeadKind::Wave;
                result.period = detail::median(wave_periods);
            } else {
                result.kind = votes[0] == top ? HeadKind::Anchor : HeadKind::Veil;
            }
            map.at(l, h) = result;
        }
    return map;
}

}  // namespace pf
