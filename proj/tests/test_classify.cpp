#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "pf/classify.hpp"
#include "pf/reference.hpp"
#include "pf/rng.hpp"

namespace {

constexpr double kTwoPi = 6.283185307179586;

pf::LogitSequence cosine(std::size_t length, double period, double base = 0.0,
                         double amplitude = 1.0) {
    std::vector<double> v(length);
    for (std::size_t i = 0; i < length; ++i)
        v[i] = base + amplitude * std::cos(kTwoPi * static_cast<double>(i + 1) / period);
    return pf::LogitSequence(std::move(v));
}

pf::Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const pf::Error& e) {
        return e.code();
    }
    FAIL("expected a pf::Error");
    return pf::Errc::IoError;
}

// Random sequence mixing the three shapes plus raw noise; used by the
// partition and invariance properties.
pf::LogitSequence random_sequence(std::uint64_t seed) {
    const std::uint64_t h = pf::rng::splitmix64(seed);
    const std::size_t length = 8 + h % 90;
    const int shape = static_cast<int>(pf::rng::splitmix64(seed + 1) % 4);
    pf::PatternSpec spec;
    spec.rng_seed = seed;
    spec.noise_sigma = 0.05 + 0.5 * pf::rng::uniform_unit(pf::rng::splitmix64(seed + 2));
    switch (shape) {
    case 0:
        spec.kind = pf::PatternKind::Anchor;
        spec.base_level = 0.2 + 2.0 * pf::rng::uniform_unit(pf::rng::splitmix64(seed + 3));
        break;
    case 1:
        spec.kind = pf::PatternKind::Wave;
        spec.base_level = 0.0;
        spec.period = 2.5 + 10.0 * pf::rng::uniform_unit(pf::rng::splitmix64(seed + 3));
        spec.amplitude = 0.5 + pf::rng::uniform_unit(pf::rng::splitmix64(seed + 4));
        break;
    case 2:
        spec.kind = pf::PatternKind::Veil;
        spec.base_level = -0.2 - 2.0 * pf::rng::uniform_unit(pf::rng::splitmix64(seed + 3));
        spec.first_frame_boost = 2.0;
        break;
    default:
        spec.kind = pf::PatternKind::Anchor;
        spec.base_level = 0.0;
        spec.noise_sigma = 1.0;
        break;
    }
    return pf::synthesize_sequence(spec, length);
}

}  // namespace

TEST_CASE("sign rates count strict positives") {
    CHECK(pf::sign_rates(pf::LogitSequence(std::vector<double>(10, 1.0))) ==
          std::pair{1.0, 0.0});

    std::vector<double> alt(10);
    for (std::size_t i = 0; i < 10; ++i)
        alt[i] = (i % 2 == 0) ? 1.0 : -1.0;
    CHECK(pf::sign_rates(pf::LogitSequence(alt)) == std::pair{0.5, 0.5});

    CHECK(pf::sign_rates(pf::LogitSequence({1.0, -1.0, -1.0, -1.0})) ==
          std::pair{0.25, 0.75});

    // Zero counts as non-positive.
    CHECK(pf::sign_rates(pf::LogitSequence({0.0, 0.0, 1.0, 1.0})).first == 0.5);

    CHECK(code_of([] { pf::sign_rates(pf::LogitSequence{}); }) == pf::Errc::EmptyHistory);
}

TEST_CASE("sign rates sum to one exactly") {
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        const auto [rp, rn] = pf::sign_rates(random_sequence(seed));
        CHECK(rp + rn == 1.0);
    }
}

TEST_CASE("mean logit") {
    CHECK(pf::mean_logit(pf::LogitSequence({2.0, 2.0, 2.0})) == 2.0);
    CHECK(pf::mean_logit(pf::LogitSequence({1.0, -1.0})) == 0.0);
    CHECK(pf::mean_logit(pf::LogitSequence({3.0, -1.0, -1.0, -1.0})) == 0.0);
    CHECK(code_of([] { pf::mean_logit(pf::LogitSequence{}); }) == pf::Errc::EmptyHistory);
}

TEST_CASE("period estimation recovers a period-6 cosine") {
    const pf::ClassifyConfig cfg;

    // 60 frames -> differenced length 59, peak bin 10, period 59/10.
    const pf::PeriodEstimate at60 = pf::estimate_period(cosine(60, 6.0), cfg);
    CHECK(at60.spectrum_peak_index == 10);
    CHECK(at60.dominant_period == Catch::Approx(5.9).margin(1e-12));

    // 69 frames (the default analysis window) -> bin 11, period 68/11.
    const pf::PeriodEstimate at69 = pf::estimate_period(cosine(69, 6.0), cfg);
    CHECK(at69.spectrum_peak_index == 11);
    CHECK(at69.dominant_period == Catch::Approx(68.0 / 11.0).margin(1e-12));
}

TEST_CASE("harmonic folding credits harmonics to the fundamental") {
    const pf::ClassifyConfig cfg;
    for (std::size_t length : {60u, 69u}) {
        std::vector<double> v(length);
        for (std::size_t i = 0; i < length; ++i) {
            const double t = static_cast<double>(i + 1);
            v[i] = std::cos(kTwoPi * t / 6.0) + 0.4 * std::cos(kTwoPi * t / 3.0);
        }
        const pf::LogitSequence seq(v);
        const pf::PeriodEstimate est = pf::estimate_period(seq, cfg);
        CHECK(est.dominant_period > 5.5);
        CHECK(est.dominant_period < 6.5);

        // Brute-force folded-score table from the naive DFT agrees on the
        // peak bin and the score at the peak.
        const pf::ref::PeriodRef oracle = pf::ref::period_reference(v, cfg.harmonic_count);
        CHECK(oracle.peak_bin == est.spectrum_peak_index);
        CHECK(est.folded_score ==
              Catch::Approx(oracle.folded_scores[oracle.peak_bin]).epsilon(1e-9));
    }
}

TEST_CASE("period estimation error paths") {
    const pf::ClassifyConfig cfg;
    CHECK(code_of([&] {
              pf::estimate_period(pf::LogitSequence(std::vector<double>(20, 3.0)), cfg);
          }) == pf::Errc::AllZero);

    // A linear ramp differences to a constant, which the demean stage zeroes.
    std::vector<double> ramp(16);
    for (std::size_t i = 0; i < 16; ++i)
        ramp[i] = 0.5 * static_cast<double>(i) - 3.0;
    CHECK(code_of([&] { pf::estimate_period(pf::LogitSequence(ramp), cfg); }) ==
          pf::Errc::AllZero);

    CHECK(code_of([&] {
              pf::estimate_period(pf::LogitSequence({1.0, 2.0, 1.0}), cfg);
          }) == pf::Errc::InsufficientHistory);
}

TEST_CASE("period estimation ignores offsets and positive scaling") {
    const pf::ClassifyConfig cfg;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        pf::PatternSpec spec;
        spec.kind = pf::PatternKind::Wave;
        spec.period = 3.0 + 8.0 * pf::rng::uniform_unit(pf::rng::splitmix64(seed));
        spec.noise_sigma = 0.05;
        spec.rng_seed = seed;
        const pf::LogitSequence seq = pf::synthesize_sequence(spec, 64);
        const pf::PeriodEstimate base = pf::estimate_period(seq, cfg);

        std::vector<double> shifted(seq.values);
        for (double& v : shifted)
            v += 5.0;
        CHECK(pf::estimate_period(pf::LogitSequence(shifted), cfg).spectrum_peak_index ==
              base.spectrum_peak_index);

        std::vector<double> scaled(seq.values);
        for (double& v : scaled)
            v *= 3.7;
        CHECK(pf::estimate_period(pf::LogitSequence(scaled), cfg).spectrum_peak_index ==
              base.spectrum_peak_index);
    }
}

TEST_CASE("period_search_max restricts the candidate bins") {
    pf::ClassifyConfig cfg;
    const pf::LogitSequence seq = cosine(60, 30.0);  // slow oscillation
    const pf::PeriodEstimate unlimited = pf::estimate_period(seq, cfg);
    CHECK(unlimited.dominant_period > 20.0);
    cfg.period_search_max = 10.0;
    CHECK(pf::estimate_period(seq, cfg).dominant_period <= 10.0);
}

TEST_CASE("classification cascade") {
    const pf::ClassifyConfig cfg;

    pf::PatternSpec anchor;
    anchor.kind = pf::PatternKind::Anchor;
    anchor.base_level = 2.0;
    CHECK(pf::classify_head(pf::synthesize_sequence(anchor, 40), cfg).kind ==
          pf::HeadKind::Anchor);

    pf::PatternSpec veil;
    veil.kind = pf::PatternKind::Veil;
    veil.base_level = -1.5;
    veil.first_frame_boost = 3.0;
    CHECK(pf::classify_head(pf::synthesize_sequence(veil, 40), cfg).kind == pf::HeadKind::Veil);

    const pf::HeadClass wave = pf::classify_head(cosine(69, 6.0), cfg);
    CHECK(wave.kind == pf::HeadKind::Wave);
    REQUIRE(wave.period.has_value());
    CHECK(*wave.period > 5.5);
    CHECK(*wave.period < 6.5);

    // One-sided pseudo-periodic input: periodic but entirely positive, so the
    // sign gate fires before the wave test ever runs.
    const pf::HeadClass gated = pf::classify_head(cosine(60, 6.0, 0.5, 0.4), cfg);
    CHECK(gated.kind == pf::HeadKind::Anchor);
    CHECK_FALSE(gated.period.has_value());

    // Mixed-sign ramp reaches the FFT, which reports AllZero; the mean rule
    // then decides (mean is exactly zero here, so non-positive -> veil).
    std::vector<double> ramp(10);
    for (std::size_t i = 0; i < 10; ++i)
        ramp[i] = static_cast<double>(i + 1) - 5.5;
    CHECK(pf::classify_head(pf::LogitSequence(ramp), cfg).kind == pf::HeadKind::Veil);

    CHECK(code_of([&] {
              pf::classify_head(pf::LogitSequence({1.0, -1.0, 1.0}), cfg);
          }) == pf::Errc::InsufficientHistory);
}

TEST_CASE("every sequence receives exactly one class") {
    const pf::ClassifyConfig cfg;
    for (std::uint64_t seed = 0; seed < 2000; ++seed) {
        const pf::HeadClass c = pf::classify_head(random_sequence(seed), cfg);
        const bool valid = c.kind == pf::HeadKind::Anchor || c.kind == pf::HeadKind::Wave ||
                           c.kind == pf::HeadKind::Veil;
        CHECK(valid);
        CHECK(c.period.has_value() == (c.kind == pf::HeadKind::Wave));
        if (c.period)
            CHECK(*c.period < cfg.beta);
    }
}

TEST_CASE("anchor gate is monotone in alpha") {
    pf::ClassifyConfig strict;
    strict.alpha = 0.9;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const pf::LogitSequence seq = random_sequence(seed);
        if (pf::sign_rates(seq).first < strict.alpha)
            continue;
        REQUIRE(pf::classify_head(seq, strict).kind == pf::HeadKind::Anchor);
        for (double alpha : {0.8, 0.7, 0.6}) {
            pf::ClassifyConfig looser = strict;
            looser.alpha = alpha;
            CHECK(pf::classify_head(seq, looser).kind == pf::HeadKind::Anchor);
        }
    }
}

TEST_CASE("classification is invariant under positive scaling") {
    const pf::ClassifyConfig cfg;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        const pf::LogitSequence seq = random_sequence(seed);
        const pf::HeadKind base = pf::classify_head(seq, cfg).kind;
        for (double c : {0.25, 4.0, 1000.0}) {
            std::vector<double> scaled(seq.values);
            for (double& v : scaled)
                v *= c;
            CHECK(pf::classify_head(pf::LogitSequence(scaled), cfg).kind == base);
        }
    }
}

TEST_CASE("single-prompt model classification equals per-head classification") {
    const pf::ClassifyConfig cfg;
    pf::SyntheticTraceConfig tc;
    tc.prompts = 1;
    tc.layers = 3;
    tc.heads = 4;
    tc.frames = 32;
    tc.mix = {1, 1, 1};
    const pf::LogitTrace trace = pf::make_synthetic_trace(tc);
    const pf::HeadClassMap map = pf::classify_model(trace, cfg);
    for (std::size_t l = 0; l < tc.layers; ++l)
        for (std::size_t h = 0; h < tc.heads; ++h)
            CHECK(map.at(l, h) == pf::classify_head(trace.sequence(0, l, h), cfg));
}

TEST_CASE("majority vote picks the plurality class") {
    pf::LogitTrace trace(3, 1, 1, 10);
    for (std::size_t f = 0; f < 10; ++f) {
        trace.at(0, 0, 0, f) = 2.0f;   // anchor vote
        trace.at(1, 0, 0, f) = -2.0f;  // veil vote
        trace.at(2, 0, 0, f) = -2.0f;  // veil vote
    }
    const pf::HeadClassMap map = pf::classify_model(trace, pf::ClassifyConfig{});
    CHECK(map.at(0, 0).kind == pf::HeadKind::Veil);
    CHECK_FALSE(map.tie_break(0, 0));
    CHECK(map.prompts_voted == 3);
}

TEST_CASE("vote ties fall back to the pooled mean logit") {
    pf::LogitTrace trace(2, 1, 1, 10);
    for (std::size_t f = 0; f < 10; ++f) {
        trace.at(0, 0, 0, f) = 2.0f;   // anchor vote
        trace.at(1, 0, 0, f) = -3.0f;  // veil vote, dominates the pooled mean
    }
    const pf::HeadClassMap map = pf::classify_model(trace, pf::ClassifyConfig{});
    CHECK(map.at(0, 0).kind == pf::HeadKind::Veil);
    CHECK(map.tie_break(0, 0));
}

TEST_CASE("wave winners take the median of per-prompt periods") {
    const pf::ClassifyConfig cfg;
    const std::size_t frames = 69;
    pf::LogitTrace trace(3, 1, 1, frames);
    const double periods[3] = {4.0, 5.0, 6.0};
    std::vector<double> expected;
    for (std::size_t p = 0; p < 3; ++p) {
        const pf::LogitSequence seq = cosine(frames, periods[p]);
        for (std::size_t f = 0; f < frames; ++f)
            trace.at(p, 0, 0, f) = static_cast<float>(seq.values[f]);
        const pf::HeadClass c = pf::classify_head(trace.sequence(p, 0, 0), cfg);
        REQUIRE(c.kind == pf::HeadKind::Wave);
        expected.push_back(*c.period);
    }
    std::sort(expected.begin(), expected.end());
    const pf::HeadClassMap map = pf::classify_model(trace, cfg);
    REQUIRE(map.at(0, 0).kind == pf::HeadKind::Wave);
    CHECK(*map.at(0, 0).period == expected[1]);
}

TEST_CASE("model classification matches synthetic labels") {
    pf::SyntheticTraceConfig tc;
    tc.prompts = 8;
    tc.layers = 6;
    tc.heads = 4;
    tc.frames = 69;
    tc.mix = {2, 1, 1};
    tc.noise_sigma = 0.1;
    const pf::LogitTrace trace = pf::make_synthetic_trace(tc);
    const pf::HeadClassMap map = pf::classify_model(trace, pf::ClassifyConfig{});

    std::size_t agree = 0, total = 0;
    for (std::size_t l = 0; l < tc.layers; ++l)
        for (std::size_t h = 0; h < tc.heads; ++h) {
            ++total;
            if (map.at(l, h).kind == *trace.label(l, h))
                ++agree;
        }
    CHECK(static_cast<double>(agree) / static_cast<double>(total) >= 0.95);
}

TEST_CASE("classify_model propagates errors only when every prompt fails") {
    pf::SyntheticTraceConfig tc;
    tc.prompts = 2;
    tc.layers = 1;
    tc.heads = 1;
    tc.frames = 10;
    const pf::LogitTrace trace = pf::make_synthetic_trace(tc);
    pf::ClassifyConfig cfg;
    cfg.min_length = 20;
    CHECK(code_of([&] { pf::classify_model(trace, cfg); }) == pf::Errc::InsufficientHistory);
}

TEST_CASE("head map JSON round-trips") {
    pf::HeadClassMap map(2, 3);
    map.at(0, 0) = {pf::HeadKind::Anchor, std::nullopt};
    map.at(0, 1) = {pf::HeadKind::Wave, 6.18};
    map.at(0, 2) = {pf::HeadKind::Veil, std::nullopt};
    map.at(1, 0) = {pf::HeadKind::Wave, 5.9};
    map.at(1, 1) = {pf::HeadKind::Anchor, std::nullopt};
    map.at(1, 2) = {pf::HeadKind::Veil, std::nullopt};
    map.set_tie_break(1, 1, true);
    map.prompts_voted = 32;

    const pf::HeadClassMap back = pf::head_class_map_from_json(pf::head_class_map_to_json(map));
    REQUIRE(back.num_layers() == 2);
    REQUIRE(back.num_heads() == 3);
    CHECK(back.prompts_voted == 32);
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t h = 0; h < 3; ++h) {
            CHECK(back.at(l, h) == map.at(l, h));
            CHECK(back.tie_break(l, h) == map.tie_break(l, h));
        }
}
