#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <functional>
#include <set>
#include <vector>

#include "pf/policy.hpp"
#include "pf/reference.hpp"
#include "pf/sim.hpp"

namespace {

pf::Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const pf::Error& e) {
        return e.code();
    }
    FAIL("expected a pf::Error");
    return pf::Errc::IoError;
}

using frames_t = std::vector<std::int64_t>;

}  // namespace

TEST_CASE("anchor indices match the worked examples") {
    CHECK(pf::anchor_indices(12, 4, 0).frames == frames_t{2, 5, 8, 11});
    CHECK(pf::anchor_indices(20, 4, 0).frames == frames_t{3, 8, 13, 18});
    CHECK(pf::anchor_indices(3, 4, 0).frames == frames_t{0, 1, 2});
    // Just above the degenerate regime the i=0 term lands on t and is dropped.
    CHECK(pf::anchor_indices(5, 4, 0).frames == frames_t{2, 3, 4});
    CHECK(code_of([] { pf::anchor_indices(0, 4, 0); }) == pf::Errc::InvalidArgument);
    CHECK(code_of([] { pf::anchor_indices(5, 0, 0); }) == pf::Errc::InvalidArgument);
}

TEST_CASE("anchor indices cover the history uniformly") {
    for (std::int64_t cap = 1; cap <= 8; ++cap)
        for (std::int64_t t = 2 * cap; t <= 400; t += 7) {
            const frames_t idx = pf::anchor_indices(t, cap, 0).frames;
            REQUIRE(static_cast<std::int64_t>(idx.size()) == cap);
            const std::int64_t stride = t / cap;
            for (std::size_t i = 1; i < idx.size(); ++i) {
                const std::int64_t gap = idx[i] - idx[i - 1];
                CHECK(gap >= stride - 1);
                CHECK(gap <= stride + 1);
            }
            CHECK(idx.front() <= t / cap + t / (2 * cap));
            CHECK(idx.back() < t);
        }
}

TEST_CASE("wave indices match the worked examples") {
    CHECK(pf::wave_indices(20, 4, 6.0, 0).frames == frames_t{2, 8, 14, 20});
    CHECK(pf::wave_indices(10, 4, 6.0, 0).frames == frames_t{4, 10});
    CHECK(pf::wave_indices(7, 1, 6.0, 0).frames == frames_t{7});
    CHECK(code_of([] { pf::wave_indices(10, 4, 1.5, 0); }) == pf::Errc::InvalidArgument);
}

TEST_CASE("wave gaps are multiples of the period for integer periods") {
    for (double period : {3.0, 6.0, 12.0})
        for (std::int64_t cap = 2; cap <= 6; ++cap) {
            // t large enough that no index clamps away.
            const std::int64_t t = 200;
            const frames_t idx = pf::wave_indices(t, cap, period, 0).frames;
            REQUIRE(static_cast<std::int64_t>(idx.size()) == cap);
            for (std::size_t i = 0; i < idx.size(); ++i)
                for (std::size_t j = i + 1; j < idx.size(); ++j)
                    CHECK((idx[j] - idx[i]) % static_cast<std::int64_t>(period) == 0);
        }
}

TEST_CASE("index formulas agree with direct substitution") {
    for (std::int64_t t = 1; t <= 300; ++t)
        for (std::int64_t cap : {1, 3, 4, 8}) {
            CHECK(pf::anchor_indices(t, cap, 0).frames ==
                  pf::ref::anchor_indices_reference(t, cap, 0));
            CHECK(pf::anchor_indices(t, cap, 3).frames ==
                  pf::ref::anchor_indices_reference(t, cap, 3));
            for (double period : {3.0, 6.0, 12.0})
                CHECK(pf::wave_indices(t, cap, period, 0).frames ==
                      pf::ref::wave_indices_reference(t, cap, period, 0));
        }
}

TEST_CASE("veil merge plan splits channels equally") {
    const pf::MergedBlock block = pf::veil_merge_plan(10, 2, 128);
    CHECK(block.source_frames == frames_t{8, 9});
    REQUIRE(block.channel_partition.size() == 2);
    CHECK(block.channel_partition[0] == pf::ChannelRange{0, 64});
    CHECK(block.channel_partition[1] == pf::ChannelRange{64, 128});

    const pf::MergedBlock identity = pf::veil_merge_plan(5, 1, 32);
    CHECK(identity.source_frames == frames_t{4});
    CHECK(identity.channel_partition[0] == pf::ChannelRange{0, 32});

    CHECK(code_of([] { pf::veil_merge_plan(10, 2, 127); }) == pf::Errc::NonDivisible);
    CHECK(code_of([] { pf::veil_merge_plan(1, 2, 128); }) == pf::Errc::InvalidArgument);
}

TEST_CASE("assemble_cache composes the shared and class regions") {
    const pf::PolicyConfig cfg;  // S=3 R=4 caps 4/4/2 m=2 P=6

    SECTION("startup keeps everything as sink") {
        const pf::HeadCacheView v =
            pf::assemble_cache({pf::HeadKind::Anchor, std::nullopt}, 2, cfg, 16);
        CHECK(v.sink.frames == frames_t{0, 1});
        CHECK(v.recent.empty());
        CHECK(v.intermediate.empty());
        CHECK_FALSE(v.merged.has_value());
        CHECK(v.positions == frames_t{0, 1});
        CHECK(v.query_position == 2);
    }

    SECTION("anchor at t=40") {
        const pf::HeadCacheView v =
            pf::assemble_cache({pf::HeadKind::Anchor, std::nullopt}, 40, cfg, 16);
        CHECK(v.sink.frames == frames_t{0, 1, 2});
        CHECK(v.recent.frames == frames_t{36, 37, 38, 39});
        CHECK(v.intermediate.frames == frames_t{5, 15, 25, 35});
        CHECK(v.slot_count() == 11);
        CHECK(v.positions == frames_t{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
        CHECK(v.query_position == 11);
    }

    SECTION("wave at t=40 drops the i=0 collision with the recent window") {
        const pf::HeadCacheView v =
            pf::assemble_cache({pf::HeadKind::Wave, 6.0}, 40, cfg, 16);
        CHECK(v.intermediate.frames == frames_t{22, 28, 34});
        CHECK(v.slot_count() == 10);
    }

    SECTION("veil at t=40 merges the two frames before the recent window") {
        const pf::HeadCacheView v =
            pf::assemble_cache({pf::HeadKind::Veil, std::nullopt}, 40, cfg, 128);
        CHECK(v.intermediate.empty());
        REQUIRE(v.merged.has_value());
        CHECK(v.merged->source_frames == frames_t{34, 35});
        CHECK(v.slot_count() == 8);  // 3 sink + 1 merged + 4 recent
    }

    SECTION("veil merge waits until the intermediate range holds m frames") {
        const pf::HeadCacheView v =
            pf::assemble_cache({pf::HeadKind::Veil, std::nullopt}, 8, cfg, 16);
        CHECK_FALSE(v.merged.has_value());  // range [3, 4) has one frame < m=2
        const pf::HeadCacheView v9 =
            pf::assemble_cache({pf::HeadKind::Veil, std::nullopt}, 9, cfg, 16);
        REQUIRE(v9.merged.has_value());
        CHECK(v9.merged->source_frames == frames_t{3, 4});
    }
}

TEST_CASE("regions stay disjoint and recency-ordered for all classes") {
    pf::PolicyConfig cfg;
    const pf::HeadClass classes[3] = {{pf::HeadKind::Anchor, std::nullopt},
                                      {pf::HeadKind::Wave, 6.18},
                                      {pf::HeadKind::Veil, std::nullopt}};
    for (std::int64_t t = 1; t <= 300; ++t)
        for (const pf::HeadClass& cls : classes) {
            const pf::HeadCacheView v = pf::assemble_cache(cls, t, cfg, 16);
            const frames_t all = v.all_frames();
            std::set<std::int64_t> uniq(all.begin(), all.end());
            REQUIRE(uniq.size() == all.size());
            for (std::int64_t f : all) {
                CHECK(f >= 0);
                CHECK(f < t);
            }
            if (!v.intermediate.empty() && !v.recent.empty())
                CHECK(v.intermediate.frames.back() < v.recent.frames.front());
            if (v.merged && !v.recent.empty())
                CHECK(v.merged->source_frames.back() < v.recent.frames.front());
            CHECK(v.positions.size() == v.slot_count());
        }
}

TEST_CASE("retained slots stay bounded while full history grows") {
    const pf::PolicyConfig cfg;
    std::size_t peak_anchor = 0, peak_wave = 0, peak_veil = 0;
    for (std::int64_t t = 1; t <= 10000; t = (t < 100 ? t + 1 : t + 97)) {
        peak_anchor = std::max(
            peak_anchor,
            pf::assemble_cache({pf::HeadKind::Anchor, std::nullopt}, t, cfg, 16).slot_count());
        peak_wave = std::max(
            peak_wave, pf::assemble_cache({pf::HeadKind::Wave, 6.0}, t, cfg, 16).slot_count());
        peak_veil = std::max(
            peak_veil,
            pf::assemble_cache({pf::HeadKind::Veil, std::nullopt}, t, cfg, 16).slot_count());
    }
    CHECK(peak_anchor <= static_cast<std::size_t>(cfg.sink + cfg.cap_anchor + cfg.recent));
    CHECK(peak_wave <= static_cast<std::size_t>(cfg.sink + cfg.cap_wave + cfg.recent));
    CHECK(peak_veil <= static_cast<std::size_t>(cfg.sink + 1 + cfg.recent));
    CHECK(peak_anchor == 11);
    CHECK(peak_veil == 8);
}

TEST_CASE("dynamic rope positions renumber the compacted cache") {
    pf::HeadCacheView view;
    view.sink.frames = {0, 1, 2};
    view.intermediate.frames = {10, 20, 30, 40};
    view.recent.frames = {96, 97, 98, 99};
    const pf::PositionMap map = pf::dynamic_rope_positions(view, 100);
    CHECK(map.slot_positions == frames_t{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    CHECK(map.query_position == 11);

    pf::HeadCacheView no_mid;
    no_mid.sink.frames = {0, 1};
    no_mid.recent.frames = {7, 8};
    const pf::PositionMap gapless = pf::dynamic_rope_positions(no_mid, 9);
    CHECK(gapless.slot_positions == frames_t{0, 1, 2, 3});
    CHECK(gapless.query_position == 4);

    // Full history: consecutive numbering coincides with absolute frames.
    const pf::HeadCacheView full = pf::make_view(pf::SimMode::FullHistory,
                                                 {pf::HeadKind::Anchor, std::nullopt}, 25,
                                                 pf::PolicyConfig{}, 16);
    CHECK(full.slot_count() == 25);
    CHECK(full.positions == full.all_frames());
    CHECK(full.query_position == 25);

    pf::HeadCacheView overlapping;
    overlapping.sink.frames = {0, 1, 2};
    overlapping.recent.frames = {2, 3};
    CHECK(code_of([&] { pf::dynamic_rope_positions(overlapping, 10); }) ==
          pf::Errc::InvalidArgument);
}

TEST_CASE("policy config validation and JSON round-trip") {
    pf::PolicyConfig cfg;
    cfg.sink = 2;
    cfg.recent = 5;
    cfg.cap_anchor = 3;
    cfg.wave_default_period = 6.18;
    const pf::PolicyConfig back = pf::policy_config_from_json(pf::policy_config_to_json(cfg));
    CHECK(back.sink == 2);
    CHECK(back.recent == 5);
    CHECK(back.cap_anchor == 3);
    CHECK(back.wave_default_period == 6.18);

    // Missing fields keep the paper defaults.
    const pf::PolicyConfig defaults = pf::policy_config_from_json(nlohmann::json::object());
    CHECK(defaults.sink == 3);
    CHECK(defaults.recent == 4);
    CHECK(defaults.cap_anchor == 4);
    CHECK(defaults.cap_wave == 4);
    CHECK(defaults.cap_veil == 2);
    CHECK(defaults.merge_range == 2);
    CHECK(defaults.wave_default_period == 6.0);

    pf::PolicyConfig bad;
    bad.merge_range = 1;
    CHECK(code_of([&] { bad.validate(); }) == pf::Errc::InvalidArgument);
}
