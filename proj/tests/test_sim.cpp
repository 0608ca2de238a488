#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <string>

#include "pf/sim.hpp"

namespace {

pf::HeadClassMap three_class_map(std::size_t layers) {
    pf::HeadClassMap map(layers, 3);
    for (std::size_t l = 0; l < layers; ++l) {
        map.at(l, 0) = {pf::HeadKind::Anchor, std::nullopt};
        map.at(l, 1) = {pf::HeadKind::Wave, 6.0};
        map.at(l, 2) = {pf::HeadKind::Veil, std::nullopt};
    }
    return map;
}

pf::SimConfig small_config(std::int64_t frames, std::size_t layers = 1) {
    pf::SimConfig cfg;
    cfg.num_frames = frames;
    cfg.layers = layers;
    cfg.heads = 3;
    cfg.head_dim = 8;
    cfg.tokens_per_frame = 2;
    cfg.head_map = three_class_map(layers);
    cfg.rng_seed = 17;
    return cfg;
}

}  // namespace

TEST_CASE("pyramid mode keeps per-head slots bounded") {
    const pf::SimConfig cfg = small_config(120);
    const pf::SimReport report = pf::run(cfg);
    REQUIRE(report.steps.size() == 120);
    for (const pf::StepStats& s : report.steps) {
        CHECK(s.per_class[0].max_slots <= 11);
        CHECK(s.per_class[1].max_slots <= 11);
        CHECK(s.per_class[2].max_slots <= 8);
    }
    // Beyond warm-up the totals are constant step to step.
    const std::size_t steady = report.steps[60].total_tokens;
    for (std::size_t i = 60; i < report.steps.size(); ++i)
        CHECK(report.steps[i].total_tokens == steady);
    CHECK(report.heads_per_class == std::array<std::size_t, 3>{1, 1, 1});
}

TEST_CASE("full history grows linearly with the step") {
    pf::SimConfig cfg = small_config(80);
    cfg.mode = pf::SimMode::FullHistory;
    const pf::SimReport report = pf::run(cfg);
    for (const pf::StepStats& s : report.steps)
        for (int k = 0; k < 3; ++k)
            CHECK(s.per_class[static_cast<std::size_t>(k)].max_slots ==
                  static_cast<std::size_t>(s.step));
    CHECK(report.steps.back().total_tokens ==
          80 * cfg.tokens_per_frame * cfg.layers * cfg.heads);
    CHECK(report.peak_slots == report.steps.back().total_tokens);
}

TEST_CASE("fused mode makes one call per layer, unfused one per class") {
    pf::SimConfig cfg = small_config(25, 2);
    const pf::SimReport fused = pf::run(cfg);
    cfg.fused = false;
    const pf::SimReport unfused = pf::run(cfg);
    for (const pf::StepStats& s : fused.steps)
        CHECK(s.attention_calls == 2);  // layers
    for (const pf::StepStats& s : unfused.steps)
        CHECK(s.attention_calls == 6);  // 3 classes x layers
    CHECK(unfused.attention_calls == 3 * fused.attention_calls);
    CHECK(fused.flop_proxy == unfused.flop_proxy);
    CHECK(fused.scheduling_calls < unfused.scheduling_calls);
}

TEST_CASE("fused and unfused paths produce identical outputs") {
    const pf::SimConfig cfg = small_config(40);
    const pf::DeviationReport dev = pf::compare_outputs(cfg);
    CHECK(dev.fused_vs_unfused == 0.0);
    CHECK(dev.fused_vs_unfused < 1e-12);
    CHECK(dev.warmup_sink_recent_delta == 0.0);
    CHECK(dev.policies_diverge);
    CHECK(dev.full_history_diverges);
}

TEST_CASE("runs are deterministic") {
    const pf::SimConfig cfg = small_config(30);
    const pf::SimRun a = pf::run_with_outputs(cfg, true);
    const pf::SimRun b = pf::run_with_outputs(cfg, true);
    REQUIRE(a.step_outputs.size() == b.step_outputs.size());
    for (std::size_t i = 0; i < a.step_outputs.size(); ++i)
        CHECK(a.step_outputs[i] == b.step_outputs[i]);
    for (std::size_t i = 0; i < a.report.steps.size(); ++i) {
        CHECK(a.report.steps[i].total_tokens == b.report.steps[i].total_tokens);
        CHECK(a.report.steps[i].flop_proxy == b.report.steps[i].flop_proxy);
    }
}

TEST_CASE("reported slots equal the assembled views") {
    const pf::SimConfig cfg = small_config(50);
    const pf::SimReport report = pf::run(cfg);
    for (const pf::StepStats& s : report.steps) {
        for (std::size_t h = 0; h < cfg.heads; ++h) {
            const pf::HeadClass& cls = cfg.head_map.at(0, h);
            const pf::HeadCacheView view =
                pf::make_view(cfg.mode, cls, s.step, cfg.policy, cfg.head_dim);
            const auto& cs = s.per_class[static_cast<std::size_t>(cls.kind)];
            CHECK(cs.max_slots == view.slot_count());
            CHECK(cs.sink == view.sink.size());
            CHECK(cs.recent == view.recent.size());
        }
    }
}

TEST_CASE("sink+recent mode equals pyramid during warm-up only") {
    pf::SimConfig cfg = small_config(20);
    const pf::SimRun pyramid = pf::run_with_outputs(cfg, true);
    cfg.mode = pf::SimMode::SinkRecentOnly;
    const pf::SimRun sink_recent = pf::run_with_outputs(cfg, true);

    const std::int64_t warmup = cfg.policy.sink + cfg.policy.recent;
    bool diverged_later = false;
    for (std::size_t i = 0; i < pyramid.step_outputs.size(); ++i) {
        const std::int64_t t = pyramid.report.steps[i].step;
        if (t <= warmup) {
            CHECK(pyramid.step_outputs[i] == sink_recent.step_outputs[i]);
        } else if (pyramid.step_outputs[i] != sink_recent.step_outputs[i]) {
            diverged_later = true;
        }
    }
    CHECK(diverged_later);
}

TEST_CASE("config validation") {
    pf::SimConfig cfg = small_config(10);
    cfg.heads = 4;  // map still has 3
    CHECK_THROWS_AS(pf::run(cfg), pf::Error);
    cfg = small_config(10);
    cfg.head_dim = 7;
    CHECK_THROWS_AS(pf::run(cfg), pf::Error);
}

TEST_CASE("report serializes to JSON and CSV") {
    const pf::SimConfig cfg = small_config(12);
    const pf::SimReport report = pf::run(cfg);
    const nlohmann::json j = pf::sim_report_to_json(report);
    CHECK(j["steps"].size() == 12);
    CHECK(j["peak_slots"].get<std::size_t>() == report.peak_slots);
    CHECK(j["heads_per_class"]["wave"].get<std::size_t>() == 1);

    const std::string path = "sim_test_report.csv";
    pf::write_sim_csv(report, path);
    std::ifstream f(path);
    REQUIRE(f.good());
    std::string header;
    std::getline(f, header);
    CHECK(header == "step,class,slots,calls,flop_proxy");
    std::size_t rows = 0;
    for (std::string line; std::getline(f, line);)
        if (!line.empty())
            ++rows;
    CHECK(rows == 12 * 3);  // three classes present every step
    f.close();
    std::remove(path.c_str());
}
