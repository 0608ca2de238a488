#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pf/attention.hpp"
#include "pf/error.hpp"
#include "pf/heads.hpp"
#include "pf/policy.hpp"
#include "pf/rng.hpp"
#include "pf/rope.hpp"

namespace pf {

enum class SimMode { Pyramid, FullHistory, SinkRecentOnly };

inline const char* sim_mode_name(SimMode m) {
    switch (m) {
    case SimMode::Pyramid: return "pyramid";
    case SimMode::FullHistory: return "full_history";
    case SimMode::SinkRecentOnly: return "sink_recent_only";
    }
    return "?";
}

inline SimMode sim_mode_from_name(const std::string& s) {
    if (s == "pyramid")
        return SimMode::Pyramid;
    if (s == "full_history")
        return SimMode::FullHistory;
    if (s == "sink_recent_only")
        return SimMode::SinkRecentOnly;
    fail(Errc::InvalidArgument, "unknown sim mode '" + s + "'");
}

// Deterministic generation run: per step the simulator synthesizes K/V for
// the newly completed frame and a query block for the frame under
// generation, assembles per-head cache views, and runs ragged attention over
// the heterogeneous caches. `fused` selects one ragged invocation per layer
// versus one per head class.
struct SimConfig {
    std::int64_t num_frames = 200;
    std::size_t layers = 1;
    std::size_t heads = 3;
    std::size_t head_dim = 16;
    std::size_t tokens_per_frame = 4;
    PolicyConfig policy;
    HeadClassMap head_map;
    std::uint64_t rng_seed = 0;
    SimMode mode = SimMode::Pyramid;
    bool fused = true;

    void validate() const {
        require(num_frames >= 1, Errc::InvalidArgument, "num_frames must be >= 1");
        require(layers >= 1 && heads >= 1, Errc::InvalidArgument, "extents must be >= 1");
        require(head_dim >= 2 && head_dim % 2 == 0, Errc::InvalidArgument,
                "head_dim must be even and >= 2");
        require(tokens_per_frame >= 1, Errc::InvalidArgument, "tokens_per_frame must be >= 1");
        require(head_map.num_layers() == layers && head_map.num_heads() == heads,
                Errc::ShapeMismatch, "head map extents do not match layers x heads");
        policy.validate();
    }
};

struct StepClassStats {
    std::size_t heads = 0;
    std::size_t max_slots = 0;  // retained frame slots of the fullest head
    std::size_t sink = 0;
    std::size_t intermediate = 0;  // merged block counts as one slot
    std::size_t recent = 0;
};

struct StepStats {
    std::int64_t step = 0;
    std::array<StepClassStats, 3> per_class;
    std::size_t total_tokens = 0;  // retained KV tokens across all layer-heads
    std::uint64_t attention_calls = 0;
    std::uint64_t scheduling_calls = 0;
    double flop_proxy = 0.0;  // sum of L_q * L_kv * D over segments
};

struct SimReport {
    std::vector<StepStats> steps;
    std::size_t peak_slots = 0;  // max over steps of total_tokens
    std::uint64_t attention_calls = 0;
    std::uint64_t scheduling_calls = 0;
    double flop_proxy = 0.0;
    std::array<std::size_t, 3> heads_per_class{0, 0, 0};
};

// Cache view for one head under the given mode. Pyramid applies the
// class policy; full history retains the whole range; sink+recent keeps the
// shared windows only.
inline HeadCacheView make_view(SimMode mode, const HeadClass& cls, std::int64_t t,
                               const PolicyConfig& cfg, std::size_t head_dim) {
    if (mode == SimMode::Pyramid)
        return assemble_cache(cls, t, cfg, head_dim);

    HeadCacheView view;
    const std::int64_t sink_end = std::min(cfg.sink, t);
    for (std::int64_t f = 0; f < sink_end; ++f)
        view.sink.frames.push_back(f);
    const std::int64_t recent_begin = std::max(t - cfg.recent, cfg.sink);
    for (std::int64_t f = recent_begin; f < t; ++f)
        view.recent.frames.push_back(f);
    if (mode == SimMode::FullHistory)
        for (std::int64_t f = cfg.sink; f < t - cfg.recent; ++f)
            view.intermediate.frames.push_back(f);
    const PositionMap pos = dynamic_rope_positions(view, t);
    view.positions = pos.slot_positions;
    view.query_position = pos.query_position;
    return view;
}

namespace detail {

enum : std::uint64_t { kTagKey = 0, kTagValue = 1, kTagQuery = 2 };

inline double synth_value(std::uint64_t seed, std::uint64_t tag, std::size_t layer,
                          std::size_t head, std::int64_t frame, std::size_t token,
                          std::size_t channel) {
    return rng::unit_variance_uniform(rng::hash_combine(
        seed, tag, layer, head, static_cast<std::uint64_t>(frame), token, channel));
}

// Materializes a head's retained K/V rows in cache order, applying the
// compacted rotary positions to K. Merged slots channel-gather from their
// source frames.
inline void gather_head_cache(const SimConfig& cfg, const RopeTable& rope, std::size_t layer,
                              std::size_t head, const HeadCacheView& view, KvSegment& out) {
    const std::size_t ftok = cfg.tokens_per_frame;
    const std::size_t d = cfg.head_dim;
    const std::size_t slots = view.slot_count();
    out.k.assign(slots * ftok * d, 0.0);
    out.v.assign(slots * ftok * d, 0.0);

    std::size_t slot = 0;
    auto emit_frame = [&](std::int64_t frame) {
        const std::int64_t pos = view.positions[slot];
        for (std::size_t j = 0; j < ftok; ++j) {
            double* krow = out.k.data() + (slot * ftok + j) * d;
            double* vrow = out.v.data() + (slot * ftok + j) * d;
            for (std::size_t c = 0; c < d; ++c) {
                krow[c] = synth_value(cfg.rng_seed, kTagKey, layer, head, frame, j, c);
                vrow[c] = synth_value(cfg.rng_seed, kTagValue, layer, head, frame, j, c);
            }
            apply_rope_inplace(rope, krow, pos);
        }
        ++slot;
    };

    for (std::int64_t f : view.sink.frames)
        emit_frame(f);
    for (std::int64_t f : view.intermediate.frames)
        emit_frame(f);
    if (view.merged) {
        const std::int64_t pos = view.positions[slot];
        for (std::size_t j = 0; j < ftok; ++j) {
            double* krow = out.k.data() + (slot * ftok + j) * d;
            double* vrow = out.v.data() + (slot * ftok + j) * d;
            for (std::size_t i = 0; i < view.merged->source_frames.size(); ++i) {
                const std::int64_t frame = view.merged->source_frames[i];
                const ChannelRange r = view.merged->channel_partition[i];
                for (std::size_t c = r.begin; c < r.end; ++c) {
                    krow[c] = synth_value(cfg.rng_seed, kTagKey, layer, head, frame, j, c);
                    vrow[c] = synth_value(cfg.rng_seed, kTagValue, layer, head, frame, j, c);
                }
            }
            apply_rope_inplace(rope, krow, pos);
        }
        ++slot;
    }
    for (std::int64_t f : view.recent.frames)
        emit_frame(f);
}

inline std::vector<double> synth_query(const SimConfig& cfg, const RopeTable& rope,
                                       std::size_t layer, std::size_t head, std::int64_t frame,
                                       std::int64_t position) {
    const std::size_t ftok = cfg.tokens_per_frame;
    const std::size_t d = cfg.head_dim;
    std::vector<double> q(ftok * d);
    for (std::size_t j = 0; j < ftok; ++j) {
        double* row = q.data() + j * d;
        for (std::size_t c = 0; c < d; ++c)
            row[c] = synth_value(cfg.rng_seed, kTagQuery, layer, head, frame, j, c);
        apply_rope_inplace(rope, row, position);
    }
    return q;
}

}  // namespace detail

struct SimRun {
    SimReport report;
    // Per step: attention outputs in canonical (layer, head, token, channel)
    // order, comparable across modes and fusion paths.
    std::vector<std::vector<double>> step_outputs;
};

inline SimRun run_with_outputs(const SimConfig& cfg, bool record_outputs) {
    cfg.validate();
    const RopeTable rope = rope_frequencies(cfg.head_dim);
    const std::size_t ftok = cfg.tokens_per_frame;
    const std::size_t d = cfg.head_dim;

    SimRun result;
    result.report.heads_per_class = {cfg.head_map.count(HeadKind::Anchor),
                                     cfg.head_map.count(HeadKind::Wave),
                                     cfg.head_map.count(HeadKind::Veil)};

    InvocationCounter counter;
    for (std::int64_t t = 1; t <= cfg.num_frames; ++t) {
        StepStats stats;
        stats.step = t;
        const std::uint64_t calls_before = counter.attention_calls;
        const std::uint64_t sched_before = counter.scheduling_calls;

        std::vector<double> step_out;
        if (record_outputs)
            step_out.assign(cfg.layers * cfg.heads * ftok * d, 0.0);

        for (std::size_t layer = 0; layer < cfg.layers; ++layer) {
            // Group heads: one ragged call for the whole layer when fused,
            // one per head class otherwise.
            std::vector<std::vector<std::size_t>> groups;
            if (cfg.fused) {
                groups.emplace_back();
                for (std::size_t h = 0; h < cfg.heads; ++h)
                    groups[0].push_back(h);
            } else {
                for (HeadKind k : {HeadKind::Anchor, HeadKind::Wave, HeadKind::Veil}) {
                    std::vector<std::size_t> g;
                    for (std::size_t h = 0; h < cfg.heads; ++h)
                        if (cfg.head_map.at(layer, h).kind == k)
                            g.push_back(h);
                    if (!g.empty())
                        groups.push_back(std::move(g));
                }
            }

            std::vector<RaggedQueries> group_queries;
            std::vector<RaggedBatch> group_batches;
            for (const auto& group : groups) {
                std::vector<KvSegment> segments(group.size());
                std::vector<std::vector<double>> qblocks(group.size());
                for (std::size_t gi = 0; gi < group.size(); ++gi) {
                    const std::size_t h = group[gi];
                    const HeadClass& cls = cfg.head_map.at(layer, h);
                    const HeadCacheView view = make_view(cfg.mode, cls, t, cfg.policy, d);
                    detail::gather_head_cache(cfg, rope, layer, h, view, segments[gi]);
                    qblocks[gi] =
                        detail::synth_query(cfg, rope, layer, h, t, view.query_position);

                    const std::size_t slots = view.slot_count();
                    auto& cs = stats.per_class[static_cast<std::size_t>(cls.kind)];
                    cs.heads += 1;
                    cs.max_slots = std::max(cs.max_slots, slots);
                    cs.sink = std::max(cs.sink, view.sink.size());
                    cs.intermediate = std::max(
                        cs.intermediate, view.intermediate.size() + (view.merged ? 1 : 0));
                    cs.recent = std::max(cs.recent, view.recent.size());
                    stats.total_tokens += slots * ftok;
                    stats.flop_proxy += static_cast<double>(ftok) *
                                        static_cast<double>(slots * ftok) *
                                        static_cast<double>(d);
                }
                group_queries.push_back(pack_queries(qblocks, d));
                group_batches.push_back(pack_ragged(segments, d));
            }

            const std::vector<std::vector<double>> outputs =
                cfg.fused ? fused_ragged_call(group_queries, group_batches, counter)
                          : unfused_ragged_calls(group_queries, group_batches, counter);

            if (record_outputs)
                for (std::size_t g = 0; g < groups.size(); ++g)
                    for (std::size_t gi = 0; gi < groups[g].size(); ++gi) {
                        const std::size_t h = groups[g][gi];
                        const std::size_t rows = ftok * d;
                        std::copy(outputs[g].begin() + static_cast<std::ptrdiff_t>(gi * rows),
                                  outputs[g].begin() + static_cast<std::ptrdiff_t>((gi + 1) * rows),
                                  step_out.begin() +
                                      static_cast<std::ptrdiff_t>((layer * cfg.heads + h) * rows));
                    }
        }

        stats.attention_calls = counter.attention_calls - calls_before;
        stats.scheduling_calls = counter.scheduling_calls - sched_before;
        result.report.peak_slots = std::max(result.report.peak_slots, stats.total_tokens);
        result.report.flop_proxy += stats.flop_proxy;
        result.report.steps.push_back(stats);
        if (record_outputs)
            result.step_outputs.push_back(std::move(step_out));
    }
    result.report.attention_calls = counter.attention_calls;
    result.report.scheduling_calls = counter.scheduling_calls;
    return result;
}

inline SimReport run(const SimConfig& cfg) {
    return run_with_outputs(cfg, false).report;
}

struct DeviationReport {
    double fused_vs_unfused = 0.0;           // must be < 1e-12
    double warmup_sink_recent_delta = 0.0;   // pyramid vs sink+recent while t <= S+R
    bool policies_diverge = false;           // pyramid vs sink+recent once intermediate exists
    bool full_history_diverges = false;      // compression is lossy once policies engage
};

inline DeviationReport compare_outputs(const SimConfig& cfg) {
    SimConfig base = cfg;
    base.mode = SimMode::Pyramid;
    base.fused = true;
    SimConfig unfused_cfg = base;
    unfused_cfg.fused = false;
    SimConfig sink_recent_cfg = base;
    sink_recent_cfg.mode = SimMode::SinkRecentOnly;
    SimConfig full_cfg = base;
    full_cfg.mode = SimMode::FullHistory;

    const SimRun pyramid = run_with_outputs(base, true);
    const SimRun unfused = run_with_outputs(unfused_cfg, true);
    const SimRun sink_recent = run_with_outputs(sink_recent_cfg, true);
    const SimRun full = run_with_outputs(full_cfg, true);

    DeviationReport report;
    const std::int64_t warmup_end = cfg.policy.sink + cfg.policy.recent;
    for (std::size_t s = 0; s < pyramid.step_outputs.size(); ++s) {
        const std::int64_t t = pyramid.report.steps[s].step;
        double step_fu = 0.0;
        double step_sr = 0.0;
        double step_full = 0.0;
        for (std::size_t i = 0; i < pyramid.step_outputs[s].size(); ++i) {
            step_fu = std::max(step_fu, std::abs(pyramid.step_outputs[s][i] -
                                                 unfused.step_outputs[s][i]));
            step_sr = std::max(step_sr, std::abs(pyramid.step_outputs[s][i] -
                                                 sink_recent.step_outputs[s][i]));
            step_full = std::max(step_full, std::abs(pyramid.step_outputs[s][i] -
                                                     full.step_outputs[s][i]));
        }
        report.fused_vs_unfused = std::max(report.fused_vs_unfused, step_fu);
        if (t <= warmup_end)
            report.warmup_sink_recent_delta =
                std::max(report.warmup_sink_recent_delta, step_sr);
        const auto& pc = pyramid.report.steps[s].per_class;
        const bool has_intermediate =
            pc[0].intermediate + pc[1].intermediate + pc[2].intermediate > 0;
        if (has_intermediate && step_sr > 0.0)
            report.policies_diverge = true;
        if (has_intermediate && step_full > 0.0)
            report.full_history_diverges = true;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline nlohmann::json sim_report_to_json(const SimReport& r) {
    nlohmann::json steps = nlohmann::json::array();
    static const char* names[3] = {"anchor", "wave", "veil"};
    for (const StepStats& s : r.steps) {
        nlohmann::json per_class;
        for (int k = 0; k < 3; ++k) {
            const StepClassStats& c = s.per_class[static_cast<std::size_t>(k)];
            if (c.heads == 0)
                continue;
            per_class[names[k]] = {{"heads", c.heads},
                                   {"max_slots", c.max_slots},
                                   {"sink", c.sink},
                                   {"intermediate", c.intermediate},
                                   {"recent", c.recent}};
        }
        steps.push_back({{"step", s.step},
                         {"per_class", std::move(per_class)},
                         {"total_tokens", s.total_tokens},
                         {"attention_calls", s.attention_calls},
                         {"scheduling_calls", s.scheduling_calls},
                         {"flop_proxy", s.flop_proxy}});
    }
    return nlohmann::json{{"steps", std::move(steps)},
                          {"peak_slots", r.peak_slots},
                          {"attention_calls", r.attention_calls},
                          {"scheduling_calls", r.scheduling_calls},
                          {"flop_proxy", r.flop_proxy},
                          {"heads_per_class",
                           {{"anchor", r.heads_per_class[0]},
                            {"wave", r.heads_per_class[1]},
                            {"veil", r.heads_per_class[2]}}}};
}

// CSV time series: one row per (step, head class present). `calls` and
// `flop_proxy` are step totals repeated on each class row.
inline void write_sim_csv(const SimReport& r, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    require(f.good(), Errc::IoError, "cannot open '" + path + "' for writing");
    f << "step,class,slots,calls,flop_proxy\n";
    static const char* names[3] = {"anchor", "wave", "veil"};
    for (const StepStats& s : r.steps)
        for (int k = 0; k < 3; ++k) {
            const StepClassStats& c = s.per_class[static_cast<std::size_t>(k)];
            if (c.heads == 0)
                continue;
            f << s.step << ',' << names[k] << ',' << c.max_slots << ',' << s.attention_calls
              << ',' << s.flop_proxy << '\n';
        }
    require(f.good(), Errc::IoError, "short write to '" + path + "'");
}

}  // namespace pf
