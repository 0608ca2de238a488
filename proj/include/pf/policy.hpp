#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "pf/error.hpp"
#include "pf/heads.hpp"

namespace pf {

// Shared retention budgets. Defaults are sink 3, forced-recent 4, capacities
// 4/4/2 for anchor/wave/veil, merge range 2, wave period 6.
struct PolicyConfig {
    std::int64_t sink = 3;
    std::int64_t recent = 4;
    std::int64_t cap_anchor = 4;
    std::int64_t cap_wave = 4;
    std::int64_t cap_veil = 2;
    std::int64_t merge_range = 2;
    double wave_default_period = 6.0;

    void validate() const {
        require(sink >= 1 && recent >= 1 && cap_anchor >= 1 && cap_wave >= 1 && cap_veil >= 1,
                Errc::InvalidArgument, "policy counts must be >= 1");
        require(merge_range >= 2, Errc::InvalidArgument, "merge_range must be >= 2");
        require(wave_default_period >= 2.0, Errc::InvalidArgument,
                "wave_default_period must be >= 2");
    }

    std::int64_t cap_for(HeadKind k) const {
        switch (k) {
        case HeadKind::Anchor: return cap_anchor;
        case HeadKind::Wave: return cap_wave;
        case HeadKind::Veil: return cap_veil;
        }
        return cap_anchor;
    }
};

inline nlohmann::json policy_config_to_json(const PolicyConfig& c) {
    return nlohmann::json{{"sink", c.sink},
                          {"recent", c.recent},
                          {"cap_anchor", c.cap_anchor},
                          {"cap_wave", c.cap_wave},
                          {"cap_veil", c.cap_veil},
                          {"merge_range", c.merge_range},
                          {"wave_default_period", c.wave_default_period}};
}

inline PolicyConfig policy_config_from_json(const nlohmann::json& j) {
    PolicyConfig c;
    if (j.contains("sink")) c.sink = j["sink"].get<std::int64_t>();
    if (j.contains("recent")) c.recent = j["recent"].get<std::int64_t>();
    if (j.contains("cap_anchor")) c.cap_anchor = j["cap_anchor"].get<std::int64_t>();
    if (j.contains("cap_wave")) c.cap_wave = j["cap_wave"].get<std::int64_t>();
    if (j.contains("cap_veil")) c.cap_veil = j["cap_veil"].get<std::int64_t>();
    if (j.contains("merge_range")) c.merge_range = j["merge_range"].get<std::int64_t>();
    if (j.contains("wave_default_period"))
        c.wave_default_period = j["wave_default_period"].get<double>();
    c.validate();
    return c;
}

enum class Region { Sink, Intermediate, Recent };

// Ascending, duplicate-free frame indices belonging to one cache region.
struct FrameIndexSet {
    std::vector<std::int64_t> frames;
    Region kind = Region::Intermediate;

    std::size_t size() const { return frames.size(); }
    bool empty() const { return frames.empty(); }
};

struct ChannelRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const ChannelRange& o) const { return begin == o.begin && end == o.end; }
};

// Veil compression unit: the last m frames before the recent window, each
// contributing one of m equal contiguous channel ranges. Older source frames
// own lower channels.
struct MergedBlock {
    std::vector<std::int64_t> source_frames;
    std::vector<ChannelRange> channel_partition;
};

namespace detail {

inline std::vector<std::int64_t> sorted_unique(std::vector<std::int64_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace detail

// Adaptive strided sliding window: idx_i = t - floor(i*t/cap) - floor(t/(2*cap))
// for i = 0..cap-1, multiply-then-floor, with out-of-range indices dropped.
// When t <= cap there is no room to stride and the whole range [lower_bound, t)
// is returned.
inline FrameIndexSet anchor_indices(std::int64_t t, std::int64_t cap, std::int64_t lower_bound) {
    require(t >= 1, Errc::InvalidArgument, "anchor_indices needs t >= 1");
    require(cap >= 1, Errc::InvalidArgument, "anchor_indices needs cap >= 1");
    FrameIndexSet out;
    out.kind = Region::Intermediate;
    if (t <= cap) {
        for (std::int64_t f = std::max<std::int64_t>(lower_bound, 0); f < t; ++f)
            out.frames.push_back(f);
        return out;
    }
    const std::int64_t center_offset = t / (2 * cap);
    std::vector<std::int64_t> raw;
    raw.reserve(static_cast<std::size_t>(cap));
    for (std::int64_t i = 0; i < cap; ++i) {
        const std::int64_t idx = t - (i * t) / cap - center_offset;
        if (idx >= lower_bound && idx < t)
            raw.push_back(idx);
    }
    out.frames = detail::sorted_unique(std::move(raw));
    return out;
}

// Periodic sampling: idx_i = t - round(i*period) for i = 0..cap-1, with
// below-bound indices dropped. The i = 0 term is t itself, read as the most
// recent completed frame (the one just before the frame being generated);
// composition drops it when it collides with the forced-recent window.
inline FrameIndexSet wave_indices(std::int64_t t, std::int64_t cap, double period,
                                  std::int64_t lower_bound) {
    require(t >= 1, Errc::InvalidArgument, "wave_indices needs t >= 1");
    require(cap >= 1, Errc::InvalidArgument, "wave_indices needs cap >= 1");
    require(period >= 2.0, Errc::InvalidArgument, "wave period must be >= 2");
    std::vector<std::int64_t> raw;
    raw.reserve(static_cast<std::size_t>(cap));
    for (std::int64_t i = 0; i < cap; ++i) {
        const std::int64_t idx =
            t - static_cast<std::int64_t>(std::llround(static_cast<double>(i) * period));
        if (idx >= lower_bound)
            raw.push_back(idx);
    }
    FrameIndexSet out;
    out.kind = Region::Intermediate;
    out.frames = detail::sorted_unique(std::move(raw));
    return out;
}

// Merge plan over the m frames directly before step t: frame t-m+i supplies
// the i-th of m equal contiguous channel ranges.
inline MergedBlock veil_merge_plan(std::int64_t t, std::int64_t m, std::size_t channels) {
    require(m >= 1, Errc::InvalidArgument, "merge range must be >= 1");
    require(t >= m, Errc::InvalidArgument, "need at least m completed frames");
    require(channels % static_cast<std::size_t>(m) == 0, Errc::NonDivisible,
            "head dim must be divisible by the merge range");
    MergedBlock block;
    const std::size_t width = channels / static_cast<std::size_t>(m);
    for (std::int64_t i = 0; i < m; ++i) {
        block.source_frames.push_back(t - m + i);
        block.channel_partition.push_back(
            {static_cast<std::size_t>(i) * width, static_cast<std::size_t>(i + 1) * width});
    }
    return block;
}

// One head's retained cache at a step: sink and recent windows shared by all
// classes, a class-specific intermediate region, and compacted rotary
// positions (consecutive slot numbering with the query one past the end).
struct HeadCacheView {
    FrameIndexSet sink{{}, Region::Sink};
    FrameIndexSet intermediate{{}, Region::Intermediate};
    std::optional<MergedBlock> merged;
    FrameIndexSet recent{{}, Region::Recent};
    std::vector<std::int64_t> positions;
    std::int64_t query_position = 0;

    std::size_t slot_count() const {
        return sink.size() + intermediate.size() + (merged ? 1 : 0) + recent.size();
    }

    // Frames in cache order; a merged block contributes its source frames.
    std::vector<std::int64_t> all_frames() const {
        std::vector<std::int64_t> out(sink.frames);
        out.insert(out.end(), intermediate.frames.begin(), intermediate.frames.end());
        if (merged)
            out.insert(out.end(), merged->source_frames.begin(), merged->source_frames.end());
        out.insert(out.end(), recent.frames.begin(), recent.frames.end());
        return out;
    }
};

struct PositionMap {
    std::vector<std::int64_t> slot_positions;
    std::int64_t query_position = 0;
};

// Consecutive re-addressing of the compacted cache: slots take positions
// 0..n-1 in cache order (sink, intermediate, recent) and the query frame
// takes position n. With nothing evicted this reduces to the identity map.
inline PositionMap dynamic_rope_positions(const HeadCacheView& view, std::int64_t t) {
    const std::vector<std::int64_t> frames = view.all_frames();
    std::vector<std::int64_t> sorted(frames);
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
            Errc::InvalidArgument, "cache regions overlap");
    require(sorted.empty() || (sorted.front() >= 0 && sorted.back() < t), Errc::OutOfRange,
            "cache frame outside [0, t)");

    PositionMap map;
    const std::size_t slots = view.slot_count();
    map.slot_positions.resize(slots);
    for (std::size_t i = 0; i < slots; ++i)
        map.slot_positions[i] = static_cast<std::int64_t>(i);
    map.query_position = static_cast<std::int64_t>(slots);
    return map;
}

// Composes the shared sink/recent windows with the class policy over the
// remaining range [S, t-R). Policy indices falling inside the sink or recent
// windows are dropped; the veil merge engages only once the intermediate
// range holds at least merge_range frames.
inline HeadCacheView assemble_cache(const HeadClass& cls, std::int64_t t,
                                    const PolicyConfig& cfg, std::size_t head_dim) {
    require(t >= 1, Errc::InvalidArgument, "assemble_cache needs t >= 1");
    cfg.validate();

    HeadCacheView view;
    const std::int64_t sink_end = std::min(cfg.sink, t);
    for (std::int64_t f = 0; f < sink_end; ++f)
        view.sink.frames.push_back(f);

    const std::int64_t recent_begin = std::max(t - cfg.recent, cfg.sink);
    for (std::int64_t f = recent_begin; f < t; ++f)
        view.recent.frames.push_back(f);

    const std::int64_t inter_lo = cfg.sink;
    const std::int64_t inter_hi = t - cfg.recent;
    if (inter_hi > inter_lo) {
        switch (cls.kind) {
        case HeadKind::Anchor: {
            FrameIndexSet idx = anchor_indices(t, cfg.cap_anchor, inter_lo);
            for (std::int64_t f : idx.frames)
                if (f < inter_hi)
                    view.intermediate.frames.push_back(f);
            break;
        }
        case HeadKind::Wave: {
            const double period = cls.period.value_or(cfg.wave_default_period);
            FrameIndexSet idx = wave_indices(t, cfg.cap_wave, period, inter_lo);
            for (std::int64_t f : idx.frames)
                if (f < inter_hi)
                    view.intermediate.frames.push_back(f);
            break;
        }
        case HeadKind::Veil: {
            if (inter_hi - inter_lo >= cfg.merge_range)
                view.merged = veil_merge_plan(inter_hi, cfg.merge_range, head_dim);
            break;
        }
        }
    }

    const PositionMap pos = dynamic_rope_positions(view, t);
    view.positions = pos.slot_positions;
    view.query_position = pos.query_position;
    return view;
}

}  // namespace pf
