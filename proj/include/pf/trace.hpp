#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pf/error.hpp"
#include "pf/heads.hpp"
#include "pf/rng.hpp"

namespace pf {

// Historical-attention logit sequence observed while generating frame
// `target_frame`: one pre-softmax score per history frame t = 1..target-1.
struct LogitSequence {
    std::vector<double> values;
    std::int64_t target_frame = 1;

    LogitSequence() = default;

    explicit LogitSequence(std::vector<double> v)
        : values(std::move(v)), target_frame(static_cast<std::int64_t>(values.size()) + 1) {
        validate();
    }

    LogitSequence(std::vector<double> v, std::int64_t target)
        : values(std::move(v)), target_frame(target) {
        require(static_cast<std::int64_t>(values.size()) == target_frame - 1, Errc::BadExtent,
                "sequence length must equal target_frame - 1");
        validate();
    }

    std::size_t size() const { return values.size(); }

private:
    void validate() const {
        for (double v : values)
            require(std::isfinite(v), Errc::NonFinite, "logit sequence contains NaN/Inf");
    }
};

enum class PatternKind { Anchor, Wave, Veil };

// Generator recipe for one synthetic head. Veil sequences boost the first
// frame and the last kVeilBoostTail frames above the (negative) base level.
struct PatternSpec {
    PatternKind kind = PatternKind::Anchor;
    double base_level = 0.0;
    double period = 6.0;            // wave only
    double amplitude = 1.0;         // wave only
    double noise_sigma = 0.0;
    double first_frame_boost = 0.0; // veil only
    std::uint64_t rng_seed = 0;
};

inline constexpr std::size_t kVeilBoostTail = 2;
inline constexpr std::size_t kMinSequenceLength = 8;

inline LogitSequence synthesize_sequence(const PatternSpec& spec, std::size_t length) {
    require(length >= kMinSequenceLength, Errc::InsufficientHistory,
            "synthetic sequences need at least 8 frames");
    require(spec.noise_sigma >= 0.0, Errc::InvalidArgument, "noise_sigma must be >= 0");
    if (spec.kind == PatternKind::Wave)
        require(spec.period >= 2.0, Errc::InvalidArgument, "wave period must be >= 2");

    constexpr double two_pi = 6.283185307179586;
    std::vector<double> vals(length);
    for (std::size_t i = 0; i < length; ++i) {
        const double t = static_cast<double>(i + 1);  // history frames are 1-based
        double v = spec.base_level;
        switch (spec.kind) {
        case PatternKind::Anchor:
            break;
        case PatternKind::Wave:
            v += spec.amplitude * std::cos(two_pi * t / spec.period);
            break;
        case PatternKind::Veil:
            if (i == 0 || i + kVeilBoostTail >= length)
                v += spec.first_frame_boost;
            break;
        }
        if (spec.noise_sigma > 0.0) {
            const std::uint64_t ha = rng::hash_combine(spec.rng_seed, 0x6e6f6973ull, i);
            const std::uint64_t hb = rng::hash_combine(spec.rng_seed, 0x7368676dull, i);
            v += spec.noise_sigma * rng::standard_normal(ha, hb);
        }
        vals[i] = v;
    }
    return LogitSequence(std::move(vals));
}

// Row `target` of a T x T pre-softmax score matrix, restricted to the
// history columns 1..target-1 (frame indices are 1-based here, matching the
// convention that frame T attends back over frames 1..T-1).
inline LogitSequence extract_history_sequence(const std::vector<double>& logits,
                                              std::size_t t_frames, std::int64_t target) {
    require(logits.size() == t_frames * t_frames, Errc::ShapeMismatch,
            "expected a square T x T logit matrix");
    require(target >= 1 && target <= static_cast<std::int64_t>(t_frames), Errc::OutOfRange,
            "target frame outside [1, T]");
    require(target >= 2, Errc::EmptyHistory, "frame 1 has no history");
    const std::size_t row = static_cast<std::size_t>(target - 1);
    std::vector<double> vals(static_cast<std::size_t>(target - 1));
    for (std::size_t c = 0; c + 1 < static_cast<std::size_t>(target); ++c)
        vals[c] = logits[row * t_frames + c];
    return LogitSequence(std::move(vals), target);
}

// Dense (prompt, layer, head, history-frame) logit store. Values are kept
// as float32 so file round-trips are bit-exact.
class LogitTrace {
public:
    LogitTrace() = default;

    LogitTrace(std::size_t prompts, std::size_t layers, std::size_t heads, std::size_t frames)
        : num_prompts_(prompts), num_layers_(layers), num_heads_(heads), num_frames_(frames) {
        validate_extents(prompts, layers, heads, frames);
        logits_.assign(num_prompts_ * num_layers_ * num_heads_ * num_frames_, 0.0f);
    }

    std::size_t num_prompts() const { return num_prompts_; }
    std::size_t num_layers() const { return num_layers_; }
    std::size_t num_heads() const { return num_heads_; }
    std::size_t num_frames() const { return num_frames_; }

    float& at(std::size_t p, std::size_t l, std::size_t h, std::size_t f) {
        return logits_[index(p, l, h, f)];
    }
    float at(std::size_t p, std::size_t l, std::size_t h, std::size_t f) const {
        return logits_[index(p, l, h, f)];
    }

    const std::vector<float>& raw() const { return logits_; }

    LogitSequence sequence(std::size_t p, std::size_t l, std::size_t h) const {
        std::vector<double> vals(num_frames_);
        const std::size_t base = index(p, l, h, 0);
        for (std::size_t f = 0; f < num_frames_; ++f)
            vals[f] = static_cast<double>(logits_[base + f]);
        return LogitSequence(std::move(vals));
    }

    bool has_labels() const { return labels_.has_value(); }

    void set_labels(std::vector<std::uint8_t> labels) {
        require(labels.size() == num_layers_ * num_heads_, Errc::BadExtent,
                "label block must cover layers x heads");
        for (std::uint8_t b : labels)
            require(b <= 2 || b == kUnlabeled, Errc::InvalidArgument, "bad label byte");
        labels_ = std::move(labels);
    }

    std::optional<HeadKind> label(std::size_t layer, std::size_t head) const {
        if (!labels_)
            return std::nullopt;
        const std::uint8_t b = (*labels_)[layer * num_heads_ + head];
        if (b == kUnlabeled)
            return std::nullopt;
        return static_cast<HeadKind>(b);
    }

    const std::optional<std::vector<std::uint8_t>>& labels() const { return labels_; }

    static void validate_extents(std::size_t prompts, std::size_t layers, std::size_t heads,
                                 std::size_t frames) {
        require(prompts >= 1 && layers >= 1 && heads >= 1, Errc::BadExtent,
                "trace extents must be >= 1");
        require(frames >= kMinSequenceLength, Errc::BadExtent,
                "traces need at least 8 history frames");
        // Reject products that overflow before they can corrupt allocation sizes.
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / 4;
        std::uint64_t n = prompts;
        for (std::uint64_t e : {static_cast<std::uint64_t>(layers),
                                static_cast<std::uint64_t>(heads),
                                static_cast<std::uint64_t>(frames)}) {
            require(e == 0 || n <= limit / e, Errc::ExtentOverflow,
                    "trace extents overflow addressable size");
            n *= e;
        }
    }

private:
    std::size_t index(std::size_t p, std::size_t l, std::size_t h, std::size_t f) const {
        require(p < num_prompts_ && l < num_layers_ && h < num_heads_ && f < num_frames_,
                Errc::OutOfRange, "trace index out of range");
        return ((p * num_layers_ + l) * num_heads_ + h) * num_frames_ + f;
    }

    std::size_t num_prompts_ = 0;
    std::size_t num_layers_ = 0;
    std::size_t num_heads_ = 0;
    std::size_t num_frames_ = 0;
    std::vector<float> logits_;
    std::optional<std::vector<std::uint8_t>> labels_;
};

// ---------------------------------------------------------------------------
// Binary trace file format (little-endian):
//   magic "PFTR" | u32 version=1 | u32 prompts | u32 layers | u32 heads |
//   u32 frames | u8 has_labels | f32 payload (prompt,layer,head,frame
//   row-major) | optional u8 label per (layer,head): 0=anchor 1=wave 2=veil
//   255=unlabeled
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 4> kTraceMagic{'P', 'F', 'T', 'R'};
inline constexpr std::uint32_t kTraceVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_f32(std::string& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

class Reader {
public:
    Reader(const char* data, std::size_t size) : data_(data), size_(size) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    float f32() {
        const std::uint32_t bits = u32();
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }

    void bytes(char* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, data_ + pos_, n);
        pos_ += n;
    }

    std::size_t remaining() const { return size_ - pos_; }

private:
    void need(std::size_t n) {
        require(pos_ + n <= size_, Errc::Truncated, "trace file ends mid-field");
    }

    const char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline void write_trace(const LogitTrace& trace, const std::string& path) {
    LogitTrace::validate_extents(trace.num_prompts(), trace.num_layers(), trace.num_heads(),
                                 trace.num_frames());
    for (float v : trace.raw())
        require(std::isfinite(v), Errc::NonFinite, "trace payload contains NaN/Inf");

    std::string out;
    out.reserve(21 + trace.raw().size() * 4);
    out.append(kTraceMagic.data(), 4);
    detail::put_u32(out, kTraceVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(trace.num_prompts()));
    detail::put_u32(out, static_cast<std::uint32_t>(trace.num_layers()));
    detail::put_u32(out, static_cast<std::uint32_t>(trace.num_heads()));
    detail::put_u32(out, static_cast<std::uint32_t>(trace.num_frames()));
    out.push_back(trace.has_labels() ? 1 : 0);
    for (float v : trace.raw())
        detail::put_f32(out, v);
    if (trace.has_labels())
        for (std::uint8_t b : *trace.labels())
            out.push_back(static_cast<char>(b));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), Errc::IoError, "cannot open '" + path + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    require(f.good(), Errc::IoError, "short write to '" + path + "'");
}

inline LogitTrace read_trace(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), Errc::IoError, "cannot open '" + path + "'");
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    detail::Reader r(buf.data(), buf.size());
    std::array<char, 4> magic{};
    r.bytes(magic.data(), 4);
    require(magic == kTraceMagic, Errc::BadMagic, "not a trace file (magic mismatch)");
    const std::uint32_t version = r.u32();
    require(version == kTraceVersion, Errc::BadVersion,
            "unsupported trace version " + std::to_string(version));

    const std::uint32_t prompts = r.u32();
    const std::uint32_t layers = r.u32();
    const std::uint32_t heads = r.u32();
    const std::uint32_t frames = r.u32();
    LogitTrace::validate_extents(prompts, layers, heads, frames);
    const std::uint8_t has_labels = r.u8();
    require(has_labels <= 1, Errc::InvalidArgument, "bad label flag");

    const std::uint64_t count = static_cast<std::uint64_t>(prompts) * layers * heads * frames;
    require(r.remaining() >= count * 4, Errc::Truncated,
            "payload shorter than the declared extents");

    LogitTrace trace(prompts, layers, heads, frames);
    for (std::size_t p = 0; p < prompts; ++p)
        for (std::size_t l = 0; l < layers; ++l)
            for (std::size_t h = 0; h < heads; ++h)
                for (std::size_t fr = 0; fr < frames; ++fr) {
                    const float v = r.f32();
                    require(std::isfinite(v), Errc::NonFinite, "trace payload contains NaN/Inf");
                    trace.at(p, l, h, fr) = v;
                }

    if (has_labels) {
        std::vector<std::uint8_t> labels(static_cast<std::size_t>(layers) * heads);
        require(r.remaining() >= labels.size(), Errc::Truncated, "label block truncated");
        r.bytes(reinterpret_cast<char*>(labels.data()), labels.size());
        trace.set_labels(std::move(labels));
    }
    require(r.remaining() == 0, Errc::TrailingBytes, "unexpected bytes after payload");
    return trace;
}

// ---------------------------------------------------------------------------
// Labeled synthetic traces
// ---------------------------------------------------------------------------

// Deterministic class assignment from an anchor:wave:veil ratio. Slot k of
// the flattened (layer, head) grid takes the class whose cumulative ratio
// bucket contains k mod (sum of ratios).
inline std::vector<HeadKind> assign_synthetic_classes(std::size_t layers, std::size_t heads,
                                                      const std::array<std::size_t, 3>& mix) {
    const std::size_t total = mix[0] + mix[1] + mix[2];
    require(total > 0, Errc::InvalidArgument, "class mix ratios sum to zero");
    std::vector<HeadKind> out(layers * heads);
    for (std::size_t k = 0; k < out.size(); ++k) {
        const std::size_t r = k % total;
        if (r < mix[0])
            out[k] = HeadKind::Anchor;
        else if (r < mix[0] + mix[1])
            out[k] = HeadKind::Wave;
        else
            out[k] = HeadKind::Veil;
    }
    return out;
}

struct SyntheticTraceConfig {
    std::size_t prompts = 32;
    std::size_t layers = 30;
    std::size_t heads = 12;
    std::size_t frames = 69;
    std::array<std::size_t, 3> mix{5, 4, 3};  // anchor : wave : veil
    double noise_sigma = 0.1;
    std::uint64_t seed = 1;
    double anchor_base = 2.0;
    double wave_period = 6.0;
    double wave_amplitude = 1.0;
    double veil_base = -1.5;
    double veil_boost = 3.0;
};

inline LogitTrace make_synthetic_trace(const SyntheticTraceConfig& cfg) {
    LogitTrace trace(cfg.prompts, cfg.layers, cfg.heads, cfg.frames);
    const std::vector<HeadKind> classes = assign_synthetic_classes(cfg.layers, cfg.heads, cfg.mix);

    std::vector<std::uint8_t> labels(classes.size());
    for (std::size_t i = 0; i < classes.size(); ++i)
        labels[i] = static_cast<std::uint8_t>(classes[i]);

    for (std::size_t p = 0; p < cfg.prompts; ++p)
        for (std::size_t l = 0; l < cfg.layers; ++l)
            for (std::size_t h = 0; h < cfg.heads; ++h) {
                PatternSpec spec;
                spec.noise_sigma = cfg.noise_sigma;
                spec.rng_seed = rng::hash_combine(cfg.seed, p, l, h);
                switch (classes[l * cfg.heads + h]) {
                case HeadKind::Anchor:
                    spec.kind = PatternKind::Anchor;
                    spec.base_level = cfg.anchor_base;
                    break;
                case HeadKind::Wave:
                    spec.kind = PatternKind::Wave;
                    spec.base_level = 0.0;
                    spec.period = cfg.wave_period;
                    spec.amplitude = cfg.wave_amplitude;
                    break;
                case HeadKind::Veil:
                    spec.kind = PatternKind::Veil;
                    spec.base_level = cfg.veil_base;
                    spec.first_frame_boost = cfg.veil_boost;
                    break;
                }
                const LogitSequence seq = synthesize_sequence(spec, cfg.frames);
                for (std::size_t fr = 0; fr < cfg.frames; ++fr)
                    trace.at(p, l, h, fr) = static_cast<float>(seq.values[fr]);
            }

    trace.set_labels(std::move(labels));
    return trace;
}

}  // namespace pf
