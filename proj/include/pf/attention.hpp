#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pf/error.hpp"

namespace pf {

// Dense (batch, heads, seq, dim) tensor, row-major.
struct DenseTensor {
    std::size_t batch = 0;
    std::size_t heads = 0;
    std::size_t seq = 0;
    std::size_t dim = 0;
    std::vector<double> data;

    DenseTensor() = default;
    DenseTensor(std::size_t b, std::size_t h, std::size_t l, std::size_t d)
        : batch(b), heads(h), seq(l), dim(d), data(b * h * l * d, 0.0) {}

    double& at(std::size_t b, std::size_t h, std::size_t l, std::size_t d) {
        return data[((b * heads + h) * seq + l) * dim + d];
    }
    double at(std::size_t b, std::size_t h, std::size_t l, std::size_t d) const {
        return data[((b * heads + h) * seq + l) * dim + d];
    }
};

namespace detail {

// Single-block scaled-dot-product attention with max-subtracted softmax.
// Every attention entry point funnels through this routine, so ragged, dense
// and fused paths produce bit-identical results on identical blocks.
inline void attend_block(const double* q, std::size_t lq, const double* k, const double* v,
                         std::size_t lkv, std::size_t d, double* out) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> logits(lkv);
    for (std::size_t i = 0; i < lq; ++i) {
        const double* qi = q + i * d;
        double row_max = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < lkv; ++j) {
            const double* kj = k + j * d;
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c)
                dot += qi[c] * kj[c];
            logits[j] = dot * scale;
            row_max = std::max(row_max, logits[j]);
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < lkv; ++j) {
            logits[j] = std::exp(logits[j] - row_max);
            denom += logits[j];
        }
        const double inv = 1.0 / denom;
        double* oi = out + i * d;
        for (std::size_t c = 0; c < d; ++c)
            oi[c] = 0.0;
        for (std::size_t j = 0; j < lkv; ++j) {
            const double w = logits[j] * inv;
            const double* vj = v + j * d;
            for (std::size_t c = 0; c < d; ++c)
                oi[c] += w * vj[c];
        }
    }
}

inline void check_finite(const std::vector<double>& data, const char* what) {
    for (double v : data)
        require(std::isfinite(v), Errc::NonFinite, std::string(what) + " contains NaN/Inf");
}

}  // namespace detail

// O = softmax(Q K^T / sqrt(D)) V per (batch, head).
inline DenseTensor dense_attention(const DenseTensor& q, const DenseTensor& k,
                                   const DenseTensor& v) {
    require(q.batch == k.batch && q.heads == k.heads && q.dim == k.dim, Errc::ShapeMismatch,
            "Q/K shapes do not conform");
    require(k.batch == v.batch && k.heads == v.heads && k.seq == v.seq && k.dim == v.dim,
            Errc::ShapeMismatch, "K/V shapes do not conform");
    require(k.seq >= 1, Errc::EmptySegment, "attention needs at least one key");
    detail::check_finite(q.data, "Q");
    detail::check_finite(k.data, "K");
    detail::check_finite(v.data, "V");

    DenseTensor out(q.batch, q.heads, q.seq, q.dim);
    for (std::size_t b = 0; b < q.batch; ++b)
        for (std::size_t h = 0; h < q.heads; ++h) {
            const std::size_t qoff = ((b * q.heads + h) * q.seq) * q.dim;
            const std::size_t koff = ((b * k.heads + h) * k.seq) * k.dim;
            detail::attend_block(q.data.data() + qoff, q.seq, k.data.data() + koff,
                                 v.data.data() + koff, k.seq, q.dim, out.data.data() + qoff);
        }
    return out;
}

// Variable-length KV segments flattened in batch-head order with prefix-sum
// boundaries: segment i occupies flat rows [cu_seqlens[i], cu_seqlens[i+1]).
struct RaggedBatch {
    std::vector<double> flat_k;
    std::vector<double> flat_v;
    std::vector<std::size_t> lengths;
    std::vector<std::size_t> cu_seqlens;
    std::size_t head_dim = 0;

    std::size_t num_segments() const { return lengths.size(); }
    std::size_t total_len() const { return cu_seqlens.empty() ? 0 : cu_seqlens.back(); }
};

// Flattened query blocks, one per KV segment (possibly empty).
struct RaggedQueries {
    std::vector<double> flat_q;
    std::vector<std::size_t> lengths;
    std::vector<std::size_t> cu_seqlens;
    std::size_t head_dim = 0;

    std::size_t num_segments() const { return lengths.size(); }
    std::size_t total_len() const { return cu_seqlens.empty() ? 0 : cu_seqlens.back(); }
};

struct KvSegment {
    std::vector<double> k;
    std::vector<double> v;
};

inline std::vector<std::size_t> prefix_sums(const std::vector<std::size_t>& lengths) {
    std::vector<std::size_t> cu(lengths.size() + 1, 0);
    for (std::size_t i = 0; i < lengths.size(); ++i)
        cu[i + 1] = cu[i] + lengths[i];
    return cu;
}

inline RaggedBatch pack_ragged(const std::vector<KvSegment>& segments, std::size_t head_dim) {
    require(head_dim >= 1, Errc::InvalidArgument, "head_dim must be >= 1");
    RaggedBatch batch;
    batch.head_dim = head_dim;
    batch.lengths.reserve(segments.size());
    for (const KvSegment& s : segments) {
        require(s.k.size() == s.v.size(), Errc::ShapeMismatch, "K/V sizes differ in a segment");
        require(s.k.size() % head_dim == 0, Errc::ShapeMismatch,
                "segment size is not a multiple of head_dim");
        batch.lengths.push_back(s.k.size() / head_dim);
        batch.flat_k.insert(batch.flat_k.end(), s.k.begin(), s.k.end());
        batch.flat_v.insert(batch.flat_v.end(), s.v.begin(), s.v.end());
    }
    batch.cu_seqlens = prefix_sums(batch.lengths);
    return batch;
}

inline RaggedQueries pack_queries(const std::vector<std::vector<double>>& blocks,
                                  std::size_t head_dim) {
    require(head_dim >= 1, Errc::InvalidArgument, "head_dim must be >= 1");
    RaggedQueries q;
    q.head_dim = head_dim;
    for (const auto& b : blocks) {
        require(b.size() % head_dim == 0, Errc::ShapeMismatch,
                "query block size is not a multiple of head_dim");
        q.lengths.push_back(b.size() / head_dim);
        q.flat_q.insert(q.flat_q.end(), b.begin(), b.end());
    }
    q.cu_seqlens = prefix_sums(q.lengths);
    return q;
}

namespace detail {

inline void check_offsets(const std::vector<std::size_t>& lengths,
                          const std::vector<std::size_t>& cu, std::size_t flat_rows) {
    require(cu.size() == lengths.size() + 1 && !cu.empty() && cu.front() == 0,
            Errc::CorruptOffsets, "cu_seqlens shape is wrong");
    for (std::size_t i = 0; i < lengths.size(); ++i)
        require(cu[i + 1] == cu[i] + lengths[i], Errc::CorruptOffsets,
                "cu_seqlens is not the prefix sum of the lengths");
    require(cu.back() == flat_rows, Errc::CorruptOffsets,
            "cu_seqlens end does not match the flat buffer");
}

}  // namespace detail

// Per-segment attention over the flattened layout; no padding anywhere.
// Outputs are concatenated in segment order (total_q x head_dim, row-major).
inline std::vector<double> ragged_attention(const RaggedQueries& q, const RaggedBatch& batch) {
    require(q.head_dim == batch.head_dim, Errc::ShapeMismatch,
            "query and cache head dims differ");
    require(q.num_segments() == batch.num_segments(), Errc::ShapeMismatch,
            "query and cache segment counts differ");
    const std::size_t d = batch.head_dim;
    detail::check_offsets(batch.lengths, batch.cu_seqlens, batch.flat_k.size() / d);
    require(batch.flat_k.size() == batch.flat_v.size(), Errc::ShapeMismatch,
            "flat K/V sizes differ");
    detail::check_offsets(q.lengths, q.cu_seqlens, q.flat_q.size() / d);
    detail::check_finite(q.flat_q, "flat Q");
    detail::check_finite(batch.flat_k, "flat K");
    detail::check_finite(batch.flat_v, "flat V");

    std::vector<double> out(q.total_len() * d, 0.0);
    for (std::size_t i = 0; i < batch.num_segments(); ++i) {
        const std::size_t lq = q.lengths[i];
        if (lq == 0)
            continue;
        const std::size_t lkv = batch.lengths[i];
        require(lkv >= 1, Errc::EmptySegment,
                "segment " + std::to_string(i) + " has queries but no keys");
        detail::attend_block(q.flat_q.data() + q.cu_seqlens[i] * d, lq,
                             batch.flat_k.data() + batch.cu_seqlens[i] * d,
                             batch.flat_v.data() + batch.cu_seqlens[i] * d, lkv, d,
                             out.data() + q.cu_seqlens[i] * d);
    }
    return out;
}

// Kernel-invocation bookkeeping. attention_calls counts ragged invocations;
// scheduling_calls additionally counts workspace packing, where the unfused
// path pays one write per segment and the fused path one batched write per
// call.
struct InvocationCounter {
    std::uint64_t attention_calls = 0;
    std::uint64_t scheduling_calls = 0;
};

// Concatenates all groups into one ragged invocation, then splits the
// outputs back per group. Numerically identical to calling each group
// separately; only the counters differ.
inline std::vector<std::vector<double>> fused_ragged_call(
    const std::vector<RaggedQueries>& queries, const std::vector<RaggedBatch>& groups,
    InvocationCounter& counter) {
    require(!groups.empty(), Errc::InvalidArgument, "no groups to fuse");
    require(queries.size() == groups.size(), Errc::ShapeMismatch,
            "query group count does not match KV group count");
    const std::size_t d = groups.front().head_dim;
    for (const RaggedBatch& g : groups)
        require(g.head_dim == d, Errc::ShapeMismatch, "head dim differs across groups");

    RaggedQueries all_q;
    RaggedBatch all_kv;
    all_q.head_dim = d;
    all_kv.head_dim = d;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        all_q.flat_q.insert(all_q.flat_q.end(), queries[g].flat_q.begin(),
                            queries[g].flat_q.end());
        all_q.lengths.insert(all_q.lengths.end(), queries[g].lengths.begin(),
                             queries[g].lengths.end());
        all_kv.flat_k.insert(all_kv.flat_k.end(), groups[g].flat_k.begin(),
                             groups[g].flat_k.end());
        all_kv.flat_v.insert(all_kv.flat_v.end(), groups[g].flat_v.begin(),
                             groups[g].flat_v.end());
        all_kv.lengths.insert(all_kv.lengths.end(), groups[g].lengths.begin(),
                              groups[g].lengths.end());
    }
    all_q.cu_seqlens = prefix_sums(all_q.lengths);
    all_kv.cu_seqlens = prefix_sums(all_kv.lengths);

    const std::vector<double> flat = ragged_attention(all_q, all_kv);
    counter.attention_calls += 1;
    counter.scheduling_calls += 2;  // one batched workspace write + one launch

    std::vector<std::vector<double>> outputs(groups.size());
    std::size_t row = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const std::size_t rows = queries[g].total_len();
        outputs[g].assign(flat.begin() + static_cast<std::ptrdiff_t>(row * d),
                          flat.begin() + static_cast<std::ptrdiff_t>((row + rows) * d));
        row += rows;
    }
    return outputs;
}

// Baseline path: one ragged invocation per group.
inline std::vector<std::vector<double>> unfused_ragged_calls(
    const std::vector<RaggedQueries>& queries, const std::vector<RaggedBatch>& groups,
    InvocationCounter& counter) {
    require(queries.size() == groups.size(), Errc::ShapeMismatch,
            "query group count does not match KV group count");
    std::vector<std::vector<double>> outputs(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        outputs[g] = ragged_attention(queries[g], groups[g]);
        counter.attention_calls += 1;
        counter.scheduling_calls += 1 + groups[g].num_segments();  // per-segment writes + launch
    }
    return outputs;
}

}  // namespace pf
