// Command-line front end: synthesize labeled logit traces, classify heads,
// run the cache simulator, verify the oracle suites, sweep parameters, and
// pretty-print reports.
//
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 verification
// failure.

#include <array>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pf/pf.hpp"
#include "pf/reference.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerify = 3;

std::array<std::size_t, 3> parse_mix(const std::string& s) {
    std::array<std::size_t, 3> mix{};
    std::stringstream ss(s);
    std::string part;
    std::size_t i = 0;
    while (std::getline(ss, part, ':')) {
        if (i >= 3)
            pf::fail(pf::Errc::InvalidArgument, "mix must be anchor:wave:veil");
        mix[i++] = static_cast<std::size_t>(std::stoull(part));
    }
    if (i != 3)
        pf::fail(pf::Errc::InvalidArgument, "mix must be anchor:wave:veil");
    if (mix[0] + mix[1] + mix[2] == 0)
        pf::fail(pf::Errc::InvalidArgument, "mix ratios sum to zero");
    return mix;
}

json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f.good())
        pf::fail(pf::Errc::IoError, "cannot open '" + path + "'");
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        pf::fail(pf::Errc::InvalidArgument, "bad JSON in '" + path + "': " + e.what());
    }
    return j;
}

void save_json_file(const json& j, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f.good())
        pf::fail(pf::Errc::IoError, "cannot open '" + path + "' for writing");
    f << j.dump(2) << "\n";
}

json classify_config_to_json(const pf::ClassifyConfig& c) {
    return json{{"alpha", c.alpha},
                {"beta", c.beta},
                {"harmonic_count", c.harmonic_count},
                {"min_length", c.min_length},
                {"period_search_max", c.period_search_max}};
}

// Ground-truth labels -> head map, with the given period for wave heads.
pf::HeadClassMap map_from_labels(const pf::LogitTrace& trace, double wave_period) {
    pf::require(trace.has_labels(), pf::Errc::InvalidArgument,
                "trace has no ground-truth labels");
    pf::HeadClassMap map(trace.num_layers(), trace.num_heads());
    for (std::size_t l = 0; l < trace.num_layers(); ++l)
        for (std::size_t h = 0; h < trace.num_heads(); ++h) {
            const auto label = trace.label(l, h);
            pf::require(label.has_value(), pf::Errc::InvalidArgument,
                        "trace contains unlabeled heads");
            pf::HeadClass c;
            c.kind = *label;
            if (c.kind == pf::HeadKind::Wave)
                c.period = wave_period;
            map.at(l, h) = c;
        }
    return map;
}

double classification_accuracy(const pf::LogitTrace& trace, const pf::HeadClassMap& map,
                               std::array<std::array<std::size_t, 3>, 3>* confusion) {
    std::size_t agree = 0, total = 0;
    for (std::size_t l = 0; l < trace.num_layers(); ++l)
        for (std::size_t h = 0; h < trace.num_heads(); ++h) {
            const auto label = trace.label(l, h);
            if (!label)
                continue;
            const pf::HeadKind predicted = map.at(l, h).kind;
            if (confusion)
                (*confusion)[static_cast<std::size_t>(*label)]
                            [static_cast<std::size_t>(predicted)] += 1;
            agree += (*label == predicted) ? 1 : 0;
            ++total;
        }
    pf::require(total > 0, pf::Errc::InvalidArgument, "no labeled heads");
    return static_cast<double>(agree) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int cmd_synth(const pf::SyntheticTraceConfig& cfg, const std::string& out_path) {
    const pf::LogitTrace trace = pf::make_synthetic_trace(cfg);
    pf::write_trace(trace, out_path);
    std::cout << "wrote " << out_path << ": " << cfg.prompts << " prompts, " << cfg.layers
              << "x" << cfg.heads << " heads, " << cfg.frames << " frames, mix " << cfg.mix[0]
              << ":" << cfg.mix[1] << ":" << cfg.mix[2] << ", noise " << cfg.noise_sigma
              << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

int cmd_classify(const std::string& trace_path, const std::string& out_path,
                 const pf::ClassifyConfig& cfg) {
    const pf::LogitTrace trace = pf::read_trace(trace_path);
    const pf::HeadClassMap map = pf::classify_model(trace, cfg);

    json j = pf::head_class_map_to_json(map);
    j["config"] = classify_config_to_json(cfg);
    save_json_file(j, out_path);

    std::cout << "classified " << map.num_layers() << "x" << map.num_heads() << " heads over "
              << map.prompts_voted << " prompts: anchor " << map.count(pf::HeadKind::Anchor)
              << ", wave " << map.count(pf::HeadKind::Wave) << ", veil "
              << map.count(pf::HeadKind::Veil) << "\n";

    if (trace.has_labels()) {
        std::array<std::array<std::size_t, 3>, 3> confusion{};
        const double acc = classification_accuracy(trace, map, &confusion);
        static const char* names[3] = {"anchor", "wave", "veil"};
        std::cout << "label agreement: " << std::fixed << std::setprecision(4) << acc << "\n";
        std::cout << "confusion (rows=label, cols=predicted):\n";
        std::cout << "          anchor    wave    veil\n";
        for (int r = 0; r < 3; ++r) {
            std::cout << std::setw(8) << names[r];
            for (int c = 0; c < 3; ++c)
                std::cout << std::setw(8) << confusion[static_cast<std::size_t>(r)]
                                                      [static_cast<std::size_t>(c)];
            std::cout << "\n";
        }
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const pf::SimConfig& cfg, const std::string& out_path,
                 const std::string& csv_path) {
    const pf::SimReport report = pf::run(cfg);

    json j = pf::sim_report_to_json(report);
    j["mode"] = pf::sim_mode_name(cfg.mode);
    j["fused"] = cfg.fused;
    j["num_frames"] = cfg.num_frames;
    j["layers"] = cfg.layers;
    j["heads"] = cfg.heads;
    j["head_dim"] = cfg.head_dim;
    j["tokens_per_frame"] = cfg.tokens_per_frame;
    j["policy"] = pf::policy_config_to_json(cfg.policy);
    save_json_file(j, out_path);
    if (!csv_path.empty())
        pf::write_sim_csv(report, csv_path);

    std::cout << "simulated " << cfg.num_frames << " frames (" << pf::sim_mode_name(cfg.mode)
              << (cfg.fused ? ", fused" : ", unfused") << "): peak token slots "
              << report.peak_slots << ", attention calls " << report.attention_calls
              << ", flop proxy " << std::scientific << std::setprecision(3)
              << report.flop_proxy << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifyOutcome {
    std::string name;
    double deviation = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

VerifyOutcome verify_ragged_vs_padded(std::size_t instances, std::uint64_t seed) {
    double max_dev = 0.0;
    for (std::size_t inst = 0; inst < instances; ++inst) {
        const std::uint64_t s0 = pf::rng::hash_combine(seed, 0x72616767ull, inst);
        const std::size_t batch = 1 + pf::rng::splitmix64(s0) % 4;
        const std::size_t heads = 1 + pf::rng::splitmix64(s0 + 1) % 8;
        const std::size_t d = (pf::rng::splitmix64(s0 + 2) % 2 == 0) ? 8 : 64;
        const std::size_t segs = batch * heads;

        std::vector<std::vector<double>> qb(segs), kb(segs), vb(segs);
        std::vector<pf::KvSegment> kv(segs);
        for (std::size_t i = 0; i < segs; ++i) {
            const std::size_t lkv = 1 + pf::rng::splitmix64(s0 + 3 + i) % 32;
            const std::size_t lq = 1 + pf::rng::splitmix64(s0 + 200 + i) % 4;
            qb[i].resize(lq * d);
            kb[i].resize(lkv * d);
            vb[i].resize(lkv * d);
            for (std::size_t x = 0; x < qb[i].size(); ++x)
                qb[i][x] = pf::rng::unit_variance_uniform(
                    pf::rng::hash_combine(s0, 11, i, x));
            for (std::size_t x = 0; x < kb[i].size(); ++x) {
                kb[i][x] = pf::rng::unit_variance_uniform(
                    pf::rng::hash_combine(s0, 12, i, x));
                vb[i][x] = pf::rng::unit_variance_uniform(
                    pf::rng::hash_combine(s0, 13, i, x));
            }
            kv[i].k = kb[i];
            kv[i].v = vb[i];
        }
        const pf::RaggedQueries q = pf::pack_queries(qb, d);
        const pf::RaggedBatch batch_kv = pf::pack_ragged(kv, d);
        const std::vector<double> out = pf::ragged_attention(q, batch_kv);
        const std::vector<double> oracle = pf::ref::padded_masked_attention(qb, kb, vb, d);
        for (std::size_t x = 0; x < out.size(); ++x)
            max_dev = std::max(max_dev, std::abs(out[x] - oracle[x]));
    }
    return {"ragged vs padded-dense oracle", max_dev, 1e-9, max_dev < 1e-9};
}

VerifyOutcome verify_fused_vs_unfused(std::size_t instances, std::uint64_t seed) {
    double max_dev = 0.0;
    for (std::size_t inst = 0; inst < instances; ++inst) {
        const std::uint64_t s0 = pf::rng::hash_combine(seed, 0x66757365ull, inst);
        const std::size_t d = 8;
        const std::size_t ngroups = 1 + pf::rng::splitmix64(s0) % 3;
        std::vector<pf::RaggedQueries> queries;
        std::vector<pf::RaggedBatch> groups;
        for (std::size_t g = 0; g < ngroups; ++g) {
            const std::size_t segs = 1 + pf::rng::splitmix64(s0 + g) % 4;
            std::vector<std::vector<double>> qb(segs);
            std::vector<pf::KvSegment> kv(segs);
            for (std::size_t i = 0; i < segs; ++i) {
                const std::size_t lkv = 1 + pf::rng::splitmix64(s0 + 7 * g + i) % 16;
                qb[i].resize(2 * d);
                kv[i].k.resize(lkv * d);
                kv[i].v.resize(lkv * d);
                for (std::size_t x = 0; x < qb[i].size(); ++x)
                    qb[i][x] = pf::rng::unit_variance_uniform(
                        pf::rng::hash_combine(s0, 21, g, i, x));
                for (std::size_t x = 0; x < kv[i].k.size(); ++x) {
                    kv[i].k[x] = pf::rng::unit_variance_uniform(
                        pf::rng::hash_combine(s0, 22, g, i, x));
                    kv[i].v[x] = pf::rng::unit_variance_uniform(
                        pf::rng::hash_combine(s0, 23, g, i, x));
                }
            }
            queries.push_back(pf::pack_queries(qb, d));
            groups.push_back(pf::pack_ragged(kv, d));
        }
        pf::InvocationCounter c1, c2;
        const auto fused = pf::fused_ragged_call(queries, groups, c1);
        const auto unfused = pf::unfused_ragged_calls(queries, groups, c2);
        for (std::size_t g = 0; g < ngroups; ++g)
            for (std::size_t x = 0; x < fused[g].size(); ++x)
                max_dev = std::max(max_dev, std::abs(fused[g][x] - unfused[g][x]));
    }
    return {"fused vs unfused ragged call", max_dev, 1e-12, max_dev < 1e-12};
}

VerifyOutcome verify_fft_vs_dft(std::uint64_t seed) {
    double max_dev = 0.0;
    for (std::size_t n : {8u, 17u, 59u, 64u, 68u, 100u, 127u, 128u, 255u, 256u}) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i)
            x[i] = pf::rng::unit_variance_uniform(pf::rng::hash_combine(seed, 31, n, i));
        const auto prod = pf::fft::rfft(x);
        const auto oracle = pf::ref::naive_dft(x);
        for (std::size_t k = 0; k < prod.size(); ++k)
            max_dev = std::max(max_dev, std::abs(std::abs(prod[k]) - std::abs(oracle[k])));
    }
    return {"fft vs naive dft magnitudes", max_dev, 1e-9, max_dev < 1e-9};
}

VerifyOutcome verify_index_formulas(std::int64_t t_max) {
    std::size_t mismatches = 0;
    for (std::int64_t t = 1; t <= t_max; ++t)
        for (std::int64_t cap = 1; cap <= 8; ++cap) {
            if (pf::anchor_indices(t, cap, 0).frames !=
                pf::ref::anchor_indices_reference(t, cap, 0))
                ++mismatches;
            for (double period : {3.0, 6.0, 12.0})
                if (pf::wave_indices(t, cap, period, 0).frames !=
                    pf::ref::wave_indices_reference(t, cap, period, 0))
                    ++mismatches;
        }
    return {"index formulas vs direct substitution", static_cast<double>(mismatches), 0.5,
            mismatches == 0};
}

int cmd_verify(std::size_t instances, std::uint64_t seed) {
    std::vector<VerifyOutcome> results;
    results.push_back(verify_ragged_vs_padded(instances, seed));
    results.push_back(verify_fused_vs_unfused(instances, seed));
    results.push_back(verify_fft_vs_dft(seed));
    results.push_back(verify_index_formulas(500));

    bool all_pass = true;
    for (const VerifyOutcome& r : results) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": max deviation "
                  << std::scientific << std::setprecision(3) << r.deviation << " (tolerance "
                  << r.tolerance << ")\n";
        all_pass = all_pass && r.pass;
    }
    return all_pass ? kExitOk : kExitVerify;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f.good())
        pf::fail(pf::Errc::IoError, "cannot open '" + path + "' for writing");
    f << header << "\n";
    for (const std::string& r : rows)
        f << r << "\n";
}

int cmd_sweep(const std::string& trace_path, const std::string& outdir,
              std::int64_t sim_frames) {
    const pf::LogitTrace trace = pf::read_trace(trace_path);
    pf::require(trace.has_labels(), pf::Errc::InvalidArgument,
                "sweep needs a labeled trace (use `pf synth`)");

    // Threshold sweeps: classification accuracy against the carried labels.
    {
        std::vector<std::string> rows;
        for (double alpha : {0.70, 0.75, 0.80, 0.85, 0.90}) {
            pf::ClassifyConfig cfg;
            cfg.alpha = alpha;
            const double acc =
                classification_accuracy(trace, pf::classify_model(trace, cfg), nullptr);
            rows.push_back(std::to_string(alpha) + "," + std::to_string(acc));
        }
        write_csv(outdir + "/alpha_sweep.csv", "alpha,accuracy", rows);
    }
    {
        std::vector<std::string> rows;
        for (double beta : {5.5, 6.0, 6.4, 6.5, 7.0, 8.0, 9.0}) {
            pf::ClassifyConfig cfg;
            cfg.beta = beta;
            const double acc =
                classification_accuracy(trace, pf::classify_model(trace, cfg), nullptr);
            rows.push_back(std::to_string(beta) + "," + std::to_string(acc));
        }
        write_csv(outdir + "/beta_sweep.csv", "beta,accuracy", rows);
    }

    // Policy sweeps: simulator slot/call metrics on the labeled head map.
    pf::SimConfig base;
    base.num_frames = sim_frames;
    base.layers = trace.num_layers();
    base.heads = trace.num_heads();
    base.head_dim = 24;  // divisible by merge ranges 2 and 3
    base.tokens_per_frame = 2;
    base.head_map = map_from_labels(trace, base.policy.wave_default_period);

    auto run_row = [&](const pf::SimConfig& cfg) {
        const pf::SimReport r = pf::run(cfg);
        std::ostringstream os;
        os << r.peak_slots << "," << r.attention_calls << "," << std::scientific
           << std::setprecision(6) << r.flop_proxy;
        return os.str();
    };

    {
        std::vector<std::string> rows;
        for (std::int64_t cap : {1, 2, 4}) {
            pf::SimConfig cfg = base;
            cfg.policy.cap_anchor = cap;
            rows.push_back("anchor," + std::to_string(cap) + "," + run_row(cfg));
        }
        for (std::int64_t cap : {3, 4, 5}) {
            pf::SimConfig cfg = base;
            cfg.policy.cap_wave = cap;
            rows.push_back("wave," + std::to_string(cap) + "," + run_row(cfg));
        }
        for (std::int64_t m : {2, 3}) {
            pf::SimConfig cfg = base;
            cfg.policy.merge_range = m;
            rows.push_back("veil," + std::to_string(m) + "," + run_row(cfg));
        }
        write_csv(outdir + "/capacity_sweep.csv",
                  "head_type,value,peak_slots,attention_calls,flop_proxy", rows);
    }
    {
        std::vector<std::string> rows;
        for (std::int64_t s : {1, 2, 3, 4, 5}) {
            pf::SimConfig cfg = base;
            cfg.policy.sink = s;
            rows.push_back("sink," + std::to_string(s) + "," + run_row(cfg));
        }
        for (std::int64_t r : {2, 3, 4, 5, 6}) {
            pf::SimConfig cfg = base;
            cfg.policy.recent = r;
            rows.push_back("recent," + std::to_string(r) + "," + run_row(cfg));
        }
        write_csv(outdir + "/sink_recent_sweep.csv",
                  "param,value,peak_slots,attention_calls,flop_proxy", rows);
    }
    {
        std::vector<std::string> rows;
        for (double p : {3.0, 6.0, 12.0}) {
            pf::SimConfig cfg = base;
            cfg.policy.wave_default_period = p;
            cfg.head_map = map_from_labels(trace, p);
            rows.push_back(std::to_string(p) + "," + run_row(cfg));
        }
        write_csv(outdir + "/period_sweep.csv", "period,peak_slots,attention_calls,flop_proxy",
                  rows);
    }

    std::cout << "wrote sweep grids to " << outdir << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int cmd_report(const std::string& report_path, const std::string& map_path) {
    if (!report_path.empty()) {
        const json j = load_json_file(report_path);
        std::cout << "mode: " << j.value("mode", std::string("?"))
                  << "  frames: " << j.value("num_frames", 0) << "  peak token slots: "
                  << j.value("peak_slots", 0) << "\n";
        std::cout << "attention calls: " << j.value("attention_calls", 0)
                  << "  scheduling calls: " << j.value("scheduling_calls", 0)
                  << "  flop proxy: " << j.value("flop_proxy", 0.0) << "\n";
        if (j.contains("steps") && !j["steps"].empty()) {
            const auto& last = j["steps"].back();
            std::cout << "final step " << last.value("step", 0) << " composition:\n";
            if (last.contains("per_class"))
                for (const auto& [name, c] : last["per_class"].items())
                    std::cout << "  " << std::setw(6) << name << ": heads "
                              << c.value("heads", 0) << ", slots " << c.value("max_slots", 0)
                              << " (sink " << c.value("sink", 0) << " + intermediate "
                              << c.value("intermediate", 0) << " + recent "
                              << c.value("recent", 0) << ")\n";
        }
    }
    if (!map_path.empty()) {
        const pf::HeadClassMap map = pf::head_class_map_from_json(load_json_file(map_path));
        std::cout << "head classes (" << map.num_layers() << " layers x " << map.num_heads()
                  << " heads, A=anchor W=wave V=veil):\n";
        for (std::size_t l = 0; l < map.num_layers(); ++l) {
            std::cout << "  L" << std::setw(2) << std::setfill('0') << l << std::setfill(' ')
                      << " ";
            for (std::size_t h = 0; h < map.num_heads(); ++h) {
                const char c = map.at(l, h).kind == pf::HeadKind::Anchor  ? 'A'
                               : map.at(l, h).kind == pf::HeadKind::Wave ? 'W'
                                                                         : 'V';
                std::cout << c;
            }
            std::cout << "\n";
        }
        // Wave-period histogram in 0.25-frame buckets.
        std::map<double, std::size_t> hist;
        for (std::size_t l = 0; l < map.num_layers(); ++l)
            for (std::size_t h = 0; h < map.num_heads(); ++h)
                if (map.at(l, h).period)
                    hist[std::floor(*map.at(l, h).period * 4.0) / 4.0] += 1;
        if (!hist.empty()) {
            std::cout << "wave period histogram:\n";
            for (const auto& [bucket, count] : hist)
                std::cout << "  " << std::fixed << std::setprecision(2) << bucket << "-"
                          << bucket + 0.25 << ": " << std::string(count, '#') << " " << count
                          << "\n";
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"head-aware pyramidal KV-cache toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "write a labeled synthetic logit trace");
    pf::SyntheticTraceConfig synth_cfg;
    std::string synth_out;
    std::string mix_str = "5:4:3";
    synth->add_option("--out", synth_out, "output trace path")->required();
    synth->add_option("--prompts", synth_cfg.prompts, "number of prompts");
    synth->add_option("--layers", synth_cfg.layers, "number of layers");
    synth->add_option("--heads", synth_cfg.heads, "heads per layer");
    synth->add_option("--frames", synth_cfg.frames, "history frames per sequence");
    synth->add_option("--mix", mix_str, "anchor:wave:veil ratio");
    synth->add_option("--noise", synth_cfg.noise_sigma, "gaussian noise sigma");
    synth->add_option("--seed", synth_cfg.seed, "rng seed");
    synth->add_option("--wave-period", synth_cfg.wave_period, "wave generator period");

    // classify
    auto* classify = app.add_subcommand("classify", "classify heads from a trace file");
    std::string cls_trace, cls_out = "head_map.json";
    pf::ClassifyConfig cls_cfg;
    classify->add_option("--trace", cls_trace, "input trace path")->required();
    classify->add_option("--out", cls_out, "output head-map JSON path");
    classify->add_option("--alpha", cls_cfg.alpha, "sign-rate threshold");
    classify->add_option("--beta", cls_cfg.beta, "period threshold (frames)");
    classify->add_option("--harmonics", cls_cfg.harmonic_count, "harmonic folding depth");
    classify->add_option("--min-length", cls_cfg.min_length, "minimum sequence length");
    classify->add_option("--period-search-max", cls_cfg.period_search_max,
                         "largest candidate period (0 = unlimited)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run the autoregressive cache simulator");
    std::string sim_map, sim_out = "sim_report.json", sim_csv, sim_mode = "pyramid";
    std::string sim_config;
    pf::SimConfig sim_cfg;
    bool sim_unfused = false;
    simulate->add_option("--map", sim_map, "head-map JSON path")->required();
    simulate->add_option("--out", sim_out, "output report JSON path");
    simulate->add_option("--csv", sim_csv, "optional CSV time-series path");
    simulate->add_option("--frames", sim_cfg.num_frames, "frames to generate");
    simulate->add_option("--head-dim", sim_cfg.head_dim, "head channel dim");
    simulate->add_option("--tokens-per-frame", sim_cfg.tokens_per_frame, "tokens per frame");
    simulate->add_option("--mode", sim_mode, "pyramid | full_history | sink_recent_only");
    simulate->add_flag("--unfused", sim_unfused, "one ragged call per head class");
    simulate->add_option("--seed", sim_cfg.rng_seed, "rng seed");
    simulate->add_option("--config", sim_config, "policy config JSON path");
    auto* opt_sink = simulate->add_option("--sink", sim_cfg.policy.sink, "sink frames");
    auto* opt_recent = simulate->add_option("--recent", sim_cfg.policy.recent, "recent frames");
    auto* opt_ca = simulate->add_option("--cap-anchor", sim_cfg.policy.cap_anchor, "anchor cap");
    auto* opt_cw = simulate->add_option("--cap-wave", sim_cfg.policy.cap_wave, "wave cap");
    auto* opt_cv = simulate->add_option("--cap-veil", sim_cfg.policy.cap_veil, "veil cap");
    auto* opt_m =
        simulate->add_option("--merge-range", sim_cfg.policy.merge_range, "veil merge range");
    auto* opt_p = simulate->add_option("--wave-period", sim_cfg.policy.wave_default_period,
                                       "default wave period");

    // verify
    auto* verify = app.add_subcommand("verify", "run the oracle-equivalence suites");
    std::size_t verify_instances = 200;
    std::uint64_t verify_seed = 9;
    verify->add_option("--instances", verify_instances, "random instances per suite");
    verify->add_option("--seed", verify_seed, "rng seed");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "grid-evaluate thresholds and budgets");
    std::string sweep_trace, sweep_outdir = ".";
    std::int64_t sweep_frames = 60;
    sweep->add_option("--trace", sweep_trace, "labeled trace path")->required();
    sweep->add_option("--outdir", sweep_outdir, "directory for CSV grids");
    sweep->add_option("--frames", sweep_frames, "simulated frames per grid point");

    // report
    auto* report = app.add_subcommand("report", "pretty-print report or head-map JSON");
    std::string report_json, report_map;
    report->add_option("--report", report_json, "sim report JSON path");
    report->add_option("--map", report_map, "head-map JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (synth->parsed()) {
            try {
                synth_cfg.mix = parse_mix(mix_str);
            } catch (const pf::Error& e) {
                std::cerr << "synth: " << e.what() << "\n";
                return kExitUsage;
            }
            return cmd_synth(synth_cfg, synth_out);
        }
        if (classify->parsed())
            return cmd_classify(cls_trace, cls_out, cls_cfg);
        if (simulate->parsed()) {
            if (!sim_config.empty()) {
                const pf::PolicyConfig file_cfg =
                    pf::policy_config_from_json(load_json_file(sim_config));
                pf::PolicyConfig merged = file_cfg;
                if (opt_sink->count()) merged.sink = sim_cfg.policy.sink;
                if (opt_recent->count()) merged.recent = sim_cfg.policy.recent;
                if (opt_ca->count()) merged.cap_anchor = sim_cfg.policy.cap_anchor;
                if (opt_cw->count()) merged.cap_wave = sim_cfg.policy.cap_wave;
                if (opt_cv->count()) merged.cap_veil = sim_cfg.policy.cap_veil;
                if (opt_m->count()) merged.merge_range = sim_cfg.policy.merge_range;
                if (opt_p->count())
                    merged.wave_default_period = sim_cfg.policy.wave_default_period;
                sim_cfg.policy = merged;
            }
            sim_cfg.mode = pf::sim_mode_from_name(sim_mode);
            sim_cfg.fused = !sim_unfused;
            sim_cfg.head_map = pf::head_class_map_from_json(load_json_file(sim_map));
            sim_cfg.layers = sim_cfg.head_map.num_layers();
            sim_cfg.heads = sim_cfg.head_map.num_heads();
            return cmd_simulate(sim_cfg, sim_out, sim_csv);
        }
        if (verify->parsed())
            return cmd_verify(verify_instances, verify_seed);
        if (sweep->parsed())
            return cmd_sweep(sweep_trace, sweep_outdir, sweep_frames);
        if (report->parsed()) {
            if (report_json.empty() && report_map.empty()) {
                std::cerr << "report: need --report and/or --map\n";
                return kExitUsage;
            }
            return cmd_report(report_json, report_map);
        }
    } catch (const pf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
