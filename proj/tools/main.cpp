#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "vidprune/attention.hpp"
#include "vidprune/core.hpp"
#include "vidprune/flops.hpp"
#include "vidprune/io.hpp"
#include "vidprune/merge.hpp"
#include "vidprune/oracle.hpp"
#include "vidprune/pipeline.hpp"
#include "vidprune/segment.hpp"

namespace fs = std::filesystem;
using namespace vidprune;

namespace {

struct PruneArgs {
    std::vector<std::string> inputs;
    std::string out;
    PruneConfig config;
    std::string segmenter = "dyseg";
    std::string merger = "density";
    int fixed_interval = 4;
    int knn_k = 0;
    bool emit_svg = false;
    bool stats_json = false;
    int jobs = 1;
};

SegmenterKind parse_segmenter(const std::string& name) {
    if (name == "dyseg") return SegmenterKind::Dynamic;
    if (name == "fixed") return SegmenterKind::FixedInterval;
    if (name == "cluster") return SegmenterKind::Cluster;
    throw Error(ErrorKind::InvalidConfig, "unknown segmenter '" + name + "'");
}

MergerKind parse_merger(const std::string& name) {
    if (name == "density") return MergerKind::Density;
    if (name == "uniform") return MergerKind::Uniform;
    if (name == "cluster") return MergerKind::Cluster;
    throw Error(ErrorKind::InvalidConfig, "unknown merger '" + name + "'");
}

// Post-run sanity gate: exit status 0 requires these to hold.
void check_result_invariants(const PruneResult& result, const PruneConfig& config) {
    const int target = retention_target(config.retention_ratio, result.frame_count,
                                        result.tokens_per_frame);
    if (result.stats.retained_count != target) {
        std::ostringstream msg;
        msg << "retained " << result.stats.retained_count << " tokens, expected "
            << target;
        throw Error(ErrorKind::BudgetUnderflow, msg.str());
    }
    for (size_t i = 1; i < result.retained.size(); ++i) {
        const auto& prev = result.retained[i - 1];
        const auto& cur = result.retained[i];
        if (std::pair(prev.frame_index, prev.spatial_index) >=
            std::pair(cur.frame_index, cur.spatial_index)) {
            throw Error(ErrorKind::DimensionMismatch,
                        "retained tokens not strictly ordered");
        }
    }
    int dtm = 0, ats = 0;
    for (const SegmentBudget& budget : result.budget_report) {
        dtm += budget.dtm_budget;
        ats += budget.ats_budget;
    }
    if (dtm != result.stats.dtm_count || ats != result.stats.ats_count) {
        throw Error(ErrorKind::DimensionMismatch,
                    "per-origin counts disagree with the budget report");
    }
}

struct FileReport {
    std::string text;
    bool ok = false;
};

FileReport prune_one(const std::string& input, const fs::path& out_base,
                     const PruneArgs& args) {
    FileReport report;
    std::ostringstream line;
    try {
        const TokenDump dump = read_dump(input);
        StageTimings timings;
        const PruneResult result =
            compare_strategies(dump, args.config, parse_segmenter(args.segmenter),
                               parse_merger(args.merger), args.fixed_interval,
                               &timings);
        check_result_invariants(result, args.config);

        write_result(result, out_base, ResultFormat::Binary);
        if (args.stats_json) {
            write_result(result, fs::path(out_base).concat(".stats.json"),
                         ResultFormat::JsonStats);
        }
        if (args.emit_svg) {
            write_result(result, fs::path(out_base).concat(".svg"), ResultFormat::Svg);
        }

        char buffer[256];
        std::snprintf(buffer, sizeof(buffer),
                      "%s: retained %d/%" PRId64
                      " (ratio %.4f), segments %zu, segmentation %.2f ms, "
                      "compression %.2f ms",
                      input.c_str(), result.stats.retained_count,
                      static_cast<int64_t>(result.frame_count) * result.tokens_per_frame,
                      result.stats.retention_ratio,
                      result.segmentation.segments.size(), timings.segmentation_ms,
                      timings.compression_ms);
        line << buffer;
        report.ok = true;
    } catch (const Error& e) {
        line << input << ": error (" << error_kind_name(e.kind()) << "): " << e.what();
    } catch (const std::exception& e) {
        line << input << ": error: " << e.what();
    }
    report.text = line.str();
    return report;
}

int run_prune(const PruneArgs& args) {
    const bool multi = args.inputs.size() > 1;
    std::vector<fs::path> out_bases;
    for (const std::string& input : args.inputs) {
        if (multi) {
            fs::create_directories(args.out);
            out_bases.push_back(fs::path(args.out) /
                                (fs::path(input).stem().string() + ".fvpr"));
        } else {
            out_bases.push_back(args.out);
        }
    }

    std::vector<FileReport> reports(args.inputs.size());
    if (args.jobs <= 1 || args.inputs.size() == 1) {
        for (size_t i = 0; i < args.inputs.size(); ++i) {
            reports[i] = prune_one(args.inputs[i], out_bases[i], args);
        }
    } else {
        std::atomic<size_t> next{0};
        const int workers =
            std::min<int>(args.jobs, static_cast<int>(args.inputs.size()));
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < args.inputs.size();
                     i = next.fetch_add(1)) {
                    reports[i] = prune_one(args.inputs[i], out_bases[i], args);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    }

    bool all_ok = true;
    for (const FileReport& report : reports) {
        (report.ok ? std::cout : std::cerr) << report.text << "\n";
        all_ok = all_ok && report.ok;
    }
    return all_ok ? 0 : 1;
}

int run_flops(const std::string& preset_name, const std::string& tokens_csv) {
    const auto shape = find_preset(preset_name);
    if (!shape) {
        std::ostringstream known;
        for (const ShapePreset& preset : shape_presets()) known << " " << preset.name;
        throw Error(ErrorKind::UnknownPreset,
                    "unknown preset '" + preset_name + "'; known:" + known.str());
    }
    std::printf("tokens\tTFLOPs\n");
    std::stringstream stream(tokens_csv);
    std::string item;
    while (std::getline(stream, item, ',')) {
        if (item.empty()) continue;
        const int64_t n = std::stoll(item);
        std::printf("%" PRId64 "\t%.2f\n", n, to_tflops(total_flops(n, *shape)));
    }
    return 0;
}

int run_synth(const std::string& scenes_text, uint64_t seed, const std::string& out,
              const SynthDims& dims) {
    const auto scenes = parse_scene_spec(scenes_text);
    const TokenDump dump = synth_video(scenes, seed, dims);
    validate_dump(dump);
    write_dump(dump, out);
    std::cout << out << ": F=" << dump.frame_count << " N=" << dump.tokens_per_frame
              << " D=" << dump.token_dim << " attention="
              << (dump.has_attention() ? "yes" : "no") << "\n";
    return 0;
}

int run_compare(const std::vector<std::string>& inputs, int knn_k, bool corrupt) {
    PruneConfig config;
    if (knn_k > 0) config.knn_k = knn_k;
    bool all_ok = true;
    for (const std::string& input : inputs) {
        const TokenDump dump = validate_dump(read_dump(input));
        const int k = effective_knn_k(config, dump.tokens_per_frame);

        double worst_rho = 0.0, worst_delta = 0.0;
        bool ok = true;
        for (int f = 0; f < dump.frame_count; ++f) {
            DensityScores fast = density_scores(dump.frame_tokens(f),
                                                dump.tokens_per_frame,
                                                dump.token_dim, k);
            if (corrupt && f == 0 && !fast.rho.empty()) {
                fast.rho[0] += 1e-3;  // test fixture: force a detectable mismatch
                fast.score[0] = fast.rho[0] * fast.delta[0];
            }
            const DensityScores reference =
                oracle::oracle_density(dump.frame_tokens(f), dump.tokens_per_frame,
                                       dump.token_dim, k);
            const auto cmp = oracle::compare_density(fast, reference);
            worst_rho = std::max(worst_rho, cmp.max_rho_rel_err);
            worst_delta = std::max(worst_delta, cmp.max_delta_rel_err);
            ok = ok && cmp.pass;
        }

        const PooledAttention pooled = saliency_scores(dump, config);
        const int budget = std::max(1, dump.tokens_per_frame / 10);
        for (int f = 0; f < dump.frame_count; ++f) {
            const auto fast = select_salient(pooled, f, budget);
            const auto reference = oracle::oracle_topk(pooled.frame(f), budget);
            ok = ok && fast == reference;
        }

        const TransitionProfile profile = transition_profile(dump);
        const Segmentation segmentation =
            dynamic_segment(profile, config.min_segments, config.transition_threshold);
        ok = ok && oracle::oracle_segment_check(profile, segmentation,
                                                config.min_segments,
                                                config.transition_threshold);

        std::printf("%s: max rho dev %.3e, max delta dev %.3e, %s\n", input.c_str(),
                    worst_rho, worst_delta, ok ? "PASS" : "FAIL");
        all_ok = all_ok && ok;
    }
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Video token pruning: dynamic segmentation + density merging"};
    app.require_subcommand(1);

    PruneArgs prune_args;
    CLI::App* prune_cmd = app.add_subcommand("prune", "Prune a token dump");
    prune_cmd->add_option("--input", prune_args.inputs, "FVTD input file(s)")
        ->required()
        ->delimiter(',');
    prune_cmd->add_option("--out", prune_args.out,
                          "Output path (directory when multiple inputs)")
        ->required();
    prune_cmd->add_option("--r", prune_args.config.retention_ratio, "Retention ratio");
    prune_cmd->add_option("--d", prune_args.config.dtm_fraction,
                          "Fraction of the budget for density merging");
    prune_cmd->add_option("--p", prune_args.config.anchor_interval, "Anchor interval");
    prune_cmd->add_option("--beta", prune_args.config.merge_weight, "Merge weight");
    prune_cmd->add_option("--c", prune_args.config.min_segments, "Minimum segments");
    prune_cmd->add_option("--tau", prune_args.config.transition_threshold,
                          "Transition similarity threshold");
    prune_cmd->add_option("--knn-k", prune_args.knn_k,
                          "kNN size for density (default ceil(sqrt(N)))");
    prune_cmd->add_option("--segmenter", prune_args.segmenter,
                          "dyseg | fixed | cluster");
    prune_cmd->add_option("--merger", prune_args.merger,
                          "density | uniform | cluster");
    prune_cmd->add_option("--fixed-interval", prune_args.fixed_interval,
                          "Interval for the fixed segmenter");
    prune_cmd->add_flag("--emit-svg", prune_args.emit_svg, "Write an SVG visualization");
    prune_cmd->add_flag("--stats-json", prune_args.stats_json, "Write a stats JSON");
    prune_cmd->add_flag("--pseudo-cls", prune_args.config.pseudo_cls,
                        "Force pseudo-[CLS] saliency scores");
    prune_cmd->add_flag("--features-from-tokens",
                        prune_args.config.features_from_tokens,
                        "Derive frame features as per-frame token means");
    prune_cmd->add_option("--jobs", prune_args.jobs, "Parallel workers over input files");

    std::string flops_preset = "qwen2-7b";
    std::string flops_tokens = "6272,1568,1248,930,608";
    CLI::App* flops_cmd = app.add_subcommand("flops", "Prefill FLOPs per token count");
    flops_cmd->add_option("--preset", flops_preset, "Model shape preset");
    flops_cmd->add_option("--tokens", flops_tokens, "Comma-separated token counts");

    std::string synth_scenes;
    std::string synth_out;
    uint64_t synth_seed = 0;
    SynthDims synth_dims;
    bool synth_no_attention = false;
    CLI::App* synth_cmd = app.add_subcommand("synth", "Write a synthetic token dump");
    synth_cmd->add_option("--scenes", synth_scenes, "Scene spec, e.g. 8:a,8:b")
        ->required();
    synth_cmd->add_option("--seed", synth_seed, "RNG seed");
    synth_cmd->add_option("--out", synth_out, "Output FVTD path")->required();
    synth_cmd->add_option("--pool-h", synth_dims.pool_h, "Token grid height");
    synth_cmd->add_option("--pool-w", synth_dims.pool_w, "Token grid width");
    synth_cmd->add_option("--token-dim", synth_dims.token_dim, "Token dimension");
    synth_cmd->add_option("--feature-dim", synth_dims.feature_dim,
                          "Frame feature dimension");
    synth_cmd->add_option("--attn-h", synth_dims.attn_h, "Attention map height");
    synth_cmd->add_option("--attn-w", synth_dims.attn_w, "Attention map width");
    synth_cmd->add_flag("--no-attention", synth_no_attention,
                        "Omit attention maps (forces pseudo-[CLS] in prune)");

    std::vector<std::string> compare_inputs;
    int compare_knn = 0;
    bool compare_corrupt = false;
    CLI::App* compare_cmd =
        app.add_subcommand("compare", "Check fast paths against the oracles");
    compare_cmd->add_option("--input", compare_inputs, "FVTD input file(s)")
        ->required()
        ->delimiter(',');
    compare_cmd->add_option("--knn-k", compare_knn, "kNN size for density");
    compare_cmd->add_flag("--corrupt", compare_corrupt,
                          "Perturb the fast path first (test fixture)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (prune_cmd->parsed()) {
            if (prune_args.knn_k > 0) prune_args.config.knn_k = prune_args.knn_k;
            return run_prune(prune_args);
        }
        if (flops_cmd->parsed()) return run_flops(flops_preset, flops_tokens);
        if (synth_cmd->parsed()) {
            synth_dims.with_attention = !synth_no_attention;
            return run_synth(synth_scenes, synth_seed, synth_out, synth_dims);
        }
        if (compare_cmd->parsed()) {
            return run_compare(compare_inputs, compare_knn, compare_corrupt);
        }
    } catch (const Error& e) {
        std::cerr << "error (" << error_kind_name(e.kind()) << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
