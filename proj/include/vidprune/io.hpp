#pragma once
// Bit-exact serialization of token dumps and prune results, synthetic video
// generation for tests/benchmarks, and the SVG visualizer.
//
// Token dump format (FVTD, little-endian):
//   magic "FVTD" (4 bytes)
//   version   u32 = 1
//   flags     u32 (bit 0: attention present)
//   F, N, D, Df, H, W, pool_out_h, pool_out_w   u32 each
//   frame_features  f32[F*Df]
//   tokens          f32[F*N*D]
//   attention       f32[F*H*W]   (only when flag bit 0 is set)
// All arrays row-major.
//
// Prune result format (FVPR, little-endian): same header discipline,
// version-tagged; see io.cpp for the field list.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vidprune/core.hpp"
#include "vidprune/pipeline.hpp"

namespace vidprune {

TokenDump read_dump(const std::filesystem::path& path);
void write_dump(const TokenDump& dump, const std::filesystem::path& path);

// One scene of a synthetic video: `length` frames whose global features
// cluster around the center identified by `center_id` (distinct ids give
// exactly orthogonal centers), dispersed by `spread`.
struct SceneSpec {
    int length = 0;
    int center_id = 0;
    double spread = 0.0;
};

struct SynthDims {
    int pool_h = 14;
    int pool_w = 14;
    int token_dim = 64;
    int feature_dim = 64;
    int attn_h = 28;
    int attn_w = 28;
    bool with_attention = true;
};

// Deterministic per (spec, seed): frame features drawn around per-scene
// centers, tokens as per-frame Gaussian mixtures around planted objects,
// attention concentrated on the object locations.
TokenDump synth_video(const std::vector<SceneSpec>& scenes, uint64_t seed,
                      const SynthDims& dims = {});

// Parses a CLI scene string like "8:a,8:b" or "8:a:0.05" (length:label with
// optional spread). Labels map to center ids in order of first appearance.
std::vector<SceneSpec> parse_scene_spec(const std::string& text);

enum class ResultFormat { Binary, JsonStats, Svg };

void write_result(const PruneResult& result, const std::filesystem::path& path,
                  ResultFormat format);
PruneResult read_result(const std::filesystem::path& path);

// Versioned stats document; `timings` is optional.
std::string result_stats_json(const PruneResult& result,
                              const StageTimings* timings = nullptr);

// One rectangle per patch (exactly F*N <rect> elements), colored by origin
// and merge group, with segment boundaries marked.
std::string result_svg(const PruneResult& result);

}  // namespace vidprune
