#pragma once
// Transformer prefill cost model for grouped-query-attention LLMs with a
// SwiGLU FFN, as a function of the video token count.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vidprune/core.hpp"

namespace vidprune {

// Per-layer FLOPs: 2nD(h_kv*d) + 2nD^2 + 2n^2 D + 3nDD'.
double layer_flops(int64_t tokens, const ModelShape& shape);

// num_layers * layer_flops.
double total_flops(int64_t tokens, const ModelShape& shape);

inline double to_tflops(double flops) { return flops * 1e-12; }

struct ShapePreset {
    std::string name;
    ModelShape shape;
};

const std::vector<ShapePreset>& shape_presets();

// Lookup by preset name (e.g. "qwen2-7b"); nullopt when unknown.
std::optional<ModelShape> find_preset(std::string_view name);

}  // namespace vidprune
