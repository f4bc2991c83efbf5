#include "vidprune/flops.hpp"

namespace vidprune {

double layer_flops(int64_t tokens, const ModelShape& shape) {
    const double n = static_cast<double>(tokens);
    const double d_model = static_cast<double>(shape.hidden_size);
    const double d_ffn = static_cast<double>(shape.ffn_intermediate);
    const double kv = static_cast<double>(shape.kv_heads * shape.head_dim);
    return 2.0 * n * d_model * kv + 2.0 * n * d_model * d_model +
           2.0 * n * n * d_model + 3.0 * n * d_model * d_ffn;
}

double total_flops(int64_t tokens, const ModelShape& shape) {
    return static_cast<double>(shape.num_layers) * layer_flops(tokens, shape);
}

const std::vector<ShapePreset>& shape_presets() {
    static const std::vector<ShapePreset> presets = {
        // Qwen2-7B decoder: GQA with 4 KV heads, SwiGLU FFN, 28 layers.
        {"qwen2-7b", {3584, 18944, 4, 128, 28}},
    };
    return presets;
}

std::optional<ModelShape> find_preset(std::string_view name) {
    for (const ShapePreset& preset : shape_presets()) {
        if (preset.name == name) return preset.shape;
    }
    return std::nullopt;
}

}  // namespace vidprune
