#include <doctest.h>

#include <cmath>

#include "vidprune/flops.hpp"

using namespace vidprune;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / b; }

const ModelShape qwen2_7b = *find_preset("qwen2-7b");

}  // namespace

TEST_CASE("layer_flops is zero at zero tokens") {
    CHECK(layer_flops(0, qwen2_7b) == 0.0);
    CHECK(total_flops(0, qwen2_7b) == 0.0);
}

TEST_CASE("total_flops reproduces the published prefill costs") {
    CHECK(rel_err(to_tflops(total_flops(6272, qwen2_7b)), 48.82) < 0.005);
    CHECK(rel_err(to_tflops(total_flops(1568, qwen2_7b)), 10.73) < 0.005);
    CHECK(rel_err(to_tflops(total_flops(1248, qwen2_7b)), 8.46) < 0.005);
    CHECK(rel_err(to_tflops(total_flops(930, qwen2_7b)), 6.23) < 0.005);
    CHECK(rel_err(to_tflops(total_flops(608, qwen2_7b)), 4.04) < 0.005);
}

TEST_CASE("total is layers times per-layer") {
    ModelShape one_layer = qwen2_7b;
    one_layer.num_layers = 1;
    CHECK(total_flops(1234, one_layer) == layer_flops(1234, one_layer));
    CHECK(total_flops(1234, qwen2_7b) ==
          doctest::Approx(28.0 * layer_flops(1234, qwen2_7b)));
}

TEST_CASE("layer_flops is strictly increasing in n") {
    double previous = layer_flops(0, qwen2_7b);
    for (int64_t n : {1, 2, 10, 100, 608, 1248, 6272, 20000}) {
        const double current = layer_flops(n, qwen2_7b);
        CHECK(current > previous);
        previous = current;
    }
}

TEST_CASE("the FFN term dominates each attention term up to 6272 tokens") {
    const double d_model = static_cast<double>(qwen2_7b.hidden_size);
    const double d_ffn = static_cast<double>(qwen2_7b.ffn_intermediate);
    const double kv = static_cast<double>(qwen2_7b.kv_heads * qwen2_7b.head_dim);
    for (int64_t n : {1, 608, 1568, 6272}) {
        const double ffn = 3.0 * n * d_model * d_ffn;
        CHECK(ffn > 2.0 * n * d_model * kv);
        CHECK(ffn > 2.0 * n * d_model * d_model);
        CHECK(ffn > 2.0 * static_cast<double>(n) * n * d_model);
    }
}

TEST_CASE("flops ratios are layer-count independent") {
    ModelShape tall = qwen2_7b;
    tall.num_layers = 80;
    const double ratio_small = total_flops(608, qwen2_7b) / total_flops(6272, qwen2_7b);
    const double ratio_tall = total_flops(608, tall) / total_flops(6272, tall);
    CHECK(ratio_small == doctest::Approx(ratio_tall));
}

TEST_CASE("preset registry") {
    CHECK(find_preset("qwen2-7b").has_value());
    CHECK_FALSE(find_preset("gpt-17").has_value());
    CHECK(qwen2_7b.hidden_size == 3584);
    CHECK(qwen2_7b.ffn_intermediate == 18944);
    CHECK(qwen2_7b.kv_heads == 4);
    CHECK(qwen2_7b.head_dim == 128);
    CHECK(qwen2_7b.num_layers == 28);
}
