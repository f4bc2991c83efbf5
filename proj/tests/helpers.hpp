#pragma once
// Small builders for handcrafted dumps used across the unit suites.

#include <initializer_list>

#include "vidprune/core.hpp"

namespace test_helpers {

// F frames of N tokens laid out as a 1 x N grid, with benign nonzero
// defaults everywhere.
inline vidprune::TokenDump make_dump(int frames, int tokens_per_frame, int dim) {
    vidprune::TokenDump dump;
    dump.frame_count = frames;
    dump.tokens_per_frame = tokens_per_frame;
    dump.token_dim = dim;
    dump.frame_feature_dim = 2;
    dump.attn_height = 1;
    dump.attn_width = tokens_per_frame;
    dump.pool_out_h = 1;
    dump.pool_out_w = tokens_per_frame;
    dump.frame_features.assign(static_cast<size_t>(frames) * 2, 1.0f);
    dump.tokens.assign(static_cast<size_t>(frames) * tokens_per_frame * dim, 0.5f);
    dump.attention.assign(static_cast<size_t>(frames) * tokens_per_frame, 0.0f);
    return dump;
}

inline void set_token(vidprune::TokenDump& dump, int frame, int spatial,
                      std::initializer_list<float> values) {
    float* out = dump.tokens.data() +
                 (static_cast<size_t>(frame) * dump.tokens_per_frame + spatial) *
                     dump.token_dim;
    for (float v : values) *out++ = v;
}

inline void set_feature(vidprune::TokenDump& dump, int frame,
                        std::initializer_list<float> values) {
    float* out = dump.frame_features.data() +
                 static_cast<size_t>(frame) * dump.frame_feature_dim;
    for (float v : values) *out++ = v;
}

inline void set_attention(vidprune::TokenDump& dump, int frame,
                          std::initializer_list<float> values) {
    float* out = dump.attention.data() +
                 static_cast<size_t>(frame) * dump.attn_height * dump.attn_width;
    for (float v : values) *out++ = v;
}

}  // namespace test_helpers
