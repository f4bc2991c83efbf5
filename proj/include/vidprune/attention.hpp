#pragma once
// Attention-based token selection: adaptive average pooling of per-frame
// attention maps down to token resolution, plus per-frame top-k selection.

#include <span>
#include <vector>

#include "vidprune/core.hpp"

namespace vidprune {

// Per-frame saliency scores at token resolution (F x N, row-major).
struct PooledAttention {
    int frame_count = 0;
    int tokens_per_frame = 0;
    std::vector<float> scores;

    std::span<const float> frame(int f) const {
        return {scores.data() + static_cast<size_t>(f) * tokens_per_frame,
                static_cast<size_t>(tokens_per_frame)};
    }
};

// Adaptive average pooling H x W -> pool_out_h x pool_out_w; output cell
// (i, j) averages input window [floor(i*H/Hout), ceil((i+1)*H/Hout)) x
// [floor(j*W/Wout), ceil((j+1)*W/Wout)), then row-major flattening.
PooledAttention pool_attention(const TokenDump& dump);

// Fallback for dumps without attention maps: score each token by cosine
// similarity to its frame's mean token.
PooledAttention pseudo_cls_attention(const TokenDump& dump);

// pool_attention when maps are present and not overridden, else the
// pseudo-[CLS] fallback.
PooledAttention saliency_scores(const TokenDump& dump, const PruneConfig& config);

// The `budget` highest-scoring spatial indices of one frame, skipping
// `excluded`; ties toward the lower index; result ascending.
std::vector<int> select_salient(const PooledAttention& pooled, int frame, int budget,
                                std::span<const int> excluded = {});

}  // namespace vidprune
