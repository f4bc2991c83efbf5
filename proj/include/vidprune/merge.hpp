#pragma once
// Density-based token merging: density-peak scoring, anchor selection on
// anchor frames, similarity-based assignment, anchor-centric aggregation,
// and the uniform / cluster-based merging baselines.

#include <span>
#include <vector>

#include "vidprune/core.hpp"

namespace vidprune {

struct TokenRef {
    int frame = 0;
    int spatial = 0;

    auto operator<=>(const TokenRef&) const = default;
};

// Density-peak scores for one token set: rho is the exponential local
// density, delta the distance to the closest strictly-denser token (or the
// farthest token when none exists), score their product.
struct DensityScores {
    std::vector<double> rho;
    std::vector<double> delta;
    std::vector<double> score;
};

// `tokens` is a flat row-major n x dim matrix. Requires 1 <= k <= n-1 for
// n >= 2; n == 1 yields rho=1, delta=0 by convention.
DensityScores density_scores(std::span<const float> tokens, int n, int dim, int k);

// Frames start, start+p, start+2p, ... inside the segment; ceil(P/p) of them.
std::vector<int> select_anchor_frames(const Segment& segment, int anchor_interval);

// Top-`budget` spatial indices of one frame by density score, skipping
// `excluded`, ties toward the lower index; result ascending.
std::vector<int> select_frame_anchors(const TokenDump& dump, int frame, int budget,
                                      int k, std::span<const int> excluded = {});

// Convenience over several anchor frames with a uniform per-frame budget.
std::vector<TokenRef> select_anchors(const TokenDump& dump,
                                     std::span<const int> anchor_frames,
                                     int per_frame_budget, int k);

// Content-agnostic baseline: `budget` evenly strided spatial indices,
// skipping `excluded`; result ascending.
std::vector<int> uniform_frame_anchors(int tokens_per_frame, int budget,
                                       std::span<const int> excluded = {});

struct MergeOutcome {
    std::vector<RetainedToken> retained;       // ascending (frame, spatial)
    std::vector<MergeAssignment> assignments;  // ascending (frame, spatial)
};

// Assigns every segment token that is neither an anchor nor excluded to its
// most cosine-similar anchor, then folds each anchor's assignees into it:
// a* = beta*a + ((1-beta)/n) * sum(b_i). Anchors keep their positions.
MergeOutcome assign_and_merge(const TokenDump& dump, const Segment& segment,
                              std::span<const TokenRef> anchors,
                              std::span<const TokenRef> excluded, double beta);

// Ablation baseline: uniform striding instead of density scores on each
// anchor frame, then the same assignment/aggregation.
MergeOutcome uniform_merge(const TokenDump& dump, const Segment& segment,
                           int per_frame_budget, int anchor_interval, double beta,
                           std::span<const TokenRef> excluded = {});

// Ablation baseline: k-means with k = budget over the segment's tokens
// (minus `excluded`); each output token is a cluster mean placed at its
// cluster's first-member position.
MergeOutcome cluster_merge(const TokenDump& dump, const Segment& segment,
                           int budget, std::span<const TokenRef> excluded = {});

}  // namespace vidprune
