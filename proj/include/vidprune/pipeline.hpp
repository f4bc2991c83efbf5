#pragma once
// Full pruning pipeline: segmentation, per-segment budget split, saliency
// selection + density merging, and order-preserving reassembly. Also hosts
// the segmenter/merger ablation matrix.

#include <vector>

#include "vidprune/core.hpp"

namespace vidprune {

enum class SegmenterKind { Dynamic, FixedInterval, Cluster };
enum class MergerKind { Density, Uniform, Cluster };

struct BudgetPlan {
    std::vector<SegmentBudget> segments;
    int total_target = 0;  // round(r * F * N)
};

// Splits the retention budget across segments, frames, and modules.
// Per segment of P frames the exact target r*P*N divides into d*r*P*N for
// DTM and (1-d)*r*N per frame for ATS; fractional parts are floored and the
// remainder is handed out one token at a time in ascending segment/frame
// order (per-frame ATS buckets first, then the segment's DTM bucket) until
// the global target round(r*F*N) is met. The DTM share is split evenly over
// ceil(P/p) anchor frames, remainder to earlier frames.
BudgetPlan budget_plan(const Segmentation& segmentation, int tokens_per_frame,
                       double retention_ratio, double dtm_fraction,
                       int anchor_interval, RoundingPolicy policy);

struct StageTimings {
    double segmentation_ms = 0.0;
    double compression_ms = 0.0;
};

// Canonical pipeline: dynamic segmentation + density merging.
PruneResult prune(const TokenDump& dump, const PruneConfig& config,
                  StageTimings* timings = nullptr);

// Same pipeline with a swapped segmenter and/or merger, for ablations.
// `fixed_interval` only applies to the fixed-interval segmenter; the
// cluster segmenter uses min(c, F) clusters.
PruneResult compare_strategies(const TokenDump& dump, const PruneConfig& config,
                               SegmenterKind segmenter, MergerKind merger,
                               int fixed_interval = 4,
                               StageTimings* timings = nullptr);

}  // namespace vidprune
