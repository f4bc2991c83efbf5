#pragma once
// Temporal segmentation: adjacent-frame transition similarity, the dynamic
// segmenter driven by it, and the fixed-interval / cluster-based baselines.

#include <span>
#include <vector>

#include "vidprune/core.hpp"

namespace vidprune {

// Cosine similarity between consecutive global frame features; entry i
// compares frames i and i+1. Length F-1 (empty for a single frame).
struct TransitionProfile {
    std::vector<double> similarities;

    int frame_count() const { return static_cast<int>(similarities.size()) + 1; }
};

TransitionProfile transition_profile(const TokenDump& dump);

// Same computation over an explicit F x dim feature matrix.
TransitionProfile transition_profile_from(std::span<const float> features,
                                          int frame_count, int dim);

// Boundary set = (min(c-1, F-1) smallest similarities) union (t_i < tau).
// Boundary i splits frames i and i+1 into different segments.
Segmentation dynamic_segment(const TransitionProfile& profile, int min_segments,
                             double tau);

// ceil(F/interval) segments of `interval` frames, last one possibly shorter.
Segmentation fixed_interval_segment(int frame_count, int interval);

// k-means labels over frame features; requires num_clusters <= F.
std::vector<int> cluster_frame_labels(const TokenDump& dump, int num_clusters);

// Cluster-based baseline: a boundary at every frame whose cluster label
// differs from its predecessor's, so interleaved labels yield more segments
// than clusters.
Segmentation cluster_segment(const TokenDump& dump, int num_clusters);

}  // namespace vidprune
