#pragma once
// Deterministic Lloyd's k-means used by the cluster-based baselines:
// farthest-point seeding from index 0, lower-index tie breaks, at most
// 100 iterations, squared-Euclidean objective, 64-bit accumulation.

#include <span>
#include <vector>

namespace vidprune {

struct KMeansResult {
    std::vector<int> labels;              // one per point, in [0, k)
    std::vector<std::vector<double>> centroids;  // k x dim
};

// `points` is a flat row-major n x dim matrix; requires 1 <= k <= n.
// Every cluster in the result is non-empty (degenerate clusters are
// repaired by splitting the largest one).
KMeansResult kmeans(std::span<const float> points, int n, int dim, int k);

}  // namespace vidprune
