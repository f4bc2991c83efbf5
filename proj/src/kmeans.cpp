#include "vidprune/kmeans.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

namespace vidprune {

namespace {

double sq_dist_to_centroid(std::span<const float> points, int dim, int point,
                           const std::vector<double>& centroid) {
    const float* p = points.data() + static_cast<size_t>(point) * dim;
    double acc = 0.0;
    for (int d = 0; d < dim; ++d) {
        const double diff = static_cast<double>(p[d]) - centroid[d];
        acc += diff * diff;
    }
    return acc;
}

std::vector<double> point_as_centroid(std::span<const float> points, int dim, int point) {
    const float* p = points.data() + static_cast<size_t>(point) * dim;
    return std::vector<double>(p, p + dim);
}

}  // namespace

KMeansResult kmeans(std::span<const float> points, int n, int dim, int k) {
    assert(k >= 1 && k <= n);
    KMeansResult result;
    result.centroids.reserve(k);

    // Farthest-point seeding, first seed pinned to index 0.
    result.centroids.push_back(point_as_centroid(points, dim, 0));
    std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
    for (int t = 1; t < k; ++t) {
        const auto& latest = result.centroids.back();
        int best = 0;
        double best_dist = -1.0;
        for (int i = 0; i < n; ++i) {
            min_dist[i] = std::min(min_dist[i],
                                   sq_dist_to_centroid(points, dim, i, latest));
            if (min_dist[i] > best_dist) {
                best_dist = min_dist[i];
                best = i;
            }
        }
        result.centroids.push_back(point_as_centroid(points, dim, best));
    }

    result.labels.assign(n, 0);
    std::vector<int> counts(k, 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_dist = sq_dist_to_centroid(points, dim, i, result.centroids[0]);
            for (int c = 1; c < k; ++c) {
                const double dist = sq_dist_to_centroid(points, dim, i, result.centroids[c]);
                if (dist < best_dist) {
                    best_dist = dist;
                    best = c;
                }
            }
            if (result.labels[i] != best) {
                result.labels[i] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < n; ++i) ++counts[result.labels[i]];
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            std::fill(result.centroids[c].begin(), result.centroids[c].end(), 0.0);
        }
        for (int i = 0; i < n; ++i) {
            const float* p = points.data() + static_cast<size_t>(i) * dim;
            auto& centroid = result.centroids[result.labels[i]];
            for (int d = 0; d < dim; ++d) centroid[d] += p[d];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (double& v : result.centroids[c]) v /= counts[c];
        }
        if (!changed) break;
    }

    // Repair empty clusters: the largest cluster donates its farthest member.
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) ++counts[result.labels[i]];
    for (int c = 0; c < k; ++c) {
        while (counts[c] == 0) {
            int donor = static_cast<int>(
                std::max_element(counts.begin(), counts.end()) - counts.begin());
            int moved = -1;
            double worst = -1.0;
            for (int i = 0; i < n; ++i) {
                if (result.labels[i] != donor) continue;
                const double dist =
                    sq_dist_to_centroid(points, dim, i, result.centroids[donor]);
                if (dist > worst) {
                    worst = dist;
                    moved = i;
                }
            }
            result.labels[moved] = c;
            --counts[donor];
            ++counts[c];
            result.centroids[c] = point_as_centroid(points, dim, moved);
        }
    }

    // Final means so centroids agree with labels.
    for (int c = 0; c < k; ++c) {
        std::fill(result.centroids[c].begin(), result.centroids[c].end(), 0.0);
    }
    for (int i = 0; i < n; ++i) {
        const float* p = points.data() + static_cast<size_t>(i) * dim;
        auto& centroid = result.centroids[result.labels[i]];
        for (int d = 0; d < dim; ++d) centroid[d] += p[d];
    }
    for (int c = 0; c < k; ++c) {
        for (double& v : result.centroids[c]) v /= counts[c];
    }
    return result;
}

}  // namespace vidprune
