#include "vidprune/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vidprune::oracle {

namespace {

// Same canonical 4-lane accumulation as the fast path (kept textually
// independent) so the two routes agree bit for bit.
double squared_distance(const float* a, const float* b, int dim) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    int d = 0;
    for (; d + 4 <= dim; d += 4) {
        const double d0 = static_cast<double>(a[d]) - b[d];
        const double d1 = static_cast<double>(a[d + 1]) - b[d + 1];
        const double d2 = static_cast<double>(a[d + 2]) - b[d + 2];
        const double d3 = static_cast<double>(a[d + 3]) - b[d + 3];
        acc0 += d0 * d0;
        acc1 += d1 * d1;
        acc2 += d2 * d2;
        acc3 += d3 * d3;
    }
    for (; d < dim; ++d) {
        const double dd = static_cast<double>(a[d]) - b[d];
        acc0 += dd * dd;
    }
    return (acc0 + acc1) + (acc2 + acc3);
}

double rel_err(double a, double b) {
    const double denom = std::max(std::abs(a), std::abs(b));
    if (denom == 0.0) return 0.0;
    return std::abs(a - b) / denom;
}

}  // namespace

DensityScores oracle_density(std::span<const float> tokens, int n, int dim, int k) {
    if (n == 0) {
        throw Error(ErrorKind::EmptyInput, "density scores over zero tokens");
    }
    DensityScores scores;
    scores.rho.assign(n, 1.0);
    scores.delta.assign(n, 0.0);
    scores.score.assign(n, 0.0);
    if (n == 1) return scores;
    if (k < 1 || k > n - 1) {
        throw Error(ErrorKind::InvalidConfig, "knn_k outside [1, n-1]");
    }

    std::vector<std::vector<double>> dist2(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            dist2[i][j] = squared_distance(tokens.data() + static_cast<size_t>(i) * dim,
                                           tokens.data() + static_cast<size_t>(j) * dim,
                                           dim);
        }
    }

    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<double, int>> neighbors;
        for (int j = 0; j < n; ++j) {
            if (j != i) neighbors.emplace_back(dist2[i][j], j);
        }
        std::sort(neighbors.begin(), neighbors.end());
        double sum = 0.0;
        for (int t = 0; t < k; ++t) sum += neighbors[t].first;
        scores.rho[i] = std::exp(-sum / k);
    }

    for (int i = 0; i < n; ++i) {
        bool found_higher = false;
        double chosen = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i || scores.rho[j] <= scores.rho[i]) continue;
            if (!found_higher || dist2[i][j] < chosen) chosen = dist2[i][j];
            found_higher = true;
        }
        if (!found_higher) {
            for (int j = 0; j < n; ++j) {
                if (j != i && dist2[i][j] > chosen) chosen = dist2[i][j];
            }
        }
        scores.delta[i] = std::sqrt(chosen);
        scores.score[i] = scores.rho[i] * scores.delta[i];
    }
    return scores;
}

std::vector<int> oracle_topk(std::span<const float> scores, int budget,
                             std::span<const int> excluded) {
    std::vector<char> mask(scores.size(), 0);
    for (int s : excluded) mask[s] = 1;

    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });

    std::vector<int> picks;
    for (int s : order) {
        if (static_cast<int>(picks.size()) == budget) break;
        if (!mask[s]) picks.push_back(s);
    }
    if (static_cast<int>(picks.size()) < budget) {
        throw Error(ErrorKind::BudgetOverflow,
                    "budget exceeds available candidates");
    }
    std::sort(picks.begin(), picks.end());
    return picks;
}

bool oracle_segment_check(const TransitionProfile& profile,
                          const Segmentation& segmentation, int min_segments,
                          double tau) {
    const int frame_count = profile.frame_count();
    if (!segmentation_valid(segmentation, frame_count)) return false;

    const int transitions = frame_count - 1;
    std::vector<char> expected(transitions, 0);

    std::vector<std::pair<double, int>> ranked;
    for (int i = 0; i < transitions; ++i) {
        ranked.emplace_back(profile.similarities[i], i);
    }
    std::sort(ranked.begin(), ranked.end());
    const int forced = std::min(min_segments - 1, transitions);
    for (int t = 0; t < forced; ++t) expected[ranked[t].second] = 1;
    for (int i = 0; i < transitions; ++i) {
        if (profile.similarities[i] < tau) expected[i] = 1;
    }

    std::vector<char> actual(transitions, 0);
    for (size_t s = 0; s + 1 < segmentation.segments.size(); ++s) {
        actual[segmentation.segments[s].last] = 1;
    }
    return expected == actual;
}

DensityComparison compare_density(const DensityScores& fast,
                                  const DensityScores& reference) {
    DensityComparison cmp;
    const int n = static_cast<int>(fast.rho.size());
    for (int i = 0; i < n; ++i) {
        cmp.max_rho_rel_err = std::max(cmp.max_rho_rel_err,
                                       rel_err(fast.rho[i], reference.rho[i]));
        cmp.max_delta_rel_err = std::max(cmp.max_delta_rel_err,
                                         rel_err(fast.delta[i], reference.delta[i]));
    }

    auto ranking = [](const std::vector<double>& score) {
        std::vector<int> order(score.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (score[a] != score[b]) return score[a] > score[b];
            return a < b;
        });
        return order;
    };
    cmp.ranking_match = ranking(fast.score) == ranking(reference.score);
    cmp.pass = cmp.ranking_match && cmp.max_rho_rel_err <= 1e-6 &&
               cmp.max_delta_rel_err <= 1e-6;
    return cmp;
}

}  // namespace vidprune::oracle
