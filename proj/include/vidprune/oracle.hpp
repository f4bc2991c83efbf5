#pragma once
// Slow-but-obvious reference implementations used by tests and the
// `compare` CLI command. These deliberately share nothing with the fast
// paths beyond the core types.

#include <span>
#include <vector>

#include "vidprune/core.hpp"
#include "vidprune/merge.hpp"
#include "vidprune/segment.hpp"

namespace vidprune::oracle {

// Full n x n distance matrix, exhaustive kNN by full sort, exhaustive
// delta scan; 64-bit throughout.
DensityScores oracle_density(std::span<const float> tokens, int n, int dim, int k);

// Full stable sort of all indices, then filter and truncate.
std::vector<int> oracle_topk(std::span<const float> scores, int budget,
                             std::span<const int> excluded = {});

// Verifies that the segmentation's boundary set equals S1 union S2 by
// exhaustive recomputation from the profile.
bool oracle_segment_check(const TransitionProfile& profile,
                          const Segmentation& segmentation, int min_segments,
                          double tau);

struct DensityComparison {
    double max_rho_rel_err = 0.0;
    double max_delta_rel_err = 0.0;
    bool ranking_match = true;
    bool pass = true;
};

// Relative error (<= 1e-6 to pass) plus exact score-ranking agreement under
// the lower-index tie policy.
DensityComparison compare_density(const DensityScores& fast,
                                  const DensityScores& reference);

}  // namespace vidprune::oracle
