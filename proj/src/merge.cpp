#include "vidprune/merge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vidprune/kmeans.hpp"

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

namespace vidprune {

namespace {

// Tokens are widened to double once per frame/segment (the conversion is
// exact, so values match converting inside the loop), then the kernels run
// fixed 4-lane accumulation summed as (acc0+acc1)+(acc2+acc3). The SSE2
// path performs the identical per-lane IEEE operations, so both compile
// paths and the scalar oracle agree bit for bit.
std::vector<double> widen(const float* data, size_t count) {
    return std::vector<double>(data, data + count);
}

double squared_distance(const double* a, const double* b, int dim) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    int d = 0;
#if defined(__SSE2__)
    __m128d acc01 = _mm_setzero_pd();
    __m128d acc23 = _mm_setzero_pd();
    for (; d + 4 <= dim; d += 4) {
        const __m128d d01 = _mm_sub_pd(_mm_loadu_pd(a + d), _mm_loadu_pd(b + d));
        const __m128d d23 =
            _mm_sub_pd(_mm_loadu_pd(a + d + 2), _mm_loadu_pd(b + d + 2));
        acc01 = _mm_add_pd(acc01, _mm_mul_pd(d01, d01));
        acc23 = _mm_add_pd(acc23, _mm_mul_pd(d23, d23));
    }
    double lanes[4];
    _mm_storeu_pd(lanes, acc01);
    _mm_storeu_pd(lanes + 2, acc23);
    acc0 = lanes[0];
    acc1 = lanes[1];
    acc2 = lanes[2];
    acc3 = lanes[3];
#else
    for (; d + 4 <= dim; d += 4) {
        const double d0 = a[d] - b[d];
        const double d1 = a[d + 1] - b[d + 1];
        const double d2 = a[d + 2] - b[d + 2];
        const double d3 = a[d + 3] - b[d + 3];
        acc0 += d0 * d0;
        acc1 += d1 * d1;
        acc2 += d2 * d2;
        acc3 += d3 * d3;
    }
#endif
    for (; d < dim; ++d) {
        const double dd = a[d] - b[d];
        acc0 += dd * dd;
    }
    return (acc0 + acc1) + (acc2 + acc3);
}

double dot4(const double* a, const double* b, int dim) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    int d = 0;
#if defined(__SSE2__)
    __m128d acc01 = _mm_setzero_pd();
    __m128d acc23 = _mm_setzero_pd();
    for (; d + 4 <= dim; d += 4) {
        acc01 = _mm_add_pd(acc01,
                           _mm_mul_pd(_mm_loadu_pd(a + d), _mm_loadu_pd(b + d)));
        acc23 = _mm_add_pd(
            acc23, _mm_mul_pd(_mm_loadu_pd(a + d + 2), _mm_loadu_pd(b + d + 2)));
    }
    double lanes[4];
    _mm_storeu_pd(lanes, acc01);
    _mm_storeu_pd(lanes + 2, acc23);
    acc0 = lanes[0];
    acc1 = lanes[1];
    acc2 = lanes[2];
    acc3 = lanes[3];
#else
    for (; d + 4 <= dim; d += 4) {
        acc0 += a[d] * b[d];
        acc1 += a[d + 1] * b[d + 1];
        acc2 += a[d + 2] * b[d + 2];
        acc3 += a[d + 3] * b[d + 3];
    }
#endif
    for (; d < dim; ++d) acc0 += a[d] * b[d];
    return (acc0 + acc1) + (acc2 + acc3);
}

double vector_norm(const double* a, int dim, const TokenRef& where) {
    const double sq = dot4(a, a, dim);
    if (sq == 0.0) {
        std::ostringstream msg;
        msg << "zero-norm token at frame " << where.frame << ", spatial "
            << where.spatial << "; cosine similarity is undefined";
        throw Error(ErrorKind::DegenerateFeature, msg.str());
    }
    return std::sqrt(sq);
}

std::vector<char> exclusion_mask(int tokens_per_frame, std::span<const int> excluded) {
    std::vector<char> mask(tokens_per_frame, 0);
    for (int s : excluded) {
        if (s < 0 || s >= tokens_per_frame) {
            std::ostringstream msg;
            msg << "excluded spatial index " << s << " outside [0, "
                << tokens_per_frame << ")";
            throw Error(ErrorKind::DimensionMismatch, msg.str());
        }
        mask[s] = 1;
    }
    return mask;
}

void require_in_segment(std::span<const TokenRef> refs, const Segment& segment,
                        int tokens_per_frame, const char* what) {
    for (const TokenRef& ref : refs) {
        if (ref.frame < segment.first || ref.frame > segment.last ||
            ref.spatial < 0 || ref.spatial >= tokens_per_frame) {
            std::ostringstream msg;
            msg << what << " (" << ref.frame << ", " << ref.spatial
                << ") outside segment [" << segment.first << ", " << segment.last
                << "] x [0, " << tokens_per_frame << ")";
            throw Error(ErrorKind::DimensionMismatch, msg.str());
        }
    }
}

}  // namespace

DensityScores density_scores(std::span<const float> tokens, int n, int dim, int k) {
    if (n == 0) {
        throw Error(ErrorKind::EmptyInput, "density scores over zero tokens");
    }
    DensityScores scores;
    scores.rho.assign(n, 1.0);
    scores.delta.assign(n, 0.0);
    scores.score.assign(n, 0.0);
    if (n == 1) return scores;
    if (k < 1 || k > n - 1) {
        std::ostringstream msg;
        msg << "knn_k = " << k << " outside [1, " << n - 1 << "]";
        throw Error(ErrorKind::InvalidConfig, msg.str());
    }

    // Symmetric squared-distance matrix, computed once per token set.
    const std::vector<double> wide = widen(tokens.data(), static_cast<size_t>(n) * dim);
    std::vector<double> dist2(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* vi = wide.data() + static_cast<size_t>(i) * dim;
        for (int j = i + 1; j < n; ++j) {
            const double* vj = wide.data() + static_cast<size_t>(j) * dim;
            const double d2 = squared_distance(vi, vj, dim);
            dist2[static_cast<size_t>(i) * n + j] = d2;
            dist2[static_cast<size_t>(j) * n + i] = d2;
        }
    }

    // rho_i = exp(-(1/k) * sum of the k smallest squared distances), self
    // excluded. Selected values are summed in ascending order.
    std::vector<double> row(n - 1);
    for (int i = 0; i < n; ++i) {
        int m = 0;
        const double* di = dist2.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            if (j != i) row[m++] = di[j];
        }
        std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
        std::sort(row.begin(), row.begin() + k);
        double sum = 0.0;
        for (int t = 0; t < k; ++t) sum += row[t];
        scores.rho[i] = std::exp(-sum / k);
    }

    for (int i = 0; i < n; ++i) {
        const double* di = dist2.data() + static_cast<size_t>(i) * n;
        double best = -1.0;
        bool found_higher = false;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            if (scores.rho[j] > scores.rho[i]) {
                if (!found_higher || di[j] < best) best = di[j];
                found_higher = true;
            }
        }
        if (!found_higher) {
            best = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j != i) best = std::max(best, di[j]);
            }
        }
        scores.delta[i] = std::sqrt(best);
        scores.score[i] = scores.rho[i] * scores.delta[i];
    }
    return scores;
}

std::vector<int> select_anchor_frames(const Segment& segment, int anchor_interval) {
    std::vector<int> frames;
    for (int f = segment.first; f <= segment.last; f += anchor_interval) {
        frames.push_back(f);
    }
    return frames;
}

std::vector<int> select_frame_anchors(const TokenDump& dump, int frame, int budget,
                                      int k, std::span<const int> excluded) {
    if (budget == 0) return {};
    const auto scores =
        density_scores(dump.frame_tokens(frame), dump.tokens_per_frame,
                       dump.token_dim, k);
    const auto mask = exclusion_mask(dump.tokens_per_frame, excluded);

    std::vector<int> candidates;
    candidates.reserve(dump.tokens_per_frame);
    for (int s = 0; s < dump.tokens_per_frame; ++s) {
        if (!mask[s]) candidates.push_back(s);
    }
    if (budget > static_cast<int>(candidates.size())) {
        std::ostringstream msg;
        msg << "anchor budget " << budget << " exceeds " << candidates.size()
            << " available tokens on frame " << frame;
        throw Error(ErrorKind::BudgetOverflow, msg.str());
    }
    std::partial_sort(candidates.begin(), candidates.begin() + budget,
                      candidates.end(), [&](int a, int b) {
                          if (scores.score[a] != scores.score[b]) {
                              return scores.score[a] > scores.score[b];
                          }
                          return a < b;
                      });
    candidates.resize(budget);
    std::sort(candidates.begin(), candidates.end());
    return candidates;
}

std::vector<TokenRef> select_anchors(const TokenDump& dump,
                                     std::span<const int> anchor_frames,
                                     int per_frame_budget, int k) {
    std::vector<TokenRef> anchors;
    for (int frame : anchor_frames) {
        for (int s : select_frame_anchors(dump, frame, per_frame_budget, k)) {
            anchors.push_back({frame, s});
        }
    }
    return anchors;
}

std::vector<int> uniform_frame_anchors(int tokens_per_frame, int budget,
                                       std::span<const int> excluded) {
    if (budget == 0) return {};
    const auto mask = exclusion_mask(tokens_per_frame, excluded);
    std::vector<int> candidates;
    for (int s = 0; s < tokens_per_frame; ++s) {
        if (!mask[s]) candidates.push_back(s);
    }
    const int available = static_cast<int>(candidates.size());
    if (budget > available) {
        std::ostringstream msg;
        msg << "uniform anchor budget " << budget << " exceeds " << available
            << " available tokens";
        throw Error(ErrorKind::BudgetOverflow, msg.str());
    }
    std::vector<int> picks;
    picks.reserve(budget);
    for (int t = 0; t < budget; ++t) {
        picks.push_back(candidates[static_cast<size_t>(t) * available / budget]);
    }
    return picks;
}

MergeOutcome assign_and_merge(const TokenDump& dump, const Segment& segment,
                              std::span<const TokenRef> anchors_in,
                              std::span<const TokenRef> excluded, double beta) {
    const int n_tokens = dump.tokens_per_frame;
    const int dim = dump.token_dim;
    require_in_segment(anchors_in, segment, n_tokens, "anchor");
    require_in_segment(excluded, segment, n_tokens, "excluded token");

    // Similarity ties break toward the positionally-first anchor regardless
    // of the caller's ordering.
    std::vector<TokenRef> anchors(anchors_in.begin(), anchors_in.end());
    std::sort(anchors.begin(), anchors.end());

    // Per-frame role masks within the segment: 0 = merge pool, 1 = anchor,
    // 2 = excluded (retained elsewhere, e.g. by ATS).
    std::vector<char> role(static_cast<size_t>(segment.length()) * n_tokens, 0);
    auto role_at = [&](int frame, int spatial) -> char& {
        return role[static_cast<size_t>(frame - segment.first) * n_tokens + spatial];
    };
    for (const TokenRef& a : anchors) role_at(a.frame, a.spatial) = 1;
    for (const TokenRef& e : excluded) role_at(e.frame, e.spatial) = 2;

    std::vector<TokenRef> pool;
    for (int f = segment.first; f <= segment.last; ++f) {
        for (int s = 0; s < n_tokens; ++s) {
            if (role_at(f, s) == 0) pool.push_back({f, s});
        }
    }
    if (!pool.empty() && anchors.empty()) {
        throw Error(ErrorKind::EmptyInput,
                    "non-empty merge pool but no anchors to merge into");
    }

    // Segment tokens widened once; the assignment loop streams doubles.
    const std::vector<double> wide =
        widen(dump.frame_tokens(segment.first).data(),
              static_cast<size_t>(segment.length()) * n_tokens * dim);
    const auto wide_token = [&](int frame, int spatial) {
        return wide.data() +
               (static_cast<size_t>(frame - segment.first) * n_tokens + spatial) * dim;
    };

    const int n_anchors = static_cast<int>(anchors.size());
    std::vector<double> anchor_matrix(static_cast<size_t>(n_anchors) * dim);
    std::vector<double> anchor_inv_norm(n_anchors);
    for (int a = 0; a < n_anchors; ++a) {
        const double* tok = wide_token(anchors[a].frame, anchors[a].spatial);
        std::copy(tok, tok + dim,
                  anchor_matrix.begin() + static_cast<size_t>(a) * dim);
        anchor_inv_norm[a] = 1.0 / vector_norm(tok, dim, anchors[a]);
    }

    MergeOutcome out;
    out.assignments.reserve(pool.size());
    std::vector<std::vector<double>> sums(n_anchors, std::vector<double>(dim, 0.0));
    std::vector<int> counts(n_anchors, 0);

    for (const TokenRef& t : pool) {
        const double* tok = wide_token(t.frame, t.spatial);
        const double inv_tok_norm = 1.0 / vector_norm(tok, dim, t);
        int best = 0;
        double best_sim = -2.0;
        for (int a = 0; a < n_anchors; ++a) {
            const double* anc = anchor_matrix.data() + static_cast<size_t>(a) * dim;
            const double sim = dot4(tok, anc, dim) * (inv_tok_norm * anchor_inv_norm[a]);
            if (sim > best_sim) {
                best_sim = sim;
                best = a;
            }
        }
        ++counts[best];
        for (int d = 0; d < dim; ++d) sums[best][d] += tok[d];
        out.assignments.push_back(
            {t.frame, t.spatial, anchors[best].frame, anchors[best].spatial});
    }

    out.retained.reserve(anchors.size());
    for (int a = 0; a < n_anchors; ++a) {
        RetainedToken token;
        token.frame_index = anchors[a].frame;
        token.spatial_index = anchors[a].spatial;
        token.origin = TokenOrigin::DtmAnchor;
        token.merged_count = counts[a];
        token.embedding.resize(dim);
        const float* anc = dump.token(anchors[a].frame, anchors[a].spatial).data();
        if (counts[a] == 0) {
            std::copy(anc, anc + dim, token.embedding.begin());
        } else {
            const double rest = (1.0 - beta) / counts[a];
            for (int d = 0; d < dim; ++d) {
                token.embedding[d] =
                    static_cast<float>(beta * anc[d] + rest * sums[a][d]);
            }
        }
        out.retained.push_back(std::move(token));
    }
    std::sort(out.retained.begin(), out.retained.end(),
              [](const RetainedToken& a, const RetainedToken& b) {
                  return std::pair(a.frame_index, a.spatial_index) <
                         std::pair(b.frame_index, b.spatial_index);
              });
    return out;
}

MergeOutcome uniform_merge(const TokenDump& dump, const Segment& segment,
                           int per_frame_budget, int anchor_interval, double beta,
                           std::span<const TokenRef> excluded) {
    std::vector<TokenRef> anchors;
    for (int frame : select_anchor_frames(segment, anchor_interval)) {
        std::vector<int> frame_excluded;
        for (const TokenRef& e : excluded) {
            if (e.frame == frame) frame_excluded.push_back(e.spatial);
        }
        for (int s : uniform_frame_anchors(dump.tokens_per_frame, per_frame_budget,
                                           frame_excluded)) {
            anchors.push_back({frame, s});
        }
    }
    return assign_and_merge(dump, segment, anchors, excluded, beta);
}

MergeOutcome cluster_merge(const TokenDump& dump, const Segment& segment,
                           int budget, std::span<const TokenRef> excluded) {
    const int n_tokens = dump.tokens_per_frame;
    const int dim = dump.token_dim;
    require_in_segment(excluded, segment, n_tokens, "excluded token");

    std::vector<char> keep(static_cast<size_t>(segment.length()) * n_tokens, 1);
    for (const TokenRef& e : excluded) {
        keep[static_cast<size_t>(e.frame - segment.first) * n_tokens + e.spatial] = 0;
    }
    std::vector<TokenRef> pool;
    std::vector<float> matrix;
    matrix.reserve(static_cast<size_t>(segment.length()) * n_tokens * dim);
    for (int f = segment.first; f <= segment.last; ++f) {
        for (int s = 0; s < n_tokens; ++s) {
            if (!keep[static_cast<size_t>(f - segment.first) * n_tokens + s]) continue;
            pool.push_back({f, s});
            const auto tok = dump.token(f, s);
            matrix.insert(matrix.end(), tok.begin(), tok.end());
        }
    }
    MergeOutcome out;
    if (budget == 0) return out;
    const int n = static_cast<int>(pool.size());
    if (budget > n) {
        std::ostringstream msg;
        msg << "cluster budget " << budget << " exceeds " << n << " segment tokens";
        throw Error(ErrorKind::BudgetOverflow, msg.str());
    }

    const auto clusters = kmeans(matrix, n, dim, budget);

    // First member (lowest (frame, spatial)) carries each cluster's position.
    std::vector<int> first_member(budget, -1);
    std::vector<int> sizes(budget, 0);
    for (int i = 0; i < n; ++i) {
        const int c = clusters.labels[i];
        ++sizes[c];
        if (first_member[c] < 0) first_member[c] = i;
    }
    for (int c = 0; c < budget; ++c) {
        RetainedToken token;
        const TokenRef& ref = pool[first_member[c]];
        token.frame_index = ref.frame;
        token.spatial_index = ref.spatial;
        token.origin = TokenOrigin::DtmAnchor;
        token.merged_count = sizes[c] - 1;
        token.embedding.resize(dim);
        for (int d = 0; d < dim; ++d) {
            token.embedding[d] = static_cast<float>(clusters.centroids[c][d]);
        }
        out.retained.push_back(std::move(token));
    }
    for (int i = 0; i < n; ++i) {
        const int c = clusters.labels[i];
        if (i == first_member[c]) continue;
        const TokenRef& anchor = pool[first_member[c]];
        out.assignments.push_back(
            {pool[i].frame, pool[i].spatial, anchor.frame, anchor.spatial});
    }
    std::sort(out.retained.begin(), out.retained.end(),
              [](const RetainedToken& a, const RetainedToken& b) {
                  return std::pair(a.frame_index, a.spatial_index) <
                         std::pair(b.frame_index, b.spatial_index);
              });
    return out;
}

}  // namespace vidprune
