#include <doctest.h>

#include <cmath>
#include <future>
#include <random>

#include "helpers.hpp"
#include "vidprune/merge.hpp"
#include "vidprune/oracle.hpp"

using namespace vidprune;
using test_helpers::make_dump;
using test_helpers::set_token;

namespace {

std::vector<float> tokens_1d(std::initializer_list<float> values) {
    return values;
}

}  // namespace

TEST_CASE("density_scores of identical tokens") {
    const std::vector<float> tokens(5 * 3, 0.25f);
    const auto scores = density_scores(tokens, 5, 3, 2);
    for (int i = 0; i < 5; ++i) {
        CHECK(scores.rho[i] == 1.0);
        CHECK(scores.delta[i] == 0.0);
        CHECK(scores.score[i] == 0.0);
    }
}

TEST_CASE("density_scores on the 3-point 1-D instance") {
    const auto tokens = tokens_1d({0.0f, 0.1f, 5.0f});
    const auto scores = density_scores(tokens, 3, 1, 1);

    CHECK(scores.rho[0] == doctest::Approx(std::exp(-0.01)).epsilon(1e-6));
    CHECK(scores.rho[1] == doctest::Approx(std::exp(-0.01)).epsilon(1e-6));
    CHECK(scores.rho[2] == doctest::Approx(std::exp(-24.01)).epsilon(1e-6));
    // Tokens 0 and 1 tie on rho, so both take the max-distance branch.
    CHECK(scores.delta[0] == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(scores.delta[1] == doctest::Approx(4.9).epsilon(1e-6));
    CHECK(scores.delta[2] == doctest::Approx(4.9).epsilon(1e-6));
}

TEST_CASE("density_scores degenerate sizes") {
    const std::vector<float> one(4, 1.0f);
    const auto scores = density_scores(one, 1, 4, 1);
    CHECK(scores.rho == std::vector<double>{1.0});
    CHECK(scores.delta == std::vector<double>{0.0});

    CHECK_THROWS_AS(density_scores({}, 0, 4, 1), Error);
}

TEST_CASE("density_scores matches the exhaustive oracle bit for bit") {
    std::mt19937 gen(31337);
    std::uniform_int_distribution<int> n_dist(1, 64);
    std::uniform_int_distribution<int> dim_dist(1, 16);
    std::uniform_real_distribution<float> value(-2.0f, 2.0f);

    for (int trial = 0; trial < 120; ++trial) {
        const int n = n_dist(gen);
        const int dim = dim_dist(gen);
        std::vector<float> tokens(static_cast<size_t>(n) * dim);
        for (float& v : tokens) v = value(gen);
        // A few duplicated rows to exercise exact rho ties.
        if (n >= 4 && trial % 3 == 0) {
            std::copy_n(tokens.begin(), dim, tokens.begin() + dim);
        }
        const int k = n == 1 ? 1 : std::uniform_int_distribution<int>(1, n - 1)(gen);

        const auto fast = density_scores(tokens, n, dim, k);
        const auto reference = oracle::oracle_density(tokens, n, dim, k);
        CHECK(fast.rho == reference.rho);
        CHECK(fast.delta == reference.delta);
        CHECK(fast.score == reference.score);
    }
}

TEST_CASE("oracle_density on identical tokens gives all-zero scores") {
    const std::vector<float> tokens(6 * 4, 1.5f);
    const auto scores = oracle::oracle_density(tokens, 6, 4, 2);
    for (int i = 0; i < 6; ++i) {
        CHECK(scores.rho[i] == 1.0);
        CHECK(scores.delta[i] == 0.0);
        CHECK(scores.score[i] == 0.0);
    }
    // The 3-point derivation instance, checked against the oracle directly.
    const std::vector<float> three{0.0f, 0.1f, 5.0f};
    const auto derived = oracle::oracle_density(three, 3, 1, 1);
    CHECK(derived.delta[0] == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(derived.delta[1] == doctest::Approx(4.9).epsilon(1e-6));
    CHECK(derived.delta[2] == doctest::Approx(4.9).epsilon(1e-6));
}

TEST_CASE("exactly one token takes the max-distance branch when rho is distinct") {
    std::mt19937 gen(4242);
    std::uniform_real_distribution<float> value(-1.0f, 1.0f);
    const int n = 24, dim = 4;
    std::vector<float> tokens(n * dim);
    for (float& v : tokens) v = value(gen);

    const auto scores = density_scores(tokens, n, dim, 3);
    std::vector<double> sorted = scores.rho;
    std::sort(sorted.begin(), sorted.end());
    REQUIRE(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());

    int max_branch = 0;
    int argmax = 0;
    for (int i = 0; i < n; ++i) {
        if (scores.rho[i] > scores.rho[argmax]) argmax = i;
        bool has_higher = false;
        for (int j = 0; j < n; ++j) has_higher = has_higher || scores.rho[j] > scores.rho[i];
        if (!has_higher) ++max_branch;
    }
    CHECK(max_branch == 1);
    // And its delta is the distance to the farthest token.
    double far = 0.0;
    for (int j = 0; j < n; ++j) {
        double d2 = 0.0;
        for (int d = 0; d < dim; ++d) {
            const double diff = static_cast<double>(tokens[argmax * dim + d]) -
                                tokens[j * dim + d];
            d2 += diff * diff;
        }
        far = std::max(far, d2);
    }
    CHECK(scores.delta[argmax] == doctest::Approx(std::sqrt(far)).epsilon(1e-12));
}

TEST_CASE("select_anchor_frames") {
    CHECK(select_anchor_frames({0, 7}, 4) == std::vector<int>{0, 4});
    CHECK(select_anchor_frames({3, 3}, 4) == std::vector<int>{3});
    CHECK(select_anchor_frames({0, 5}, 2) == std::vector<int>{0, 2, 4});
}

TEST_CASE("select_anchors with a full budget keeps every token") {
    TokenDump dump = make_dump(2, 4, 2);
    std::mt19937 gen(5);
    std::uniform_real_distribution<float> value(-1.0f, 1.0f);
    for (float& v : dump.tokens) v = value(gen);

    const std::vector<int> frames{0, 1};
    const auto anchors = select_anchors(dump, frames, 4, 2);
    REQUIRE(anchors.size() == 8);
    for (int f = 0; f < 2; ++f) {
        for (int s = 0; s < 4; ++s) {
            CHECK(anchors[f * 4 + s] == TokenRef{f, s});
        }
    }
}

TEST_CASE("anchor ties on identical tokens break toward lower spatial index") {
    const TokenDump dump = make_dump(1, 4, 2);  // all tokens identical
    CHECK(select_frame_anchors(dump, 0, 2, 1) == std::vector<int>{0, 1});
}

TEST_CASE("anchor selection on the 3-point instance picks token 0") {
    TokenDump dump = make_dump(1, 3, 1);
    set_token(dump, 0, 0, {0.0f});
    set_token(dump, 0, 1, {0.1f});
    set_token(dump, 0, 2, {5.0f});
    CHECK(select_frame_anchors(dump, 0, 1, 1) == std::vector<int>{0});
}

TEST_CASE("anchor selection skips excluded indices") {
    TokenDump dump = make_dump(1, 3, 1);
    set_token(dump, 0, 0, {0.0f});
    set_token(dump, 0, 1, {0.1f});
    set_token(dump, 0, 2, {5.0f});
    const std::vector<int> excluded{0};
    CHECK(select_frame_anchors(dump, 0, 1, 1, excluded) == std::vector<int>{1});
}

TEST_CASE("assign_and_merge at beta=1 leaves anchors unchanged") {
    TokenDump dump = make_dump(1, 4, 2);
    std::mt19937 gen(11);
    std::uniform_real_distribution<float> value(0.1f, 1.0f);
    for (float& v : dump.tokens) v = value(gen);

    const std::vector<TokenRef> anchors{{0, 1}};
    const auto outcome = assign_and_merge(dump, {0, 0}, anchors, {}, 1.0);
    REQUIRE(outcome.retained.size() == 1);
    const auto original = dump.token(0, 1);
    for (int d = 0; d < 2; ++d) {
        CHECK(outcome.retained[0].embedding[d] == original[d]);
    }
    CHECK(outcome.retained[0].merged_count == 3);
}

TEST_CASE("assign_and_merge at beta=0 with one assignee returns the assignee") {
    TokenDump dump = make_dump(1, 2, 2);
    set_token(dump, 0, 0, {1.0f, 0.0f});
    set_token(dump, 0, 1, {0.25f, 0.75f});
    const std::vector<TokenRef> anchors{{0, 0}};
    const auto outcome = assign_and_merge(dump, {0, 0}, anchors, {}, 0.0);
    REQUIRE(outcome.retained.size() == 1);
    CHECK(outcome.retained[0].embedding[0] == doctest::Approx(0.25));
    CHECK(outcome.retained[0].embedding[1] == doctest::Approx(0.75));
}

TEST_CASE("assign_and_merge follows the aggregation formula") {
    TokenDump dump = make_dump(1, 3, 2);
    set_token(dump, 0, 0, {1.0f, 0.0f});
    set_token(dump, 0, 1, {0.0f, 1.0f});
    set_token(dump, 0, 2, {0.0f, -1.0f});
    const std::vector<TokenRef> anchors{{0, 0}};
    const auto outcome = assign_and_merge(dump, {0, 0}, anchors, {}, 0.6);
    REQUIRE(outcome.retained.size() == 1);
    CHECK(outcome.retained[0].embedding[0] == doctest::Approx(0.6));
    CHECK(outcome.retained[0].embedding[1] == doctest::Approx(0.0));
    CHECK(outcome.retained[0].merged_count == 2);
    CHECK(outcome.assignments.size() == 2);
}

TEST_CASE("assign_and_merge rejects zero-norm tokens") {
    TokenDump dump = make_dump(1, 3, 2);
    set_token(dump, 0, 2, {0.0f, 0.0f});
    const std::vector<TokenRef> anchors{{0, 0}};
    CHECK_THROWS_AS(assign_and_merge(dump, {0, 0}, anchors, {}, 0.6), Error);
}

TEST_CASE("assign_and_merge conserves token count") {
    std::mt19937 gen(77);
    std::uniform_real_distribution<float> value(0.1f, 2.0f);
    TokenDump dump = make_dump(4, 6, 3);
    for (float& v : dump.tokens) v = value(gen);

    const Segment segment{0, 3};
    const std::vector<TokenRef> anchors{{0, 1}, {0, 4}, {2, 0}};
    const std::vector<TokenRef> excluded{{1, 2}, {3, 3}, {3, 5}};
    const auto outcome = assign_and_merge(dump, segment, anchors, excluded, 0.6);

    int merged_total = 0;
    for (const RetainedToken& token : outcome.retained) {
        merged_total += token.merged_count;
    }
    const int segment_tokens = segment.length() * dump.tokens_per_frame;
    CHECK(static_cast<int>(anchors.size()) + static_cast<int>(excluded.size()) +
              merged_total ==
          segment_tokens);
    CHECK(outcome.assignments.size() == static_cast<size_t>(merged_total));
    // Anchors never move.
    for (const RetainedToken& token : outcome.retained) {
        CHECK(std::find(anchors.begin(), anchors.end(),
                        TokenRef{token.frame_index, token.spatial_index}) !=
              anchors.end());
    }
}

TEST_CASE("merged embedding is a convex combination") {
    // With every input equal to u the result is u again.
    TokenDump dump = make_dump(1, 5, 3);
    for (size_t i = 0; i < dump.tokens.size(); i += 3) {
        dump.tokens[i] = 0.4f;
        dump.tokens[i + 1] = -0.2f;
        dump.tokens[i + 2] = 1.5f;
    }
    for (const double beta : {0.0, 0.3, 0.6, 1.0}) {
        const auto outcome =
            assign_and_merge(dump, {0, 0}, std::vector<TokenRef>{{0, 0}}, {}, beta);
        CHECK(outcome.retained[0].embedding[0] == doctest::Approx(0.4));
        CHECK(outcome.retained[0].embedding[1] == doctest::Approx(-0.2));
        CHECK(outcome.retained[0].embedding[2] == doctest::Approx(1.5));
    }

    // Random instance: a* must lie between a and mean(bify) per dimension.
    std::mt19937 gen(123);
    std::uniform_real_distribution<float> value(0.1f, 2.0f);
    TokenDump random_dump = make_dump(1, 6, 4);
    for (float& v : random_dump.tokens) v = value(gen);
    const auto outcome = assign_and_merge(random_dump, {0, 0},
                                          std::vector<TokenRef>{{0, 2}}, {}, 0.6);
    std::vector<double> mean(4, 0.0);
    for (int s = 0; s < 6; ++s) {
        if (s == 2) continue;
        const auto tok = random_dump.token(0, s);
        for (int d = 0; d < 4; ++d) mean[d] += tok[d];
    }
    for (double& v : mean) v /= 5.0;
    const auto anchor = random_dump.token(0, 2);
    for (int d = 0; d < 4; ++d) {
        const double lo = std::min(static_cast<double>(anchor[d]), mean[d]) - 1e-6;
        const double hi = std::max(static_cast<double>(anchor[d]), mean[d]) + 1e-6;
        CHECK(outcome.retained[0].embedding[d] >= lo);
        CHECK(outcome.retained[0].embedding[d] <= hi);
        const double expected = 0.6 * anchor[d] + 0.4 * mean[d];
        CHECK(outcome.retained[0].embedding[d] == doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("uniform_frame_anchors strides the grid") {
    CHECK(uniform_frame_anchors(4, 2) == std::vector<int>{0, 2});
    CHECK(uniform_frame_anchors(4, 4) == std::vector<int>{0, 1, 2, 3});
    // Exclusions restride over the remaining candidates [1,2,3].
    const std::vector<int> excluded{0};
    CHECK(uniform_frame_anchors(4, 2, excluded) == std::vector<int>{1, 2});
}

TEST_CASE("uniform_merge with full budget keeps anchor-frame tokens verbatim") {
    std::mt19937 gen(55);
    std::uniform_real_distribution<float> value(0.1f, 2.0f);
    TokenDump dump = make_dump(2, 4, 3);
    for (float& v : dump.tokens) v = value(gen);

    const auto outcome = uniform_merge(dump, {0, 1}, 4, 1, 1.0);
    REQUIRE(outcome.retained.size() == 8);
    for (const RetainedToken& token : outcome.retained) {
        const auto original = dump.token(token.frame_index, token.spatial_index);
        for (int d = 0; d < 3; ++d) CHECK(token.embedding[d] == original[d]);
    }
}

TEST_CASE("degenerate ties: uniform and density anchors at full budget coincide") {
    const TokenDump dump = make_dump(1, 6, 2);  // identical tokens
    CHECK(select_frame_anchors(dump, 0, 6, 2) == uniform_frame_anchors(6, 6));
    // At partial budget the lower-index tie policy gives prefix indices for
    // density while the uniform baseline strides.
    CHECK(select_frame_anchors(dump, 0, 3, 2) == std::vector<int>{0, 1, 2});
    CHECK(uniform_frame_anchors(6, 3) == std::vector<int>{0, 2, 4});
}

TEST_CASE("cluster_merge with budget equal to token count is the identity") {
    std::mt19937 gen(66);
    std::uniform_real_distribution<float> value(0.1f, 2.0f);
    TokenDump dump = make_dump(1, 5, 2);
    for (float& v : dump.tokens) v = value(gen);

    const auto outcome = cluster_merge(dump, {0, 0}, 5);
    REQUIRE(outcome.retained.size() == 5);
    CHECK(outcome.assignments.empty());
    for (int s = 0; s < 5; ++s) {
        CHECK(outcome.retained[s].spatial_index == s);
        const auto original = dump.token(0, s);
        for (int d = 0; d < 2; ++d) {
            CHECK(outcome.retained[s].embedding[d] == original[d]);
        }
    }
}

TEST_CASE("cluster_merge finds the two blob means") {
    TokenDump dump = make_dump(1, 4, 1);
    set_token(dump, 0, 0, {0.0f});
    set_token(dump, 0, 1, {0.2f});
    set_token(dump, 0, 2, {9.0f});
    set_token(dump, 0, 3, {9.2f});
    const auto outcome = cluster_merge(dump, {0, 0}, 2);
    REQUIRE(outcome.retained.size() == 2);
    CHECK(outcome.retained[0].spatial_index == 0);
    CHECK(outcome.retained[0].embedding[0] == doctest::Approx(0.1));
    CHECK(outcome.retained[1].spatial_index == 2);
    CHECK(outcome.retained[1].embedding[0] == doctest::Approx(9.1));
}

TEST_CASE("cluster_merge of identical tokens with budget 1") {
    const TokenDump dump = make_dump(1, 4, 2);  // every token 0.5
    const auto outcome = cluster_merge(dump, {0, 0}, 1);
    REQUIRE(outcome.retained.size() == 1);
    CHECK(outcome.retained[0].spatial_index == 0);
    CHECK(outcome.retained[0].embedding[0] == doctest::Approx(0.5));
    CHECK(outcome.retained[0].merged_count == 3);
}

TEST_CASE("cluster_merge emits exactly budget tokens even on degenerate data") {
    const TokenDump dump = make_dump(1, 6, 2);  // all identical
    const auto outcome = cluster_merge(dump, {0, 0}, 3);
    CHECK(outcome.retained.size() == 3);
    int merged_total = 0;
    for (const RetainedToken& token : outcome.retained) {
        merged_total += token.merged_count;
    }
    CHECK(merged_total == 3);
}

TEST_CASE("per-frame density runs concurrently with identical results") {
    std::mt19937 gen(2025);
    std::uniform_real_distribution<float> value(-1.0f, 1.0f);
    TokenDump dump = make_dump(8, 24, 6);
    for (float& v : dump.tokens) v = value(gen);

    std::vector<DensityScores> sequential;
    for (int f = 0; f < dump.frame_count; ++f) {
        sequential.push_back(density_scores(dump.frame_tokens(f), 24, 6, 5));
    }
    std::vector<std::future<DensityScores>> futures;
    for (int f = 0; f < dump.frame_count; ++f) {
        futures.push_back(std::async(std::launch::async, [&dump, f] {
            return density_scores(dump.frame_tokens(f), 24, 6, 5);
        }));
    }
    for (int f = 0; f < dump.frame_count; ++f) {
        const auto concurrent = futures[f].get();
        CHECK(concurrent.rho == sequential[f].rho);
        CHECK(concurrent.delta == sequential[f].delta);
        CHECK(concurrent.score == sequential[f].score);
    }
}
