#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "vidprune/oracle.hpp"
#include "vidprune/segment.hpp"

using namespace vidprune;
using test_helpers::make_dump;
using test_helpers::set_feature;

namespace {

TransitionProfile profile_of(std::initializer_list<double> values) {
    TransitionProfile profile;
    profile.similarities = values;
    return profile;
}

std::vector<Segment> segs(const Segmentation& s) { return s.segments; }

}  // namespace

TEST_CASE("transition_profile of identical nonzero features is 1.0") {
    TokenDump dump = make_dump(2, 4, 3);
    set_feature(dump, 0, {0.3f, 0.7f});
    set_feature(dump, 1, {0.3f, 0.7f});
    const auto profile = transition_profile(dump);
    REQUIRE(profile.similarities.size() == 1);
    CHECK(profile.similarities[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("transition_profile of orthogonal features is 0.0") {
    TokenDump dump = make_dump(2, 4, 3);
    set_feature(dump, 0, {1.0f, 0.0f});
    set_feature(dump, 1, {0.0f, 1.0f});
    const auto profile = transition_profile(dump);
    REQUIRE(profile.similarities.size() == 1);
    CHECK(profile.similarities[0] == doctest::Approx(0.0));
}

TEST_CASE("transition_profile matches hand cosine arithmetic") {
    TokenDump dump = make_dump(3, 4, 3);
    const float inv_sqrt2 = static_cast<float>(1.0 / std::sqrt(2.0));
    set_feature(dump, 0, {1.0f, 0.0f});
    set_feature(dump, 1, {inv_sqrt2, inv_sqrt2});
    set_feature(dump, 2, {0.0f, 1.0f});
    const auto profile = transition_profile(dump);
    REQUIRE(profile.similarities.size() == 2);
    CHECK(profile.similarities[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
    CHECK(profile.similarities[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
}

TEST_CASE("transition_profile rejects zero-norm features") {
    TokenDump dump = make_dump(2, 4, 3);
    set_feature(dump, 1, {0.0f, 0.0f});
    try {
        transition_profile(dump);
        FAIL("expected degenerate feature error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateFeature);
    }
}

TEST_CASE("transition_profile is empty for a single frame") {
    const TokenDump dump = make_dump(1, 4, 3);
    CHECK(transition_profile(dump).similarities.empty());
}

TEST_CASE("dynamic_segment splits below-threshold transitions") {
    const auto seg = dynamic_segment(profile_of({0.95, 0.50, 0.92}), 1, 0.9);
    CHECK(segs(seg) == std::vector<Segment>{{0, 1}, {2, 3}});
}

TEST_CASE("dynamic_segment forces the c-1 most dissimilar transitions") {
    const auto seg = dynamic_segment(profile_of({0.99, 0.98, 0.97}), 3, 0.9);
    CHECK(segs(seg) == std::vector<Segment>{{0, 1}, {2, 2}, {3, 3}});
}

TEST_CASE("dynamic_segment of a single frame") {
    const auto seg = dynamic_segment(TransitionProfile{}, 8, 0.9);
    CHECK(segs(seg) == std::vector<Segment>{{0, 0}});
}

TEST_CASE("dynamic_segment clamps c to the frame count") {
    const auto seg = dynamic_segment(profile_of({0.99, 0.99}), 10, 0.5);
    CHECK(segs(seg) == std::vector<Segment>{{0, 0}, {1, 1}, {2, 2}});
}

TEST_CASE("dynamic_segment S1 ties break toward the lower index") {
    const auto seg = dynamic_segment(profile_of({0.95, 0.95, 0.95}), 2, 0.5);
    CHECK(segs(seg) == std::vector<Segment>{{0, 0}, {1, 3}});
}

TEST_CASE("fixed_interval_segment") {
    CHECK(fixed_interval_segment(32, 4).segments.size() == 8);
    for (const Segment& s : fixed_interval_segment(32, 4).segments) {
        CHECK(s.length() == 4);
    }
    CHECK(segs(fixed_interval_segment(5, 4)) == std::vector<Segment>{{0, 3}, {4, 4}});
    CHECK(segs(fixed_interval_segment(3, 8)) == std::vector<Segment>{{0, 2}});
}

TEST_CASE("cluster_segment with identical features collapses to one segment") {
    TokenDump dump = make_dump(5, 4, 3);
    const auto seg = cluster_segment(dump, 1);
    CHECK(segs(seg) == std::vector<Segment>{{0, 4}});
}

TEST_CASE("cluster_segment on two 1-D blobs") {
    TokenDump dump = make_dump(4, 4, 3);
    set_feature(dump, 0, {0.0f, 1.0f});
    set_feature(dump, 1, {0.0f, 1.0f});
    set_feature(dump, 2, {9.0f, 1.0f});
    set_feature(dump, 3, {9.0f, 1.0f});
    CHECK(segs(cluster_segment(dump, 2)) == std::vector<Segment>{{0, 1}, {2, 3}});
}

TEST_CASE("cluster_segment exposes interleaved labels as extra segments") {
    TokenDump dump = make_dump(3, 4, 3);
    set_feature(dump, 0, {0.0f, 1.0f});
    set_feature(dump, 1, {9.0f, 1.0f});
    set_feature(dump, 2, {0.0f, 1.0f});
    const auto labels = cluster_frame_labels(dump, 2);
    CHECK(labels[0] == labels[2]);
    CHECK(labels[0] != labels[1]);
    CHECK(segs(cluster_segment(dump, 2)) ==
          std::vector<Segment>{{0, 0}, {1, 1}, {2, 2}});
}

TEST_CASE("dynamic_segment properties on random profiles") {
    std::mt19937 gen(20240811);
    std::uniform_real_distribution<double> sim(-1.0, 1.0);
    std::uniform_int_distribution<int> frames(1, 48);
    std::uniform_int_distribution<int> min_segs(1, 12);

    for (int trial = 0; trial < 200; ++trial) {
        const int frame_count = frames(gen);
        TransitionProfile profile;
        for (int i = 0; i + 1 < frame_count; ++i) {
            profile.similarities.push_back(sim(gen));
        }
        const int c = min_segs(gen);
        const double tau = sim(gen);
        const auto seg = dynamic_segment(profile, c, tau);

        CHECK(segmentation_valid(seg, frame_count));
        CHECK(oracle::oracle_segment_check(profile, seg, c, tau));
        // Segment count >= min(c, F).
        CHECK(static_cast<int>(seg.segments.size()) >= std::min(c, frame_count));
        // Intra-segment adjacent transitions never fall below tau.
        for (const Segment& s : seg.segments) {
            for (int i = s.first; i < s.last; ++i) {
                CHECK(profile.similarities[i] >= tau);
            }
        }

        // The verifier rejects a missing below-threshold boundary...
        if (seg.segments.size() >= 2) {
            Segmentation merged = seg;
            merged.segments[0].last = merged.segments[1].last;
            merged.segments.erase(merged.segments.begin() + 1);
            CHECK_FALSE(oracle::oracle_segment_check(profile, merged, c, tau));
        }
        // ...and a spurious one.
        for (const Segment& s : seg.segments) {
            if (s.length() < 2) continue;
            Segmentation split = seg;
            for (size_t i = 0; i < split.segments.size(); ++i) {
                if (split.segments[i] == s) {
                    split.segments.insert(split.segments.begin() + i + 1,
                                          {s.first + 1, s.last});
                    split.segments[i].last = s.first;
                    break;
                }
            }
            CHECK_FALSE(oracle::oracle_segment_check(profile, split, c, tau));
            break;
        }
    }
}

TEST_CASE("dynamic_segment is invariant to uniform feature scaling") {
    std::mt19937 gen(7);
    std::normal_distribution<float> noise(0.0f, 1.0f);
    TokenDump dump = make_dump(16, 4, 3);
    dump.frame_feature_dim = 8;
    dump.frame_features.assign(16 * 8, 0.0f);
    for (float& v : dump.frame_features) v = noise(gen);

    const auto base = dynamic_segment(transition_profile(dump), 4, 0.5);
    for (const float scale : {0.25f, 2.0f, 64.0f}) {
        TokenDump scaled = dump;
        for (float& v : scaled.frame_features) v *= scale;
        CHECK(dynamic_segment(transition_profile(scaled), 4, 0.5) == base);
    }
}

TEST_CASE("raising tau never removes a boundary") {
    std::mt19937 gen(99);
    std::uniform_real_distribution<double> sim(-1.0, 1.0);
    TransitionProfile profile;
    for (int i = 0; i < 31; ++i) profile.similarities.push_back(sim(gen));

    std::vector<Segment> previous;
    for (const double tau : {-1.0, -0.5, 0.0, 0.5, 0.9, 1.0}) {
        const auto seg = dynamic_segment(profile, 2, tau);
        if (!previous.empty()) {
            // Every old boundary is still a boundary.
            std::vector<int> old_bounds, new_bounds;
            for (size_t i = 0; i + 1 < previous.size(); ++i) {
                old_bounds.push_back(previous[i].last);
            }
            for (size_t i = 0; i + 1 < seg.segments.size(); ++i) {
                new_bounds.push_back(seg.segments[i].last);
            }
            CHECK(std::includes(new_bounds.begin(), new_bounds.end(),
                                old_bounds.begin(), old_bounds.end()));
        }
        previous = seg.segments;
    }
}
