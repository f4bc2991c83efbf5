#include "vidprune/segment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vidprune/kmeans.hpp"

namespace vidprune {

namespace {

double cosine(std::span<const float> a, std::span<const float> b, int frame_a) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t d = 0; d < a.size(); ++d) {
        dot += static_cast<double>(a[d]) * b[d];
        na += static_cast<double>(a[d]) * a[d];
        nb += static_cast<double>(b[d]) * b[d];
    }
    if (na == 0.0 || nb == 0.0) {
        std::ostringstream msg;
        msg << "zero-norm frame feature near frame " << frame_a
            << "; cosine transition similarity is undefined";
        throw Error(ErrorKind::DegenerateFeature, msg.str());
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

Segmentation from_boundaries(const std::vector<int>& boundaries, int frame_count) {
    Segmentation seg;
    int start = 0;
    for (int b : boundaries) {
        seg.segments.push_back({start, b});
        start = b + 1;
    }
    seg.segments.push_back({start, frame_count - 1});
    return seg;
}

}  // namespace

TransitionProfile transition_profile_from(std::span<const float> features,
                                          int frame_count, int dim) {
    TransitionProfile profile;
    profile.similarities.reserve(frame_count > 0 ? frame_count - 1 : 0);
    for (int f = 0; f + 1 < frame_count; ++f) {
        const std::span<const float> a{features.data() + static_cast<size_t>(f) * dim,
                                       static_cast<size_t>(dim)};
        const std::span<const float> b{features.data() + static_cast<size_t>(f + 1) * dim,
                                       static_cast<size_t>(dim)};
        profile.similarities.push_back(cosine(a, b, f));
    }
    return profile;
}

TransitionProfile transition_profile(const TokenDump& dump) {
    return transition_profile_from(dump.frame_features, dump.frame_count,
                                   dump.frame_feature_dim);
}

Segmentation dynamic_segment(const TransitionProfile& profile, int min_segments,
                             double tau) {
    const int frame_count = profile.frame_count();
    const int transitions = frame_count - 1;
    std::vector<char> is_boundary(transitions, 0);

    // S1: the min(c-1, F-1) most dissimilar transitions, lower index on ties.
    const int forced = std::min(min_segments - 1, transitions);
    if (forced > 0) {
        std::vector<int> order(transitions);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return profile.similarities[a] < profile.similarities[b];
        });
        for (int i = 0; i < forced; ++i) is_boundary[order[i]] = 1;
    }
    // S2: every transition strictly below the threshold.
    for (int i = 0; i < transitions; ++i) {
        if (profile.similarities[i] < tau) is_boundary[i] = 1;
    }

    std::vector<int> boundaries;
    for (int i = 0; i < transitions; ++i) {
        if (is_boundary[i]) boundaries.push_back(i);
    }
    return from_boundaries(boundaries, frame_count);
}

Segmentation fixed_interval_segment(int frame_count, int interval) {
    Segmentation seg;
    for (int start = 0; start < frame_count; start += interval) {
        seg.segments.push_back({start, std::min(start + interval, frame_count) - 1});
    }
    return seg;
}

std::vector<int> cluster_frame_labels(const TokenDump& dump, int num_clusters) {
    const auto result = kmeans(dump.frame_features, dump.frame_count,
                               dump.frame_feature_dim, num_clusters);
    return result.labels;
}

Segmentation cluster_segment(const TokenDump& dump, int num_clusters) {
    const auto labels = cluster_frame_labels(dump, num_clusters);
    std::vector<int> boundaries;
    for (int f = 0; f + 1 < dump.frame_count; ++f) {
        if (labels[f + 1] != labels[f]) boundaries.push_back(f);
    }
    return from_boundaries(boundaries, dump.frame_count);
}

}  // namespace vidprune
