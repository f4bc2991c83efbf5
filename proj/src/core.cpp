#include "vidprune/core.hpp"

#include <cmath>
#include <sstream>

namespace vidprune {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DimensionMismatch: return "dimension-mismatch";
        case ErrorKind::NonFiniteValue: return "non-finite-value";
        case ErrorKind::DegenerateFeature: return "degenerate-feature";
        case ErrorKind::EmptyInput: return "empty-input";
        case ErrorKind::InvalidConfig: return "invalid-config";
        case ErrorKind::BudgetUnderflow: return "budget-underflow";
        case ErrorKind::BudgetOverflow: return "budget-overflow";
        case ErrorKind::UnsupportedPooling: return "unsupported-pooling";
        case ErrorKind::BadMagic: return "bad-magic";
        case ErrorKind::VersionMismatch: return "version-mismatch";
        case ErrorKind::TruncatedPayload: return "truncated-payload";
        case ErrorKind::DimensionOverflow: return "dimension-overflow";
        case ErrorKind::IoFailure: return "io-failure";
        case ErrorKind::BadSceneSpec: return "bad-scene-spec";
        case ErrorKind::UnknownPreset: return "unknown-preset";
    }
    return "unknown";
}

namespace {

void require_positive(int value, const char* field) {
    if (value <= 0) {
        std::ostringstream msg;
        msg << field << " must be positive, got " << value;
        throw Error(ErrorKind::DimensionMismatch, msg.str());
    }
}

void require_extent(size_t actual, size_t expected, const char* field) {
    if (actual != expected) {
        std::ostringstream msg;
        msg << field << " has " << actual << " elements, expected " << expected;
        throw Error(ErrorKind::DimensionMismatch, msg.str());
    }
}

void require_finite(const std::vector<float>& data, const char* field) {
    for (size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) {
            std::ostringstream msg;
            msg << field << " contains a non-finite value at flat index " << i;
            throw Error(ErrorKind::NonFiniteValue, msg.str());
        }
    }
}

}  // namespace

const TokenDump& validate_dump(const TokenDump& dump) {
    require_positive(dump.frame_count, "frame_count");
    require_positive(dump.tokens_per_frame, "tokens_per_frame");
    require_positive(dump.token_dim, "token_dim");
    require_positive(dump.frame_feature_dim, "frame_feature_dim");
    require_positive(dump.attn_height, "attn_height");
    require_positive(dump.attn_width, "attn_width");
    require_positive(dump.pool_out_h, "pool_out_h");
    require_positive(dump.pool_out_w, "pool_out_w");

    if (dump.pool_out_h * dump.pool_out_w != dump.tokens_per_frame) {
        std::ostringstream msg;
        msg << "pool_out_h*pool_out_w = " << dump.pool_out_h * dump.pool_out_w
            << " does not match tokens_per_frame = " << dump.tokens_per_frame;
        throw Error(ErrorKind::DimensionMismatch, msg.str());
    }

    const size_t f = static_cast<size_t>(dump.frame_count);
    require_extent(dump.frame_features.size(),
                   f * dump.frame_feature_dim, "frame_features");
    require_extent(dump.tokens.size(),
                   f * dump.tokens_per_frame * dump.token_dim, "tokens");
    if (dump.has_attention()) {
        require_extent(dump.attention.size(),
                       f * dump.attn_height * dump.attn_width, "attention");
    }

    require_finite(dump.frame_features, "frame_features");
    require_finite(dump.tokens, "tokens");
    require_finite(dump.attention, "attention");
    return dump;
}

void validate_config(const PruneConfig& config) {
    std::ostringstream msg;
    if (config.min_segments < 1) {
        msg << "min_segments must be >= 1, got " << config.min_segments;
    } else if (!(config.transition_threshold >= -1.0 && config.transition_threshold <= 1.0)) {
        msg << "transition_threshold must be in [-1,1], got " << config.transition_threshold;
    } else if (!(config.retention_ratio > 0.0 && config.retention_ratio <= 1.0)) {
        msg << "retention_ratio must be in (0,1], got " << config.retention_ratio;
    } else if (!(config.dtm_fraction >= 0.0 && config.dtm_fraction <= 1.0)) {
        msg << "dtm_fraction must be in [0,1], got " << config.dtm_fraction;
    } else if (config.anchor_interval < 1) {
        msg << "anchor_interval must be >= 1, got " << config.anchor_interval;
    } else if (!(config.merge_weight >= 0.0 && config.merge_weight <= 1.0)) {
        msg << "merge_weight must be in [0,1], got " << config.merge_weight;
    } else if (config.knn_k && *config.knn_k < 1) {
        msg << "knn_k must be >= 1, got " << *config.knn_k;
    } else {
        return;
    }
    throw Error(ErrorKind::InvalidConfig, msg.str());
}

int retention_target(double retention_ratio, int frame_count, int tokens_per_frame) {
    const double total =
        static_cast<double>(frame_count) * static_cast<double>(tokens_per_frame);
    return static_cast<int>(std::llround(retention_ratio * total));
}

int effective_knn_k(const PruneConfig& config, int n) {
    if (n <= 1) return 1;
    int k = config.knn_k
                ? *config.knn_k
                : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    if (k < 1) k = 1;
    if (k > n - 1) k = n - 1;
    return k;
}

bool segmentation_valid(const Segmentation& seg, int frame_count, std::string* why) {
    auto fail = [&](const std::string& reason) {
        if (why) *why = reason;
        return false;
    };
    if (frame_count <= 0) return fail("frame_count must be positive");
    if (seg.segments.empty()) return fail("no segments");
    if (seg.segments.front().first != 0) return fail("first segment does not start at 0");
    if (seg.segments.back().last != frame_count - 1) {
        return fail("last segment does not end at F-1");
    }
    for (size_t i = 0; i < seg.segments.size(); ++i) {
        const Segment& s = seg.segments[i];
        if (s.last < s.first) return fail("empty segment");
        if (i > 0 && s.first != seg.segments[i - 1].last + 1) {
            return fail("segments not contiguous");
        }
    }
    return true;
}

std::vector<float> mean_token_features(const TokenDump& dump) {
    std::vector<float> features(
        static_cast<size_t>(dump.frame_count) * dump.token_dim);
    for (int f = 0; f < dump.frame_count; ++f) {
        std::vector<double> acc(dump.token_dim, 0.0);
        for (int s = 0; s < dump.tokens_per_frame; ++s) {
            const auto tok = dump.token(f, s);
            for (int d = 0; d < dump.token_dim; ++d) acc[d] += tok[d];
        }
        float* out = features.data() + static_cast<size_t>(f) * dump.token_dim;
        for (int d = 0; d < dump.token_dim; ++d) {
            out[d] = static_cast<float>(acc[d] / dump.tokens_per_frame);
        }
    }
    return features;
}

}  // namespace vidprune
