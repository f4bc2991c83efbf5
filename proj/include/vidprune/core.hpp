#pragma once
// Domain types shared by every stage: token dumps, configuration,
// segmentations, prune results, and the validation entry point.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vidprune {

enum class ErrorKind {
    DimensionMismatch,
    NonFiniteValue,
    DegenerateFeature,
    EmptyInput,
    InvalidConfig,
    BudgetUnderflow,
    BudgetOverflow,
    UnsupportedPooling,
    BadMagic,
    VersionMismatch,
    TruncatedPayload,
    DimensionOverflow,
    IoFailure,
    BadSceneSpec,
    UnknownPreset,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// One video's worth of encoder output: per-frame global features, the
// pooled patch-token sequence, and (optionally) the pre-pool attention
// map of each frame. Arrays are row-major float32.
struct TokenDump {
    int frame_count = 0;        // F
    int tokens_per_frame = 0;   // N
    int token_dim = 0;          // D
    int frame_feature_dim = 0;  // Df
    int attn_height = 0;        // H
    int attn_width = 0;         // W
    int pool_out_h = 0;
    int pool_out_w = 0;

    std::vector<float> frame_features;  // F x Df
    std::vector<float> tokens;          // F x N x D
    std::vector<float> attention;       // F x H x W; empty when absent

    bool has_attention() const { return !attention.empty(); }

    std::span<const float> frame_feature(int frame) const {
        return {frame_features.data() + static_cast<size_t>(frame) * frame_feature_dim,
                static_cast<size_t>(frame_feature_dim)};
    }
    std::span<const float> token(int frame, int spatial) const {
        const size_t offset =
            (static_cast<size_t>(frame) * tokens_per_frame + spatial) * token_dim;
        return {tokens.data() + offset, static_cast<size_t>(token_dim)};
    }
    std::span<const float> frame_tokens(int frame) const {
        const size_t offset = static_cast<size_t>(frame) * tokens_per_frame * token_dim;
        return {tokens.data() + offset,
                static_cast<size_t>(tokens_per_frame) * token_dim};
    }
    std::span<const float> frame_attention(int frame) const {
        const size_t offset = static_cast<size_t>(frame) * attn_height * attn_width;
        return {attention.data() + offset,
                static_cast<size_t>(attn_height) * attn_width};
    }
};

enum class RoundingPolicy : uint32_t {
    // Floor every fractional budget, then hand out the remainder one token
    // at a time in ascending segment/frame order until round(r*F*N) is met.
    FloorDistribute = 0,
};

enum class TieBreakPolicy : uint32_t {
    LowerIndex = 0,  // all score ties resolve toward the lower index
};

struct PruneConfig {
    int min_segments = 8;               // c
    double transition_threshold = 0.9;  // tau
    double retention_ratio = 0.1;       // r
    double dtm_fraction = 0.4;          // d
    int anchor_interval = 4;            // p
    double merge_weight = 0.6;          // beta
    std::optional<int> knn_k;           // default: ceil(sqrt(n)) clamped to [1, n-1]
    RoundingPolicy rounding_policy = RoundingPolicy::FloorDistribute;
    TieBreakPolicy tie_break_policy = TieBreakPolicy::LowerIndex;

    // Saliency scores fall back to cosine-vs-frame-mean when the dump has no
    // attention maps; this forces the fallback even when maps are present.
    bool pseudo_cls = false;
    // Derive frame features as per-frame token means instead of using the
    // dump's frame_features array.
    bool features_from_tokens = false;
};

// Throws InvalidConfig when a hyperparameter is outside its documented range.
void validate_config(const PruneConfig& config);

// Resolved kNN size for a density computation over n tokens.
int effective_knn_k(const PruneConfig& config, int n);

// Global retention target: round-half-up of r * F * N. The one canonical
// evaluation order, shared by planning and verification.
int retention_target(double retention_ratio, int frame_count, int tokens_per_frame);

struct Segment {
    int first = 0;
    int last = 0;  // inclusive

    int length() const { return last - first + 1; }
    bool operator==(const Segment&) const = default;
};

// Ordered, contiguous, covering partition of [0, F).
struct Segmentation {
    std::vector<Segment> segments;

    int frame_count() const {
        return segments.empty() ? 0 : segments.back().last + 1;
    }
    bool operator==(const Segmentation&) const = default;
};

// Returns false (and fills `why` when non-null) if the partition is not
// contiguous, covering, and non-empty for the given frame count.
bool segmentation_valid(const Segmentation& seg, int frame_count,
                        std::string* why = nullptr);

enum class TokenOrigin : uint32_t {
    DtmAnchor = 0,
    Ats = 1,
};

struct RetainedToken {
    int frame_index = 0;
    int spatial_index = 0;
    std::vector<float> embedding;
    TokenOrigin origin = TokenOrigin::Ats;
    int merged_count = 0;  // tokens aggregated into this anchor; 0 for ATS

    bool operator==(const RetainedToken&) const = default;
};

struct SegmentBudget {
    Segment segment;
    int dtm_budget = 0;
    int ats_budget = 0;
    std::vector<int> anchor_frames;         // absolute indices; empty when dtm_budget == 0
    std::vector<int> anchor_frame_budgets;  // parallel to anchor_frames
    std::vector<int> ats_per_frame;         // one entry per frame of the segment

    bool operator==(const SegmentBudget&) const = default;
};

// Where a merged token went: its own position and its anchor's position.
struct MergeAssignment {
    int frame_index = 0;
    int spatial_index = 0;
    int anchor_frame = 0;
    int anchor_spatial = 0;

    bool operator==(const MergeAssignment&) const = default;
};

struct PruneStats {
    double retention_ratio = 0.0;
    int retained_count = 0;
    int dtm_count = 0;
    int ats_count = 0;

    bool operator==(const PruneStats&) const = default;
};

struct PruneResult {
    int frame_count = 0;
    int tokens_per_frame = 0;
    int token_dim = 0;
    int pool_out_h = 0;
    int pool_out_w = 0;

    std::vector<RetainedToken> retained;  // strictly increasing (frame, spatial)
    Segmentation segmentation;
    std::vector<SegmentBudget> budget_report;
    std::vector<MergeAssignment> assignments;  // sorted by (frame, spatial)
    PruneStats stats;

    bool operator==(const PruneResult&) const = default;
};

// Transformer dimensions for the FLOPs cost model.
struct ModelShape {
    int64_t hidden_size = 0;       // D
    int64_t ffn_intermediate = 0;  // D'
    int64_t kv_heads = 0;          // h_kv
    int64_t head_dim = 0;          // d
    int64_t num_layers = 0;        // L

    bool operator==(const ModelShape&) const = default;
};

// Checks every TokenDump invariant (dimension consistency, finiteness,
// pool_out_h*pool_out_w == N) and returns the dump unchanged.
const TokenDump& validate_dump(const TokenDump& dump);

// Per-frame mean of patch tokens (64-bit accumulation), usable as a
// stand-in for frame_features.
std::vector<float> mean_token_features(const TokenDump& dump);

}  // namespace vidprune
