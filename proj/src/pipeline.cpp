#include "vidprune/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <utility>

#include "vidprune/attention.hpp"
#include "vidprune/merge.hpp"
#include "vidprune/segment.hpp"

namespace vidprune {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(stage) + ": " + e.what());
    }
}

}  // namespace

BudgetPlan budget_plan(const Segmentation& segmentation, int tokens_per_frame,
                       double retention_ratio, double dtm_fraction,
                       int anchor_interval, RoundingPolicy policy) {
    (void)policy;  // FloorDistribute is the only policy
    const int frame_count = segmentation.frame_count();
    BudgetPlan plan;
    plan.total_target = retention_target(retention_ratio, frame_count, tokens_per_frame);

    const double ats_exact = (1.0 - dtm_fraction) * retention_ratio * tokens_per_frame;
    const int ats_floor = static_cast<int>(std::floor(ats_exact));
    const bool ats_fractional = ats_exact > ats_floor;

    plan.segments.reserve(segmentation.segments.size());
    int floored_total = 0;
    for (const Segment& segment : segmentation.segments) {
        SegmentBudget budget;
        budget.segment = segment;
        const double dtm_exact = dtm_fraction * retention_ratio *
                                 segment.length() * tokens_per_frame;
        budget.dtm_budget = static_cast<int>(std::floor(dtm_exact));
        budget.ats_per_frame.assign(segment.length(), ats_floor);
        floored_total += budget.dtm_budget + ats_floor * segment.length();
        plan.segments.push_back(std::move(budget));
    }

    // Remainder distribution: ATS frame buckets first, then the segment's
    // DTM bucket; only buckets with a fractional exact value participate.
    int remainder = plan.total_target - floored_total;
    for (SegmentBudget& budget : plan.segments) {
        if (remainder == 0) break;
        const double dtm_exact = dtm_fraction * retention_ratio *
                                 budget.segment.length() * tokens_per_frame;
        if (ats_fractional) {
            for (int& ats : budget.ats_per_frame) {
                if (remainder == 0) break;
                ++ats;
                --remainder;
            }
        }
        if (remainder > 0 && dtm_exact > budget.dtm_budget) {
            ++budget.dtm_budget;
            --remainder;
        }
    }
    if (remainder != 0) {
        throw std::logic_error("budget remainder not fully distributed");
    }

    for (SegmentBudget& budget : plan.segments) {
        budget.ats_budget = 0;
        for (int ats : budget.ats_per_frame) budget.ats_budget += ats;
        if (budget.dtm_budget + budget.ats_budget == 0) {
            std::ostringstream msg;
            msg << "segment [" << budget.segment.first << ", " << budget.segment.last
                << "] received zero tokens; increase the retention ratio";
            throw Error(ErrorKind::BudgetUnderflow, msg.str());
        }
        if (budget.dtm_budget == 0) continue;

        budget.anchor_frames = select_anchor_frames(budget.segment, anchor_interval);
        const int frames = static_cast<int>(budget.anchor_frames.size());
        const int base = budget.dtm_budget / frames;
        const int extra = budget.dtm_budget % frames;
        budget.anchor_frame_budgets.assign(frames, base);
        for (int i = 0; i < extra; ++i) ++budget.anchor_frame_budgets[i];

        for (int i = 0; i < frames; ++i) {
            const int frame = budget.anchor_frames[i];
            const int ats = budget.ats_per_frame[frame - budget.segment.first];
            if (budget.anchor_frame_budgets[i] + ats > tokens_per_frame) {
                std::ostringstream msg;
                msg << "frame " << frame << " cannot host "
                    << budget.anchor_frame_budgets[i] << " anchors plus " << ats
                    << " salient tokens with only " << tokens_per_frame
                    << " tokens per frame";
                throw Error(ErrorKind::BudgetOverflow, msg.str());
            }
        }
    }
    return plan;
}

namespace {

PruneResult run_pipeline(const TokenDump& dump, const PruneConfig& config,
                         SegmenterKind segmenter, MergerKind merger,
                         int fixed_interval, StageTimings* timings) {
    run_stage("validate", [&] {
        validate_config(config);
        validate_dump(dump);
        if (segmenter == SegmenterKind::FixedInterval && fixed_interval < 1) {
            throw Error(ErrorKind::InvalidConfig,
                        "fixed interval must be >= 1");
        }
        return 0;
    });

    const auto seg_start = Clock::now();
    Segmentation segmentation = run_stage("segmentation", [&] {
        switch (segmenter) {
            case SegmenterKind::FixedInterval:
                return fixed_interval_segment(dump.frame_count, fixed_interval);
            case SegmenterKind::Cluster:
                return cluster_segment(dump,
                                       std::min(config.min_segments, dump.frame_count));
            case SegmenterKind::Dynamic:
            default: {
                TransitionProfile profile;
                if (config.features_from_tokens) {
                    const auto features = mean_token_features(dump);
                    profile = transition_profile_from(features, dump.frame_count,
                                                      dump.token_dim);
                } else {
                    profile = transition_profile(dump);
                }
                return dynamic_segment(profile, config.min_segments,
                                       config.transition_threshold);
            }
        }
    });
    const double seg_ms = ms_since(seg_start);

    const auto compress_start = Clock::now();
    const BudgetPlan plan = run_stage("budget", [&] {
        return budget_plan(segmentation, dump.tokens_per_frame,
                           config.retention_ratio, config.dtm_fraction,
                           config.anchor_interval, config.rounding_policy);
    });
    // Saliency scores are only needed when some frame has an ATS budget.
    bool any_ats = false;
    for (const SegmentBudget& budget : plan.segments) {
        any_ats = any_ats || budget.ats_budget > 0;
    }
    const PooledAttention pooled = run_stage("ats", [&] {
        return any_ats ? saliency_scores(dump, config) : PooledAttention{};
    });
    const int knn = effective_knn_k(config, dump.tokens_per_frame);

    PruneResult result;
    result.frame_count = dump.frame_count;
    result.tokens_per_frame = dump.tokens_per_frame;
    result.token_dim = dump.token_dim;
    result.pool_out_h = dump.pool_out_h;
    result.pool_out_w = dump.pool_out_w;
    result.segmentation = segmentation;
    result.budget_report = plan.segments;

    for (const SegmentBudget& budget : plan.segments) {
        const Segment& segment = budget.segment;
        std::vector<RetainedToken> segment_tokens;
        std::vector<TokenRef> excluded;

        run_stage("ats", [&] {
            for (int f = segment.first; f <= segment.last; ++f) {
                const int frame_budget = budget.ats_per_frame[f - segment.first];
                if (frame_budget == 0) continue;
                for (int s : select_salient(pooled, f, frame_budget)) {
                    excluded.push_back({f, s});
                    RetainedToken token;
                    token.frame_index = f;
                    token.spatial_index = s;
                    token.origin = TokenOrigin::Ats;
                    const auto embedding = dump.token(f, s);
                    token.embedding.assign(embedding.begin(), embedding.end());
                    segment_tokens.push_back(std::move(token));
                }
            }
            return 0;
        });

        if (budget.dtm_budget > 0) {
            MergeOutcome outcome = run_stage("dtm", [&] {
                switch (merger) {
                    case MergerKind::Cluster:
                        return cluster_merge(dump, segment, budget.dtm_budget, excluded);
                    case MergerKind::Uniform:
                    case MergerKind::Density:
                    default: {
                        std::vector<TokenRef> anchors;
                        std::vector<int> frame_excluded;
                        for (size_t i = 0; i < budget.anchor_frames.size(); ++i) {
                            const int frame = budget.anchor_frames[i];
                            frame_excluded.clear();
                            for (const TokenRef& e : excluded) {
                                if (e.frame == frame) frame_excluded.push_back(e.spatial);
                            }
                            const int frame_budget = budget.anchor_frame_budgets[i];
                            const auto picks =
                                merger == MergerKind::Density
                                    ? select_frame_anchors(dump, frame, frame_budget,
                                                           knn, frame_excluded)
                                    : uniform_frame_anchors(dump.tokens_per_frame,
                                                            frame_budget, frame_excluded);
                            for (int s : picks) anchors.push_back({frame, s});
                        }
                        return assign_and_merge(dump, segment, anchors, excluded,
                                                config.merge_weight);
                    }
                }
            });
            for (auto& token : outcome.retained) {
                segment_tokens.push_back(std::move(token));
            }
            result.assignments.insert(result.assignments.end(),
                                      outcome.assignments.begin(),
                                      outcome.assignments.end());
        }

        std::sort(segment_tokens.begin(), segment_tokens.end(),
                  [](const RetainedToken& a, const RetainedToken& b) {
                      return std::pair(a.frame_index, a.spatial_index) <
                             std::pair(b.frame_index, b.spatial_index);
                  });
        for (auto& token : segment_tokens) {
            result.retained.push_back(std::move(token));
        }
    }

    std::sort(result.assignments.begin(), result.assignments.end(),
              [](const MergeAssignment& a, const MergeAssignment& b) {
                  return std::pair(a.frame_index, a.spatial_index) <
                         std::pair(b.frame_index, b.spatial_index);
              });

    result.stats.retained_count = static_cast<int>(result.retained.size());
    result.stats.retention_ratio =
        static_cast<double>(result.stats.retained_count) /
        (static_cast<double>(dump.frame_count) * dump.tokens_per_frame);
    for (const RetainedToken& token : result.retained) {
        if (token.origin == TokenOrigin::DtmAnchor) {
            ++result.stats.dtm_count;
        } else {
            ++result.stats.ats_count;
        }
    }

    if (timings) {
        timings->segmentation_ms = seg_ms;
        timings->compression_ms = ms_since(compress_start);
    }
    return result;
}

}  // namespace

PruneResult prune(const TokenDump& dump, const PruneConfig& config,
                  StageTimings* timings) {
    return run_pipeline(dump, config, SegmenterKind::Dynamic, MergerKind::Density,
                        /*fixed_interval=*/4, timings);
}

PruneResult compare_strategies(const TokenDump& dump, const PruneConfig& config,
                               SegmenterKind segmenter, MergerKind merger,
                               int fixed_interval, StageTimings* timings) {
    return run_pipeline(dump, config, segmenter, merger, fixed_interval, timings);
}

}  // namespace vidprune
