#include "vidprune/attention.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vidprune {

PooledAttention pool_attention(const TokenDump& dump) {
    const int h_in = dump.attn_height, w_in = dump.attn_width;
    const int h_out = dump.pool_out_h, w_out = dump.pool_out_w;
    if (h_out > h_in || w_out > w_in) {
        std::ostringstream msg;
        msg << "cannot pool " << h_in << "x" << w_in << " attention up to "
            << h_out << "x" << w_out;
        throw Error(ErrorKind::UnsupportedPooling, msg.str());
    }

    PooledAttention pooled;
    pooled.frame_count = dump.frame_count;
    pooled.tokens_per_frame = dump.tokens_per_frame;
    pooled.scores.resize(static_cast<size_t>(dump.frame_count) * dump.tokens_per_frame);

    for (int f = 0; f < dump.frame_count; ++f) {
        const auto map = dump.frame_attention(f);
        float* out = pooled.scores.data() +
                     static_cast<size_t>(f) * dump.tokens_per_frame;
        for (int i = 0; i < h_out; ++i) {
            const int r0 = i * h_in / h_out;
            const int r1 = ((i + 1) * h_in + h_out - 1) / h_out;
            for (int j = 0; j < w_out; ++j) {
                const int c0 = j * w_in / w_out;
                const int c1 = ((j + 1) * w_in + w_out - 1) / w_out;
                double acc = 0.0;
                for (int r = r0; r < r1; ++r) {
                    for (int c = c0; c < c1; ++c) {
                        acc += map[static_cast<size_t>(r) * w_in + c];
                    }
                }
                out[i * w_out + j] =
                    static_cast<float>(acc / ((r1 - r0) * (c1 - c0)));
            }
        }
    }
    return pooled;
}

PooledAttention pseudo_cls_attention(const TokenDump& dump) {
    PooledAttention pooled;
    pooled.frame_count = dump.frame_count;
    pooled.tokens_per_frame = dump.tokens_per_frame;
    pooled.scores.resize(static_cast<size_t>(dump.frame_count) * dump.tokens_per_frame);

    const int dim = dump.token_dim;
    std::vector<double> mean(dim);
    for (int f = 0; f < dump.frame_count; ++f) {
        std::fill(mean.begin(), mean.end(), 0.0);
        for (int s = 0; s < dump.tokens_per_frame; ++s) {
            const auto tok = dump.token(f, s);
            for (int d = 0; d < dim; ++d) mean[d] += tok[d];
        }
        double mean_sq = 0.0;
        for (int d = 0; d < dim; ++d) {
            mean[d] /= dump.tokens_per_frame;
            mean_sq += mean[d] * mean[d];
        }
        if (mean_sq == 0.0) {
            std::ostringstream msg;
            msg << "zero-norm mean token on frame " << f
                << "; pseudo-[CLS] cosine is undefined";
            throw Error(ErrorKind::DegenerateFeature, msg.str());
        }
        const double mean_norm = std::sqrt(mean_sq);
        float* out = pooled.scores.data() +
                     static_cast<size_t>(f) * dump.tokens_per_frame;
        for (int s = 0; s < dump.tokens_per_frame; ++s) {
            const auto tok = dump.token(f, s);
            double dot = 0.0, sq = 0.0;
            for (int d = 0; d < dim; ++d) {
                dot += static_cast<double>(tok[d]) * mean[d];
                sq += static_cast<double>(tok[d]) * tok[d];
            }
            if (sq == 0.0) {
                std::ostringstream msg;
                msg << "zero-norm token at frame " << f << ", spatial " << s
                    << "; pseudo-[CLS] cosine is undefined";
                throw Error(ErrorKind::DegenerateFeature, msg.str());
            }
            out[s] = static_cast<float>(dot / (std::sqrt(sq) * mean_norm));
        }
    }
    return pooled;
}

PooledAttention saliency_scores(const TokenDump& dump, const PruneConfig& config) {
    if (config.pseudo_cls || !dump.has_attention()) {
        return pseudo_cls_attention(dump);
    }
    return pool_attention(dump);
}

std::vector<int> select_salient(const PooledAttention& pooled, int frame, int budget,
                                std::span<const int> excluded) {
    const auto scores = pooled.frame(frame);
    std::vector<char> mask(pooled.tokens_per_frame, 0);
    for (int s : excluded) {
        if (s < 0 || s >= pooled.tokens_per_frame) {
            std::ostringstream msg;
            msg << "excluded spatial index " << s << " outside [0, "
                << pooled.tokens_per_frame << ")";
            throw Error(ErrorKind::DimensionMismatch, msg.str());
        }
        mask[s] = 1;
    }

    std::vector<int> candidates;
    candidates.reserve(pooled.tokens_per_frame);
    for (int s = 0; s < pooled.tokens_per_frame; ++s) {
        if (!mask[s]) candidates.push_back(s);
    }
    if (budget > static_cast<int>(candidates.size())) {
        std::ostringstream msg;
        msg << "saliency budget " << budget << " exceeds " << candidates.size()
            << " available tokens on frame " << frame;
        throw Error(ErrorKind::BudgetOverflow, msg.str());
    }
    if (budget == 0) return {};
    std::partial_sort(candidates.begin(), candidates.begin() + budget,
                      candidates.end(), [&](int a, int b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return a < b;
                      });
    candidates.resize(budget);
    std::sort(candidates.begin(), candidates.end());
    return candidates;
}

}  // namespace vidprune
