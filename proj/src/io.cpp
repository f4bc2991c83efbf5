#include "vidprune/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace vidprune {

namespace {

constexpr uint32_t kDumpVersion = 1;
constexpr uint32_t kResultVersion = 1;
constexpr uint32_t kAttentionFlag = 1u;
constexpr int64_t kMaxElements = INT32_MAX;

void append_u32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void append_f32(std::string& out, float v) {
    append_u32(out, std::bit_cast<uint32_t>(v));
}

void append_f32_array(std::string& out, const std::vector<float>& data) {
    for (float v : data) append_f32(out, v);
}

class Cursor {
public:
    Cursor(const std::string& data, const std::filesystem::path& path)
        : data_(data), path_(path) {}

    uint32_t u32() {
        need(4);
        const auto* p = reinterpret_cast<const unsigned char*>(data_.data() + pos_);
        pos_ += 4;
        return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
               (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
    }

    float f32() { return std::bit_cast<float>(u32()); }

    void f32_array(std::vector<float>& out, size_t count) {
        need_count(count, 4);
        out.resize(count);
        for (size_t i = 0; i < count; ++i) out[i] = f32();
    }

    // Guards container pre-sizing against hostile counts: the payload must
    // actually have room for `count` records of `bytes_each`.
    void need_count(size_t count, size_t bytes_each) {
        if (count > (data_.size() - pos_) / bytes_each) {
            std::ostringstream msg;
            msg << path_.string() << ": truncated payload (" << count
                << " records of " << bytes_each << " bytes declared at offset "
                << pos_ << ", " << data_.size() - pos_ << " bytes left)";
            throw Error(ErrorKind::TruncatedPayload, msg.str());
        }
    }

    std::string magic() {
        need(4);
        std::string m = data_.substr(pos_, 4);
        pos_ += 4;
        return m;
    }

    void expect_end() const {
        if (pos_ != data_.size()) {
            std::ostringstream msg;
            msg << path_.string() << ": " << (data_.size() - pos_)
                << " unexpected trailing bytes";
            throw Error(ErrorKind::TruncatedPayload, msg.str());
        }
    }

private:
    void need(size_t bytes) {
        if (pos_ + bytes > data_.size()) {
            std::ostringstream msg;
            msg << path_.string() << ": truncated payload (need " << bytes
                << " bytes at offset " << pos_ << ", file has " << data_.size() << ")";
            throw Error(ErrorKind::TruncatedPayload, msg.str());
        }
    }

    const std::string& data_;
    const std::filesystem::path& path_;
    size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return std::move(buffer).str();
}

void write_file(const std::filesystem::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::IoFailure, "cannot open " + path.string() + " for writing");
    }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) {
        throw Error(ErrorKind::IoFailure, "short write to " + path.string());
    }
}

int checked_dim(uint32_t v, const char* field, const std::filesystem::path& path) {
    if (v > static_cast<uint32_t>(INT32_MAX)) {
        std::ostringstream msg;
        msg << path.string() << ": " << field << " = " << v << " overflows";
        throw Error(ErrorKind::DimensionOverflow, msg.str());
    }
    return static_cast<int>(v);
}

void check_product(int64_t product, const char* what,
                   const std::filesystem::path& path) {
    if (product > kMaxElements) {
        std::ostringstream msg;
        msg << path.string() << ": " << what << " would need " << product
            << " elements";
        throw Error(ErrorKind::DimensionOverflow, msg.str());
    }
}

}  // namespace

void write_dump(const TokenDump& dump, const std::filesystem::path& path) {
    std::string out;
    out.reserve(44 + 4 * (dump.frame_features.size() + dump.tokens.size() +
                          dump.attention.size()));
    out += "FVTD";
    append_u32(out, kDumpVersion);
    append_u32(out, dump.has_attention() ? kAttentionFlag : 0u);
    append_u32(out, static_cast<uint32_t>(dump.frame_count));
    append_u32(out, static_cast<uint32_t>(dump.tokens_per_frame));
    append_u32(out, static_cast<uint32_t>(dump.token_dim));
    append_u32(out, static_cast<uint32_t>(dump.frame_feature_dim));
    append_u32(out, static_cast<uint32_t>(dump.attn_height));
    append_u32(out, static_cast<uint32_t>(dump.attn_width));
    append_u32(out, static_cast<uint32_t>(dump.pool_out_h));
    append_u32(out, static_cast<uint32_t>(dump.pool_out_w));
    append_f32_array(out, dump.frame_features);
    append_f32_array(out, dump.tokens);
    append_f32_array(out, dump.attention);
    write_file(path, out);
}

TokenDump read_dump(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    Cursor cursor(data, path);

    if (cursor.magic() != "FVTD") {
        throw Error(ErrorKind::BadMagic, path.string() + ": not an FVTD file");
    }
    const uint32_t version = cursor.u32();
    if (version != kDumpVersion) {
        std::ostringstream msg;
        msg << path.string() << ": unsupported FVTD version " << version;
        throw Error(ErrorKind::VersionMismatch, msg.str());
    }
    const uint32_t flags = cursor.u32();

    TokenDump dump;
    dump.frame_count = checked_dim(cursor.u32(), "frame_count", path);
    dump.tokens_per_frame = checked_dim(cursor.u32(), "tokens_per_frame", path);
    dump.token_dim = checked_dim(cursor.u32(), "token_dim", path);
    dump.frame_feature_dim = checked_dim(cursor.u32(), "frame_feature_dim", path);
    dump.attn_height = checked_dim(cursor.u32(), "attn_height", path);
    dump.attn_width = checked_dim(cursor.u32(), "attn_width", path);
    dump.pool_out_h = checked_dim(cursor.u32(), "pool_out_h", path);
    dump.pool_out_w = checked_dim(cursor.u32(), "pool_out_w", path);

    const int64_t f = dump.frame_count;
    check_product(f * dump.frame_feature_dim, "frame_features", path);
    check_product(f * dump.tokens_per_frame * dump.token_dim, "tokens", path);
    check_product(f * dump.attn_height * dump.attn_width, "attention", path);

    cursor.f32_array(dump.frame_features,
                     static_cast<size_t>(f * dump.frame_feature_dim));
    cursor.f32_array(dump.tokens,
                     static_cast<size_t>(f * dump.tokens_per_frame * dump.token_dim));
    if (flags & kAttentionFlag) {
        cursor.f32_array(dump.attention,
                         static_cast<size_t>(f * dump.attn_height * dump.attn_width));
    }
    cursor.expect_end();
    return dump;
}

namespace {

// Fixed-algorithm normal deviates: mt19937_64 + Box-Muller, so dumps are
// byte-identical across standard libraries (std::normal_distribution is
// implementation-defined).
class SynthRng {
public:
    explicit SynthRng(uint64_t seed) : gen_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double gaussian() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.141592653589793238462643 * u2);
    }

    int uniform_int(int bound) {  // [0, bound)
        return static_cast<int>(uniform() * bound);
    }

private:
    std::mt19937_64 gen_;
};

constexpr int kObjectsPerScene = 3;

}  // namespace

TokenDump synth_video(const std::vector<SceneSpec>& scenes, uint64_t seed,
                      const SynthDims& dims) {
    if (scenes.empty()) {
        throw Error(ErrorKind::EmptyInput, "scene list is empty");
    }
    TokenDump dump;
    dump.tokens_per_frame = dims.pool_h * dims.pool_w;
    dump.token_dim = dims.token_dim;
    dump.frame_feature_dim = dims.feature_dim;
    dump.attn_height = dims.attn_h;
    dump.attn_width = dims.attn_w;
    dump.pool_out_h = dims.pool_h;
    dump.pool_out_w = dims.pool_w;
    for (const SceneSpec& scene : scenes) {
        if (scene.length <= 0) {
            throw Error(ErrorKind::BadSceneSpec, "scene length must be positive");
        }
        dump.frame_count += scene.length;
    }

    const int n_tokens = dump.tokens_per_frame;
    dump.frame_features.reserve(static_cast<size_t>(dump.frame_count) * dims.feature_dim);
    dump.tokens.reserve(static_cast<size_t>(dump.frame_count) * n_tokens * dims.token_dim);
    if (dims.with_attention) {
        dump.attention.reserve(static_cast<size_t>(dump.frame_count) * dims.attn_h *
                               dims.attn_w);
    }

    SynthRng rng(seed);
    for (const SceneSpec& scene : scenes) {
        // Planted objects: a grid location plus a token-space center each.
        std::vector<std::pair<int, int>> object_pos(kObjectsPerScene);
        std::vector<std::vector<double>> object_center(
            kObjectsPerScene, std::vector<double>(dims.token_dim));
        for (int g = 0; g < kObjectsPerScene; ++g) {
            object_pos[g] = {rng.uniform_int(dims.pool_h), rng.uniform_int(dims.pool_w)};
            for (double& v : object_center[g]) v = 2.0 * rng.gaussian();
        }
        // Nearest-object ownership of each grid cell, ties to the lower id.
        std::vector<int> owner(n_tokens);
        for (int y = 0; y < dims.pool_h; ++y) {
            for (int x = 0; x < dims.pool_w; ++x) {
                int best = 0;
                int best_dist = INT32_MAX;
                for (int g = 0; g < kObjectsPerScene; ++g) {
                    const int dy = y - object_pos[g].first;
                    const int dx = x - object_pos[g].second;
                    const int dist = dy * dy + dx * dx;
                    if (dist < best_dist) {
                        best_dist = dist;
                        best = g;
                    }
                }
                owner[y * dims.pool_w + x] = best;
            }
        }

        const double token_sigma = 0.05 + scene.spread;
        // Feature noise is normalized by sqrt(Df) so `spread` is the expected
        // displacement magnitude: intra-scene transition similarity stays high
        // for any feature dimension.
        const double feature_sigma =
            scene.spread / std::sqrt(static_cast<double>(dims.feature_dim));
        for (int frame = 0; frame < scene.length; ++frame) {
            const int one_hot = scene.center_id % dims.feature_dim;
            for (int d = 0; d < dims.feature_dim; ++d) {
                const double base = d == one_hot ? 1.0 : 0.0;
                const double noise =
                    scene.spread == 0.0 ? 0.0 : feature_sigma * rng.gaussian();
                dump.frame_features.push_back(static_cast<float>(base + noise));
            }
            for (int s = 0; s < n_tokens; ++s) {
                const auto& center = object_center[owner[s]];
                for (int d = 0; d < dims.token_dim; ++d) {
                    dump.tokens.push_back(
                        static_cast<float>(center[d] + token_sigma * rng.gaussian()));
                }
            }
            if (dims.with_attention) {
                const double sigma = dims.attn_h / 8.0;
                for (int r = 0; r < dims.attn_h; ++r) {
                    for (int c = 0; c < dims.attn_w; ++c) {
                        double value = 0.05 * rng.uniform();
                        for (int g = 0; g < kObjectsPerScene; ++g) {
                            const double ry = (object_pos[g].first + 0.5) * dims.attn_h /
                                              dims.pool_h;
                            const double cx = (object_pos[g].second + 0.5) * dims.attn_w /
                                              dims.pool_w;
                            const double dr = r + 0.5 - ry;
                            const double dc = c + 0.5 - cx;
                            value += std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
                        }
                        dump.attention.push_back(static_cast<float>(value));
                    }
                }
            }
        }
    }
    return dump;
}

std::vector<SceneSpec> parse_scene_spec(const std::string& text) {
    std::vector<SceneSpec> scenes;
    std::map<std::string, int> label_ids;
    std::stringstream stream(text);
    std::string part;
    while (std::getline(stream, part, ',')) {
        if (part.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream part_stream(part);
        std::string field;
        while (std::getline(part_stream, field, ':')) fields.push_back(field);
        if (fields.size() < 2 || fields.size() > 3) {
            throw Error(ErrorKind::BadSceneSpec,
                        "scene '" + part + "' must be length:label[:spread]");
        }
        SceneSpec scene;
        try {
            scene.length = std::stoi(fields[0]);
            scene.spread = fields.size() == 3 ? std::stod(fields[2]) : 0.02;
        } catch (const std::exception&) {
            throw Error(ErrorKind::BadSceneSpec, "bad number in scene '" + part + "'");
        }
        if (scene.length <= 0 || scene.spread < 0.0) {
            throw Error(ErrorKind::BadSceneSpec,
                        "scene '" + part + "' has a non-positive length or spread");
        }
        auto it = label_ids.find(fields[1]);
        if (it == label_ids.end()) {
            it = label_ids.emplace(fields[1], static_cast<int>(label_ids.size())).first;
        }
        scene.center_id = it->second;
        scenes.push_back(scene);
    }
    if (scenes.empty()) {
        throw Error(ErrorKind::BadSceneSpec, "scene list is empty");
    }
    return scenes;
}

void write_result(const PruneResult& result, const std::filesystem::path& path,
                  ResultFormat format) {
    if (format == ResultFormat::JsonStats) {
        write_file(path, result_stats_json(result) + "\n");
        return;
    }
    if (format == ResultFormat::Svg) {
        write_file(path, result_svg(result));
        return;
    }

    std::string out;
    out += "FVPR";
    append_u32(out, kResultVersion);
    append_u32(out, static_cast<uint32_t>(result.frame_count));
    append_u32(out, static_cast<uint32_t>(result.tokens_per_frame));
    append_u32(out, static_cast<uint32_t>(result.token_dim));
    append_u32(out, static_cast<uint32_t>(result.pool_out_h));
    append_u32(out, static_cast<uint32_t>(result.pool_out_w));
    append_u32(out, static_cast<uint32_t>(result.segmentation.segments.size()));
    append_u32(out, static_cast<uint32_t>(result.budget_report.size()));
    append_u32(out, static_cast<uint32_t>(result.retained.size()));
    append_u32(out, static_cast<uint32_t>(result.assignments.size()));

    for (const Segment& segment : result.segmentation.segments) {
        append_u32(out, static_cast<uint32_t>(segment.first));
        append_u32(out, static_cast<uint32_t>(segment.last));
    }
    for (const SegmentBudget& budget : result.budget_report) {
        append_u32(out, static_cast<uint32_t>(budget.segment.first));
        append_u32(out, static_cast<uint32_t>(budget.segment.last));
        append_u32(out, static_cast<uint32_t>(budget.dtm_budget));
        append_u32(out, static_cast<uint32_t>(budget.ats_budget));
        append_u32(out, static_cast<uint32_t>(budget.anchor_frames.size()));
        for (int frame : budget.anchor_frames) {
            append_u32(out, static_cast<uint32_t>(frame));
        }
        for (int b : budget.anchor_frame_budgets) {
            append_u32(out, static_cast<uint32_t>(b));
        }
        for (int ats : budget.ats_per_frame) {
            append_u32(out, static_cast<uint32_t>(ats));
        }
    }
    for (const RetainedToken& token : result.retained) {
        append_u32(out, static_cast<uint32_t>(token.frame_index));
        append_u32(out, static_cast<uint32_t>(token.spatial_index));
        append_u32(out, static_cast<uint32_t>(token.origin));
        append_u32(out, static_cast<uint32_t>(token.merged_count));
        for (float v : token.embedding) append_f32(out, v);
    }
    for (const MergeAssignment& a : result.assignments) {
        append_u32(out, static_cast<uint32_t>(a.frame_index));
        append_u32(out, static_cast<uint32_t>(a.spatial_index));
        append_u32(out, static_cast<uint32_t>(a.anchor_frame));
        append_u32(out, static_cast<uint32_t>(a.anchor_spatial));
    }
    write_file(path, out);
}

PruneResult read_result(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    Cursor cursor(data, path);

    if (cursor.magic() != "FVPR") {
        throw Error(ErrorKind::BadMagic, path.string() + ": not an FVPR file");
    }
    const uint32_t version = cursor.u32();
    if (version != kResultVersion) {
        std::ostringstream msg;
        msg << path.string() << ": unsupported FVPR version " << version;
        throw Error(ErrorKind::VersionMismatch, msg.str());
    }

    PruneResult result;
    result.frame_count = checked_dim(cursor.u32(), "frame_count", path);
    result.tokens_per_frame = checked_dim(cursor.u32(), "tokens_per_frame", path);
    result.token_dim = checked_dim(cursor.u32(), "token_dim", path);
    result.pool_out_h = checked_dim(cursor.u32(), "pool_out_h", path);
    result.pool_out_w = checked_dim(cursor.u32(), "pool_out_w", path);
    const int seg_count = checked_dim(cursor.u32(), "segment_count", path);
    const int budget_count = checked_dim(cursor.u32(), "budget_count", path);
    const int retained_count = checked_dim(cursor.u32(), "retained_count", path);
    const int assignment_count = checked_dim(cursor.u32(), "assignment_count", path);
    check_product(static_cast<int64_t>(retained_count) * result.token_dim,
                  "retained embeddings", path);

    cursor.need_count(seg_count, 8);
    result.segmentation.segments.resize(seg_count);
    for (Segment& segment : result.segmentation.segments) {
        segment.first = static_cast<int>(cursor.u32());
        segment.last = static_cast<int>(cursor.u32());
    }
    cursor.need_count(budget_count, 20);
    result.budget_report.resize(budget_count);
    for (SegmentBudget& budget : result.budget_report) {
        budget.segment.first = static_cast<int>(cursor.u32());
        budget.segment.last = static_cast<int>(cursor.u32());
        if (budget.segment.last < budget.segment.first) {
            throw Error(ErrorKind::TruncatedPayload,
                        path.string() + ": budget entry with an inverted segment");
        }
        budget.dtm_budget = static_cast<int>(cursor.u32());
        budget.ats_budget = static_cast<int>(cursor.u32());
        const int anchor_count = checked_dim(cursor.u32(), "anchor_count", path);
        cursor.need_count(static_cast<size_t>(anchor_count) * 2 +
                              budget.segment.length(),
                          4);
        budget.anchor_frames.resize(anchor_count);
        for (int& frame : budget.anchor_frames) frame = static_cast<int>(cursor.u32());
        budget.anchor_frame_budgets.resize(anchor_count);
        for (int& b : budget.anchor_frame_budgets) b = static_cast<int>(cursor.u32());
        budget.ats_per_frame.resize(budget.segment.length());
        for (int& ats : budget.ats_per_frame) ats = static_cast<int>(cursor.u32());
    }
    cursor.need_count(retained_count, 16 + 4 * static_cast<size_t>(result.token_dim));
    result.retained.resize(retained_count);
    for (RetainedToken& token : result.retained) {
        token.frame_index = static_cast<int>(cursor.u32());
        token.spatial_index = static_cast<int>(cursor.u32());
        token.origin = static_cast<TokenOrigin>(cursor.u32());
        token.merged_count = static_cast<int>(cursor.u32());
        cursor.f32_array(token.embedding, static_cast<size_t>(result.token_dim));
    }
    cursor.need_count(assignment_count, 16);
    result.assignments.resize(assignment_count);
    for (MergeAssignment& a : result.assignments) {
        a.frame_index = static_cast<int>(cursor.u32());
        a.spatial_index = static_cast<int>(cursor.u32());
        a.anchor_frame = static_cast<int>(cursor.u32());
        a.anchor_spatial = static_cast<int>(cursor.u32());
    }
    cursor.expect_end();

    result.stats.retained_count = retained_count;
    result.stats.retention_ratio =
        result.frame_count > 0 && result.tokens_per_frame > 0
            ? static_cast<double>(retained_count) /
                  (static_cast<double>(result.frame_count) * result.tokens_per_frame)
            : 0.0;
    for (const RetainedToken& token : result.retained) {
        if (token.origin == TokenOrigin::DtmAnchor) {
            ++result.stats.dtm_count;
        } else {
            ++result.stats.ats_count;
        }
    }
    return result;
}

std::string result_stats_json(const PruneResult& result, const StageTimings* timings) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = 1;
    doc["frame_count"] = result.frame_count;
    doc["tokens_per_frame"] = result.tokens_per_frame;
    doc["token_dim"] = result.token_dim;
    doc["retained"] = result.stats.retained_count;
    doc["retention_ratio"] = result.stats.retention_ratio;
    doc["origin_counts"] = {{"dtm_anchor", result.stats.dtm_count},
                            {"ats", result.stats.ats_count}};
    doc["merged_tokens"] = result.assignments.size();
    doc["segment_count"] = result.segmentation.segments.size();

    auto segments = nlohmann::ordered_json::array();
    for (const SegmentBudget& budget : result.budget_report) {
        nlohmann::ordered_json entry;
        entry["first"] = budget.segment.first;
        entry["last"] = budget.segment.last;
        entry["dtm_budget"] = budget.dtm_budget;
        entry["ats_budget"] = budget.ats_budget;
        entry["anchor_frames"] = budget.anchor_frames;
        segments.push_back(std::move(entry));
    }
    doc["segments"] = std::move(segments);
    if (timings) {
        doc["timings_ms"] = {{"segmentation", timings->segmentation_ms},
                             {"compression", timings->compression_ms}};
    }
    return doc.dump(2);
}

namespace {

std::string group_hue(int group) {
    const double hue = std::fmod(group * 137.50776405, 360.0);
    std::ostringstream out;
    out.precision(1);
    out << std::fixed << hue;
    return out.str();
}

}  // namespace

std::string result_svg(const PruneResult& result) {
    const int cell = 10;
    const int gap = 8;
    const int margin = 12;
    const int label_h = 14;
    const int cols = std::max(1, std::min(result.frame_count, 8));
    const int rows = result.frame_count > 0 ? (result.frame_count + cols - 1) / cols : 0;
    const int frame_w = result.pool_out_w * cell;
    const int frame_h = result.pool_out_h * cell;
    const int width = std::max(1, 2 * margin + cols * frame_w + (cols - 1) * gap);
    const int height =
        std::max(1, 2 * margin + rows * (frame_h + label_h) + (rows > 0 ? (rows - 1) * gap : 0));

    // Roles per patch: retained tokens and merge-group membership.
    const auto key = [&](int frame, int spatial) {
        return static_cast<int64_t>(frame) * result.tokens_per_frame + spatial;
    };
    std::unordered_map<int64_t, int> anchor_group;
    std::unordered_map<int64_t, char> ats_pick;
    int next_group = 0;
    for (const RetainedToken& token : result.retained) {
        if (token.origin == TokenOrigin::DtmAnchor) {
            anchor_group[key(token.frame_index, token.spatial_index)] = next_group++;
        } else {
            ats_pick[key(token.frame_index, token.spatial_index)] = 1;
        }
    }
    std::unordered_map<int64_t, int> member_group;
    for (const MergeAssignment& a : result.assignments) {
        const auto it = anchor_group.find(key(a.anchor_frame, a.anchor_spatial));
        if (it != anchor_group.end()) {
            member_group[key(a.frame_index, a.spatial_index)] = it->second;
        }
    }
    std::vector<int> segment_of(std::max(result.frame_count, 0), 0);
    for (size_t s = 0; s < result.segmentation.segments.size(); ++s) {
        const Segment& segment = result.segmentation.segments[s];
        for (int f = segment.first; f <= segment.last && f < result.frame_count; ++f) {
            segment_of[f] = static_cast<int>(s);
        }
    }

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
        << "\">\n";
    for (int f = 0; f < result.frame_count; ++f) {
        const int col = f % cols;
        const int row = f / cols;
        const int x0 = margin + col * (frame_w + gap);
        const int y0 = margin + row * (frame_h + label_h + gap) + label_h;
        svg << "  <text x=\"" << x0 << "\" y=\"" << y0 - 4
            << "\" font-size=\"10\" font-family=\"monospace\" fill=\"#444\">f" << f
            << " s" << segment_of[f] << "</text>\n";
        if (f > 0 && segment_of[f] != segment_of[f - 1]) {
            const int bx = col > 0 ? x0 - gap / 2 : x0 - 3;
            svg << "  <line x1=\"" << bx << "\" y1=\"" << y0 << "\" x2=\"" << bx
                << "\" y2=\"" << y0 + frame_h
                << "\" stroke=\"#7a4a21\" stroke-width=\"3\"/>\n";
        }
        for (int py = 0; py < result.pool_out_h; ++py) {
            for (int px = 0; px < result.pool_out_w; ++px) {
                const int spatial = py * result.pool_out_w + px;
                const int64_t k = key(f, spatial);
                std::string fill = "#e8e8e8";
                std::string stroke = "#c8c8c8";
                std::string stroke_width = "0.4";
                if (const auto it = anchor_group.find(k); it != anchor_group.end()) {
                    const std::string hue = group_hue(it->second);
                    fill = "hsl(" + hue + ",75%,55%)";
                    stroke = "hsl(" + hue + ",75%,30%)";
                    stroke_width = "1.4";
                } else if (ats_pick.count(k)) {
                    fill = "#3b76d2";
                    stroke = "#1d4e9e";
                    stroke_width = "1.0";
                } else if (const auto mit = member_group.find(k);
                           mit != member_group.end()) {
                    const std::string hue = group_hue(mit->second);
                    fill = "hsl(" + hue + ",75%,82%)";
                    stroke = "hsl(" + hue + ",75%,30%)";
                    stroke_width = "0.8";
                }
                svg << "  <rect class=\"patch\" x=\"" << x0 + px * cell << "\" y=\""
                    << y0 + py * cell << "\" width=\"" << cell << "\" height=\"" << cell
                    << "\" fill=\"" << fill << "\" stroke=\"" << stroke
                    << "\" stroke-width=\"" << stroke_width << "\"/>\n";
            }
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace vidprune
