// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/training/config.hpp"

#include <charconv>
#include <functional>
#include <set>
#include <vector>

#include <fmt/format.h>

#include "objocc/completion/unet.hpp"
#include "objocc/core/errors.hpp"
#include "objocc/dataio/voxel_io.hpp"
#include "objocc/fusion/fusion.hpp"

namespace objocc::training {
namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view s) {
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ArgumentError("bad number '" + std::string(s) + "'");
    return v;
}

bool parse_bool(std::string_view s) {
    if (s == "true" || s == "1" || s == "on") return true;
    if (s == "false" || s == "0" || s == "off") return false;
    throw ArgumentError("bad boolean '" + std::string(s) + "'");
}

template <typename T, std::size_t N>
std::array<T, N> parse_list(std::string_view s) {
    std::array<T, N> out{};
    std::size_t n = 0;
    while (true) {
        const auto comma = s.find(',');
        const auto item = trim(s.substr(0, comma));
        if (n == N) throw ArgumentError("too many list entries");
        out[n++] = parse_number<T>(item);
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    if (n != N) throw ArgumentError(fmt::format("expected {} comma-separated values", N));
    return out;
}

template <typename T, std::size_t N>
std::string list_text(const std::array<T, N>& a) {
    return fmt::format("{}", fmt::join(a, ","));
}

struct Key {
    std::string name;
    std::function<std::string(const TrainConfig&)> get;
    std::function<void(TrainConfig&, std::string_view)> set;
};

template <typename T>
Key number_key(std::string name, T TrainConfig::*m) {
    return {std::move(name), [m](const TrainConfig& c) { return fmt::format("{}", c.*m); },
            [m](TrainConfig& c, std::string_view v) { c.*m = parse_number<T>(v); }};
}

Key bool_key(std::string name, bool TrainConfig::*m) {
    return {std::move(name), [m](const TrainConfig& c) { return std::string(c.*m ? "true" : "false"); },
            [m](TrainConfig& c, std::string_view v) { c.*m = parse_bool(v); }};
}

Key string_key(std::string name, std::string TrainConfig::*m) {
    return {std::move(name), [m](const TrainConfig& c) { return c.*m; },
            [m](TrainConfig& c, std::string_view v) { c.*m = std::string(v); }};
}

template <typename T, std::size_t N>
Key list_key(std::string name, std::array<T, N> TrainConfig::*m) {
    return {std::move(name), [m](const TrainConfig& c) { return list_text(c.*m); },
            [m](TrainConfig& c, std::string_view v) { c.*m = parse_list<T, N>(v); }};
}

const std::vector<Key>& keys() {
    static const std::vector<Key> k = [] {
        std::vector<Key> v;
        v.push_back(string_key("data_root", &TrainConfig::data_root));
        v.push_back(string_key("out_dir", &TrainConfig::out_dir));
        v.push_back(bool_key("synthetic", &TrainConfig::synthetic));
        v.push_back(number_key("seed", &TrainConfig::seed));
        v.push_back(number_key("train_scenes", &TrainConfig::train_scenes));
        v.push_back(number_key("val_scenes", &TrainConfig::val_scenes));
        v.push_back(number_key("min_objects", &TrainConfig::min_objects));
        v.push_back(number_key("max_objects", &TrainConfig::max_objects));
        v.push_back({"dims", [](const TrainConfig& c) { return fmt::format("{},{},{}", c.dims.h, c.dims.w, c.dims.d); },
                     [](TrainConfig& c, std::string_view s) {
                         const auto a = parse_list<int, 3>(s);
                         c.dims = {a[0], a[1], a[2]};
                     }});
        v.push_back(number_key("image_width", &TrainConfig::image_width));
        v.push_back(number_key("image_height", &TrainConfig::image_height));
        v.push_back(number_key("limit_train", &TrainConfig::limit_train));
        v.push_back(list_key("stage_epochs", &TrainConfig::stage_epochs));
        v.push_back(list_key("stage_steps", &TrainConfig::stage_steps));
        v.push_back(number_key("lr", &TrainConfig::lr));
        v.push_back(list_key("stage_lr", &TrainConfig::stage_lr));
        v.push_back(number_key("batch_size", &TrainConfig::batch_size));
        v.push_back(number_key("weight_decay", &TrainConfig::weight_decay));
        v.push_back(bool_key("resume", &TrainConfig::resume));
        v.push_back(bool_key("dual_decoder", &TrainConfig::dual_decoder));
        v.push_back(number_key("depth_bins", &TrainConfig::depth_bins));
        v.push_back(number_key("lift_channels", &TrainConfig::lift_channels));
        v.push_back(number_key("depth_weight", &TrainConfig::depth_weight));
        v.push_back(number_key("unet_depth", &TrainConfig::unet_depth));
        v.push_back(number_key("latent_channels", &TrainConfig::latent_channels));
        v.push_back(number_key("base_channels", &TrainConfig::base_channels));
        v.push_back(string_key("class_weight_mode", &TrainConfig::class_weight_mode));
        v.push_back(bool_key("detection", &TrainConfig::detection));
        v.push_back(number_key("topk", &TrainConfig::topk));
        v.push_back(number_key("pos_radius", &TrainConfig::pos_radius));
        v.push_back(number_key("neg_radius", &TrainConfig::neg_radius));
        v.push_back(list_key("reg_weights", &TrainConfig::reg_weights));
        v.push_back(number_key("heatmap_weight", &TrainConfig::heatmap_weight));
        v.push_back(bool_key("stage2_train_backbone", &TrainConfig::stage2_train_backbone));
        v.push_back(string_key("fusion_mode", &TrainConfig::fusion_mode));
        v.push_back(number_key("num_sample_points", &TrainConfig::num_sample_points));
        v.push_back(number_key("query_dim", &TrainConfig::query_dim));
        v.push_back(number_key("score_thresh", &TrainConfig::score_thresh));
        v.push_back(number_key("nms_iou", &TrainConfig::nms_iou));
        v.push_back(bool_key("stage3_freeze_backbone", &TrainConfig::stage3_freeze_backbone));
        return v;
    }();
    return k;
}

}  // namespace

double TrainConfig::stage_learning_rate(int stage) const {
    const double s = stage_lr.at(stage - 1);
    return s > 0.0 ? s : lr;
}

std::filesystem::path TrainConfig::data_path() const {
    return data_root.empty() ? std::filesystem::path(out_dir) / "data" : std::filesystem::path(data_root);
}

void TrainConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ArgumentError(what);
    };
    require(train_scenes > 0 && val_scenes >= 0, "scene counts must be positive");
    require(min_objects >= 0 && max_objects >= min_objects, "object count range is empty");
    require(dims.h > 0 && dims.w > 0 && dims.d > 0, "grid dims must be positive");
    require(image_width > 0 && image_height > 0, "image size must be positive");
    require(limit_train >= 0, "limit_train must be non-negative");
    for (int s = 0; s < 3; ++s) {
        require(stage_epochs[s] >= 0 && stage_steps[s] >= 0, "stage lengths must be non-negative");
        require(stage_lr[s] >= 0.0, "stage_lr must be non-negative");
    }
    require(lr > 0.0, "lr must be positive");
    require(batch_size > 0, "batch_size must be positive");
    require(weight_decay >= 0.0, "weight_decay must be non-negative");
    require(depth_bins > 1 && lift_channels > 0, "bad backbone sizes");
    require(topk > 0, "topk must be positive");
    require(pos_radius > 0.0 && neg_radius >= pos_radius, "assignment radii must satisfy 0 < pos <= neg");
    require(num_sample_points > 0 && query_dim > 0, "fusion sizes must be positive");
    require(score_thresh >= 0.0 && score_thresh <= 1.0 && nms_iou >= 0.0 && nms_iou <= 1.0,
            "NMS thresholds must lie in [0, 1]");
    completion::parse_class_weight_mode(class_weight_mode);
    fusion::parse_fusion_mode(fusion_mode);
    completion::UNetOptions::from_config(unet_depth, latent_channels, base_channels);
    const int f = 1 << unet_depth;
    require(dims.h % f == 0 && dims.w % f == 0 && dims.d % f == 0, "grid dims must be divisible by 2^unet_depth");
}

TrainConfig TrainConfig::desk() {
    TrainConfig c;
    c.lr = 2e-3;
    c.stage_lr = {2e-3, 2e-3, 1e-3};
    return c;
}

TrainConfig parse_config(std::string_view text, TrainConfig base) {
    std::set<std::string> seen;
    int line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no);
        const std::string key(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        const auto& k = keys();
        const auto it = std::find_if(k.begin(), k.end(), [&](const Key& x) { return x.name == key; });
        if (it == k.end()) throw ParseError("unknown config key '" + key + "'", line_no);
        if (!seen.insert(key).second) throw ParseError("duplicate config key '" + key + "'", line_no);
        try {
            it->set(base, value);
        } catch (const ArgumentError& e) {
            throw ParseError(key + ": " + e.what(), line_no);
        }
    }
    return base;
}

TrainConfig load_config(const std::filesystem::path& path) {
    return parse_config(dataio::read_text_file(path));
}

std::string config_to_text(const TrainConfig& config) {
    std::string out;
    for (const auto& k : keys()) out += k.name + " = " + k.get(config) + "\n";
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t config_hash(const TrainConfig& config) { return fnv1a64(config_to_text(config)); }

}  // namespace objocc::training
