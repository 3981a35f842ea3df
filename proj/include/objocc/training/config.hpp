// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "objocc/core/volume.hpp"

namespace objocc::training {

// Every knob of a run. Text form is one `key = value` per line; `#` starts a
// comment.
struct TrainConfig {
    // Data. An empty data_root means `<out_dir>/data`, generated on demand
    // when synthetic is set.
    std::string data_root;
    std::string out_dir = "runs/default";
    bool synthetic = true;
    std::uint64_t seed = 0;
    int train_scenes = 64;
    int val_scenes = 16;
    int min_objects = 2;
    int max_objects = 6;
    GridDims dims{64, 64, 8};
    int image_width = 160;
    int image_height = 48;
    // Train on the first n training samples only; 0 keeps all.
    int limit_train = 0;

    // Schedule.
    std::array<int, 3> stage_epochs{5, 10, 10};
    // Overrides the epoch count with a fixed number of optimizer steps when
    // positive.
    std::array<int, 3> stage_steps{0, 0, 0};
    double lr = 1e-4;
    // Per-stage learning rate; 0 falls back to lr.
    std::array<double, 3> stage_lr{0.0, 0.0, 0.0};
    int batch_size = 4;
    double weight_decay = 0.0;
    bool resume = true;

    // Backbone.
    bool dual_decoder = true;
    int depth_bins = 64;
    int lift_channels = 8;
    double depth_weight = 1.0;

    // Completion U-Net.
    int unet_depth = 2;
    int latent_channels = 32;
    int base_channels = 16;
    std::string class_weight_mode = "log_inverse";

    // Detection branch; off skips stage 2 and fusion.
    bool detection = true;
    int topk = 10;
    double pos_radius = 1.0;
    double neg_radius = 2.0;
    std::array<double, 3> reg_weights{1.0, 1.0, 0.5};
    double heatmap_weight = 1.0;
    bool stage2_train_backbone = false;

    // Fusion.
    std::string fusion_mode = "deformable";
    int num_sample_points = 8;
    int query_dim = 16;
    double score_thresh = 0.2;
    double nms_iou = 0.7;
    bool stage3_freeze_backbone = false;

    double stage_learning_rate(int stage) const;
    std::filesystem::path data_path() const;
    // Throws ArgumentError on inconsistent values.
    void validate() const;

    // The desk-scale preset used by the synthetic experiments.
    static TrainConfig desk();
};

// Throws ParseError (with the 1-based line) on malformed lines, unknown keys
// or bad values.
TrainConfig parse_config(std::string_view text, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path);
// Canonical text: every key, fixed order, shortest round-trip numbers.
std::string config_to_text(const TrainConfig& config);
// FNV-1a (64-bit) of the canonical text.
std::uint64_t config_hash(const TrainConfig& config);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace objocc::training
