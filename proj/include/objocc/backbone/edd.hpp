// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <tuple>
#include <vector>

#include "objocc/backbone/lift.hpp"
#include "objocc/core/camera.hpp"
#include "objocc/core/volume.hpp"
#include "objocc/dataio/image.hpp"
#include "objocc/nn/layers.hpp"

namespace objocc::backbone {

struct BackboneOptions {
    int image_width = 160;
    int image_height = 48;
    // Encoder stages at strides 2, 4, 8, 16.
    std::vector<int> encoder_channels{16, 24, 32, 48};
    int content_channels = 16;
    // C', channels of the lifted volume.
    int lift_channels = 8;
    // Pyramid levels used for lifting, finest first (strides 2, 4, 8).
    int lift_levels = 3;
    int depth_bins = 64;
    double near = 2.0;
    double far = 50.0;
    // Off: a single decoder produces content and depth is left uniform.
    bool dual_decoder = true;
};

// Per-level decoder outputs, finest level first. Level l has stride 2^(l+1).
struct EddOutput {
    std::vector<nn::Tensor> content;       // [Cc, H_l, W_l, 1]
    std::vector<nn::Tensor> depth_logits;  // [B, H_l, W_l, 1]; empty when dual_decoder is off
    std::vector<nn::Tensor> depth_probs;   // [B, H_l, W_l, 1]
};

class ResidualBlock {
public:
    ResidualBlock() = default;
    ResidualBlock(int channels, nn::Rng& rng);
    nn::Tensor operator()(const nn::Tensor& x) const;
    void collect(nn::ParamList& out, const std::string& prefix) const;

private:
    nn::Conv a_;
    nn::Conv b_;
};

class Encoder {
public:
    Encoder() = default;
    Encoder(const std::vector<int>& channels, nn::Rng& rng);
    // image [3, H, W, 1] -> feature maps at strides 2, 4, 8, 16.
    std::vector<nn::Tensor> operator()(const nn::Tensor& image) const;
    void collect(nn::ParamList& out, const std::string& prefix) const;

private:
    std::vector<nn::Conv> down_;
    std::vector<ResidualBlock> blocks_;
};

// Top-down path with concatenated skips; returns maps at strides 2, 4, 8.
class Decoder {
public:
    Decoder() = default;
    Decoder(const std::vector<int>& channels, nn::Rng& rng);
    std::vector<nn::Tensor> operator()(const std::vector<nn::Tensor>& features) const;
    void collect(nn::ParamList& out, const std::string& prefix) const;

private:
    std::vector<nn::Conv> fuse_;
};

class Backbone {
public:
    Backbone() = default;
    Backbone(const BackboneOptions& options, nn::Rng& rng);

    const BackboneOptions& options() const { return options_; }

    std::vector<nn::Tensor> encode(const nn::Tensor& image) const;
    std::vector<std::vector<nn::Tensor>> encode_batch(const std::vector<nn::Tensor>& images) const;
    EddOutput decode(const std::vector<nn::Tensor>& features) const;
    EddOutput run(const nn::Tensor& image) const { return decode(encode(image)); }

    // Projects each level's content to C' and lifts it; levels are summed.
    nn::Tensor lift_volume(const EddOutput& out, const CameraModel& cam, const VoxelGrid& grid) const;
    nn::Tensor forward(const nn::Tensor& image, const CameraModel& cam, const VoxelGrid& grid) const {
        return lift_volume(run(image), cam, grid);
    }

    // Mean per-level cross entropy against binned depth; pixels without a
    // depth in [near, far] are ignored. Zero when dual_decoder is off.
    nn::Tensor depth_loss(const EddOutput& out, const dataio::DepthMap& depth, const CameraModel& cam) const;
    // Binned target for one level, -1 where undefined.
    static std::vector<int> depth_targets(const dataio::DepthMap& depth, const CameraModel& cam, int level_height,
                                          int level_width, int stride);

    const LiftTable& table(int level, const CameraModel& cam, const VoxelGrid& grid) const;
    void collect(nn::ParamList& out, const std::string& prefix = "backbone") const;

private:
    BackboneOptions options_;
    Encoder encoder_;
    Decoder content_decoder_;
    Decoder depth_decoder_;
    std::vector<nn::Conv> content_heads_;
    std::vector<nn::Conv> depth_heads_;
    std::vector<nn::Conv> projections_;

    struct CacheEntry {
        CameraModel cam;
        VoxelGrid grid;
        int level;
        LiftTable table;
    };
    mutable std::deque<CacheEntry> cache_;
};

}  // namespace objocc::backbone
