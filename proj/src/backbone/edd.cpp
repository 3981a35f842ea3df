// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/backbone/edd.hpp"

#include <cmath>
#include <string>

#include "objocc/core/errors.hpp"
#include "objocc/nn/ops.hpp"

namespace objocc::backbone {

using nn::Conv;
using nn::ConvSpec;
using nn::Tensor;

ResidualBlock::ResidualBlock(int channels, nn::Rng& rng)
    : a_(channels, channels, ConvSpec::planar(3), true, rng), b_(channels, channels, ConvSpec::planar(3), true, rng, 0.5) {}

Tensor ResidualBlock::operator()(const Tensor& x) const { return nn::relu(nn::add(x, b_(nn::relu(a_(x))))); }

void ResidualBlock::collect(nn::ParamList& out, const std::string& prefix) const {
    a_.collect(out, prefix + ".a");
    b_.collect(out, prefix + ".b");
}

Encoder::Encoder(const std::vector<int>& channels, nn::Rng& rng) {
    int in = 3;
    for (int c : channels) {
        down_.emplace_back(in, c, ConvSpec::planar(3, 2), true, rng);
        blocks_.emplace_back(c, rng);
        in = c;
    }
}

std::vector<Tensor> Encoder::operator()(const Tensor& image) const {
    std::vector<Tensor> feats;
    Tensor x = image;
    for (std::size_t s = 0; s < down_.size(); ++s) {
        x = blocks_[s](nn::relu(down_[s](x)));
        feats.push_back(x);
    }
    return feats;
}

void Encoder::collect(nn::ParamList& out, const std::string& prefix) const {
    for (std::size_t s = 0; s < down_.size(); ++s) {
        down_[s].collect(out, prefix + ".down" + std::to_string(s));
        blocks_[s].collect(out, prefix + ".block" + std::to_string(s));
    }
}

Decoder::Decoder(const std::vector<int>& channels, nn::Rng& rng) {
    // fuse_[0] produces the stride-8 map, fuse_[2] the stride-2 map.
    int above = channels.back();
    for (int s = static_cast<int>(channels.size()) - 2; s >= 0; --s) {
        fuse_.emplace_back(above + channels[s], channels[s], ConvSpec::planar(3), true, rng);
        above = channels[s];
    }
}

std::vector<Tensor> Decoder::operator()(const std::vector<Tensor>& features) const {
    std::vector<Tensor> out(features.size() - 1);
    Tensor x = features.back();
    for (std::size_t f = 0; f < fuse_.size(); ++f) {
        const std::size_t level = features.size() - 2 - f;
        const Tensor& skip = features[level];
        x = nn::upsample_nearest(x, {skip.dim(1), skip.dim(2), 1});
        x = nn::relu(fuse_[f](nn::concat({x, skip})));
        out[level] = x;
    }
    return out;
}

void Decoder::collect(nn::ParamList& out, const std::string& prefix) const {
    for (std::size_t f = 0; f < fuse_.size(); ++f) fuse_[f].collect(out, prefix + ".fuse" + std::to_string(f));
}

Backbone::Backbone(const BackboneOptions& o, nn::Rng& rng) : options_(o) {
    if (o.encoder_channels.size() < 2) throw ArgumentError("encoder needs at least two stages");
    if (o.lift_levels < 1 || o.lift_levels > static_cast<int>(o.encoder_channels.size()) - 1) {
        throw ArgumentError("lift_levels must be between 1 and the number of decoder levels");
    }
    const int scale = 1 << o.encoder_channels.size();
    if (o.image_width % scale || o.image_height % scale) {
        throw ArgumentError("image size must be divisible by " + std::to_string(scale));
    }
    encoder_ = Encoder(o.encoder_channels, rng);
    content_decoder_ = Decoder(o.encoder_channels, rng);
    if (o.dual_decoder) depth_decoder_ = Decoder(o.encoder_channels, rng);
    for (int l = 0; l < o.lift_levels; ++l) {
        content_heads_.emplace_back(o.encoder_channels[l], o.content_channels, ConvSpec::planar(1), true, rng);
        if (o.dual_decoder) {
            depth_heads_.emplace_back(o.encoder_channels[l], o.depth_bins, ConvSpec::planar(1), true, rng, 0.5);
        }
        projections_.emplace_back(o.content_channels, o.lift_channels, ConvSpec::planar(1), false, rng);
    }
}

std::vector<Tensor> Backbone::encode(const Tensor& image) const {
    if (image.rank() != 4 || image.dim(0) != 3 || image.dim(1) != options_.image_height ||
        image.dim(2) != options_.image_width || image.dim(3) != 1) {
        throw ShapeError("image does not match the configured " + std::to_string(options_.image_width) + "x" +
                         std::to_string(options_.image_height) + " input");
    }
    return encoder_(image);
}

std::vector<std::vector<Tensor>> Backbone::encode_batch(const std::vector<Tensor>& images) const {
    std::vector<std::vector<Tensor>> out;
    out.reserve(images.size());
    for (const auto& im : images) out.push_back(encode(im));
    return out;
}

EddOutput Backbone::decode(const std::vector<Tensor>& features) const {
    EddOutput out;
    const auto content_maps = content_decoder_(features);
    std::vector<Tensor> depth_maps;
    if (options_.dual_decoder) depth_maps = depth_decoder_(features);
    for (int l = 0; l < options_.lift_levels; ++l) {
        out.content.push_back(content_heads_[l](content_maps[l]));
        const Tensor& m = content_maps[l];
        if (options_.dual_decoder) {
            Tensor logits = depth_heads_[l](depth_maps[l]);
            out.depth_probs.push_back(nn::softmax_dim0(logits));
            out.depth_logits.push_back(std::move(logits));
        } else {
            out.depth_probs.push_back(Tensor::full({options_.depth_bins, m.dim(1), m.dim(2), 1}, 1.0 / options_.depth_bins));
        }
    }
    return out;
}

const LiftTable& Backbone::table(int level, const CameraModel& cam, const VoxelGrid& grid) const {
    for (const auto& e : cache_) {
        if (e.level == level && e.grid == grid && e.cam == cam) return e.table;
    }
    const int stride = 2 << level;
    if (cam.num_bins() != options_.depth_bins) throw ShapeError("camera depth bins differ from the backbone's");
    cache_.push_back({cam, grid, level,
                      LiftTable::build(cam, grid, options_.image_height / stride, options_.image_width / stride, stride)});
    return cache_.back().table;
}

Tensor Backbone::lift_volume(const EddOutput& out, const CameraModel& cam, const VoxelGrid& grid) const {
    Tensor total;
    for (int l = 0; l < options_.lift_levels; ++l) {
        Tensor v = lift(projections_[l](out.content[l]), out.depth_probs[l], table(l, cam, grid));
        total = total.defined() ? nn::add(total, v) : v;
    }
    return total;
}

std::vector<int> Backbone::depth_targets(const dataio::DepthMap& depth, const CameraModel& cam, int level_height,
                                         int level_width, int stride) {
    std::vector<int> t(static_cast<std::size_t>(level_height) * level_width, -1);
    const int off = (stride - 1) / 2;
    for (int i = 0; i < level_height; ++i) {
        for (int j = 0; j < level_width; ++j) {
            const int r = std::min(depth.height - 1, stride * i + off);
            const int c = std::min(depth.width - 1, stride * j + off);
            t[static_cast<std::size_t>(i) * level_width + j] = cam.bin_of(depth.at(r, c));
        }
    }
    return t;
}

Tensor Backbone::depth_loss(const EddOutput& out, const dataio::DepthMap& depth, const CameraModel& cam) const {
    if (!options_.dual_decoder) return Tensor::scalar(0.0);
    if (depth.width != options_.image_width || depth.height != options_.image_height) {
        throw ShapeError("depth map does not match the image size");
    }
    Tensor total;
    for (int l = 0; l < options_.lift_levels; ++l) {
        const Tensor& logits = out.depth_logits[l];
        const auto targets = depth_targets(depth, cam, logits.dim(1), logits.dim(2), 2 << l);
        Tensor ce = nn::cross_entropy_dim0(logits, targets);
        total = total.defined() ? nn::add(total, ce) : ce;
    }
    return nn::scale(total, 1.0 / options_.lift_levels);
}

void Backbone::collect(nn::ParamList& out, const std::string& prefix) const {
    encoder_.collect(out, prefix + ".encoder");
    content_decoder_.collect(out, prefix + ".content_decoder");
    if (options_.dual_decoder) depth_decoder_.collect(out, prefix + ".depth_decoder");
    for (int l = 0; l < options_.lift_levels; ++l) {
        content_heads_[l].collect(out, prefix + ".content_head" + std::to_string(l));
        if (options_.dual_decoder) depth_heads_[l].collect(out, prefix + ".depth_head" + std::to_string(l));
        projections_[l].collect(out, prefix + ".projection" + std::to_string(l));
    }
}

}  // namespace objocc::backbone
