// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/training/model.hpp"

#include <algorithm>

#include "objocc/core/errors.hpp"
#include "objocc/dataio/image.hpp"

namespace objocc::training {

backbone::BackboneOptions backbone_options(const TrainConfig& c) {
    backbone::BackboneOptions o;
    o.image_width = c.image_width;
    o.image_height = c.image_height;
    o.depth_bins = c.depth_bins;
    o.lift_channels = c.lift_channels;
    o.dual_decoder = c.dual_decoder;
    return o;
}

completion::UNetOptions unet_options(const TrainConfig& c) {
    auto o = completion::UNetOptions::from_config(c.unet_depth, c.latent_channels, c.base_channels);
    o.in_channels = c.lift_channels;
    return o;
}

detection::DetectionOptions detection_options(const TrainConfig& c) {
    detection::DetectionOptions o;
    o.in_channels = c.lift_channels;
    o.topk = c.topk;
    o.pos_radius = c.pos_radius;
    o.neg_radius = c.neg_radius;
    o.reg_weights = c.reg_weights;
    return o;
}

fusion::FusionOptions fusion_options(const TrainConfig& c) {
    fusion::FusionOptions o;
    o.latent_channels = c.latent_channels;
    o.query_dim = c.query_dim;
    o.num_points = c.num_sample_points;
    o.score_thresh = c.score_thresh;
    o.nms_iou = c.nms_iou;
    o.mode = fusion::parse_fusion_mode(c.fusion_mode);
    return o;
}

SemanticVolume logits_to_volume(const nn::Tensor& logits, const VoxelGrid& grid) {
    const int k = logits.dim(0);
    const std::size_t n = grid.dims.count();
    if (logits.numel() != static_cast<std::size_t>(k) * n) throw ShapeError("logits do not match the grid");
    const auto v = logits.data();
    std::vector<Label> labels(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double best = v[i];
        for (int c = 1; c < k; ++c) {
            if (v[c * n + i] > best) {
                best = v[c * n + i];
                labels[i] = static_cast<Label>(c);
            }
        }
    }
    return SemanticVolume(grid, std::move(labels));
}

OccupancyModel::OccupancyModel(const TrainConfig& config) : topk_(config.topk) {
    config.validate();
    nn::Rng r0(config.seed * 4 + 1), r1(config.seed * 4 + 2), r2(config.seed * 4 + 3), r3(config.seed * 4 + 4);
    backbone = backbone::Backbone(backbone_options(config), r0);
    unet = completion::CompletionUNet(unet_options(config), r1);
    detection = detection::DetectionHead(detection_options(config), r2);
    fusion = fusion::BoxFusion(fusion_options(config), r3);
}

nn::ParamList OccupancyModel::params() const {
    nn::ParamList out;
    backbone.collect(out, std::string(kBackbone));
    unet.collect(out, std::string(kUNet));
    detection.collect(out, std::string(kDetection));
    fusion.collect(out, std::string(kFusion));
    return out;
}

nn::ParamList OccupancyModel::params(std::string_view module) const {
    nn::ParamList out;
    if (module == kBackbone) {
        backbone.collect(out, std::string(kBackbone));
    } else if (module == kUNet) {
        unet.collect(out, std::string(kUNet));
    } else if (module == kDetection) {
        detection.collect(out, std::string(kDetection));
    } else if (module == kFusion) {
        fusion.collect(out, std::string(kFusion));
    } else {
        throw ArgumentError("unknown module '" + std::string(module) + "'");
    }
    return out;
}

std::vector<BoxProposal> OccupancyModel::detect(const nn::Tensor& f3d, const VoxelGrid& grid) const {
    nn::NoGradGuard guard;
    const int cells = grid.dims.h * grid.dims.w;
    return detection.propose(detection::bev_pool(f3d), grid, std::min(topk_, cells)).boxes;
}

Prediction OccupancyModel::predict(const dataio::Sample& sample, bool with_fusion) const {
    nn::NoGradGuard guard;
    const VoxelGrid& grid = sample.voxel.volume_gt.grid();
    const nn::Tensor f = backbone.forward(dataio::image_to_tensor(sample.voxel.rgb), sample.voxel.calib, grid);
    const auto enc = unet.encode(f);
    Prediction p;
    std::optional<nn::Tensor> update;
    if (with_fusion) {
        p.boxes = fusion::filter_and_nms(detect(f, grid), fusion.options().score_thresh, fusion.options().nms_iou);
        update = fusion.fuse(p.boxes, enc.latent, grid);
    }
    p.volume = logits_to_volume(unet.decode(enc, update), grid);
    return p;
}

}  // namespace objocc::training
