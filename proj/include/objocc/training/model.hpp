// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "objocc/backbone/edd.hpp"
#include "objocc/completion/unet.hpp"
#include "objocc/dataio/corpus.hpp"
#include "objocc/detection/head.hpp"
#include "objocc/fusion/fusion.hpp"
#include "objocc/fusion/nms.hpp"
#include "objocc/training/config.hpp"

namespace objocc::training {

// Parameter-name prefixes of the four modules.
inline constexpr std::string_view kBackbone = "backbone";
inline constexpr std::string_view kUNet = "unet";
inline constexpr std::string_view kDetection = "detection";
inline constexpr std::string_view kFusion = "fusion";

backbone::BackboneOptions backbone_options(const TrainConfig& config);
completion::UNetOptions unet_options(const TrainConfig& config);
detection::DetectionOptions detection_options(const TrainConfig& config);
fusion::FusionOptions fusion_options(const TrainConfig& config);

// Argmax over the class axis of logits [K, H, W, D].
SemanticVolume logits_to_volume(const nn::Tensor& logits, const VoxelGrid& grid);

struct Prediction {
    SemanticVolume volume;
    // Proposals after the objectness threshold and NMS; empty without fusion.
    std::vector<BoxProposal> boxes;
};

// The full network. Each module draws its initial weights from its own
// stream derived from the seed, so toggling one module leaves the others'
// initialization unchanged.
class OccupancyModel {
public:
    explicit OccupancyModel(const TrainConfig& config);

    backbone::Backbone backbone;
    completion::CompletionUNet unet;
    detection::DetectionHead detection;
    fusion::BoxFusion fusion;

    nn::ParamList params() const;
    nn::ParamList params(std::string_view module) const;

    // Proposals of the (frozen) detection head, without gradient.
    std::vector<BoxProposal> detect(const nn::Tensor& f3d, const VoxelGrid& grid) const;
    // Inference without gradient; with_fusion feeds NMS-filtered detections
    // into the U-Net bottleneck.
    Prediction predict(const dataio::Sample& sample, bool with_fusion) const;

private:
    int topk_ = 10;
};

}  // namespace objocc::training
