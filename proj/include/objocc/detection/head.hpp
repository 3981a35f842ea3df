// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "objocc/core/box.hpp"
#include "objocc/core/volume.hpp"
#include "objocc/nn/layers.hpp"

namespace objocc::detection {

struct DetectionOptions {
    int in_channels = 8;
    int hidden_channels = 16;
    int mlp_hidden = 32;
    int num_classes = kNumDetectionClasses;
    int topk = 10;
    double pos_radius = 1.0;
    double neg_radius = 2.0;
    // (center, size, orientation)
    std::array<double, 3> reg_weights{1.0, 1.0, 0.5};
    // Initial regression output: z center, then (l, w, h).
    double z_prior = -0.95;
    std::array<double, 3> size_prior{3.9, 1.6, 1.56};
};

// [C, H, W, D] -> [C, H, W, 1], mean over the vertical axis.
nn::Tensor bev_pool(const nn::Tensor& f3d);

// Indices of the k largest values; ties go to the lower index. Throws
// ArgumentError when k <= 0 or k > values.size().
std::vector<int> topk_cells(std::span<const double> values, int k);

// BEV cell center (x, y) of flat cell index i * W + j.
Eigen::Vector2d cell_center(const VoxelGrid& grid, int cell);
// Flat BEV index of the cell containing (x, y), or -1 outside.
int cell_of(const VoxelGrid& grid, const Eigen::Vector2d& xy);

struct ProposalSet {
    nn::Tensor heatmap_logits;  // [1, H, W, 1]
    std::vector<int> cells;
    // [k, 9 + C] in BoxProposal::to_vector layout, objectness as a probability.
    nn::Tensor params;
    nn::Tensor objectness_logits;  // [k, 1]
    std::vector<BoxProposal> boxes;
    // Candidate positions used for assignment: the cell centers, z = 0.
    std::vector<Eigen::Vector3d> positions;
};

class DetectionHead {
public:
    DetectionHead() = default;
    DetectionHead(const DetectionOptions& options, nn::Rng& rng);

    const DetectionOptions& options() const { return options_; }

    // Shared 2D features [hidden, H, W, 1] and heatmap logits [1, H, W, 1].
    std::pair<nn::Tensor, nn::Tensor> features(const nn::Tensor& bev) const;
    // Top-k cells of the heatmap; throws ArgumentError for k outside [1, H*W].
    ProposalSet propose(const nn::Tensor& bev, const VoxelGrid& grid, int k) const;
    // Proposals decoded at the given cells.
    ProposalSet propose_at(const nn::Tensor& bev, const VoxelGrid& grid, std::vector<int> cells) const;

    void collect(nn::ParamList& out, const std::string& prefix = "detection") const;

private:
    ProposalSet decode(const nn::Tensor& hidden, nn::Tensor heatmap, const VoxelGrid& grid, std::vector<int> cells) const;

    DetectionOptions options_;
    nn::Conv conv1_;
    nn::Conv conv2_;
    nn::Conv heatmap_;
    nn::Mlp2 reg_;
    nn::Mlp2 score_;
};

enum class AssignmentKind { kPositive, kNegative, kIgnored };

struct Assignment {
    AssignmentKind kind = AssignmentKind::kIgnored;
    int gt_index = -1;
};

// BEV distance; positive below pos_radius (nearest GT), negative beyond
// neg_radius from every GT, ignored otherwise.
std::vector<Assignment> assign_targets(std::span<const Eigen::Vector3d> candidates, std::span<const ObjectBox> gt,
                                       double pos_radius = 1.0, double neg_radius = 2.0);

struct DetectionLoss {
    nn::Tensor total;  // obj + reg + cls
    nn::Tensor obj;
    nn::Tensor reg;
    nn::Tensor cls;
    int positives = 0;
    int negatives = 0;
    // Set when there is neither a positive nor a negative candidate.
    bool no_candidates = false;
};

DetectionLoss detection_loss(const ProposalSet& proposals, std::span<const Assignment> assignment,
                             std::span<const ObjectBox> gt, const std::array<double, 3>& reg_weights = {1.0, 1.0, 0.5});

// Gaussian bumps around the cell holding each GT center, sigma in cells
// max(1, min(l, w) / (2 * voxel_size)); max-composited. Size H * W.
std::vector<double> heatmap_target(std::span<const ObjectBox> gt, const VoxelGrid& grid);

// Training candidates: the top-k cells followed by every GT center cell not
// already present.
std::vector<int> training_cells(const nn::Tensor& heatmap_logits, const VoxelGrid& grid, std::span<const ObjectBox> gt,
                                int k);

}  // namespace objocc::detection
