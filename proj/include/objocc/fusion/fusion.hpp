// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "objocc/core/box.hpp"
#include "objocc/core/volume.hpp"
#include "objocc/nn/layers.hpp"

namespace objocc::fusion {

// kConcat scatters the queries themselves and mixes them with the latent by
// convolution, without attention sampling.
enum class FusionMode { kDeformable, kConcat };
FusionMode parse_fusion_mode(std::string_view name);
std::string_view fusion_mode_name(FusionMode mode);

struct FusionOptions {
    int latent_channels = 32;
    int query_dim = 16;
    int token_hidden = 32;
    int num_classes = 3;
    int num_points = 8;
    double score_thresh = 0.2;
    double nms_iou = 0.7;
    FusionMode mode = FusionMode::kDeformable;
};

// Geometry of the latent grid: voxel (i, j, k) has its center at continuous
// coordinate (i, j, k).
struct LatentGrid {
    std::array<int, 3> dims{};
    Eigen::Vector3d origin = Eigen::Vector3d::Zero();
    double voxel_size = 1.0;

    static LatentGrid of(const VoxelGrid& grid, const std::array<int, 3>& latent_dims);
    // Continuous latent coordinates of a volume-frame point, clamped to the grid.
    Eigen::Vector3d anchor(const Eigen::Vector3d& p) const;
};

struct BoxQueries {
    nn::Tensor q;  // [n, E]
    std::vector<Eigen::Vector3d> anchors;
    int size() const { return static_cast<int>(anchors.size()); }
};

struct AttentionParams {
    nn::Tensor offsets;  // [n, 3K] in latent voxels
    nn::Tensor weights;  // [n, K], rows on the simplex
};

// Normalized tokenizer input [n, 9 + C]: center scaled by the grid extent,
// log sizes, raw (sin, cos), class softmax, raw objectness.
std::vector<double> token_features(const BoxProposal& box, const VoxelGrid& grid);

// Deformable read: out[q] = sum_k weights[q, k] * V(anchor_q + offsets[q, k]),
// V trilinear with border clamping. latent [C, h, w, d]; returns [n, C].
nn::Tensor deformable_sample(const nn::Tensor& latent, std::span<const Eigen::Vector3d> anchors,
                             const nn::Tensor& offsets, const nn::Tensor& weights);

// Trilinear splat of values [n, C] at the anchors into a zero [C, dims] volume.
nn::Tensor trilinear_scatter(const nn::Tensor& values, std::span<const Eigen::Vector3d> anchors,
                             const std::array<int, 3>& dims);

class BoxFusion {
public:
    BoxFusion() = default;
    BoxFusion(const FusionOptions& options, nn::Rng& rng);

    const FusionOptions& options() const { return options_; }

    BoxQueries tokenize(std::span<const BoxProposal> boxes, const VoxelGrid& grid, const LatentGrid& latent) const;
    AttentionParams attention(const BoxQueries& queries) const;
    // Latent-shaped residual; exactly zero without queries.
    nn::Tensor update(const BoxQueries& queries, const nn::Tensor& latent) const;
    // filter_and_nms, tokenize and update in one call.
    nn::Tensor fuse(std::span<const BoxProposal> proposals, const nn::Tensor& latent, const VoxelGrid& grid) const;

    void collect(nn::ParamList& out, const std::string& prefix = "fusion") const;

private:
    FusionOptions options_;
    nn::Mlp2 tokenizer_;
    nn::Linear offsets_;
    nn::Linear weights_;
    nn::Linear project_;
    nn::Conv mix_;
};

}  // namespace objocc::fusion
