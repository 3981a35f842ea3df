// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/detection/head.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "objocc/core/errors.hpp"
#include "objocc/nn/ops.hpp"

namespace objocc::detection {

using nn::Conv;
using nn::ConvSpec;
using nn::Tensor;

Tensor bev_pool(const Tensor& f3d) {
    if (f3d.rank() != 4) throw ShapeError("bev_pool: expected [C, H, W, D]");
    return nn::mean_last(f3d);
}

std::vector<int> topk_cells(std::span<const double> values, int k) {
    if (k <= 0 || static_cast<std::size_t>(k) > values.size()) {
        throw ArgumentError("top-k must be between 1 and the number of cells");
    }
    std::vector<int> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
        return values[a] > values[b] || (values[a] == values[b] && a < b);
    });
    idx.resize(k);
    return idx;
}

Eigen::Vector2d cell_center(const VoxelGrid& grid, int cell) {
    const int i = cell / grid.dims.w;
    const int j = cell % grid.dims.w;
    return {grid.origin.x() + (i + 0.5) * grid.voxel_size, grid.origin.y() + (j + 0.5) * grid.voxel_size};
}

int cell_of(const VoxelGrid& grid, const Eigen::Vector2d& xy) {
    const double fi = std::floor((xy.x() - grid.origin.x()) / grid.voxel_size);
    const double fj = std::floor((xy.y() - grid.origin.y()) / grid.voxel_size);
    if (fi < 0 || fj < 0 || fi >= grid.dims.h || fj >= grid.dims.w) return -1;
    return static_cast<int>(fi) * grid.dims.w + static_cast<int>(fj);
}

DetectionHead::DetectionHead(const DetectionOptions& o, nn::Rng& rng) : options_(o) {
    if (o.num_classes < 1) throw ArgumentError("detection needs at least one class");
    conv1_ = Conv(o.in_channels, o.hidden_channels, ConvSpec::planar(3), true, rng);
    conv2_ = Conv(o.hidden_channels, o.hidden_channels, ConvSpec::planar(3), true, rng);
    heatmap_ = Conv(o.hidden_channels, 1, ConvSpec::planar(1), true, rng, 0.1);
    // Background prior of 0.9 on the heatmap.
    heatmap_.bias().mutable_data()[0] = -std::log((1.0 - 0.1) / 0.1);
    reg_ = nn::Mlp2(o.hidden_channels, o.mlp_hidden, 8, rng);
    score_ = nn::Mlp2(o.hidden_channels, o.mlp_hidden, 1 + o.num_classes, rng);
    auto& out = reg_.output_layer();
    for (double& w : out.weight().mutable_data()) w *= 0.1;
    const double prior[8] = {0.0, 0.0, o.z_prior, o.size_prior[0], o.size_prior[1], o.size_prior[2], 0.0, 1.0};
    std::copy(prior, prior + 8, out.bias().mutable_data().begin());
}

std::pair<Tensor, Tensor> DetectionHead::features(const Tensor& bev) const {
    if (bev.rank() != 4 || bev.dim(0) != options_.in_channels || bev.dim(3) != 1) {
        throw ShapeError("detection input must be [C', H, W, 1]");
    }
    Tensor hidden = nn::relu(conv2_(nn::relu(conv1_(bev))));
    Tensor heat = heatmap_(hidden);
    return {hidden, heat};
}

ProposalSet DetectionHead::propose(const Tensor& bev, const VoxelGrid& grid, int k) const {
    auto [hidden, heat] = features(bev);
    auto cells = topk_cells(heat.data(), k);
    return decode(hidden, heat, grid, std::move(cells));
}

ProposalSet DetectionHead::propose_at(const Tensor& bev, const VoxelGrid& grid, std::vector<int> cells) const {
    auto [hidden, heat] = features(bev);
    return decode(hidden, heat, grid, std::move(cells));
}

ProposalSet DetectionHead::decode(const Tensor& hidden, Tensor heat, const VoxelGrid& grid, std::vector<int> cells) const {
    if (hidden.dim(1) != grid.dims.h || hidden.dim(2) != grid.dims.w) throw ShapeError("BEV map does not match the grid");
    const int k = static_cast<int>(cells.size());
    const int C = options_.num_classes;
    ProposalSet out;
    out.heatmap_logits = std::move(heat);
    out.cells = std::move(cells);
    std::vector<double> anchor(static_cast<std::size_t>(k) * 3, 0.0);
    for (int r = 0; r < k; ++r) {
        const auto c = cell_center(grid, out.cells[r]);
        anchor[3 * r] = c.x();
        anchor[3 * r + 1] = c.y();
        out.positions.emplace_back(c.x(), c.y(), 0.0);
    }
    if (k == 0) {
        out.params = Tensor::zeros({0, 9 + C});
        out.objectness_logits = Tensor::zeros({0, 1});
        return out;
    }
    const Tensor feats = nn::gather_cells(hidden, out.cells);
    const Tensor reg = reg_(feats);
    const Tensor score = score_(feats);
    const Tensor center = nn::add(nn::slice_columns(reg, 0, 3), Tensor::from({k, 3}, std::move(anchor)));
    out.objectness_logits = nn::slice_columns(score, 0, 1);
    out.params = nn::concat_columns(
        {center, nn::slice_columns(reg, 3, 8), nn::slice_columns(score, 1, 1 + C), nn::sigmoid(out.objectness_logits)});
    const int d = 9 + C;
    for (int r = 0; r < k; ++r) {
        out.boxes.push_back(BoxProposal::from_vector(out.params.data().subspan(static_cast<std::size_t>(r) * d, d), C));
    }
    return out;
}

void DetectionHead::collect(nn::ParamList& out, const std::string& prefix) const {
    conv1_.collect(out, prefix + ".conv1");
    conv2_.collect(out, prefix + ".conv2");
    heatmap_.collect(out, prefix + ".heatmap");
    reg_.collect(out, prefix + ".reg");
    score_.collect(out, prefix + ".score");
}

std::vector<Assignment> assign_targets(std::span<const Eigen::Vector3d> candidates, std::span<const ObjectBox> gt,
                                       double pos_radius, double neg_radius) {
    std::vector<Assignment> out(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_index = -1;
        for (std::size_t g = 0; g < gt.size(); ++g) {
            const double d = (candidates[i].head<2>() - gt[g].center.head<2>()).norm();
            if (d < best) {
                best = d;
                best_index = static_cast<int>(g);
            }
        }
        if (best < pos_radius) {
            out[i] = {AssignmentKind::kPositive, best_index};
        } else if (best > neg_radius) {
            out[i] = {AssignmentKind::kNegative, -1};
        }
    }
    return out;
}

DetectionLoss detection_loss(const ProposalSet& proposals, std::span<const Assignment> assignment,
                             std::span<const ObjectBox> gt, const std::array<double, 3>& reg_weights) {
    if (assignment.size() != proposals.cells.size()) throw ShapeError("assignment does not match the proposals");
    const int C = proposals.params.dim(1) - 9;
    std::vector<int> scored, positives;
    std::vector<double> obj_targets;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i].kind == AssignmentKind::kIgnored) continue;
        scored.push_back(static_cast<int>(i));
        const bool pos = assignment[i].kind == AssignmentKind::kPositive;
        obj_targets.push_back(pos ? 1.0 : 0.0);
        if (pos) {
            if (assignment[i].gt_index < 0 || static_cast<std::size_t>(assignment[i].gt_index) >= gt.size()) {
                throw ArgumentError("positive assignment refers to a missing ground-truth box");
            }
            positives.push_back(static_cast<int>(i));
        }
    }
    DetectionLoss loss;
    loss.positives = static_cast<int>(positives.size());
    loss.negatives = static_cast<int>(scored.size() - positives.size());
    if (scored.empty()) {
        loss.no_candidates = true;
        loss.obj = loss.reg = loss.cls = Tensor::scalar(0.0);
        loss.total = Tensor::scalar(0.0);
        return loss;
    }
    loss.obj = nn::bce_with_logits(nn::select_rows(proposals.objectness_logits, scored), obj_targets);
    if (positives.empty()) {
        loss.reg = loss.cls = Tensor::scalar(0.0);
    } else {
        const Tensor pos = nn::select_rows(proposals.params, positives);
        std::vector<double> targets;
        std::vector<int> classes;
        for (int i : positives) {
            const ObjectBox& b = gt[assignment[i].gt_index];
            const auto [s, c] = encode_orientation(b.yaw);
            targets.insert(targets.end(), {b.center.x(), b.center.y(), b.center.z(), b.size.x(), b.size.y(), b.size.z(), s, c});
            classes.push_back(static_cast<int>(b.cls));
        }
        const double w[8] = {reg_weights[0], reg_weights[0], reg_weights[0], reg_weights[1],
                             reg_weights[1], reg_weights[1], reg_weights[2], reg_weights[2]};
        loss.reg = nn::smooth_l1(nn::slice_columns(pos, 0, 8), targets, w);
        loss.cls = nn::cross_entropy_rows(nn::slice_columns(pos, 8, 8 + C), classes);
    }
    loss.total = nn::add(nn::add(loss.obj, loss.reg), loss.cls);
    return loss;
}

std::vector<double> heatmap_target(std::span<const ObjectBox> gt, const VoxelGrid& grid) {
    const int H = grid.dims.h;
    const int W = grid.dims.w;
    std::vector<double> t(static_cast<std::size_t>(H) * W, 0.0);
    for (const auto& b : gt) {
        const int cell = cell_of(grid, b.center.head<2>());
        if (cell < 0) continue;
        const int ci = cell / W;
        const int cj = cell % W;
        const double sigma = std::max(1.0, std::min(b.size.x(), b.size.y()) / (2.0 * grid.voxel_size));
        const int r = static_cast<int>(std::ceil(3.0 * sigma));
        for (int i = std::max(0, ci - r); i <= std::min(H - 1, ci + r); ++i) {
            for (int j = std::max(0, cj - r); j <= std::min(W - 1, cj + r); ++j) {
                const double d2 = (i - ci) * (i - ci) + (j - cj) * (j - cj);
                double& v = t[static_cast<std::size_t>(i) * W + j];
                v = std::max(v, std::exp(-d2 / (2.0 * sigma * sigma)));
            }
        }
    }
    return t;
}

std::vector<int> training_cells(const Tensor& heatmap_logits, const VoxelGrid& grid, std::span<const ObjectBox> gt,
                                int k) {
    std::vector<int> cells = topk_cells(heatmap_logits.data(), k);
    for (const auto& b : gt) {
        const int c = cell_of(grid, b.center.head<2>());
        if (c >= 0 && std::find(cells.begin(), cells.end(), c) == cells.end()) cells.push_back(c);
    }
    return cells;
}

}  // namespace objocc::detection
