// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/fusion/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "objocc/core/errors.hpp"
#include "objocc/fusion/nms.hpp"
#include "objocc/nn/ops.hpp"

namespace objocc::fusion {

using nn::Node;
using nn::Tensor;

FusionMode parse_fusion_mode(std::string_view name) {
    if (name == "deformable") return FusionMode::kDeformable;
    if (name == "concat") return FusionMode::kConcat;
    throw ArgumentError("unknown fusion mode '" + std::string(name) + "'");
}

std::string_view fusion_mode_name(FusionMode mode) { return mode == FusionMode::kConcat ? "concat" : "deformable"; }

LatentGrid LatentGrid::of(const VoxelGrid& grid, const std::array<int, 3>& latent_dims) {
    if (latent_dims[0] <= 0 || grid.dims.h % latent_dims[0] != 0) throw ShapeError("latent dims do not divide the grid");
    LatentGrid g;
    g.dims = latent_dims;
    g.origin = grid.origin;
    g.voxel_size = grid.voxel_size * (grid.dims.h / latent_dims[0]);
    return g;
}

Eigen::Vector3d LatentGrid::anchor(const Eigen::Vector3d& p) const {
    Eigen::Vector3d a = (p - origin) / voxel_size - Eigen::Vector3d::Constant(0.5);
    for (int ax = 0; ax < 3; ++ax) a[ax] = std::clamp(a[ax], 0.0, static_cast<double>(dims[ax] - 1));
    return a;
}

namespace {

// Trilinear stencil at a continuous position clamped to [0, dim - 1].
struct Stencil {
    int lo[3];
    int hi[3];
    double f[3];
    bool live[3];  // false where the coordinate was clamped

    Stencil(const double* pos, const int* dims) {
        for (int a = 0; a < 3; ++a) {
            const double hiv = dims[a] - 1;
            const double x = std::clamp(pos[a], 0.0, hiv);
            live[a] = pos[a] >= 0.0 && pos[a] <= hiv && dims[a] > 1;
            if (dims[a] == 1) {
                lo[a] = hi[a] = 0;
                f[a] = 0.0;
                continue;
            }
            lo[a] = std::min(static_cast<int>(std::floor(x)), dims[a] - 2);
            hi[a] = lo[a] + 1;
            f[a] = x - lo[a];
        }
    }

    template <typename Fn>
    void corners(const int* dims, Fn&& fn) const {
        for (int c = 0; c < 8; ++c) {
            const int i = (c & 4) ? hi[0] : lo[0];
            const int j = (c & 2) ? hi[1] : lo[1];
            const int k = (c & 1) ? hi[2] : lo[2];
            const double w0 = (c & 4) ? f[0] : 1.0 - f[0];
            const double w1 = (c & 2) ? f[1] : 1.0 - f[1];
            const double w2 = (c & 1) ? f[2] : 1.0 - f[2];
            // Partial derivatives of the corner weight along each axis.
            const double d0 = ((c & 4) ? 1.0 : -1.0) * w1 * w2;
            const double d1 = ((c & 2) ? 1.0 : -1.0) * w0 * w2;
            const double d2 = ((c & 1) ? 1.0 : -1.0) * w0 * w1;
            fn((static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k, w0 * w1 * w2, d0, d1, d2);
        }
    }
};

}  // namespace

Tensor deformable_sample(const Tensor& latent, std::span<const Eigen::Vector3d> anchors, const Tensor& offsets,
                         const Tensor& weights) {
    if (latent.rank() != 4) throw ShapeError("deformable_sample: latent must be [C, h, w, d]");
    const int n = static_cast<int>(anchors.size());
    if (weights.rank() != 2 || weights.dim(0) != n || weights.dim(1) < 1) throw ShapeError("deformable_sample: weights must be [n, K]");
    const int K = weights.dim(1);
    if (offsets.rank() != 2 || offsets.dim(0) != n || offsets.dim(1) != 3 * K) {
        throw ShapeError("deformable_sample: offsets must be [n, 3K]");
    }
    const int C = latent.dim(0);
    const int dims[3] = {latent.dim(1), latent.dim(2), latent.dim(3)};
    const std::size_t V = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    std::vector<double> pos(static_cast<std::size_t>(n) * K * 3);
    for (int q = 0; q < n; ++q)
        for (int k = 0; k < K; ++k)
            for (int a = 0; a < 3; ++a)
                pos[(static_cast<std::size_t>(q) * K + k) * 3 + a] = anchors[q][a] + offsets.data()[static_cast<std::size_t>(q) * 3 * K + 3 * k + a];

    std::vector<double> out(static_cast<std::size_t>(n) * C, 0.0);
    const double* lv = latent.data().data();
    for (int q = 0; q < n; ++q) {
        for (int k = 0; k < K; ++k) {
            const double a = weights.data()[static_cast<std::size_t>(q) * K + k];
            const Stencil s(&pos[(static_cast<std::size_t>(q) * K + k) * 3], dims);
            s.corners(dims, [&](std::size_t v, double w, double, double, double) {
                for (int c = 0; c < C; ++c) out[static_cast<std::size_t>(q) * C + c] += a * w * lv[c * V + v];
            });
        }
    }
    return nn::make_result({n, C}, std::move(out), {latent, offsets, weights},
                       [n, K, C, V, dims0 = dims[0], dims1 = dims[1], dims2 = dims[2], pos = std::move(pos)](Node& self) {
        const int dims[3] = {dims0, dims1, dims2};
        Node& ln = *self.inputs[0];
        Node& wn = *self.inputs[2];
        double* dl = nn::grad_if_needed(ln);
        double* doff = nn::grad_if_needed(*self.inputs[1]);
        double* dw = nn::grad_if_needed(wn);
        const double* lv = ln.value.data();
        const double* g = self.grad.data();
        for (int q = 0; q < n; ++q) {
            const double* gq = g + static_cast<std::size_t>(q) * C;
            for (int k = 0; k < K; ++k) {
                const double a = wn.value[static_cast<std::size_t>(q) * K + k];
                const Stencil s(&pos[(static_cast<std::size_t>(q) * K + k) * 3], dims);
                double dot_v = 0.0;
                double dpos[3] = {0.0, 0.0, 0.0};
                s.corners(dims, [&](std::size_t v, double w, double d0, double d1, double d2) {
                    double gv = 0.0;
                    for (int c = 0; c < C; ++c) {
                        gv += gq[c] * lv[c * V + v];
                        if (dl) dl[c * V + v] += gq[c] * a * w;
                    }
                    dot_v += w * gv;
                    dpos[0] += d0 * gv;
                    dpos[1] += d1 * gv;
                    dpos[2] += d2 * gv;
                });
                if (dw) dw[static_cast<std::size_t>(q) * K + k] += dot_v;
                if (doff) {
                    for (int ax = 0; ax < 3; ++ax) {
                        if (s.live[ax]) doff[static_cast<std::size_t>(q) * 3 * K + 3 * k + ax] += a * dpos[ax];
                    }
                }
            }
        }
    });
}

Tensor trilinear_scatter(const Tensor& values, std::span<const Eigen::Vector3d> anchors, const std::array<int, 3>& d) {
    const int n = static_cast<int>(anchors.size());
    if (values.rank() != 2 || values.dim(0) != n) throw ShapeError("trilinear_scatter: values must be [n, C]");
    const int C = values.dim(1);
    const int dims[3] = {d[0], d[1], d[2]};
    const std::size_t V = static_cast<std::size_t>(d[0]) * d[1] * d[2];
    std::vector<double> pos(static_cast<std::size_t>(n) * 3);
    for (int q = 0; q < n; ++q)
        for (int a = 0; a < 3; ++a) pos[3 * q + a] = anchors[q][a];
    std::vector<double> out(static_cast<std::size_t>(C) * V, 0.0);
    for (int q = 0; q < n; ++q) {
        const Stencil s(&pos[3 * q], dims);
        s.corners(dims, [&](std::size_t v, double w, double, double, double) {
            for (int c = 0; c < C; ++c) out[c * V + v] += w * values.data()[static_cast<std::size_t>(q) * C + c];
        });
    }
    return nn::make_result({C, d[0], d[1], d[2]}, std::move(out), {values},
                       [n, C, V, d0 = d[0], d1 = d[1], d2 = d[2], pos = std::move(pos)](Node& self) {
        double* g = nn::grad_if_needed(*self.inputs[0]);
        if (!g) return;
        const int dims[3] = {d0, d1, d2};
        for (int q = 0; q < n; ++q) {
            const Stencil s(&pos[3 * q], dims);
            s.corners(dims, [&](std::size_t v, double w, double, double, double) {
                for (int c = 0; c < C; ++c) g[static_cast<std::size_t>(q) * C + c] += w * self.grad[c * V + v];
            });
        }
    });
}

std::vector<double> token_features(const BoxProposal& box, const VoxelGrid& grid) {
    std::vector<double> f;
    f.reserve(box.param_dim());
    const Eigen::Vector3d extent = grid.extent();
    for (int a = 0; a < 3; ++a) f.push_back((box.center[a] - grid.origin[a]) / extent[a]);
    for (int a = 0; a < 3; ++a) f.push_back(std::log(std::max(box.size[a], 1e-3)));
    f.push_back(box.sin_theta);
    f.push_back(box.cos_theta);
    const double mx = box.class_logits.empty() ? 0.0 : *std::max_element(box.class_logits.begin(), box.class_logits.end());
    double z = 0.0;
    for (double l : box.class_logits) z += std::exp(l - mx);
    for (double l : box.class_logits) f.push_back(std::exp(l - mx) / z);
    f.push_back(box.objectness);
    return f;
}

BoxFusion::BoxFusion(const FusionOptions& o, nn::Rng& rng) : options_(o) {
    if (o.num_points < 1) throw ArgumentError("num_sample_points must be at least 1");
    if (o.query_dim < 1 || o.latent_channels < 1) throw ArgumentError("fusion channel counts must be positive");
    const int C = o.latent_channels;
    const int E = o.query_dim;
    tokenizer_ = nn::Mlp2(9 + o.num_classes, o.token_hidden, E, rng);
    // Zero heads: offsets start at the anchor and weights uniform.
    offsets_ = nn::Linear(E, 3 * o.num_points, true, rng);
    weights_ = nn::Linear(E, o.num_points, true, rng);
    for (auto* l : {&offsets_, &weights_}) {
        std::fill(l->weight().mutable_data().begin(), l->weight().mutable_data().end(), 0.0);
        std::fill(l->bias().mutable_data().begin(), l->bias().mutable_data().end(), 0.0);
    }
    if (o.mode == FusionMode::kDeformable) {
        project_ = nn::Linear(C + E, C, true, rng);
        mix_ = nn::Conv(C, C, nn::ConvSpec::cube(3), false, rng, 0.25);
    } else {
        project_ = nn::Linear(E, C, true, rng);
        mix_ = nn::Conv(2 * C, C, nn::ConvSpec::cube(3), false, rng, 0.25);
    }
    // Zero output conv: an untrained fusion leaves the latent untouched.
    std::fill(mix_.weight().mutable_data().begin(), mix_.weight().mutable_data().end(), 0.0);
}

BoxQueries BoxFusion::tokenize(std::span<const BoxProposal> boxes, const VoxelGrid& grid, const LatentGrid& latent) const {
    BoxQueries out;
    const int d = 9 + options_.num_classes;
    if (boxes.empty()) {
        out.q = Tensor::zeros({0, options_.query_dim});
        return out;
    }
    std::vector<double> feats;
    for (const auto& b : boxes) {
        if (b.num_classes() != options_.num_classes) throw ShapeError("proposal class count differs from the tokenizer's");
        const auto f = token_features(b, grid);
        feats.insert(feats.end(), f.begin(), f.end());
        out.anchors.push_back(latent.anchor(b.center));
    }
    out.q = tokenizer_(Tensor::from({static_cast<int>(boxes.size()), d}, std::move(feats)));
    return out;
}

AttentionParams BoxFusion::attention(const BoxQueries& queries) const {
    return {offsets_(queries.q), nn::softmax_rows(weights_(queries.q))};
}

Tensor BoxFusion::update(const BoxQueries& queries, const Tensor& latent) const {
    if (latent.rank() != 4 || latent.dim(0) != options_.latent_channels) throw ShapeError("latent has the wrong channels");
    if (queries.size() == 0) return Tensor::zeros(latent.shape());
    const std::array<int, 3> dims{latent.dim(1), latent.dim(2), latent.dim(3)};
    if (options_.mode == FusionMode::kConcat) {
        const Tensor vol = trilinear_scatter(project_(queries.q), queries.anchors, dims);
        return mix_(nn::concat({latent, vol}));
    }
    const AttentionParams att = attention(queries);
    const Tensor read = deformable_sample(latent, queries.anchors, att.offsets, att.weights);
    const Tensor tokens = project_(nn::concat_columns({read, queries.q}));
    return mix_(trilinear_scatter(tokens, queries.anchors, dims));
}

Tensor BoxFusion::fuse(std::span<const BoxProposal> proposals, const Tensor& latent, const VoxelGrid& grid) const {
    const auto kept = filter_and_nms(proposals, options_.score_thresh, options_.nms_iou);
    const LatentGrid lg = LatentGrid::of(grid, {latent.dim(1), latent.dim(2), latent.dim(3)});
    return update(tokenize(kept, grid, lg), latent);
}

void BoxFusion::collect(nn::ParamList& out, const std::string& prefix) const {
    tokenizer_.collect(out, prefix + ".tokenizer");
    offsets_.collect(out, prefix + ".offsets");
    weights_.collect(out, prefix + ".weights");
    project_.collect(out, prefix + ".project");
    mix_.collect(out, prefix + ".mix");
}

}  // namespace objocc::fusion
