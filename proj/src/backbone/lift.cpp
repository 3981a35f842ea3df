// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/backbone/lift.hpp"

#include "objocc/core/errors.hpp"

namespace objocc::backbone {

LiftTable LiftTable::build(const CameraModel& cam, const VoxelGrid& grid, int level_height, int level_width,
                           int stride) {
    if (level_height <= 0 || level_width <= 0 || stride <= 0) throw ShapeError("bad lift level geometry");
    LiftTable t;
    t.height_ = level_height;
    t.width_ = level_width;
    t.bins_ = cam.num_bins();
    t.stride_ = stride;
    t.dims_ = grid.dims;
    std::vector<std::int32_t> vox(static_cast<std::size_t>(level_height) * level_width * t.bins_, -1);
    const double off = 0.5 * (stride - 1);
    for (int i = 0; i < level_height; ++i) {
        for (int j = 0; j < level_width; ++j) {
            const std::size_t p = static_cast<std::size_t>(i) * level_width + j;
            for (int b = 0; b < t.bins_; ++b) {
                const auto cell = grid.locate(cam.unproject(stride * j + off, stride * i + off, cam.bin_center(b)));
                if (cell) vox[p * t.bins_ + b] = static_cast<std::int32_t>(grid.dims.index((*cell)[0], (*cell)[1], (*cell)[2]));
            }
        }
    }
    t.voxel_ = std::make_shared<const std::vector<std::int32_t>>(std::move(vox));
    return t;
}

bool LiftTable::ray_inside(std::size_t pixel) const {
    for (int b = 0; b < bins_; ++b) {
        if (voxel(pixel, b) < 0) return false;
    }
    return true;
}

nn::Tensor lift(const nn::Tensor& content, const nn::Tensor& probs, const LiftTable& table) {
    if (content.rank() != 4 || probs.rank() != 4) throw ShapeError("lift expects [C, H, W, 1] inputs");
    if (content.dim(1) != table.height() || content.dim(2) != table.width() || probs.dim(1) != table.height() ||
        probs.dim(2) != table.width() || content.dim(3) != 1 || probs.dim(3) != 1) {
        throw ShapeError("lift inputs do not match the lift table");
    }
    if (probs.dim(0) != table.bins()) throw ShapeError("depth bins do not match the lift table");
    const int C = content.dim(0), B = table.bins();
    const std::size_t P = static_cast<std::size_t>(table.height()) * table.width();
    const std::size_t V = table.dims().count();
    const double* cv = content.data().data();
    const double* pv = probs.data().data();
    std::vector<double> out(static_cast<std::size_t>(C) * V, 0.0);
    for (std::size_t p = 0; p < P; ++p) {
        for (int b = 0; b < B; ++b) {
            const std::int32_t v = table.voxel(p, b);
            if (v < 0) continue;
            const double w = pv[b * P + p];
            for (int c = 0; c < C; ++c) out[c * V + v] += w * cv[c * P + p];
        }
    }
    const GridDims d = table.dims();
    return nn::make_result({C, d.h, d.w, d.d}, std::move(out), {content, probs}, [entries = table.entries(), C, B, P, V](nn::Node& self) {
        const double* dy = self.grad.data();
        const double* cv = self.inputs[0]->value.data();
        const double* pv = self.inputs[1]->value.data();
        double* gc = nn::grad_if_needed(*self.inputs[0]);
        double* gp = nn::grad_if_needed(*self.inputs[1]);
        for (std::size_t p = 0; p < P; ++p) {
            for (int b = 0; b < B; ++b) {
                const std::int32_t v = (*entries)[p * B + b];
                if (v < 0) continue;
                const double w = pv[b * P + p];
                double acc = 0.0;
                for (int c = 0; c < C; ++c) {
                    const double g = dy[c * V + v];
                    if (gc) gc[c * P + p] += w * g;
                    acc += cv[c * P + p] * g;
                }
                if (gp) gp[b * P + p] += acc;
            }
        }
    });
}

}  // namespace objocc::backbone
