// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "objocc/core/camera.hpp"
#include "objocc/core/volume.hpp"
#include "objocc/nn/tensor.hpp"

namespace objocc::backbone {

// Voxel hit by every (pixel, depth bin) pair of one pyramid level. Pixel
// (i, j) at stride s samples the full-resolution point
// (s*j + (s-1)/2, s*i + (s-1)/2) at each bin-center depth.
class LiftTable {
public:
    LiftTable() = default;
    static LiftTable build(const CameraModel& cam, const VoxelGrid& grid, int level_height, int level_width,
                           int stride);

    int height() const { return height_; }
    int width() const { return width_; }
    int bins() const { return bins_; }
    int stride() const { return stride_; }
    const GridDims& dims() const { return dims_; }
    // Flat voxel index for pixel p = i * width + j and bin b, or -1.
    std::int32_t voxel(std::size_t pixel, int bin) const { return (*voxel_)[pixel * bins_ + bin]; }
    // Shared so that graph nodes can outlive the table object.
    const std::shared_ptr<const std::vector<std::int32_t>>& entries() const { return voxel_; }
    // True when every bin center of the pixel lands inside the grid.
    bool ray_inside(std::size_t pixel) const;

private:
    int height_ = 0;
    int width_ = 0;
    int bins_ = 0;
    int stride_ = 1;
    GridDims dims_;
    std::shared_ptr<const std::vector<std::int32_t>> voxel_;
};

// Depth-weighted scatter of pixel features into the voxel grid:
//   out[:, v(p, b)] += probs[b, p] * content[:, p]
// content [C, H, W, 1], probs [B, H, W, 1] -> [C, dims.h, dims.w, dims.d].
// Differentiable in both inputs.
nn::Tensor lift(const nn::Tensor& content, const nn::Tensor& probs, const LiftTable& table);

}  // namespace objocc::backbone
