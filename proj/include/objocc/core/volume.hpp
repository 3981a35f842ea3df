// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "objocc/core/label_set.hpp"

namespace objocc {

// Voxel counts along the front-back (h), left-right (w) and vertical (d)
// axes. Flattening keeps the vertical axis fastest-varying.
struct GridDims {
    int h = 0;
    int w = 0;
    int d = 0;

    std::size_t count() const { return static_cast<std::size_t>(h) * w * d; }
    std::size_t index(int i, int j, int k) const { return (static_cast<std::size_t>(i) * w + j) * d + k; }
    std::array<int, 3> unravel(std::size_t idx) const {
        return {static_cast<int>(idx / (static_cast<std::size_t>(w) * d)), static_cast<int>((idx / d) % w),
                static_cast<int>(idx % d)};
    }
    bool contains(int i, int j, int k) const { return i >= 0 && j >= 0 && k >= 0 && i < h && j < w && k < d; }
    std::array<int, 3> as_array() const { return {h, w, d}; }
    bool operator==(const GridDims&) const = default;
};

// Metric placement of a voxel grid in the volume frame: x forward, y left,
// z up (right-handed, LiDAR-style). Voxel (i, j, k) spans
// origin + [i, i+1) * voxel_size along x, and likewise for y and z.
struct VoxelGrid {
    GridDims dims;
    double voxel_size = 0.2;
    Eigen::Vector3d origin{0.0, -25.6, -2.0};

    // 256 x 256 x 32 at 0.2 m.
    static VoxelGrid semantic_kitti();
    // Same metric extent at 64 x 64 x 8 (0.8 m voxels).
    static VoxelGrid desk();

    void validate() const;
    Eigen::Vector3d center(int i, int j, int k) const;
    std::optional<std::array<int, 3>> locate(const Eigen::Vector3d& p) const;
    Eigen::Vector3d extent() const { return Eigen::Vector3d(dims.h, dims.w, dims.d) * voxel_size; }
    VoxelGrid downsampled(int factor) const;
    bool operator==(const VoxelGrid& o) const {
        return dims == o.dims && voxel_size == o.voxel_size && origin == o.origin;
    }
};

// Dense label grid plus the camera field-of-view mask. Immutable once built.
class SemanticVolume {
public:
    SemanticVolume() = default;
    // Throws ShapeError on size mismatch and TaxonomyError on labels outside
    // the label set. An empty fov_mask means "everything in view".
    SemanticVolume(VoxelGrid grid, std::vector<Label> labels, std::vector<std::uint8_t> fov_mask = {},
                   const LabelSet& label_set = LabelSet::semantic_kitti());

    static SemanticVolume filled(const VoxelGrid& grid, Label value);

    const VoxelGrid& grid() const { return grid_; }
    const GridDims& dims() const { return grid_.dims; }
    std::span<const Label> labels() const { return labels_; }
    std::span<const std::uint8_t> fov_mask() const { return fov_mask_; }
    Label at(int i, int j, int k) const { return labels_[grid_.dims.index(i, j, k)]; }

    SemanticVolume with_fov_mask(std::vector<std::uint8_t> mask) const;
    bool operator==(const SemanticVolume& o) const {
        return grid_ == o.grid_ && labels_ == o.labels_ && fov_mask_ == o.fov_mask_;
    }

private:
    VoxelGrid grid_;
    std::vector<Label> labels_;
    std::vector<std::uint8_t> fov_mask_;
};

}  // namespace objocc
