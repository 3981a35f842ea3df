// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/core/volume.hpp"

#include <cmath>
#include <string>

#include "objocc/core/errors.hpp"

namespace objocc {

VoxelGrid VoxelGrid::semantic_kitti() { return VoxelGrid{{256, 256, 32}, 0.2, {0.0, -25.6, -2.0}}; }

VoxelGrid VoxelGrid::desk() { return VoxelGrid{{64, 64, 8}, 0.8, {0.0, -25.6, -2.0}}; }

void VoxelGrid::validate() const {
    if (dims.h <= 0 || dims.w <= 0 || dims.d <= 0) throw ShapeError("voxel grid dims must be positive");
    if (!(voxel_size > 0.0)) throw ShapeError("voxel size must be positive");
}

Eigen::Vector3d VoxelGrid::center(int i, int j, int k) const {
    return origin + Eigen::Vector3d(i + 0.5, j + 0.5, k + 0.5) * voxel_size;
}

std::optional<std::array<int, 3>> VoxelGrid::locate(const Eigen::Vector3d& p) const {
    const Eigen::Vector3d q = (p - origin) / voxel_size;
    const double fi = std::floor(q.x()), fj = std::floor(q.y()), fk = std::floor(q.z());
    if (fi < 0 || fj < 0 || fk < 0 || fi >= dims.h || fj >= dims.w || fk >= dims.d) return std::nullopt;
    return std::array<int, 3>{static_cast<int>(fi), static_cast<int>(fj), static_cast<int>(fk)};
}

VoxelGrid VoxelGrid::downsampled(int factor) const {
    if (factor <= 0 || dims.h % factor || dims.w % factor || dims.d % factor) {
        throw ShapeError("grid dims are not divisible by " + std::to_string(factor));
    }
    return VoxelGrid{{dims.h / factor, dims.w / factor, dims.d / factor}, voxel_size * factor, origin};
}

SemanticVolume::SemanticVolume(VoxelGrid grid, std::vector<Label> labels, std::vector<std::uint8_t> fov_mask,
                               const LabelSet& label_set)
    : grid_(std::move(grid)), labels_(std::move(labels)), fov_mask_(std::move(fov_mask)) {
    grid_.validate();
    if (labels_.size() != grid_.dims.count()) throw ShapeError("label count does not match grid dims");
    if (fov_mask_.empty()) fov_mask_.assign(labels_.size(), 1);
    if (fov_mask_.size() != labels_.size()) throw ShapeError("fov mask size does not match grid dims");
    for (Label l : labels_) {
        if (!label_set.is_valid(l)) throw TaxonomyError("label " + std::to_string(l) + " is outside the label set");
    }
}

SemanticVolume SemanticVolume::filled(const VoxelGrid& grid, Label value) {
    return SemanticVolume(grid, std::vector<Label>(grid.dims.count(), value));
}

SemanticVolume SemanticVolume::with_fov_mask(std::vector<std::uint8_t> mask) const {
    return SemanticVolume(grid_, labels_, std::move(mask));
}

}  // namespace objocc
