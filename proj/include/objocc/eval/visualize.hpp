// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "objocc/core/label_set.hpp"
#include "objocc/core/volume.hpp"

namespace objocc::eval {

// Alpha written for voxels outside the field of view.
inline constexpr std::uint8_t kOutOfViewAlpha = 51;

// ASCII PLY mesh with one axis-aligned cube (8 vertices, 6 quads) per voxel
// whose label is neither empty nor unknown. Vertices carry the class color
// and an alpha of 255 in view, kOutOfViewAlpha outside. fov_mask overrides
// the volume's own mask when non-empty.
std::string visualization_ply(const SemanticVolume& volume, std::span<const std::uint8_t> fov_mask = {},
                              const LabelSet& labels = LabelSet::semantic_kitti());

// Throws IoError when the file cannot be written.
void export_visualization(const SemanticVolume& volume, std::span<const std::uint8_t> fov_mask,
                          const std::filesystem::path& out, const LabelSet& labels = LabelSet::semantic_kitti());

}  // namespace objocc::eval
