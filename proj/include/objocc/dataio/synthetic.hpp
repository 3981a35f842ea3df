// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <vector>

#include "objocc/core/box.hpp"
#include "objocc/core/camera.hpp"
#include "objocc/core/volume.hpp"
#include "objocc/dataio/image.hpp"

namespace objocc::dataio {

struct SyntheticOptions {
    int image_width = 160;
    int image_height = 48;
    double near = 2.0;
    double far = 50.0;
    int depth_bins = 64;
    double ground_z = -1.73;
    // Buildings, vegetation and poles beside the road.
    bool static_structures = true;
    double pixel_noise = 6.0;
};

// A street scene: road with sidewalks, roadside structures and a set of
// cuboid objects resting on the ground. Everything is derived from one seed.
struct SyntheticScene {
    std::uint64_t seed = 0;
    Image rgb;
    DepthMap depth;
    SemanticVolume volume_gt;
    std::vector<std::uint8_t> invalid_mask;
    std::vector<ObjectBox> boxes_gt;
    CameraModel calib;
};

// The grid keeps the 51.2 m x 51.2 m x 6.4 m extent; dims set the resolution.
VoxelGrid synthetic_grid(const GridDims& dims);

SyntheticScene generate_synthetic(std::uint64_t seed, int n_objects, const GridDims& dims,
                                  const SyntheticOptions& options = {});

}  // namespace objocc::dataio
