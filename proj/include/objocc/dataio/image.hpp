// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "objocc/nn/tensor.hpp"

namespace objocc::dataio {

// Interleaved 8-bit RGB, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    static Image blank(int width, int height);
    std::uint8_t* pixel(int row, int col) { return &rgb[(static_cast<std::size_t>(row) * width + col) * 3]; }
    const std::uint8_t* pixel(int row, int col) const {
        return &rgb[(static_cast<std::size_t>(row) * width + col) * 3];
    }
    bool operator==(const Image&) const = default;
};

// Z-depth in meters per pixel, 0 where nothing was hit.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<double> depth;

    double at(int row, int col) const { return depth[static_cast<std::size_t>(row) * width + col]; }
};

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

// 16-bit grayscale PNG holding round(depth * 256), the KITTI depth convention.
DepthMap read_depth_png(const std::filesystem::path& path);
void write_depth_png(const std::filesystem::path& path, const DepthMap& depth);

// Top-left crop. Throws ShapeError when the image is smaller than requested.
Image crop(const Image& image, int width, int height);

// [3, H, W, 1] tensor scaled to roughly zero mean, unit range.
nn::Tensor image_to_tensor(const Image& image);

}  // namespace objocc::dataio
