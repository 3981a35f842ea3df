// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/eval/visualize.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "objocc/core/errors.hpp"

namespace objocc::eval {

std::string visualization_ply(const SemanticVolume& volume, std::span<const std::uint8_t> fov_mask,
                              const LabelSet& labels) {
    const auto& grid = volume.grid();
    const auto lab = volume.labels();
    if (fov_mask.empty()) fov_mask = volume.fov_mask();
    if (!fov_mask.empty() && fov_mask.size() != lab.size()) throw ShapeError("fov mask size mismatch");

    std::vector<std::size_t> voxels;
    for (std::size_t v = 0; v < lab.size(); ++v) {
        if (lab[v] != labels.empty_id() && lab[v] != LabelSet::kUnknown) voxels.push_back(v);
    }
    std::string out;
    out += "ply\nformat ascii 1.0\ncomment objocc voxel export\n";
    out += fmt::format("element vertex {}\n", voxels.size() * 8);
    out += "property float x\nproperty float y\nproperty float z\n";
    out += "property uchar red\nproperty uchar green\nproperty uchar blue\nproperty uchar alpha\n";
    out += fmt::format("element face {}\n", voxels.size() * 6);
    out += "property list uchar int vertex_indices\nend_header\n";
    const double s = grid.voxel_size;
    for (std::size_t v : voxels) {
        const auto [i, j, k] = grid.dims.unravel(v);
        const Rgb c = labels.color(lab[v]);
        const int alpha = fov_mask.empty() || fov_mask[v] ? 255 : kOutOfViewAlpha;
        for (int corner = 0; corner < 8; ++corner) {
            const double x = grid.origin.x() + (i + (corner & 1)) * s;
            const double y = grid.origin.y() + (j + ((corner >> 1) & 1)) * s;
            const double z = grid.origin.z() + (k + ((corner >> 2) & 1)) * s;
            out += fmt::format("{:.4f} {:.4f} {:.4f} {} {} {} {}\n", x, y, z, c.r, c.g, c.b, alpha);
        }
    }
    // Outward-facing quads over the corner numbering bit0 = x, bit1 = y, bit2 = z.
    static constexpr int kFaces[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                                         {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
    for (std::size_t n = 0; n < voxels.size(); ++n) {
        const std::size_t b = n * 8;
        for (const auto& f : kFaces) {
            out += fmt::format("4 {} {} {} {}\n", b + f[0], b + f[1], b + f[2], b + f[3]);
        }
    }
    return out;
}

void export_visualization(const SemanticVolume& volume, std::span<const std::uint8_t> fov_mask,
                          const std::filesystem::path& out, const LabelSet& labels) {
    const std::string text = visualization_ply(volume, fov_mask, labels);
    std::ofstream f(out, std::ios::binary);
    if (!f) throw IoError("cannot write " + out.string());
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw IoError("cannot write " + out.string());
}

}  // namespace objocc::eval
