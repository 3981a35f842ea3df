// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/core/camera.hpp"

#include <Eigen/LU>
#include <cmath>
#include <limits>

#include "objocc/core/errors.hpp"

namespace objocc {

CameraModel::CameraModel(Eigen::Matrix3d intrinsics, Eigen::Isometry3d cam_to_volume, int width, int height,
                         double near, double far, int num_bins)
    : k_(intrinsics),
      cam_to_volume_(cam_to_volume),
      width_(width),
      height_(height),
      near_(near),
      far_(far),
      bins_(num_bins) {
    if (!(near < far)) throw ArgumentError("camera depth range requires near < far");
    if (width <= 0 || height <= 0) throw ArgumentError("camera image size must be positive");
    if (num_bins <= 0) throw ArgumentError("camera needs at least one depth bin");
    const double det = k_.determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-12) throw ArgumentError("camera intrinsics are not invertible");
    k_inv_ = k_.inverse();
    volume_to_cam_ = cam_to_volume_.inverse();
}

Eigen::Matrix3d CameraModel::camera_axes_in_volume() {
    Eigen::Matrix3d r;
    r << 0, 0, 1,  //
        -1, 0, 0,  //
        0, -1, 0;
    return r;
}

CameraModel CameraModel::forward_looking(int width, int height, double near, double far, int num_bins) {
    const double f = 707.0912 * width / 1220.0;
    Eigen::Matrix3d k;
    k << f, 0, 0.5 * (width - 1),  //
        0, f, 0.5 * (height - 1),  //
        0, 0, 1;
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.linear() = camera_axes_in_volume();
    return CameraModel(k, t, width, height, near, far, num_bins);
}

int CameraModel::bin_of(double depth) const {
    if (!in_depth_range(depth)) return -1;
    const int b = static_cast<int>(std::floor((depth - near_) / bin_width()));
    return b >= bins_ ? bins_ - 1 : b;
}

std::optional<CameraModel::Projection> CameraModel::project(const Eigen::Vector3d& p_volume) const {
    const Eigen::Vector3d pc = volume_to_cam_ * p_volume;
    if (!(pc.z() > 0.0)) return std::nullopt;
    const Eigen::Vector3d h = k_ * pc;
    return Projection{h.x() / h.z(), h.y() / h.z(), pc.z()};
}

Eigen::Vector3d CameraModel::unproject(double u, double v, double depth) const {
    const Eigen::Vector3d ray = k_inv_ * Eigen::Vector3d(u, v, 1.0);
    return cam_to_volume_ * (ray * (depth / ray.z()));
}

CameraModel CameraModel::with_image_size(int width, int height) const {
    return CameraModel(k_, cam_to_volume_, width, height, near_, far_, bins_);
}

CameraModel CameraModel::with_depth_bins(double near, double far, int num_bins) const {
    return CameraModel(k_, cam_to_volume_, width_, height_, near, far, num_bins);
}

bool CameraModel::operator==(const CameraModel& o) const {
    return k_ == o.k_ && cam_to_volume_.matrix() == o.cam_to_volume_.matrix() && width_ == o.width_ &&
           height_ == o.height_ && near_ == o.near_ && far_ == o.far_ && bins_ == o.bins_;
}

VoxelProjection volume_to_camera(const VoxelGrid& grid, const CameraModel& cam) {
    const std::size_t n = grid.dims.count();
    VoxelProjection out;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.u.assign(n, nan);
    out.v.assign(n, nan);
    out.depth.assign(n, nan);
    out.fov_mask.assign(n, 0);
    for (int i = 0; i < grid.dims.h; ++i) {
        for (int j = 0; j < grid.dims.w; ++j) {
            for (int k = 0; k < grid.dims.d; ++k) {
                const std::size_t idx = grid.dims.index(i, j, k);
                const Eigen::Vector3d pc = cam.volume_to_cam() * grid.center(i, j, k);
                out.depth[idx] = pc.z();
                const auto p = cam.project(grid.center(i, j, k));
                if (!p) continue;
                out.u[idx] = p->u;
                out.v[idx] = p->v;
                out.fov_mask[idx] = cam.in_image(p->u, p->v) && cam.in_depth_range(p->depth);
            }
        }
    }
    return out;
}

}  // namespace objocc
