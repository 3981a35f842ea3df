// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstdint>
#include <optional>
#include <vector>

#include "objocc/core/volume.hpp"

namespace objocc {

// Pinhole camera. The camera frame is x right, y down, z forward; pixel
// centers sit at integer coordinates, so pixel (r, c) covers
// u in [c - 0.5, c + 0.5) and v in [r - 0.5, r + 0.5).
class CameraModel {
public:
    CameraModel() = default;
    // Throws ArgumentError unless near < far, K is invertible, the image is
    // non-empty and there is at least one depth bin.
    CameraModel(Eigen::Matrix3d intrinsics, Eigen::Isometry3d cam_to_volume, int width, int height, double near,
                double far, int num_bins);

    // Forward-looking camera at the volume-frame origin with focal length
    // scaled from the KITTI left color camera.
    static CameraModel forward_looking(int width, int height, double near = 2.0, double far = 50.0,
                                       int num_bins = 64);
    // Rotation taking camera axes to volume axes (x fwd, y left, z up).
    static Eigen::Matrix3d camera_axes_in_volume();

    const Eigen::Matrix3d& intrinsics() const { return k_; }
    const Eigen::Matrix3d& intrinsics_inverse() const { return k_inv_; }
    const Eigen::Isometry3d& cam_to_volume() const { return cam_to_volume_; }
    const Eigen::Isometry3d& volume_to_cam() const { return volume_to_cam_; }
    int width() const { return width_; }
    int height() const { return height_; }
    double near() const { return near_; }
    double far() const { return far_; }
    int num_bins() const { return bins_; }
    double bin_width() const { return (far_ - near_) / bins_; }
    double bin_center(int b) const { return near_ + (b + 0.5) * bin_width(); }
    // -1 outside [near, far].
    int bin_of(double depth) const;

    bool in_image(double u, double v) const {
        return u >= -0.5 && v >= -0.5 && u < width_ - 0.5 && v < height_ - 0.5;
    }
    bool in_depth_range(double depth) const { return depth >= near_ && depth <= far_; }
    // Pixel plus z-depth of a volume-frame point. nullopt when depth <= 0.
    struct Projection {
        double u, v, depth;
    };
    std::optional<Projection> project(const Eigen::Vector3d& p_volume) const;
    // Volume-frame point at z-depth `depth` along pixel (u, v).
    Eigen::Vector3d unproject(double u, double v, double depth) const;

    CameraModel with_image_size(int width, int height) const;
    CameraModel with_depth_bins(double near, double far, int num_bins) const;

    bool operator==(const CameraModel& o) const;

private:
    Eigen::Matrix3d k_ = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d k_inv_ = Eigen::Matrix3d::Identity();
    Eigen::Isometry3d cam_to_volume_ = Eigen::Isometry3d::Identity();
    Eigen::Isometry3d volume_to_cam_ = Eigen::Isometry3d::Identity();
    int width_ = 1;
    int height_ = 1;
    double near_ = 2.0;
    double far_ = 50.0;
    int bins_ = 1;
};

struct VoxelProjection {
    std::vector<double> u;
    std::vector<double> v;
    std::vector<double> depth;
    std::vector<std::uint8_t> fov_mask;
};

// Projection of every voxel center. Voxels behind the camera get NaN pixel
// coordinates and a false mask entry.
VoxelProjection volume_to_camera(const VoxelGrid& grid, const CameraModel& cam);

}  // namespace objocc
