// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <filesystem>
#include <string>
#include <vector>

#include "objocc/core/box.hpp"
#include "objocc/core/camera.hpp"

namespace objocc::dataio {

// Left color camera projection plus the LiDAR (volume) to camera transform.
// Accepts both the odometry layout (P2, Tr) and the object layout
// (P2, R0_rect, Tr_velo_to_cam).
struct KittiCalib {
    Eigen::Matrix<double, 3, 4> p2 = Eigen::Matrix<double, 3, 4>::Zero();
    Eigen::Isometry3d velo_to_cam = Eigen::Isometry3d::Identity();

    // Intrinsics from P2 and the volume->camera-2 transform, including the
    // baseline carried in P2's last column.
    CameraModel camera(int width, int height, double near, double far, int num_bins) const;
    static KittiCalib from_camera(const CameraModel& cam);
};

KittiCalib parse_calib(const std::string& text);
KittiCalib read_calib(const std::filesystem::path& path);
std::string format_calib(const KittiCalib& calib);
void write_calib(const std::filesystem::path& path, const KittiCalib& calib);

struct DetectionSample {
    std::vector<ObjectBox> boxes_gt;
    CameraModel calib;
};

// Standard KITTI object label lines. Boxes are moved from the camera frame
// into the volume frame. Categories other than Car / Pedestrian / Cyclist are
// skipped. Throws ParseError carrying the 1-based line number.
DetectionSample parse_kitti_boxes(const std::string& text, const CameraModel& cam);
DetectionSample read_kitti_boxes(const std::filesystem::path& path, const CameraModel& cam);
std::string format_kitti_boxes(const std::vector<ObjectBox>& boxes, const CameraModel& cam);
void write_kitti_boxes(const std::filesystem::path& path, const std::vector<ObjectBox>& boxes,
                       const CameraModel& cam);

}  // namespace objocc::dataio
