// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <Eigen/Core>
#include <array>
#include <span>
#include <utility>
#include <vector>

#include "objocc/core/label_set.hpp"

namespace objocc {

// Angle in (-pi, pi] from an unnormalized (sin, cos) pair.
// Throws DegenerateOrientationError when both are zero.
double decode_orientation(double sin_theta, double cos_theta);
// (sin, cos) of the angle.
std::pair<double, double> encode_orientation(double theta);

// Ground-truth cuboid in the volume frame. Yaw is about +z, zero along +x;
// size is (length along heading, width, height); center is the box centroid.
struct ObjectBox {
    DetectionClass cls = DetectionClass::kCar;
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Vector3d size = Eigen::Vector3d::Ones();
    double yaw = 0.0;

    bool contains(const Eigen::Vector3d& p) const;
    // Footprint corners, counter-clockwise.
    std::array<Eigen::Vector2d, 4> bev_corners() const;
};

// Detector output b = [p, s, sin, cos, c, o]. Objectness is a probability.
struct BoxProposal {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Vector3d size = Eigen::Vector3d::Ones();
    double sin_theta = 0.0;
    double cos_theta = 1.0;
    std::vector<double> class_logits;
    double objectness = 0.0;

    int num_classes() const { return static_cast<int>(class_logits.size()); }
    // 3 + 3 + 2 + C + 1
    std::size_t param_dim() const { return 9 + class_logits.size(); }
    double yaw() const { return decode_orientation(sin_theta, cos_theta); }
    int predicted_class() const;
    // Copy with (sin, cos) scaled onto the unit circle.
    BoxProposal normalized() const;
    ObjectBox as_object() const;

    std::vector<double> to_vector() const;
    static BoxProposal from_vector(std::span<const double> v, int num_classes);
    void validate() const;

    bool operator==(const BoxProposal&) const = default;
};

}  // namespace objocc
