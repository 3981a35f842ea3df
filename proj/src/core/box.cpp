// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/core/box.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "objocc/core/errors.hpp"

namespace objocc {

double decode_orientation(double sin_theta, double cos_theta) {
    if (sin_theta == 0.0 && cos_theta == 0.0) throw DegenerateOrientationError("orientation (0, 0) has no angle");
    double theta = std::atan2(sin_theta, cos_theta);
    if (theta <= -std::numbers::pi) theta = std::numbers::pi;
    return theta;
}

std::pair<double, double> encode_orientation(double theta) { return {std::sin(theta), std::cos(theta)}; }

bool ObjectBox::contains(const Eigen::Vector3d& p) const {
    const Eigen::Vector3d d = p - center;
    const double c = std::cos(yaw), s = std::sin(yaw);
    const double along = c * d.x() + s * d.y();
    const double across = -s * d.x() + c * d.y();
    return std::abs(along) <= 0.5 * size.x() && std::abs(across) <= 0.5 * size.y() && std::abs(d.z()) <= 0.5 * size.z();
}

std::array<Eigen::Vector2d, 4> ObjectBox::bev_corners() const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    const Eigen::Vector2d ax(c, s), ay(-s, c);
    const Eigen::Vector2d ctr = center.head<2>();
    const double hl = 0.5 * size.x(), hw = 0.5 * size.y();
    return {ctr + hl * ax + hw * ay, ctr - hl * ax + hw * ay, ctr - hl * ax - hw * ay, ctr + hl * ax - hw * ay};
}

int BoxProposal::predicted_class() const {
    if (class_logits.empty()) return -1;
    return static_cast<int>(std::max_element(class_logits.begin(), class_logits.end()) - class_logits.begin());
}

BoxProposal BoxProposal::normalized() const {
    BoxProposal out = *this;
    const double n = std::hypot(sin_theta, cos_theta);
    if (n == 0.0) throw DegenerateOrientationError("orientation (0, 0) cannot be normalized");
    out.sin_theta = sin_theta / n;
    out.cos_theta = cos_theta / n;
    return out;
}

ObjectBox BoxProposal::as_object() const {
    ObjectBox b;
    const int c = predicted_class();
    b.cls = static_cast<DetectionClass>(std::clamp(c, 0, kNumDetectionClasses - 1));
    b.center = center;
    b.size = size;
    b.yaw = yaw();
    return b;
}

std::vector<double> BoxProposal::to_vector() const {
    std::vector<double> v;
    v.reserve(param_dim());
    v.insert(v.end(), {center.x(), center.y(), center.z(), size.x(), size.y(), size.z(), sin_theta, cos_theta});
    v.insert(v.end(), class_logits.begin(), class_logits.end());
    v.push_back(objectness);
    return v;
}

BoxProposal BoxProposal::from_vector(std::span<const double> v, int num_classes) {
    if (num_classes < 0 || v.size() != static_cast<std::size_t>(9 + num_classes)) {
        throw ShapeError("box parameter vector has the wrong length");
    }
    BoxProposal b;
    b.center = {v[0], v[1], v[2]};
    b.size = {v[3], v[4], v[5]};
    b.sin_theta = v[6];
    b.cos_theta = v[7];
    b.class_logits.assign(v.begin() + 8, v.begin() + 8 + num_classes);
    b.objectness = v[8 + num_classes];
    return b;
}

void BoxProposal::validate() const {
    if (!(size.x() > 0 && size.y() > 0 && size.z() > 0)) throw ArgumentError("box sizes must be positive");
}

}  // namespace objocc
