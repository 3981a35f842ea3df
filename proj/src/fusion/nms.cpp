// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/fusion/nms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "objocc/core/errors.hpp"

namespace objocc::fusion {
namespace {

using Vec2 = Eigen::Vector2d;
using Quad = std::array<Vec2, 4>;

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Inside or on the boundary of a counter-clockwise convex quad.
bool inside(const Quad& q, const Vec2& p) {
    const double scale = 1e-12 * std::max(1.0, (q[2] - q[0]).squaredNorm());
    for (int i = 0; i < 4; ++i) {
        if (cross(q[i], q[(i + 1) % 4], p) < -scale) return false;
    }
    return true;
}

bool segment_intersection(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2, Vec2& out) {
    const Vec2 r = p2 - p1;
    const Vec2 s = q2 - q1;
    const double denom = r.x() * s.y() - r.y() * s.x();
    if (std::abs(denom) < 1e-15) return false;
    const Vec2 d = q1 - p1;
    const double t = (d.x() * s.y() - d.y() * s.x()) / denom;
    const double u = (d.x() * r.y() - d.y() * r.x()) / denom;
    if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return false;
    out = p1 + t * r;
    return true;
}

// Area of the convex hull (monotone chain).
double hull_area(std::vector<Vec2> pts) {
    if (pts.size() < 3) return 0.0;
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    std::vector<Vec2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    double area = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Vec2& a = hull[i];
        const Vec2& b = hull[(i + 1) % hull.size()];
        area += a.x() * b.y() - a.y() * b.x();
    }
    return 0.5 * std::abs(area);
}

}  // namespace

double rotated_bev_iou(const ObjectBox& a, const ObjectBox& b) {
    const Quad qa = a.bev_corners();
    const Quad qb = b.bev_corners();
    std::vector<Vec2> pts;
    for (const auto& p : qa)
        if (inside(qb, p)) pts.push_back(p);
    for (const auto& p : qb)
        if (inside(qa, p)) pts.push_back(p);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            Vec2 x;
            if (segment_intersection(qa[i], qa[(i + 1) % 4], qb[j], qb[(j + 1) % 4], x)) pts.push_back(x);
        }
    }
    const double inter = hull_area(std::move(pts));
    const double area_a = a.size.x() * a.size.y();
    const double area_b = b.size.x() * b.size.y();
    const double uni = area_a + area_b - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

double rotated_bev_iou(const BoxProposal& a, const BoxProposal& b) {
    return rotated_bev_iou(a.as_object(), b.as_object());
}

std::vector<int> nms_indices(std::span<const BoxProposal> proposals, double score_thresh, double iou_thresh) {
    if (!(score_thresh >= 0.0 && score_thresh <= 1.0) || !(iou_thresh >= 0.0 && iou_thresh <= 1.0)) {
        throw ArgumentError("NMS thresholds must lie in [0, 1]");
    }
    std::vector<int> order;
    for (std::size_t i = 0; i < proposals.size(); ++i) {
        if (proposals[i].objectness >= score_thresh) order.push_back(static_cast<int>(i));
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return proposals[a].objectness > proposals[b].objectness; });
    std::vector<ObjectBox> objects(proposals.size());
    for (int i : order) objects[i] = proposals[i].as_object();
    std::vector<int> kept;
    for (int i : order) {
        bool suppressed = false;
        for (int k : kept) {
            if (rotated_bev_iou(objects[i], objects[k]) > iou_thresh) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(i);
    }
    return kept;
}

std::vector<BoxProposal> filter_and_nms(std::span<const BoxProposal> proposals, double score_thresh, double iou_thresh) {
    std::vector<BoxProposal> out;
    for (int i : nms_indices(proposals, score_thresh, iou_thresh)) out.push_back(proposals[i]);
    return out;
}

}  // namespace objocc::fusion
