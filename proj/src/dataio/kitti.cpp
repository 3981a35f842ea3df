// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/dataio/kitti.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>

#include "objocc/core/errors.hpp"
#include "objocc/dataio/voxel_io.hpp"

namespace objocc::dataio {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

bool to_double(std::string_view s, double& v) {
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    return r.ec == std::errc() && r.ptr == s.data() + s.size() && std::isfinite(v);
}

std::vector<std::string_view> lines_of(const std::string& text) {
    std::vector<std::string_view> lines;
    std::string_view rest(text);
    while (!rest.empty()) {
        const auto nl = rest.find('\n');
        std::string_view line = rest.substr(0, nl);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (nl == std::string_view::npos) break;
        rest.remove_prefix(nl + 1);
    }
    return lines;
}

Eigen::Isometry3d isometry_from_3x4(const Eigen::Matrix<double, 3, 4>& m) {
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.linear() = m.leftCols<3>();
    t.translation() = m.col(3);
    return t;
}

double wrap_angle(double a) {
    a = std::remainder(a, 2 * std::numbers::pi);
    return a <= -std::numbers::pi ? a + 2 * std::numbers::pi : a;
}

}  // namespace

CameraModel KittiCalib::camera(int width, int height, double near, double far, int num_bins) const {
    const Eigen::Matrix3d k = p2.leftCols<3>();
    if (std::abs(k.determinant()) < 1e-12) throw ArgumentError("P2 intrinsics are singular");
    const Eigen::Vector3d t = k.inverse() * p2.col(3);
    Eigen::Isometry3d velo_to_cam2 = Eigen::Translation3d(t) * velo_to_cam;
    return CameraModel(k, velo_to_cam2.inverse(), width, height, near, far, num_bins);
}

KittiCalib KittiCalib::from_camera(const CameraModel& cam) {
    KittiCalib c;
    c.p2.leftCols<3>() = cam.intrinsics();
    c.velo_to_cam = cam.volume_to_cam();
    return c;
}

KittiCalib parse_calib(const std::string& text) {
    std::map<std::string, std::vector<double>> rows;
    int lineno = 0;
    for (auto line : lines_of(text)) {
        ++lineno;
        const auto colon = line.find(':');
        if (split_ws(line).empty()) continue;
        if (colon == std::string_view::npos) throw ParseError("calibration line without a key", lineno);
        std::vector<double> vals;
        for (auto tok : split_ws(line.substr(colon + 1))) {
            double v;
            if (!to_double(tok, v)) throw ParseError("bad number '" + std::string(tok) + "'", lineno);
            vals.push_back(v);
        }
        rows[std::string(split_ws(line.substr(0, colon)).at(0))] = std::move(vals);
    }
    auto mat34 = [&](const std::string& key) {
        const auto& v = rows.at(key);
        if (v.size() != 12) throw FormatError("calibration entry " + key + " needs 12 values");
        Eigen::Matrix<double, 3, 4> m;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c) m(r, c) = v[r * 4 + c];
        return m;
    };
    if (!rows.count("P2")) throw FormatError("calibration has no P2 entry");
    KittiCalib calib;
    calib.p2 = mat34("P2");
    if (rows.count("Tr")) {
        calib.velo_to_cam = isometry_from_3x4(mat34("Tr"));
    } else if (rows.count("Tr_velo_to_cam")) {
        Eigen::Isometry3d r0 = Eigen::Isometry3d::Identity();
        if (rows.count("R0_rect")) {
            const auto& v = rows.at("R0_rect");
            if (v.size() != 9) throw FormatError("R0_rect needs 9 values");
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) r0.linear()(r, c) = v[r * 3 + c];
        }
        calib.velo_to_cam = r0 * isometry_from_3x4(mat34("Tr_velo_to_cam"));
    } else {
        throw FormatError("calibration has no LiDAR-to-camera transform");
    }
    return calib;
}

KittiCalib read_calib(const std::filesystem::path& path) { return parse_calib(read_text_file(path)); }

std::string format_calib(const KittiCalib& calib) {
    std::ostringstream os;
    os.precision(12);
    auto row = [&](const char* key, const Eigen::Matrix<double, 3, 4>& m) {
        os << key << ':';
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c) os << ' ' << m(r, c);
        os << '\n';
    };
    Eigen::Matrix<double, 3, 4> p0 = calib.p2;
    p0.col(3).setZero();
    row("P0", p0);
    row("P1", p0);
    row("P2", calib.p2);
    row("P3", calib.p2);
    row("Tr", calib.velo_to_cam.matrix().topRows<3>());
    return os.str();
}

void write_calib(const std::filesystem::path& path, const KittiCalib& calib) {
    write_text_file(path, format_calib(calib));
}

DetectionSample parse_kitti_boxes(const std::string& text, const CameraModel& cam) {
    DetectionSample sample;
    sample.calib = cam;
    const Eigen::Matrix3d r = cam.cam_to_volume().linear();
    int lineno = 0;
    for (auto line : lines_of(text)) {
        ++lineno;
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok.size() != 15 && tok.size() != 16) {
            throw ParseError("expected 15 or 16 fields, got " + std::to_string(tok.size()), lineno);
        }
        double v[16] = {};
        for (std::size_t i = 1; i < tok.size(); ++i) {
            if (!to_double(tok[i], v[i])) {
                throw ParseError("bad number '" + std::string(tok[i]) + "'", lineno);
            }
        }
        const auto cls = detection_class_from_kitti(tok[0]);
        if (!cls) continue;
        const double h = v[8], w = v[9], l = v[10], ry = v[14];
        if (!(h > 0 && w > 0 && l > 0)) throw ParseError("box dimensions must be positive", lineno);
        ObjectBox b;
        b.cls = *cls;
        b.size = {l, w, h};
        const Eigen::Vector3d bottom = cam.cam_to_volume() * Eigen::Vector3d(v[11], v[12], v[13]);
        b.center = bottom + Eigen::Vector3d(0, 0, 0.5 * h);
        const Eigen::Vector3d heading = r * Eigen::Vector3d(std::cos(ry), 0.0, -std::sin(ry));
        b.yaw = wrap_angle(std::atan2(heading.y(), heading.x()));
        sample.boxes_gt.push_back(b);
    }
    return sample;
}

DetectionSample read_kitti_boxes(const std::filesystem::path& path, const CameraModel& cam) {
    return parse_kitti_boxes(read_text_file(path), cam);
}

std::string format_kitti_boxes(const std::vector<ObjectBox>& boxes, const CameraModel& cam) {
    std::string out;
    const Eigen::Matrix3d rt = cam.volume_to_cam().linear();
    for (const auto& b : boxes) {
        const Eigen::Vector3d loc = cam.volume_to_cam() * (b.center - Eigen::Vector3d(0, 0, 0.5 * b.size.z()));
        const Eigen::Vector3d d = rt * Eigen::Vector3d(std::cos(b.yaw), std::sin(b.yaw), 0.0);
        const double ry = wrap_angle(std::atan2(-d.z(), d.x()));
        const double alpha = wrap_angle(ry - std::atan2(loc.x(), loc.z()));
        double x0 = cam.width(), y0 = cam.height(), x1 = 0, y1 = 0;
        const auto corners = b.bev_corners();
        for (const auto& c : corners) {
            for (double dz : {-0.5, 0.5}) {
                const auto p = cam.project(Eigen::Vector3d(c.x(), c.y(), b.center.z() + dz * b.size.z()));
                if (!p) continue;
                x0 = std::min(x0, p->u);
                y0 = std::min(y0, p->v);
                x1 = std::max(x1, p->u);
                y1 = std::max(y1, p->v);
            }
        }
        x0 = std::clamp(x0, 0.0, cam.width() - 1.0);
        x1 = std::clamp(x1, 0.0, cam.width() - 1.0);
        y0 = std::clamp(y0, 0.0, cam.height() - 1.0);
        y1 = std::clamp(y1, 0.0, cam.height() - 1.0);
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s 0.00 0 %.6f %.2f %.2f %.2f %.2f %.6f %.6f %.6f %.6f %.6f %.6f %.6f\n",
                      std::string(detection_class_name(b.cls)).c_str(), alpha, x0, y0, x1, y1, b.size.z(),
                      b.size.y(), b.size.x(), loc.x(), loc.y(), loc.z(), ry);
        out += buf;
    }
    return out;
}

void write_kitti_boxes(const std::filesystem::path& path, const std::vector<ObjectBox>& boxes,
                       const CameraModel& cam) {
    write_text_file(path, format_kitti_boxes(boxes, cam));
}

}  // namespace objocc::dataio
