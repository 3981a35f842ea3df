// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/dataio/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "objocc/core/errors.hpp"

namespace objocc::dataio {

namespace {

constexpr double kExtentXY = 51.2;
constexpr double kExtentZ = 6.4;

struct Cuboid {
    ObjectBox box;
    Label label = 0;
    bool is_object = false;
};

struct Layout {
    double road_center = 0.0;
    double road_half = 4.0;
    double sidewalk = 2.5;
    Label outer = 17;

    Label ground_at(double y) const {
        const double d = std::abs(y - road_center);
        if (d < road_half) return 9;
        if (d < road_half + sidewalk) return 11;
        return outer;
    }
};

std::uint8_t clamp_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

bool footprints_clear(const ObjectBox& a, const std::vector<Cuboid>& placed, double margin) {
    const double ra = 0.5 * std::hypot(a.size.x(), a.size.y());
    for (const auto& c : placed) {
        const double rb = 0.5 * std::hypot(c.box.size.x(), c.box.size.y());
        if ((a.center.head<2>() - c.box.center.head<2>()).norm() < ra + rb + margin) return false;
    }
    return true;
}

// Ray / oriented box slab test. Returns the entry parameter or +inf.
double ray_hit(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const ObjectBox& b) {
    const double c = std::cos(b.yaw), s = std::sin(b.yaw);
    const Eigen::Vector3d o = origin - b.center;
    const Eigen::Vector3d lo(c * o.x() + s * o.y(), -s * o.x() + c * o.y(), o.z());
    const Eigen::Vector3d ld(c * dir.x() + s * dir.y(), -s * dir.x() + c * dir.y(), dir.z());
    double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double h = 0.5 * b.size[a];
        if (std::abs(ld[a]) < 1e-12) {
            if (std::abs(lo[a]) > h) return std::numeric_limits<double>::infinity();
            continue;
        }
        double ta = (-h - lo[a]) / ld[a], tb = (h - lo[a]) / ld[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return std::numeric_limits<double>::infinity();
    }
    return t0 > 0.0 ? t0 : std::numeric_limits<double>::infinity();
}

}  // namespace

VoxelGrid synthetic_grid(const GridDims& dims) {
    if (dims.h <= 0 || dims.w <= 0 || dims.d <= 0) throw ShapeError("synthetic grid dims must be positive");
    const double vs = kExtentXY / dims.h;
    if (std::abs(dims.w * vs - kExtentXY) > 1e-9 || std::abs(dims.d * vs - kExtentZ) > 1e-9) {
        throw ShapeError("synthetic grid dims must keep the 8:8:1 aspect");
    }
    return VoxelGrid{dims, vs, {0.0, -25.6, -2.0}};
}

SyntheticScene generate_synthetic(std::uint64_t seed, int n_objects, const GridDims& dims,
                                  const SyntheticOptions& opt) {
    if (n_objects < 0) throw ArgumentError("n_objects must be non-negative");
    const VoxelGrid grid = synthetic_grid(dims);
    std::mt19937_64 rng(seed);
    auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };

    SyntheticScene scene;
    scene.seed = seed;
    scene.calib = CameraModel::forward_looking(opt.image_width, opt.image_height, opt.near, opt.far, opt.depth_bins);
    const CameraModel& cam = scene.calib;
    const double gz = opt.ground_z;

    Layout lay;
    lay.road_center = uni(-1.5, 1.5);
    lay.road_half = uni(3.5, 5.5);
    lay.sidewalk = uni(2.0, 3.5);
    lay.outer = coin(0.5) ? Label{17} : Label{15};

    std::vector<Cuboid> statics;
    if (opt.static_structures) {
        for (int side : {-1, 1}) {
            const double inner = lay.road_center + side * (lay.road_half + lay.sidewalk);
            double x = uni(-2.0, 4.0);
            while (x < kExtentXY) {
                const double len = uni(6.0, 15.0);
                const double setback = uni(0.5, 4.0);
                const double depth = uni(5.0, 10.0);
                const bool building = coin(0.65);
                const double h = building ? uni(4.0, 10.0) : uni(2.0, 5.0);
                Cuboid c;
                c.label = building ? 13 : 15;
                c.box.size = {len, depth, h};
                c.box.center = {x + 0.5 * len, inner + side * (setback + 0.5 * depth), gz + 0.5 * h};
                statics.push_back(c);
                x += len + uni(1.0, 5.0);
            }
            const int poles = std::uniform_int_distribution<int>(1, 4)(rng);
            for (int p = 0; p < poles; ++p) {
                Cuboid c;
                c.label = 18;
                c.box.size = {0.3, 0.3, uni(4.0, 6.0)};
                c.box.center = {uni(4.0, 48.0), inner - side * 0.4, gz + 0.5 * c.box.size.z()};
                statics.push_back(c);
            }
        }
    }

    // Objects stay inside the visible part of the grid.
    const double half_fov = std::atan(0.5 * (opt.image_width - 1) / cam.intrinsics()(0, 0));
    std::vector<Cuboid> objects;
    int attempts = 0;
    while (static_cast<int>(objects.size()) < n_objects) {
        if (++attempts > 20000) throw ArgumentError("cannot place the requested number of objects");
        const double r = uni(0.0, 1.0);
        Cuboid c;
        c.is_object = true;
        ObjectBox& b = c.box;
        double y = 0.0;
        if (r < 0.6) {
            b.cls = DetectionClass::kCar;
            b.size = {uni(3.6, 4.6), uni(1.6, 1.9), uni(1.4, 1.7)};
            y = lay.road_center + uni(-lay.road_half + 1.0, lay.road_half - 1.0);
            b.yaw = (coin(0.5) ? 0.0 : std::numbers::pi) + uni(-0.25, 0.25);
        } else if (r < 0.8) {
            b.cls = DetectionClass::kPedestrian;
            b.size = {uni(0.5, 0.8), uni(0.5, 0.7), uni(1.6, 1.9)};
            const double side = coin(0.5) ? 1.0 : -1.0;
            y = lay.road_center + side * (lay.road_half + uni(0.4, lay.sidewalk - 0.4));
            b.yaw = uni(-std::numbers::pi, std::numbers::pi);
        } else {
            b.cls = DetectionClass::kCyclist;
            b.size = {uni(1.6, 1.9), uni(0.5, 0.7), uni(1.6, 1.8)};
            const double side = coin(0.5) ? 1.0 : -1.0;
            y = lay.road_center + side * (lay.road_half - uni(0.5, 1.2));
            b.yaw = (side > 0 ? std::numbers::pi : 0.0) + uni(-0.2, 0.2);
        }
        if (b.yaw > std::numbers::pi) b.yaw -= 2 * std::numbers::pi;
        const double x = uni(5.0, 40.0);
        b.center = {x, y, gz + 0.5 * b.size.z()};
        if (std::abs(y) > 0.85 * x * std::tan(half_fov)) continue;
        if (!grid.locate(b.center)) continue;
        if (!footprints_clear(b, objects, 0.6)) continue;
        objects.push_back(c);
    }
    for (const auto& c : objects) scene.boxes_gt.push_back(c.box);

    // Poles that collide with an object are dropped.
    std::vector<Cuboid> solids;
    for (const auto& s : statics) {
        if (footprints_clear(s.box, objects, 0.3) || s.label != 18) solids.push_back(s);
    }
    const std::size_t n_static = solids.size();
    solids.insert(solids.end(), objects.begin(), objects.end());

    // Voxelization: objects over statics over ground.
    std::vector<Label> labels(grid.dims.count(), 0);
    for (int i = 0; i < dims.h; ++i) {
        for (int j = 0; j < dims.w; ++j) {
            for (int k = 0; k < dims.d; ++k) {
                const Eigen::Vector3d p = grid.center(i, j, k);
                Label l = 0;
                const double zlo = grid.origin.z() + k * grid.voxel_size;
                if (zlo <= gz && gz < zlo + grid.voxel_size) l = lay.ground_at(p.y());
                for (std::size_t s = 0; s < solids.size(); ++s) {
                    if (solids[s].box.contains(p)) l = s >= n_static ? semantic_label_of(solids[s].box.cls) : solids[s].label;
                }
                labels[grid.dims.index(i, j, k)] = l;
            }
        }
    }
    for (const auto& c : objects) {
        const auto cell = grid.locate(c.box.center);
        labels[grid.dims.index((*cell)[0], (*cell)[1], (*cell)[2])] = semantic_label_of(c.box.cls);
    }
    scene.volume_gt = SemanticVolume(grid, std::move(labels), volume_to_camera(grid, cam).fov_mask);
    scene.invalid_mask.assign(grid.dims.count(), 0);

    // Painter's rasterization: ground, then cuboids far to near.
    const auto& ls = LabelSet::semantic_kitti();
    scene.rgb = Image::blank(opt.image_width, opt.image_height);
    scene.depth = DepthMap{opt.image_width, opt.image_height,
                           std::vector<double>(static_cast<std::size_t>(opt.image_width) * opt.image_height, 0.0)};
    std::vector<Label> pix_label(scene.depth.depth.size(), LabelSet::kUnknown);
    const Eigen::Vector3d eye = cam.cam_to_volume().translation();
    auto ray = [&](int r, int col) { return Eigen::Vector3d(cam.unproject(col, r, 1.0) - eye); };
    for (int r = 0; r < opt.image_height; ++r) {
        for (int col = 0; col < opt.image_width; ++col) {
            const Eigen::Vector3d d = ray(r, col);
            if (d.z() >= 0.0) continue;
            const double t = (gz - eye.z()) / d.z();
            const Eigen::Vector3d hit = eye + t * d;
            const std::size_t px = static_cast<std::size_t>(r) * opt.image_width + col;
            pix_label[px] = lay.ground_at(hit.y());
            scene.depth.depth[px] = t;
        }
    }
    std::vector<std::size_t> order(solids.size());
    for (std::size_t s = 0; s < order.size(); ++s) order[s] = s;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return (solids[a].box.center - eye).norm() > (solids[b].box.center - eye).norm();
    });
    for (std::size_t s : order) {
        const ObjectBox& b = solids[s].box;
        const Label l = s >= n_static ? semantic_label_of(b.cls) : solids[s].label;
        double u0 = opt.image_width, v0 = opt.image_height, u1 = -1, v1 = -1;
        bool behind = false;
        for (const auto& c2 : b.bev_corners()) {
            for (double dz : {-0.5, 0.5}) {
                const auto p = cam.project(Eigen::Vector3d(c2.x(), c2.y(), b.center.z() + dz * b.size.z()));
                if (!p) {
                    behind = true;
                    continue;
                }
                u0 = std::min(u0, p->u);
                u1 = std::max(u1, p->u);
                v0 = std::min(v0, p->v);
                v1 = std::max(v1, p->v);
            }
        }
        if (behind) u0 = 0, v0 = 0, u1 = opt.image_width - 1, v1 = opt.image_height - 1;
        const int c0 = std::max(0, static_cast<int>(std::floor(u0))), c1 = std::min(opt.image_width - 1, static_cast<int>(std::ceil(u1)));
        const int r0 = std::max(0, static_cast<int>(std::floor(v0))), r1 = std::min(opt.image_height - 1, static_cast<int>(std::ceil(v1)));
        for (int r = r0; r <= r1; ++r) {
            for (int col = c0; col <= c1; ++col) {
                const double t = ray_hit(eye, ray(r, col), b);
                if (!std::isfinite(t)) continue;
                const std::size_t px = static_cast<std::size_t>(r) * opt.image_width + col;
                pix_label[px] = l;
                scene.depth.depth[px] = t;
            }
        }
    }
    std::normal_distribution<double> noise(0.0, opt.pixel_noise);
    for (std::size_t px = 0; px < pix_label.size(); ++px) {
        Rgb c = pix_label[px] == LabelSet::kUnknown ? Rgb{150, 190, 230} : ls.color(pix_label[px]);
        std::uint8_t* out = &scene.rgb.rgb[px * 3];
        out[0] = clamp_u8(c.r + noise(rng));
        out[1] = clamp_u8(c.g + noise(rng));
        out[2] = clamp_u8(c.b + noise(rng));
    }
    return scene;
}

}  // namespace objocc::dataio
