// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <random>

#include "doctest.h"
#include "objocc/backbone/edd.hpp"
#include "objocc/backbone/lift.hpp"
#include "objocc/core/errors.hpp"
#include "objocc/dataio/synthetic.hpp"
#include "objocc/nn/adam.hpp"
#include "objocc/nn/ops.hpp"
#include "support/gradcheck.hpp"

using namespace objocc;
using namespace objocc::backbone;
using nn::Tensor;

namespace {

// Identity extrinsics looking down +z; 2 m to 10 m in front of an 8x8 image.
CameraModel toy_camera(int size, int bins, double near = 2.0, double far = 10.0) {
    Eigen::Matrix3d k;
    k << size * 0.5, 0, 0.5 * (size - 1), 0, size * 0.5, 0.5 * (size - 1), 0, 0, 1;
    return CameraModel(k, Eigen::Isometry3d::Identity(), size, size, near, far, bins);
}

// Box of [-10, 10] x [-10, 10] x [0, 12] at 1 m so every ray stays inside.
VoxelGrid toy_grid() { return VoxelGrid{{20, 20, 12}, 1.0, {-10.0, -10.0, 0.0}}; }

Tensor random_tensor(nn::Shape shape, std::mt19937_64& rng, bool grad = false) {
    std::normal_distribution<double> d(0, 1);
    std::vector<double> v(nn::numel_of(shape));
    for (auto& x : v) x = d(rng);
    return Tensor::from(std::move(shape), std::move(v), grad);
}

Tensor one_hot_depth(int bins, int h, int w, int bin) {
    Tensor t = Tensor::zeros({bins, h, w, 1});
    for (int p = 0; p < h * w; ++p) t.mutable_data()[bin * h * w + p] = 1.0;
    return t;
}

}  // namespace

TEST_CASE("lift of a one-hot depth on one pixel fills exactly one voxel") {
    const auto cam = toy_camera(8, 4);
    const auto grid = toy_grid();
    const auto table = LiftTable::build(cam, grid, 8, 8, 1);
    Tensor content = Tensor::zeros({3, 8, 8, 1});
    const int p = 2 * 8 + 5;
    for (int c = 0; c < 3; ++c) content.mutable_data()[c * 64 + p] = c + 1.5;
    const Tensor out = lift(content, one_hot_depth(4, 8, 8, 2), table);
    const std::size_t V = grid.dims.count();
    int nonzero = 0;
    for (std::size_t v = 0; v < V; ++v) {
        if (out.data()[v] != 0.0) {
            ++nonzero;
            for (int c = 0; c < 3; ++c) CHECK(out.data()[c * V + v] == c + 1.5);
        }
    }
    CHECK(nonzero == 1);
}

TEST_CASE("lift conserves feature mass along in-grid rays") {
    const auto cam = toy_camera(8, 4);
    const auto grid = toy_grid();
    const auto table = LiftTable::build(cam, grid, 8, 8, 1);
    std::mt19937_64 rng(1);
    const Tensor content = random_tensor({5, 8, 8, 1}, rng);
    const Tensor probs = nn::softmax_dim0(random_tensor({4, 8, 8, 1}, rng));
    const std::size_t V = grid.dims.count();
    for (std::size_t p = 0; p < 64; ++p) {
        REQUIRE(table.ray_inside(p));
        Tensor single = Tensor::zeros({5, 8, 8, 1});
        for (int c = 0; c < 5; ++c) single.mutable_data()[c * 64 + p] = content.data()[c * 64 + p];
        const Tensor out = lift(single, probs, table);
        for (int c = 0; c < 5; ++c) {
            double mass = 0.0;
            for (std::size_t v = 0; v < V; ++v) mass += out.data()[c * V + v];
            CHECK(std::abs(mass - content.data()[c * 64 + p]) < 1e-5);
        }
    }
    // Uniform depth, same property.
    const Tensor uni = Tensor::full({4, 8, 8, 1}, 0.25);
    const Tensor all = lift(content, uni, table);
    for (int c = 0; c < 5; ++c) {
        double mass = 0.0, want = 0.0;
        for (std::size_t v = 0; v < V; ++v) mass += all.data()[c * V + v];
        for (int p = 0; p < 64; ++p) want += content.data()[c * 64 + p];
        CHECK(std::abs(mass - want) < 1e-5);
    }
}

TEST_CASE("lift matches a brute-force scatter on an 8x8 image with 4 bins") {
    const auto cam = toy_camera(8, 4);
    const auto grid = toy_grid();
    const auto table = LiftTable::build(cam, grid, 8, 8, 1);
    std::mt19937_64 rng(2);
    const Tensor content = random_tensor({3, 8, 8, 1}, rng);
    const Tensor probs = nn::softmax_dim0(random_tensor({4, 8, 8, 1}, rng));
    const Tensor out = lift(content, probs, table);

    // f = 4, c = 3.5; bin centers 3, 5, 7, 9 m.
    std::vector<double> oracle(3 * 20 * 20 * 12, 0.0);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            for (int b = 0; b < 4; ++b) {
                const double z = 2.0 + (b + 0.5) * 2.0;
                const double x = (j - 3.5) / 4.0 * z, y = (i - 3.5) / 4.0 * z;
                const int vi = static_cast<int>(std::floor(x + 10.0));
                const int vj = static_cast<int>(std::floor(y + 10.0));
                const int vk = static_cast<int>(std::floor(z));
                if (vi < 0 || vj < 0 || vk < 0 || vi >= 20 || vj >= 20 || vk >= 12) continue;
                const int v = (vi * 20 + vj) * 12 + vk;
                for (int c = 0; c < 3; ++c)
                    oracle[c * 4800 + v] += probs.data()[b * 64 + i * 8 + j] * content.data()[c * 64 + i * 8 + j];
            }
    for (std::size_t n = 0; n < oracle.size(); ++n) CHECK(std::abs(out.data()[n] - oracle[n]) < 1e-12);
}

TEST_CASE("lift is linear in the content") {
    const auto cam = toy_camera(8, 4);
    const auto table = LiftTable::build(cam, toy_grid(), 8, 8, 1);
    std::mt19937_64 rng(3);
    const Tensor c1 = random_tensor({2, 8, 8, 1}, rng), c2 = random_tensor({2, 8, 8, 1}, rng);
    const Tensor probs = nn::softmax_dim0(random_tensor({4, 8, 8, 1}, rng));
    const double a = 1.7, b = -0.4;
    const Tensor lhs = lift(nn::add(nn::scale(c1, a), nn::scale(c2, b)), probs, table);
    const Tensor r1 = lift(c1, probs, table), r2 = lift(c2, probs, table);
    for (std::size_t n = 0; n < lhs.numel(); ++n) {
        CHECK(std::abs(lhs.data()[n] - (a * r1.data()[n] + b * r2.data()[n])) < 1e-5);
    }
}

TEST_CASE("lift gradients match finite differences on a 4x4 case") {
    const auto cam = toy_camera(4, 3);
    const auto grid = VoxelGrid{{6, 6, 6}, 2.0, {-6.0, -6.0, 0.0}};
    const auto table = LiftTable::build(cam, grid, 4, 4, 1);
    std::mt19937_64 rng(4);
    Tensor content = random_tensor({2, 4, 4, 1}, rng, true);
    Tensor logits = random_tensor({3, 4, 4, 1}, rng, true);
    const Tensor readout = random_tensor({2, 6, 6, 6}, rng);
    auto f = [&] { return nn::sum(nn::mul(lift(content, nn::softmax_dim0(logits), table), readout)); };
    const auto rep = objocc::testing::check_gradients(f, {content, logits});
    CHECK(rep.max_rel_error < 1e-3);
    CHECK(rep.analytic_norm > 0.0);
}

TEST_CASE("depth distributions are normalized") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> scale(0.1, 30.0);
    for (int t = 0; t < 1000; ++t) {
        Tensor logits = random_tensor({16, 1, 3, 1}, rng);
        const double s = scale(rng);
        for (auto& v : logits.mutable_data()) v *= s;
        const Tensor p = nn::softmax_dim0(logits);
        for (int q = 0; q < 3; ++q) {
            double z = 0.0;
            for (int b = 0; b < 16; ++b) {
                CHECK(p.data()[b * 3 + q] >= 0.0);
                z += p.data()[b * 3 + q];
            }
            CHECK(std::abs(z - 1.0) < 1e-5);
        }
    }
    const Tensor u = nn::softmax_dim0(Tensor::full({64, 2, 2, 1}, 0.3));
    for (double v : u.data()) CHECK(v == doctest::Approx(1.0 / 64));
}

TEST_CASE("backbone shapes, finiteness and batch independence") {
    nn::Rng rng(6);
    BackboneOptions o;
    const Backbone net(o, rng);
    const Tensor zero = Tensor::zeros({3, 48, 160, 1});
    const auto out = net.run(zero);
    REQUIRE(out.content.size() == 3);
    for (int l = 0; l < 3; ++l) {
        const int s = 2 << l;
        CHECK(out.content[l].shape() == nn::Shape{16, 48 / s, 160 / s, 1});
        CHECK(out.depth_probs[l].shape() == nn::Shape{64, 48 / s, 160 / s, 1});
        for (double v : out.content[l].data()) CHECK(std::isfinite(v));
        for (double v : out.depth_probs[l].data()) CHECK(std::isfinite(v));
    }
    std::mt19937_64 g(7);
    const Tensor img = random_tensor({3, 48, 160, 1}, g);
    const auto batch = net.encode_batch({img, img});
    for (std::size_t s = 0; s < batch[0].size(); ++s) {
        CHECK(std::equal(batch[0][s].data().begin(), batch[0][s].data().end(), batch[1][s].data().begin()));
    }
    CHECK_THROWS_AS(net.run(Tensor::zeros({3, 48, 128, 1})), ShapeError);
    const auto cam = CameraModel::forward_looking(160, 48);
    const Tensor vol = net.forward(img, cam, VoxelGrid::desk());
    CHECK(vol.shape() == nn::Shape{8, 64, 64, 8});
}

TEST_CASE("encoder features are local to the receptive field") {
    nn::Rng rng(8);
    const Backbone net(BackboneOptions{}, rng);
    std::mt19937_64 g(9);
    const Tensor a = random_tensor({3, 48, 160, 1}, g);
    Tensor b = a.clone();
    const int row = 20, col = 159;
    for (int c = 0; c < 3; ++c) b.mutable_data()[(c * 48 + row) * 160 + col] += 5.0;
    const Tensor fa = net.encode(a)[0], fb = net.encode(b)[0];
    const int H = fa.dim(1), W = fa.dim(2);
    int changed = 0;
    for (int ch = 0; ch < fa.dim(0); ++ch)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                const std::size_t n = (static_cast<std::size_t>(ch) * H + i) * W + j;
                const bool differs = fa.data()[n] != fb.data()[n];
                if (differs) {
                    ++changed;
                    // Stem (3x3, stride 2) plus two 3x3 convs at stride 2.
                    CHECK(std::abs(2 * j - col) <= 5);
                    CHECK(std::abs(2 * i - row) <= 5);
                }
            }
    CHECK(changed > 0);
}

TEST_CASE("content gradient reaches the encoder") {
    nn::Rng rng(10);
    const Backbone net(BackboneOptions{}, rng);
    nn::ParamList params;
    net.collect(params);
    std::mt19937_64 g(11);
    const auto out = net.run(random_tensor({3, 48, 160, 1}, g));
    nn::sum(nn::mul(out.content[0], out.content[0])).backward();
    double norm = 0.0;
    for (const auto& p : params) {
        if (p.name.rfind("backbone.encoder.down0", 0) == 0 && p.tensor.has_grad()) {
            for (double v : p.tensor.grad()) norm += v * v;
        }
    }
    CHECK(norm > 0.0);
}

TEST_CASE("single decoder mode yields uniform depth") {
    nn::Rng rng(12);
    BackboneOptions o;
    o.dual_decoder = false;
    const Backbone net(o, rng);
    const auto out = net.run(Tensor::zeros({3, 48, 160, 1}));
    CHECK(out.depth_logits.empty());
    for (double v : out.depth_probs[1].data()) CHECK(v == doctest::Approx(1.0 / 64));
    nn::ParamList params;
    net.collect(params);
    for (const auto& p : params) CHECK(p.name.find("depth") == std::string::npos);
}

TEST_CASE("depth decoder overfits one synthetic scene") {
    const auto scene = dataio::generate_synthetic(21, 4, {64, 64, 8});
    nn::Rng rng(13);
    const Backbone net(BackboneOptions{}, rng);
    nn::ParamList params;
    net.collect(params);
    nn::Adam opt(params, {.lr = 3e-3});
    const Tensor image = dataio::image_to_tensor(scene.rgb);
    const auto targets = Backbone::depth_targets(scene.depth, scene.calib, 24, 80, 2);
    double acc = 0.0;
    for (int step = 0; step < 400; ++step) {
        opt.zero_grad();
        const auto out = net.run(image);
        net.depth_loss(out, scene.depth, scene.calib).backward();
        opt.step(nn::cosine_lr(3e-3, step, 400));
        if (step % 50 == 49 || step == 399) {
            const Tensor& p = out.depth_probs[0];
            int hit = 0, total = 0;
            for (std::size_t q = 0; q < targets.size(); ++q) {
                if (targets[q] < 0) continue;
                int best = 0;
                for (int b = 1; b < 64; ++b) {
                    if (p.data()[b * targets.size() + q] > p.data()[best * targets.size() + q]) best = b;
                }
                hit += best == targets[q];
                ++total;
            }
            acc = static_cast<double>(hit) / total;
            if (acc >= 0.9) break;
        }
    }
    MESSAGE("depth argmax accuracy " << acc);
    CHECK(acc >= 0.9);
}
