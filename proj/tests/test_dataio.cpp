// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <Eigen/LU>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "objocc/core/errors.hpp"
#include "objocc/dataio/corpus.hpp"
#include "objocc/dataio/image.hpp"
#include "objocc/dataio/kitti.hpp"
#include "objocc/dataio/synthetic.hpp"
#include "objocc/dataio/voxel_io.hpp"

using namespace objocc;
using namespace objocc::dataio;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("objocc_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<std::uint8_t> raw_le16(const std::vector<std::uint16_t>& v) {
    std::vector<std::uint8_t> out;
    for (auto x : v) {
        out.push_back(x & 0xFF);
        out.push_back(x >> 8);
    }
    return out;
}

// Odometry sequence 00 calibration.
const char* kCalibText =
    "P0: 7.188560000000e+02 0.000000000000e+00 6.071928000000e+02 0.000000000000e+00 0.000000000000e+00 "
    "7.188560000000e+02 1.852157000000e+02 0.000000000000e+00 0.000000000000e+00 0.000000000000e+00 "
    "1.000000000000e+00 0.000000000000e+00\n"
    "P2: 7.188560000000e+02 0.000000000000e+00 6.071928000000e+02 4.538225000000e+01 0.000000000000e+00 "
    "7.188560000000e+02 1.852157000000e+02 -1.130887000000e-01 0.000000000000e+00 0.000000000000e+00 "
    "1.000000000000e+00 3.779761000000e-03\n"
    "Tr: 4.276802385584e-04 -9.999672484946e-01 -8.084491683471e-03 -1.198459927713e-02 "
    "-7.210626507497e-03 8.081198471645e-03 -9.999413164504e-01 -5.403984729748e-02 9.999738645903e-01 "
    "4.859485810390e-04 -7.206933692422e-03 -2.921968648686e-01\n";

}  // namespace

TEST_CASE("all-zero label file reads as empty space") {
    const VoxelGrid g{{4, 4, 2}, 0.2, {0, -25.6, -2}};
    const auto vol = decode_voxel_labels(std::vector<std::uint8_t>(64, 0), g);
    for (Label l : vol.labels()) CHECK(l == 0);
}

TEST_CASE("golden label file reproduces the reference histogram") {
    const fs::path dir = OBJOCC_TEST_DATA_DIR;
    const VoxelGrid g{{16, 16, 4}, 0.2, {0, -25.6, -2}};
    const auto vol = read_voxel_labels(dir / "golden_16x16x4.label", g);
    std::map<int, int> hist;
    for (Label l : vol.labels()) ++hist[l];
    const auto ref = nlohmann::json::parse(read_text_file(dir / "golden_16x16x4.hist.json"));
    std::map<int, int> expect;
    for (auto it = ref.begin(); it != ref.end(); ++it) expect[std::stoi(it.key())] = it.value().get<int>();
    CHECK(hist == expect);
}

TEST_CASE("label reader rejects bad files") {
    const VoxelGrid g{{4, 4, 2}, 0.2, {0, -25.6, -2}};
    CHECK_THROWS_AS(decode_voxel_labels(std::vector<std::uint8_t>(63, 0), g), FormatError);
    CHECK_THROWS_AS(decode_voxel_labels(std::vector<std::uint8_t>(62, 0), g), FormatError);
    std::vector<std::uint16_t> raw(32, 40);
    raw[5] = 7;
    CHECK_THROWS_AS(decode_voxel_labels(raw_le16(raw), g), TaxonomyError);
    raw[5] = 65535;
    CHECK(decode_voxel_labels(raw_le16(raw), g).labels()[5] == LabelSet::kUnknown);
    CHECK_THROWS_AS(read_voxel_labels("/nonexistent/x.label", g), IoError);
}

TEST_CASE("invalid mask bit order") {
    CHECK(unpack_bits(std::vector<std::uint8_t>(2, 0xFF), 16) == std::vector<std::uint8_t>(16, 1));
    const auto m = unpack_bits(std::vector<std::uint8_t>{0x80}, 8);
    CHECK(m == std::vector<std::uint8_t>{1, 0, 0, 0, 0, 0, 0, 0});
    CHECK(unpack_bits(std::vector<std::uint8_t>{0x01}, 8).back() == 1);
    CHECK_THROWS_AS(unpack_bits(std::vector<std::uint8_t>(3, 0), 16), FormatError);
    CHECK(pack_bits(std::vector<std::uint8_t>{1, 0, 1}) == std::vector<std::uint8_t>{0xA0});
}

TEST_CASE("random masks and volumes round trip bit exactly") {
    std::mt19937_64 rng(17);
    const auto& ls = LabelSet::semantic_kitti();
    const fs::path dir = scratch_dir("roundtrip");
    for (int t = 0; t < 1000; ++t) {
        const GridDims dims{1 + static_cast<int>(rng() % 9), 1 + static_cast<int>(rng() % 9),
                            1 + static_cast<int>(rng() % 5)};
        const VoxelGrid g{dims, 0.2, {0, -25.6, -2}};
        std::vector<Label> labels(dims.count());
        std::vector<std::uint8_t> mask(dims.count());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const int r = static_cast<int>(rng() % 21);
            labels[i] = r == 20 ? ls.unknown_id() : static_cast<Label>(r);
            mask[i] = rng() & 1;
        }
        const SemanticVolume vol(g, labels);
        const auto bytes = encode_voxel_labels(vol);
        CHECK(decode_voxel_labels(bytes, g) == vol);
        CHECK(encode_voxel_labels(decode_voxel_labels(bytes, g)) == bytes);
        const auto packed = pack_bits(mask);
        CHECK(unpack_bits(packed, mask.size()) == mask);
        if (t % 100 == 0) {
            write_voxel_labels(dir / "v.label", vol);
            write_invalid_mask(dir / "v.invalid", mask);
            CHECK(read_voxel_labels(dir / "v.label", g) == vol);
            CHECK(read_invalid_mask(dir / "v.invalid", dims) == mask);
            CHECK(read_file_bytes(dir / "v.invalid") == packed);
        }
    }
    const std::vector<std::uint8_t> m64 = [&] {
        std::vector<std::uint8_t> m(64);
        for (auto& b : m) b = rng() & 1;
        return m;
    }();
    CHECK(unpack_bits(pack_bits(m64), 64) == m64);
}

TEST_CASE("calibration parses both KITTI layouts") {
    const auto calib = parse_calib(kCalibText);
    CHECK(calib.p2(0, 0) == doctest::Approx(718.856));
    CHECK(calib.velo_to_cam.translation().z() == doctest::Approx(-0.2921968648686));
    const auto cam = calib.camera(1220, 370, 2.0, 50.0, 64);
    CHECK(cam.intrinsics()(0, 2) == doctest::Approx(607.1928));
    // Round trip through the writer.
    const auto again = parse_calib(format_calib(calib));
    CHECK((again.p2 - calib.p2).norm() < 1e-9);
    CHECK((again.velo_to_cam.matrix() - calib.velo_to_cam.matrix()).norm() < 1e-9);
    const std::string obj =
        "P2: 700 0 600 0 0 700 180 0 0 0 1 0\nR0_rect: 1 0 0 0 1 0 0 0 1\n"
        "Tr_velo_to_cam: 0 -1 0 0 0 0 -1 0 1 0 0 0\n";
    const auto c2 = parse_calib(obj);
    CHECK(c2.velo_to_cam.linear()(2, 0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(parse_calib("P2: 1 2 3\n"), FormatError);
    try {
        parse_calib("P2: 1 0 0 0 0 1 0 0 0 0 1 0\nTr: 1 x 0 0 0 1 0 0 0 0 1 0\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("KITTI box labels") {
    const auto calib = parse_calib(kCalibText);
    const auto cam = calib.camera(1220, 370, 2.0, 50.0, 64);
    CHECK(parse_kitti_boxes("", cam).boxes_gt.empty());
    CHECK(parse_kitti_boxes("DontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 -1000 -1000 -1000 -10\n", cam)
              .boxes_gt.empty());

    const std::string car = "Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 46.70 -1.59\n";
    const auto det = parse_kitti_boxes(car, cam);
    REQUIRE(det.boxes_gt.size() == 1);
    const auto& b = det.boxes_gt[0];
    CHECK(b.cls == DetectionClass::kCar);
    CHECK(b.size.x() == doctest::Approx(3.64));
    CHECK(b.size.y() == doctest::Approx(1.67));
    CHECK(b.size.z() == doctest::Approx(1.65));

    // Independent transform: camera-2 = [I | K^-1 p4] * Tr, then invert by hand.
    Eigen::Matrix4d tr = Eigen::Matrix4d::Identity();
    tr.topRows<3>() = calib.velo_to_cam.matrix().topRows<3>();
    Eigen::Matrix4d shift = Eigen::Matrix4d::Identity();
    shift.block<3, 1>(0, 3) = calib.p2.leftCols<3>().inverse() * calib.p2.col(3);
    const Eigen::Matrix4d v2c = shift * tr;
    Eigen::Matrix4d c2v = Eigen::Matrix4d::Identity();
    c2v.topLeftCorner<3, 3>() = v2c.topLeftCorner<3, 3>().transpose();
    c2v.block<3, 1>(0, 3) = -v2c.topLeftCorner<3, 3>().transpose() * v2c.block<3, 1>(0, 3);
    const Eigen::Vector4d bottom = c2v * Eigen::Vector4d(-0.65, 1.71, 46.70, 1.0);
    CHECK(b.center.x() == doctest::Approx(bottom.x()).epsilon(1e-9));
    CHECK(b.center.y() == doctest::Approx(bottom.y()).epsilon(1e-9));
    CHECK(b.center.z() == doctest::Approx(bottom.z() + 0.5 * 1.65).epsilon(1e-9));
    // ry = -pi/2 faces camera +z, i.e. LiDAR +x.
    CHECK(std::abs(b.yaw - (1.59 - M_PI / 2)) < 0.02);

    try {
        parse_kitti_boxes("Car 0 0 0 1 2 3 4 1 1 1 0 0 10 0\nCar 0 0 0 1 2 3\n", cam);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_kitti_boxes("Car 0 0 0 1 2 3 4 1 1 1 0 0 abc 0\n", cam), ParseError);
}

TEST_CASE("KITTI box writer inverts the reader") {
    const auto cam = CameraModel::forward_looking(160, 48);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<ObjectBox> boxes;
    for (int i = 0; i < 20; ++i) {
        ObjectBox b;
        b.cls = static_cast<DetectionClass>(i % 3);
        b.center = {20 + 10 * u(rng), 8 * u(rng), -1 + 0.2 * u(rng)};
        b.size = {2 + u(rng), 1.5 + 0.3 * u(rng), 1.6 + 0.2 * u(rng)};
        b.yaw = 3.1 * u(rng);
        boxes.push_back(b);
    }
    const auto back = parse_kitti_boxes(format_kitti_boxes(boxes, cam), cam).boxes_gt;
    REQUIRE(back.size() == boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        CHECK(back[i].cls == boxes[i].cls);
        CHECK((back[i].center - boxes[i].center).norm() < 1e-5);
        CHECK((back[i].size - boxes[i].size).norm() < 1e-5);
        CHECK(std::abs(std::remainder(back[i].yaw - boxes[i].yaw, 2 * M_PI)) < 1e-5);
    }
}

TEST_CASE("PNG and depth images round trip") {
    const fs::path dir = scratch_dir("png");
    Image im = Image::blank(7, 5);
    for (std::size_t i = 0; i < im.rgb.size(); ++i) im.rgb[i] = static_cast<std::uint8_t>(i * 37);
    write_png(dir / "a.png", im);
    CHECK(read_png(dir / "a.png") == im);
    DepthMap d{3, 2, {0.0, 1.5, 12.25, 49.99, 0.00390625, 100.0}};
    write_depth_png(dir / "d.png", d);
    const auto d2 = read_depth_png(dir / "d.png");
    REQUIRE(d2.depth.size() == 6);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(d2.depth[i] - d.depth[i]) <= 0.5 / 256.0);
    CHECK_THROWS_AS(read_depth_png(dir / "a.png"), FormatError);
    const Image c = crop(im, 4, 3);
    CHECK(c.width == 4);
    CHECK(c.pixel(2, 3)[1] == im.pixel(2, 3)[1]);
    CHECK_THROWS_AS(crop(im, 8, 3), ShapeError);
    const auto t = image_to_tensor(im);
    CHECK(t.shape() == nn::Shape{3, 5, 7, 1});
}

TEST_CASE("synthetic scene without objects has no foreground") {
    const auto s = generate_synthetic(11, 0, {64, 64, 8});
    CHECK(s.boxes_gt.empty());
    const auto& ls = LabelSet::semantic_kitti();
    for (Label l : s.volume_gt.labels()) CHECK_FALSE(ls.is_foreground(l));
    int road = 0;
    for (Label l : s.volume_gt.labels()) road += (l == 9);
    CHECK(road > 0);
}

TEST_CASE("synthetic generator is deterministic") {
    const auto a = generate_synthetic(123, 4, {64, 64, 8});
    const auto b = generate_synthetic(123, 4, {64, 64, 8});
    CHECK(encode_voxel_labels(a.volume_gt) == encode_voxel_labels(b.volume_gt));
    CHECK(a.rgb == b.rgb);
    CHECK(a.depth.depth == b.depth.depth);
    CHECK(format_kitti_boxes(a.boxes_gt, a.calib) == format_kitti_boxes(b.boxes_gt, b.calib));
    const auto c = generate_synthetic(124, 4, {64, 64, 8});
    CHECK_FALSE(a.rgb == c.rgb);
}

TEST_CASE("synthetic boxes voxelize to their class") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        for (GridDims dims : {GridDims{64, 64, 8}, GridDims{256, 256, 32}}) {
            if (dims.h == 256 && seed > 1) continue;
            const auto s = generate_synthetic(seed, 3, dims);
            REQUIRE(s.boxes_gt.size() == 3);
            const auto& g = s.volume_gt.grid();
            for (const auto& b : s.boxes_gt) {
                const Label want = semantic_label_of(b.cls);
                const auto cell = g.locate(b.center);
                REQUIRE(cell.has_value());
                CHECK(s.volume_gt.at((*cell)[0], (*cell)[1], (*cell)[2]) == want);
                // Every voxel whose center falls in the box carries the class.
                for (int i = 0; i < g.dims.h; ++i)
                    for (int j = 0; j < g.dims.w; ++j)
                        for (int k = 0; k < g.dims.d; ++k) {
                            if (b.contains(g.center(i, j, k))) CHECK(s.volume_gt.at(i, j, k) == want);
                        }
                // The box is visible.
                const auto p = s.calib.project(b.center);
                REQUIRE(p.has_value());
                CHECK(s.calib.in_image(p->u, p->v));
            }
        }
    }
}

TEST_CASE("synthetic depth agrees with the rendered geometry") {
    const auto s = generate_synthetic(3, 5, {64, 64, 8});
    int hits = 0;
    for (int r = 0; r < s.depth.height; ++r) {
        for (int c = 0; c < s.depth.width; ++c) {
            const double z = s.depth.at(r, c);
            if (z <= 0) continue;
            ++hits;
            const Eigen::Vector3d p = s.calib.unproject(c, r, z);
            const auto back = s.calib.project(p);
            CHECK(back->depth == doctest::Approx(z));
        }
    }
    CHECK(hits > s.depth.width * s.depth.height / 3);
}

TEST_CASE("synthetic corpus round trips through disk") {
    const fs::path root = scratch_dir("corpus");
    SyntheticCorpusSpec spec;
    spec.seed = 4;
    spec.train_scenes = 3;
    spec.val_scenes = 2;
    write_synthetic_corpus(root, spec);
    CorpusOptions opt;
    opt.root = root;
    opt.sequences = synthetic_train_sequences();
    const Corpus train(opt);
    REQUIRE(train.size() == 3);
    opt.sequences = synthetic_val_sequences();
    CHECK(Corpus(opt).size() == 2);

    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<int> count(spec.min_objects, spec.max_objects);
    const std::uint64_t seed0 = rng();
    const auto scene = generate_synthetic(seed0, count(rng), spec.dims, spec.scene);
    const auto sample = train.load(0);
    CHECK(sample.id == "00/000000");
    CHECK(sample.voxel.volume_gt == scene.volume_gt);
    CHECK(sample.voxel.rgb == scene.rgb);
    CHECK(sample.voxel.invalid_mask == scene.invalid_mask);
    CHECK(sample.voxel.calib.width() == 160);
    CHECK((sample.voxel.calib.intrinsics() - scene.calib.intrinsics()).norm() < 1e-9);
    REQUIRE(sample.boxes_gt.size() == scene.boxes_gt.size());
    for (std::size_t i = 0; i < scene.boxes_gt.size(); ++i) {
        CHECK((sample.boxes_gt[i].center - scene.boxes_gt[i].center).norm() < 1e-5);
    }
    REQUIRE(sample.depth.has_value());
    CHECK(sample.depth->width == 160);
}
