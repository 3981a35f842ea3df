// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <filesystem>
#include <map>
#include <numeric>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "objocc/core/errors.hpp"
#include "objocc/dataio/voxel_io.hpp"
#include "objocc/eval/metrics.hpp"
#include "objocc/eval/visualize.hpp"

using namespace objocc;
using namespace objocc::eval;

namespace {

const LabelSet& L() { return LabelSet::semantic_kitti(); }
Label id(const char* name) { return *L().find(name); }

SemanticVolume volume(GridDims dims, std::vector<Label> labels) {
    return SemanticVolume(VoxelGrid{dims, 0.5, {0, 0, 0}}, std::move(labels));
}

SemanticVolume random_volume(std::mt19937_64& g, GridDims dims, double unknown_rate = 0.0) {
    std::uniform_int_distribution<int> cls(0, 19);
    std::bernoulli_distribution empty(0.5), unknown(unknown_rate);
    std::vector<Label> v(dims.count());
    for (auto& x : v) x = unknown(g) ? LabelSet::kUnknown : (empty(g) ? 0 : static_cast<Label>(cls(g)));
    return volume(dims, std::move(v));
}

// Column order of the semantic-class block of the results table.
const char* kTableOrder[] = {"car",      "truck",        "bicycle",  "motorcycle", "other-vehicle",
                             "person",   "bicyclist",    "motorcyclist", "road",   "parking",
                             "sidewalk", "other-ground", "building", "fence",      "vegetation",
                             "trunk",    "terrain",      "pole",     "traffic-sign"};

std::vector<std::optional<double>> in_label_order(const std::vector<double>& table_row) {
    std::vector<std::optional<double>> out(19);
    for (std::size_t c = 0; c < table_row.size(); ++c) out[id(kTableOrder[c]) - 1] = table_row[c];
    return out;
}

}  // namespace

TEST_CASE("identical prediction scores one everywhere") {
    std::mt19937_64 g(1);
    const auto gt = random_volume(g, {6, 5, 4}, 0.1);
    const auto r = compute_metrics(gt, gt);
    CHECK(*r.geometry_iou == 1.0);
    for (const auto& v : r.class_iou)
        if (v) CHECK(*v == 1.0);
    CHECK(*r.miou == 1.0);
}

TEST_CASE("hand-counted 2x2x1 grid") {
    const Label car = id("car"), road = id("road");
    const auto gt = volume({2, 2, 1}, {car, car, road, 0});
    const auto pred = volume({2, 2, 1}, {car, road, road, 0});
    const auto r = compute_metrics(pred, gt);
    // car: TP 1, FN 1. road: TP 1, FP 1.
    CHECK(*r.class_iou[car - 1] == doctest::Approx(0.5));
    CHECK(*r.class_iou[road - 1] == doctest::Approx(0.5));
    CHECK(r.counts[car - 1] == ClassCounts{1, 0, 1});
    CHECK(r.counts[road - 1] == ClassCounts{1, 1, 0});
    // Occupancy: three voxels occupied in both, none occupied in only one.
    CHECK(r.geometry == ClassCounts{3, 0, 0});
    CHECK(*r.geometry_iou == doctest::Approx(1.0));
    CHECK(*r.miou == doctest::Approx(0.5));
    CHECK(*r.miou_obj == doctest::Approx(0.5));
    // Mislabeling an occupied voxel as empty does lower the occupancy IoU.
    const auto r2 = compute_metrics(volume({2, 2, 1}, {car, 0, road, 0}), gt);
    CHECK(*r2.geometry_iou == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("results-table calibration of the mean IoU aggregator") {
    const std::vector<double> ours{30.40, 4.80,  7.80,  6.30,  3.50,  5.80, 3.70, 1.30, 56.00, 27.10,
                                   29.50, 7.10, 21.50, 13.30, 20.80, 8.30, 22.20, 5.90, 6.40};
    const auto m = mean_iou(in_label_order(ours));
    CHECK(std::abs(*m.miou - 14.83) <= 0.01);
    CHECK(std::abs(*m.miou_obj - 7.95) <= 0.01);
    // Independent arithmetic.
    CHECK(*m.miou == doctest::Approx(std::accumulate(ours.begin(), ours.end(), 0.0) / 19.0));
    CHECK(*m.miou_obj == doctest::Approx(std::accumulate(ours.begin(), ours.begin() + 8, 0.0) / 8.0));

    const std::vector<double> voxformer{20.80, 3.50,  1.00,  0.70,  3.70,  1.40,  2.60, 0.20, 53.90, 21.10,
                                        25.30, 5.60, 19.80, 11.10, 22.40, 7.50, 21.30, 5.10, 4.90};
    const auto v = mean_iou(in_label_order(voxformer));
    CHECK(std::abs(*v.miou_obj - 4.24) <= 0.01);
    CHECK(std::abs(*v.miou - 12.20) <= 0.01);
}

TEST_CASE("corpus aggregation sums counts before dividing") {
    const Label car = id("car");
    std::vector<ClassCounts> a(19), b(19);
    a[car - 1] = {1, 1, 0};
    b[car - 1] = {0, 0, 2};
    const MetricsReport ra = MetricsReport::from_counts({}, a);
    const MetricsReport rb = MetricsReport::from_counts({}, b);
    const std::vector<MetricsReport> both{ra, rb};
    const auto agg = aggregate_reports(both);
    CHECK(*agg.class_iou[car - 1] == doctest::Approx(0.25));
    // A per-sample mean would give (0.5 + 0) / 2 instead.
    CHECK(*ra.class_iou[car - 1] == doctest::Approx(0.5));
    CHECK(*rb.class_iou[car - 1] == 0.0);

    std::mt19937_64 g(2);
    const auto gt = random_volume(g, {4, 4, 2});
    const auto pred = random_volume(g, {4, 4, 2});
    const auto single = compute_metrics(pred, gt);
    const std::vector<MetricsReport> one{single};
    CHECK(report_to_json(aggregate_reports(one)) == report_to_json(single));

    CHECK_THROWS_AS(aggregate_reports(std::vector<MetricsReport>{}), ArgumentError);

    const auto empty = volume({2, 2, 2}, std::vector<Label>(8, 0));
    const std::vector<MetricsReport> empties{compute_metrics(empty, empty), compute_metrics(empty, empty)};
    const auto e = aggregate_reports(empties);
    CHECK_FALSE(e.geometry_iou.has_value());
    CHECK_FALSE(e.miou.has_value());
    CHECK(e.evaluated_voxels == 16);
}

TEST_CASE("metric symmetry and aggregation order") {
    std::mt19937_64 g(3);
    for (int t = 0; t < 50; ++t) {
        const auto a = random_volume(g, {5, 4, 3});
        const auto b = random_volume(g, {5, 4, 3});
        const auto ab = compute_metrics(a, b);
        const auto ba = compute_metrics(b, a);
        CHECK(ab.geometry_iou == ba.geometry_iou);
        for (std::size_t c = 0; c < 19; ++c) {
            CHECK(ab.class_iou[c] == ba.class_iou[c]);
            CHECK(ab.counts[c].fp == ba.counts[c].fn);
        }
    }
    std::vector<MetricsReport> reports;
    for (int t = 0; t < 6; ++t) reports.push_back(compute_metrics(random_volume(g, {3, 3, 2}), random_volume(g, {3, 3, 2})));
    const auto fwd = report_to_json(aggregate_reports(reports));
    std::reverse(reports.begin(), reports.end());
    CHECK(report_to_json(aggregate_reports(reports)) == fwd);
}

TEST_CASE("masked and unknown voxels do not count") {
    std::mt19937_64 g(4);
    const GridDims dims{6, 6, 2};
    const auto gt = random_volume(g, dims, 0.2);
    const auto pred = random_volume(g, dims);
    auto labels = std::vector<Label>(pred.labels().begin(), pred.labels().end());
    std::vector<std::uint8_t> invalid(dims.count(), 0);
    std::bernoulli_distribution flag(0.3);
    for (auto& m : invalid) m = flag(g);
    const auto base = report_to_json(compute_metrics(volume(dims, labels), gt, invalid));
    std::uniform_int_distribution<int> cls(0, 19);
    for (std::size_t v = 0; v < labels.size(); ++v) {
        if (!invalid[v] && gt.labels()[v] != LabelSet::kUnknown) continue;
        auto changed = labels;
        changed[v] = static_cast<Label>((changed[v] + 1 + cls(g)) % 20);
        CHECK(report_to_json(compute_metrics(volume(dims, changed), gt, invalid)) == base);
    }
    const auto r = compute_metrics(volume(dims, labels), gt, invalid);
    std::int64_t expect = 0;
    for (std::size_t v = 0; v < labels.size(); ++v) expect += !invalid[v] && gt.labels()[v] != LabelSet::kUnknown;
    CHECK(r.evaluated_voxels == expect);

    CHECK_THROWS_AS(compute_metrics(volume({2, 2, 2}, std::vector<Label>(8, 0)), gt), ShapeError);
    CHECK_THROWS_AS(compute_metrics(gt, gt, std::vector<std::uint8_t>(3, 0)), ShapeError);
}

TEST_CASE("report JSON has a fixed key order") {
    const Label car = id("car");
    const auto gt = volume({2, 2, 1}, {car, car, id("road"), 0});
    const auto text = report_to_json(compute_metrics(gt, gt));
    const auto j = nlohmann::ordered_json::parse(text);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"geometry_iou", "miou", "miou_obj", "evaluated_voxels", "geometry_counts",
                                           "classes"});
    REQUIRE(j["classes"].size() == 19);
    CHECK(j["classes"][0]["name"] == "car");
    CHECK(j["classes"][0]["iou"] == 1.0);
    CHECK(j["classes"][1]["iou"].is_null());
    CHECK(report_to_json(compute_metrics(gt, gt)) == text);
}

TEST_CASE("voxel mesh export") {
    const VoxelGrid grid{{2, 2, 2}, 0.5, {0.0, -0.5, -1.0}};
    const SemanticVolume vol(grid, {id("car"), 0, id("road"), LabelSet::kUnknown, 0, id("pole"), 0, id("person")},
                             {1, 1, 1, 1, 1, 0, 1, 1});
    const std::string ply = visualization_ply(vol);
    const auto golden = dataio::read_text_file(std::filesystem::path(OBJOCC_TEST_DATA_DIR) / "golden_viz_2x2x2.ply");
    CHECK(ply == golden);
    CHECK(visualization_ply(vol) == ply);

    const SemanticVolume empty = SemanticVolume::filled(grid, 0);
    const std::string e = visualization_ply(empty);
    CHECK(e.find("element vertex 0\n") != std::string::npos);
    CHECK(e.find("element face 0\n") != std::string::npos);
    CHECK(e.substr(e.size() - 11) == "end_header\n");

    const SemanticVolume one(grid, {id("car"), 0, 0, 0, 0, 0, 0, 0});
    const std::string o = visualization_ply(one);
    CHECK(o.find("element vertex 8\n") != std::string::npos);
    CHECK(o.find(" 100 150 245 255\n") != std::string::npos);

    const auto dir = std::filesystem::temp_directory_path() / "objocc_test_viz";
    std::filesystem::create_directories(dir);
    export_visualization(vol, {}, dir / "a.ply");
    CHECK(dataio::read_text_file(dir / "a.ply") == golden);
    CHECK_THROWS_AS(export_visualization(vol, {}, dir / "missing" / "sub" / "a.ply"), IoError);
    std::filesystem::remove_all(dir);
}
