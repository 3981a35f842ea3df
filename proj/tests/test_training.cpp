// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "objocc/core/errors.hpp"
#include "objocc/dataio/synthetic.hpp"
#include "objocc/dataio/voxel_io.hpp"
#include "objocc/training/ablation.hpp"
#include "objocc/training/trainer.hpp"

using namespace objocc;
using namespace objocc::training;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("objocc_test_training_" + name);
    fs::remove_all(p);
    return p;
}

TrainConfig tiny(const fs::path& out) {
    TrainConfig c;
    c.out_dir = out.string();
    c.seed = 3;
    c.dims = {32, 32, 4};
    c.image_width = 64;
    c.image_height = 16;
    c.depth_bins = 16;
    c.lift_channels = 4;
    c.latent_channels = 8;
    c.base_channels = 4;
    c.query_dim = 8;
    c.num_sample_points = 4;
    c.topk = 4;
    c.batch_size = 2;
    c.stage_epochs = {2, 2, 2};
    c.lr = 2e-3;
    c.resume = false;
    c.train_scenes = 2;
    c.val_scenes = 1;
    return c;
}

std::vector<dataio::Sample> scenes(const TrainConfig& c, int n, std::uint64_t seed0 = 100) {
    dataio::SyntheticOptions o;
    o.image_width = c.image_width;
    o.image_height = c.image_height;
    o.depth_bins = c.depth_bins;
    std::vector<dataio::Sample> out;
    for (int i = 0; i < n; ++i) {
        out.push_back(dataio::sample_from_scene(dataio::generate_synthetic(seed0 + i, 3, c.dims, o), std::to_string(i)));
    }
    return out;
}

std::vector<std::uint8_t> bytes_of(const nn::ParamList& params, std::string_view prefix) {
    std::vector<std::uint8_t> out;
    for (const auto& p : params) {
        if (p.name.rfind(prefix, 0) != 0) continue;
        const auto d = p.tensor.data();
        const auto* b = reinterpret_cast<const std::uint8_t*>(d.data());
        out.insert(out.end(), b, b + d.size() * sizeof(double));
    }
    return out;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

bool grad_is_zero(const nn::Tensor& t) {
    if (!t.has_grad()) return true;
    const auto g = t.grad();
    return std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; });
}

}  // namespace

TEST_CASE("config text round trip and errors") {
    TrainConfig c = tiny("/tmp/x");
    c.stage_lr = {1e-3, 0.0, 3.5e-4};
    c.fusion_mode = "concat";
    c.detection = false;
    const std::string text = config_to_text(c);
    const TrainConfig back = parse_config(text);
    CHECK(config_to_text(back) == text);
    CHECK(config_hash(back) == config_hash(c));
    CHECK(back.stage_lr[2] == 3.5e-4);
    CHECK(back.dims.h == 32);

    const TrainConfig p = parse_config("# comment\nstage_epochs = 1, 2, 3\n\nlr=0.5  # trailing\n");
    CHECK(p.stage_epochs == std::array<int, 3>{1, 2, 3});
    CHECK(p.lr == 0.5);
    CHECK(config_hash(p) != config_hash(TrainConfig{}));

    auto line_of = [](const char* text) {
        try {
            parse_config(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return -1;
    };
    CHECK(line_of("lr = 1\nbogus = 2\n") == 2);
    CHECK(line_of("lr = 1\nlr = 2\n") == 2);
    CHECK(line_of("no equals sign\n") == 1);
    CHECK(line_of("stage_epochs = 1,2\n") == 1);
    CHECK(line_of("batch_size = four\n") == 1);
    CHECK(line_of("detection = maybe\n") == 1);

    TrainConfig bad = tiny("/tmp/x");
    bad.dims = {34, 32, 4};
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = tiny("/tmp/x");
    bad.fusion_mode = "sum";
    CHECK_THROWS_AS(bad.validate(), ArgumentError);

    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("stage plans follow the three-stage schedule") {
    const TrainConfig d;
    CHECK(d.stage_epochs == std::array<int, 3>{5, 10, 10});
    CHECK(d.score_thresh == 0.2);
    CHECK(d.nms_iou == 0.7);
    CHECK(d.lr == 1e-4);

    const auto p1 = StagePlan::make(1, d);
    CHECK(p1.epochs == 5);
    CHECK(p1.trains("backbone"));
    CHECK(p1.trains("unet"));
    CHECK_FALSE(p1.trains("detection"));
    CHECK(std::find(p1.absent.begin(), p1.absent.end(), "detection") != p1.absent.end());

    const auto p2 = StagePlan::make(2, d);
    CHECK(p2.epochs == 10);
    CHECK(p2.trainable == std::vector<std::string>{"detection"});
    CHECK(std::find(p2.absent.begin(), p2.absent.end(), "unet") != p2.absent.end());

    const auto p3 = StagePlan::make(3, d);
    CHECK(p3.epochs == 10);
    CHECK(p3.nms);
    CHECK(p3.trains("backbone"));
    CHECK(p3.trains("unet"));
    CHECK(p3.trains("fusion"));
    CHECK(std::find(p3.frozen.begin(), p3.frozen.end(), "detection") != p3.frozen.end());

    TrainConfig off = d;
    off.detection = false;
    CHECK_THROWS_AS(StagePlan::make(2, off), ArgumentError);
    CHECK_FALSE(StagePlan::make(3, off).trains("fusion"));
    CHECK_THROWS_AS(StagePlan::make(4, d), ArgumentError);
}

TEST_CASE("checkpoint files round trip byte for byte") {
    const fs::path dir = scratch("ckpt");
    TrainConfig c = tiny(dir);
    OccupancyModel m(c);
    CheckpointMeta meta;
    meta.stage = 2;
    meta.epoch = 7;
    meta.steps = 70;
    meta.seed = 3;
    meta.config_hash = config_hash(c);
    meta.stage_hash = stage_hash(c, 2);
    meta.stage_epochs = {5, 10, 10};
    meta.config_text = config_to_text(c);
    const Checkpoint ck = Checkpoint::capture(meta, m.params());
    const fs::path path = checkpoint_path(dir, 2, 7);
    CHECK(path == dir / "stage2" / "epoch_007.ckpt");
    save_checkpoint(path, ck);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back == ck);
    const fs::path again = dir / "again.ckpt";
    save_checkpoint(again, back);
    CHECK(file_bytes(path) == file_bytes(again));

    auto bytes = serialize_checkpoint(ck);
    CHECK_THROWS_AS(parse_checkpoint(std::span(bytes).first(bytes.size() - 1)), FormatError);
    bytes.push_back(0);
    CHECK_THROWS_AS(parse_checkpoint(bytes), FormatError);
    bytes.pop_back();
    bytes[0] = 'X';
    CHECK_THROWS_AS(parse_checkpoint(bytes), FormatError);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), IoError);

    // Restoring into a model with other shapes is refused.
    TrainConfig wide = c;
    wide.latent_channels = 16;
    OccupancyModel other(wide);
    CHECK_THROWS_AS(ck.restore(other.params()), FormatError);
    fs::remove_all(dir);
}

TEST_CASE("stage prerequisites") {
    const fs::path dir = scratch("deps");
    TrainConfig c = tiny(dir);
    const auto data = scenes(c, 2);
    Trainer t(c, data, data);
    CHECK_THROWS_AS(t.run_stage(2), DependencyError);
    CHECK_THROWS_AS(t.run_stage(3), DependencyError);
    const std::vector<fs::path> none;
    CHECK_THROWS_AS(t.run_stage(StagePlan::make(2, c), none), DependencyError);
    const std::vector<fs::path> ghost{dir / "stage1" / "epoch_002.ckpt"};
    CHECK_THROWS_AS(t.run_stage(StagePlan::make(2, c), ghost), DependencyError);

    c.stage_epochs = {1, 1, 1};
    Trainer t1(c, data, data);
    const auto s1 = t1.run_stage(1);
    // A stage-1 checkpoint alone does not satisfy stage 3.
    CHECK_THROWS_AS(t1.run_stage(3), DependencyError);
    const std::vector<fs::path> wrong{s1.checkpoint, s1.checkpoint};
    CHECK_THROWS_AS(t1.run_stage(StagePlan::make(3, c), wrong), DependencyError);
    fs::remove_all(dir);
}

TEST_CASE("a non-finite loss stops training with the last good checkpoint") {
    const fs::path dir = scratch("nan");
    TrainConfig c = tiny(dir);
    c.detection = false;
    c.stage_epochs = {1, 0, 2};
    const auto data = scenes(c, 2);
    Trainer t(c, data, data);
    const auto s1 = t.run_stage(1);
    Checkpoint poisoned = load_checkpoint(s1.checkpoint);
    for (auto& st : poisoned.tensors) {
        if (st.name.rfind("unet", 0) == 0) std::fill(st.values.begin(), st.values.end(), std::nan(""));
    }
    const fs::path bad = dir / "poisoned" / "stage1.ckpt";
    save_checkpoint(bad, poisoned);
    const std::vector<fs::path> inputs{bad};
    try {
        t.run_stage(StagePlan::make(3, c), inputs);
        FAIL("expected a divergence error");
    } catch (const DivergenceError& e) {
        CHECK(e.last_good_checkpoint() == bad.string());
    }
    fs::remove_all(dir);
}

TEST_CASE("frozen and absent modules stay untouched") {
    const fs::path dir = scratch("freeze");
    TrainConfig c = tiny(dir);
    c.score_thresh = 0.0;
    const auto data = scenes(c, 2);
    Trainer t(c, data, data);

    std::set<std::string> checked;
    t.set_step_observer([&](const StepView& v) {
        std::set<std::string> optimized;
        for (const auto& p : v.optimized) optimized.insert(p.name);
        for (const auto& p : v.params) {
            const std::string module = p.name.substr(0, p.name.find('.'));
            const bool trains = v.plan.trains(module);
            CHECK(optimized.count(p.name) == (trains ? 1u : 0u));
            if (!trains) {
                CHECK(grad_is_zero(p.tensor));
                checked.insert(std::to_string(v.plan.stage) + module);
            }
        }
    });

    t.run_stage(1);
    const auto after1 = t.model().params();
    const auto unet1 = bytes_of(after1, "unet");
    const auto backbone1 = bytes_of(after1, "backbone");
    const auto det1 = bytes_of(after1, "detection");

    t.run_stage(2);
    const auto after2 = t.model().params();
    CHECK(bytes_of(after2, "unet") == unet1);
    CHECK(bytes_of(after2, "backbone") == backbone1);
    CHECK(bytes_of(after2, "detection") != det1);
    const auto det2 = bytes_of(after2, "detection");
    const auto fusion2 = bytes_of(after2, "fusion");

    t.run_stage(3);
    const auto after3 = t.model().params();
    CHECK(bytes_of(after3, "detection") == det2);
    CHECK(bytes_of(after3, "fusion") != fusion2);
    CHECK(bytes_of(after3, "unet") != unet1);

    CHECK(checked.count("1detection"));
    CHECK(checked.count("2unet"));
    CHECK(checked.count("2backbone"));
    CHECK(checked.count("3detection"));

    // The stage-3 checkpoint on disk agrees with the in-memory head.
    const Checkpoint ck3 = load_checkpoint(*t.latest_checkpoint(3));
    const Checkpoint ck2 = load_checkpoint(*t.latest_checkpoint(2));
    for (const auto& st : ck2.tensors) {
        if (st.name.rfind("detection", 0) == 0) CHECK(ck3.find(st.name)->values == st.values);
    }
    fs::remove_all(dir);
}

TEST_CASE("full pipeline layout, metadata and log") {
    const fs::path dir = scratch("pipeline");
    TrainConfig c = tiny(dir);
    c.stage_epochs = {5, 10, 10};
    c.stage_steps = {0, 0, 0};
    c.batch_size = 2;
    const auto data = scenes(c, 2);
    Trainer t(c, data, std::vector<dataio::Sample>(data.begin(), data.begin() + 1));
    const PipelineResult r = t.run_all();
    REQUIRE(r.stages.size() == 3);
    for (int s = 1; s <= 3; ++s) {
        const int epochs = c.stage_epochs[s - 1];
        for (int e = 1; e <= epochs; ++e) CHECK(fs::exists(checkpoint_path(dir, s, e)));
        const Checkpoint ck = load_checkpoint(checkpoint_path(dir, s, epochs));
        CHECK(ck.meta.stage == s);
        CHECK(ck.meta.epoch == epochs);
        CHECK(ck.meta.seed == c.seed);
        CHECK(ck.meta.stage_epochs == std::array<int, 3>{5, 10, 10});
        CHECK(ck.meta.config_hash == config_hash(c));
        CHECK(ck.meta.steps == epochs);
        CHECK(parse_config(ck.meta.config_text).stage_epochs == c.stage_epochs);
    }
    CHECK(fs::exists(dir / "stage1" / "report.json"));
    REQUIRE(fs::exists(r.report_path));
    const auto report = nlohmann::json::parse(dataio::read_text_file(r.report_path));
    CHECK(report["classes"].size() == 19);
    CHECK(report.contains("miou"));

    std::ifstream log(dir / "train_log.jsonl");
    std::string line;
    int lines = 0;
    std::map<int, int> per_stage;
    while (std::getline(log, line)) {
        const auto j = nlohmann::json::parse(line);
        ++lines;
        ++per_stage[j["stage"].get<int>()];
        CHECK(j.contains("step"));
        CHECK(j.contains("loss"));
        if (j["stage"] == 2) {
            CHECK(j.contains("heatmap"));
            CHECK(j.contains("reg"));
        } else {
            CHECK(j.contains("completion"));
            CHECK(j.contains("depth"));
        }
    }
    CHECK(lines == 25);
    CHECK(per_stage[1] == 5);
    CHECK(per_stage[2] == 10);
    CHECK(per_stage[3] == 10);
    fs::remove_all(dir);
}

TEST_CASE("same seed, same report") {
    std::string reports[2];
    for (int run = 0; run < 2; ++run) {
        const fs::path dir = scratch("determinism" + std::to_string(run));
        TrainConfig c = tiny(dir);
        c.stage_epochs = {2, 2, 2};
        const auto data = scenes(c, 2);
        Trainer t(c, data, data);
        const auto r = t.run_all();
        reports[run] = eval::report_to_json(r.final_report);
        fs::remove_all(dir);
    }
    CHECK(reports[0] == reports[1]);
}

TEST_CASE("resume reuses a matching final checkpoint") {
    const fs::path dir = scratch("resume");
    TrainConfig c = tiny(dir);
    c.stage_epochs = {1, 1, 1};
    c.resume = true;
    c.data_root = (dir / "data").string();
    const auto data = scenes(c, 2);
    {
        Trainer t(c, data, data);
        CHECK_FALSE(t.run_stage(1).resumed);
        CHECK(t.run_stage(1).resumed);
    }
    // Later-stage settings and the output directory do not invalidate stage 1.
    TrainConfig later = c;
    later.stage_lr[2] = 5e-4;
    later.fusion_mode = "concat";
    CHECK(stage_hash(later, 1) == stage_hash(c, 1));
    CHECK(stage_hash(later, 3) != stage_hash(c, 3));
    TrainConfig moved = c;
    moved.out_dir = (dir / "elsewhere").string();
    CHECK(stage_hash(moved, 1) == stage_hash(c, 1));
    {
        Trainer t(later, data, data);
        const auto r = t.run_stage(1);
        CHECK(r.resumed);
        const Checkpoint ck = load_checkpoint(r.checkpoint);
        CHECK(bytes_of(t.model().params(), "unet") == [&] {
            OccupancyModel m(c);
            ck.restore(m.params());
            return bytes_of(m.params(), "unet");
        }());
    }
    TrainConfig changed = c;
    changed.stage_lr[0] = 1e-3;
    Trainer t(changed, data, data);
    CHECK_FALSE(t.run_stage(1).resumed);
    fs::remove_all(dir);
}

TEST_CASE("stage 1 completion loss halves on a small corpus") {
    const fs::path dir = scratch("overfit");
    TrainConfig c = tiny(dir);
    c.stage_epochs = {50, 0, 0};
    c.batch_size = 4;
    c.lr = 5e-3;
    c.lift_channels = 8;
    c.base_channels = 8;
    c.latent_channels = 16;
    const auto data = scenes(c, 10, 500);
    Trainer t(c, data, data);
    const auto r = t.run_stage(1);
    REQUIRE(r.epochs.size() == 50);
    const double first = r.epochs.front().components.at("completion");
    const double last = r.epochs.back().components.at("completion");
    MESSAGE("completion loss " << first << " -> " << last);
    CHECK(last <= 0.5 * first);
    fs::remove_all(dir);
}

TEST_CASE("ablation settings and table") {
    TrainConfig base = tiny("/tmp/abl");
    CHECK(parse_setting("III") == Setting::kIII);
    CHECK_THROWS_AS(parse_setting("V"), ArgumentError);
    const auto s1 = setting_config(base, Setting::kI);
    const auto s2 = setting_config(base, Setting::kII);
    const auto s3 = setting_config(base, Setting::kIII);
    const auto s4 = setting_config(base, Setting::kIV);
    CHECK(s1.detection);
    CHECK(s1.fusion_mode == "deformable");
    CHECK(s2.fusion_mode == "concat");
    CHECK_FALSE(s3.detection);
    CHECK(s3.dual_decoder);
    CHECK_FALSE(s4.detection);
    CHECK_FALSE(s4.dual_decoder);
    CHECK(fs::path(s2.out_dir) == fs::path("/tmp/abl") / "setting_II");
    CHECK(s1.data_root == s4.data_root);
    // Settings sharing stage 1 share its hash, so the checkpoint can be reused.
    CHECK(stage_hash(s1, 1) == stage_hash(s2, 1));
    CHECK(stage_hash(s1, 1) == stage_hash(s3, 1));
    CHECK(stage_hash(s1, 2) == stage_hash(s2, 2));
    CHECK(stage_hash(s1, 1) != stage_hash(s4, 1));


    std::vector<eval::ClassCounts> counts(19);
    counts[0] = {1, 1, 0};   // car: 0.5
    counts[8] = {3, 0, 1};   // road: 0.75
    const auto rep = eval::MetricsReport::from_counts({2, 1, 1}, counts);
    CHECK(*background_miou(rep) == doctest::Approx(0.75));
    const std::vector<SettingResult> rows{{Setting::kI, "a", rep}, {Setting::kIV, "b", rep}};
    const std::string table = ablation_table(rows);
    CHECK(table.find("| I | deformable fusion | 50.00 | 62.50 | 50.00 | 75.00 |") != std::string::npos);
    CHECK(table.find("| IV |") != std::string::npos);
    const auto j = nlohmann::json::parse(ablation_json(rows));
    CHECK(j.size() == 2);
    CHECK(j[1]["setting"] == "IV");
}

TEST_CASE("ablation runs all four settings and shares checkpoints") {
    const fs::path dir = scratch("ablation");
    TrainConfig base = tiny(dir);
    base.stage_epochs = {1, 1, 1};
    base.resume = true;
    const auto results = run_ablation(base, {Setting::kIV, Setting::kI, Setting::kII, Setting::kIII});
    REQUIRE(results.size() == 4);
    CHECK(results[0].setting == Setting::kI);
    CHECK(fs::exists(dir / "ablation.md"));
    CHECK(fs::exists(dir / "ablation.json"));
    const auto s1 = file_bytes(checkpoint_path(dir / "setting_I", 1, 1));
    CHECK(file_bytes(checkpoint_path(dir / "setting_II", 1, 1)) == s1);
    CHECK(file_bytes(checkpoint_path(dir / "setting_III", 1, 1)) == s1);
    CHECK(file_bytes(checkpoint_path(dir / "setting_II", 2, 1)) ==
          file_bytes(checkpoint_path(dir / "setting_I", 2, 1)));
    CHECK_FALSE(fs::exists(dir / "setting_III" / "stage2"));
    CHECK(fs::exists(dir / "setting_IV" / "report.json"));
    fs::remove_all(dir);
}
