// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "objocc/core/volume.hpp"
#include "objocc/dataio/voxel_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "objocc");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = objocc::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("objocc_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<std::pair<std::string, std::string>> tree(const fs::path& root) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out.emplace_back(fs::relative(e.path(), root).string(), slurp(e.path()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

fs::path tiny_config(const fs::path& dir) {
    const fs::path cfg = dir / "tiny.cfg";
    std::ofstream(cfg) << "out_dir = " << (dir / "run").string() << "\n"
                       << "dims = 32,32,4\nimage_width = 64\nimage_height = 16\ndepth_bins = 16\n"
                       << "lift_channels = 4\nlatent_channels = 8\nbase_channels = 4\nquery_dim = 8\n"
                       << "num_sample_points = 4\ntopk = 4\nbatch_size = 2\nstage_epochs = 1,1,1\n"
                       << "train_scenes = 2\nval_scenes = 1\nseed = 11\n";
    return cfg;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    const auto none = cli({});
    CHECK(none.code == 2);
    CHECK_FALSE(none.err.empty());
    const auto unknown = cli({"synth", "--seed", "1", "--out", "/tmp/x", "--bogus"});
    CHECK(unknown.code == 2);
    CHECK(unknown.err.find("bogus") != std::string::npos);
    CHECK(cli({"train", "--stage", "4", "--config", "/dev/null"}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
    const auto help = cli({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("synth") != std::string::npos);
}

TEST_CASE("synth is deterministic and eval of identical dirs scores one") {
    const fs::path dir = scratch("synth");
    for (const char* sub : {"a", "b"}) {
        const auto r = cli({"synth", "--seed", "7", "--out", (dir / sub).string(), "--train-scenes", "2",
                            "--val-scenes", "2", "--dims", "32,32,4"});
        REQUIRE(r.code == 0);
    }
    const auto a = tree(dir / "a");
    CHECK(a.size() > 10);
    CHECK(a == tree(dir / "b"));

    const fs::path voxels = dir / "a" / "sequences" / "08" / "voxels";
    const auto r = cli({"eval", "--pred", voxels.string(), "--gt", voxels.string(), "--out", (dir / "r.json").string()});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "r.json"));
    CHECK(j["miou"].get<double>() == 1.0);
    CHECK(j["geometry_iou"].get<double>() == 1.0);

    // A prediction directory missing a frame is an error.
    const fs::path partial = dir / "partial";
    fs::create_directories(partial);
    fs::copy_file(voxels / "000000.label", partial / "000000.label");
    const auto bad = cli({"eval", "--pred", partial.string(), "--gt", voxels.string(), "--out", (dir / "x.json").string()});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("no prediction") != std::string::npos);

    const auto v = cli({"viz", "--volume", (voxels / "000000.label").string(), "--out", (dir / "v.ply").string()});
    REQUIRE(v.code == 0);
    CHECK(slurp(dir / "v.ply").rfind("ply\n", 0) == 0);
    CHECK(cli({"viz", "--volume", (voxels / "000000.label").string(), "--out", (dir / "v2.ply").string(), "--dims",
               "64,64,8"})
              .code == 1);
    fs::remove_all(dir);
}

TEST_CASE("train enforces stage order and predict reads its checkpoints") {
    const fs::path dir = scratch("train");
    const fs::path cfg = tiny_config(dir);
    const auto early = cli({"train", "--stage", "2", "--config", cfg.string()});
    CHECK(early.code != 0);
    CHECK(early.err.find("dependency") != std::string::npos);
    CHECK(early.err.find("stage-1") != std::string::npos);

    REQUIRE(cli({"train", "--stage", "1", "--config", cfg.string()}).code == 0);
    CHECK(fs::exists(dir / "run" / "stage1" / "epoch_001.ckpt"));
    const auto s2 = cli({"train", "--stage", "2", "--config", cfg.string()});
    REQUIRE(s2.code == 0);
    CHECK(s2.out.find("stage 2") != std::string::npos);
    REQUIRE(cli({"train", "--stage", "3", "--config", cfg.string()}).code == 0);

    const fs::path seq = dir / "run" / "data" / "sequences" / "08";
    const auto p = cli({"predict", "--image", (seq / "image_2" / "000000.png").string(), "--calib",
                        (seq / "calib.txt").string(), "--ckpt", (dir / "run" / "stage3" / "epoch_001.ckpt").string(),
                        "--out", (dir / "pred" / "000000.label").string(), "--viz", (dir / "pred.ply").string()});
    REQUIRE(p.code == 0);
    CHECK(fs::file_size(dir / "pred" / "000000.label") == 32u * 32u * 4u * 2u);
    CHECK(fs::exists(dir / "pred.ply"));
    const auto e = cli({"eval", "--pred", (dir / "pred").string(), "--gt", (seq / "voxels").string(), "--out",
                        (dir / "eval.json").string()});
    CHECK(e.code == 0);

    const auto bad_cfg = dir / "bad.cfg";
    std::ofstream(bad_cfg) << "lr = 1\nnot_a_key = 3\n";
    const auto b = cli({"train", "--stage", "1", "--config", bad_cfg.string()});
    CHECK(b.code == 1);
    CHECK(b.err.find("line 2") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("ablate prints one row per setting") {
    const fs::path dir = scratch("ablate");
    const fs::path cfg = tiny_config(dir);
    const auto r = cli({"ablate", "--config", cfg.string(), "--out-dir", (dir / "abl").string()});
    REQUIRE(r.code == 0);
    for (const char* row : {"| I |", "| II |", "| III |", "| IV |"}) CHECK(r.out.find(row) != std::string::npos);
    CHECK(fs::exists(dir / "abl" / "ablation.md"));
    CHECK(cli({"ablate", "--config", cfg.string(), "--settings", "V"}).code == 1);
    fs::remove_all(dir);
}
