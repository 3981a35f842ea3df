// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "objocc/core/errors.hpp"
#include "objocc/dataio/corpus.hpp"
#include "objocc/dataio/kitti.hpp"
#include "objocc/dataio/synthetic.hpp"
#include "objocc/dataio/voxel_io.hpp"
#include "objocc/eval/metrics.hpp"
#include "objocc/eval/visualize.hpp"
#include "objocc/training/ablation.hpp"
#include "objocc/training/trainer.hpp"

namespace objocc::cli {
namespace fs = std::filesystem;
using training::TrainConfig;

namespace {

std::string pct(const std::optional<double>& v) { return v ? fmt::format("{:.2f}", 100.0 * *v) : "-"; }

std::string summary(const eval::MetricsReport& r) {
    return fmt::format("IoU {}  mIoU {}  mIoU_obj {}", pct(r.geometry_iou), pct(r.miou), pct(r.miou_obj));
}

// Grid of a label file: meta.txt in its directory or the one above, else
// the 51.2 m extent at the given resolution.
VoxelGrid grid_for(const fs::path& label_file, const std::vector<int>& dims) {
    if (dims.size() == 3) return dataio::synthetic_grid({dims[0], dims[1], dims[2]});
    for (fs::path dir = label_file.parent_path(); !dir.empty(); dir = dir.parent_path()) {
        if (fs::exists(dir / "meta.txt")) return dataio::read_sequence_meta(dir).grid;
        if (dir == label_file.parent_path().parent_path()) break;
    }
    return VoxelGrid::semantic_kitti();
}

TrainConfig load_train_config(const std::string& path, const std::string& out_dir) {
    TrainConfig c = training::load_config(path);
    if (!out_dir.empty()) c.out_dir = out_dir;
    return c;
}

struct TrainArgs {
    std::string stage;
    std::string config;
    std::string out_dir;
};

void cmd_train(const TrainArgs& a, std::ostream& out) {
    const TrainConfig cfg = load_train_config(a.config, a.out_dir);
    training::Trainer trainer(cfg);
    auto report_stage = [&](const training::StageResult& r) {
        out << fmt::format("stage {}: {} steps{} -> {}\n", r.stage, r.steps, r.resumed ? " (resumed)" : "",
                           r.checkpoint.string());
    };
    if (a.stage == "all") {
        const auto r = trainer.run_all();
        for (const auto& s : r.stages) report_stage(s);
        out << "stage 1 only: " << summary(r.stage1_report) << '\n';
        out << "final:        " << summary(r.final_report) << '\n';
        out << "report: " << r.report_path.string() << '\n';
        return;
    }
    report_stage(trainer.run_stage(std::stoi(a.stage)));
}

struct EvalArgs {
    std::string pred;
    std::string gt;
    std::string out;
    std::vector<int> dims;
};

void cmd_eval(const EvalArgs& a, std::ostream& out) {
    std::vector<fs::path> gt_files;
    for (const auto& e : fs::recursive_directory_iterator(a.gt)) {
        if (e.is_regular_file() && e.path().extension() == ".label") gt_files.push_back(e.path());
    }
    std::sort(gt_files.begin(), gt_files.end());
    if (gt_files.empty()) throw IoError("no .label files under " + a.gt);
    std::vector<eval::MetricsReport> reports;
    for (const auto& g : gt_files) {
        fs::path p = fs::path(a.pred) / fs::relative(g, a.gt);
        if (!fs::exists(p)) p = fs::path(a.pred) / g.filename();
        if (!fs::exists(p)) throw IoError("no prediction for " + g.string());
        const VoxelGrid grid = grid_for(g, a.dims);
        const SemanticVolume gt = dataio::read_voxel_labels(g, grid);
        const SemanticVolume pred = dataio::read_voxel_labels(p, grid);
        fs::path invalid = g;
        invalid.replace_extension(".invalid");
        const auto mask = fs::exists(invalid) ? dataio::read_invalid_mask(invalid, grid.dims) : std::vector<std::uint8_t>{};
        reports.push_back(eval::compute_metrics(pred, gt, mask));
    }
    const auto agg = eval::aggregate_reports(reports);
    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    dataio::write_text_file(a.out, eval::report_to_json(agg));
    out << fmt::format("{} samples: {}\n", reports.size(), summary(agg));
}

struct PredictArgs {
    std::string image;
    std::string calib;
    std::string ckpt;
    std::string out;
    std::string viz;
};

void cmd_predict(const PredictArgs& a, std::ostream& out) {
    const training::Checkpoint ck = training::load_checkpoint(a.ckpt);
    const TrainConfig cfg = training::parse_config(ck.meta.config_text);
    training::OccupancyModel model(cfg);
    ck.restore(model.params());
    const VoxelGrid grid = cfg.synthetic ? dataio::synthetic_grid(cfg.dims) : VoxelGrid::semantic_kitti();
    dataio::CorpusOptions defaults;
    dataio::Sample s;
    s.voxel.rgb = dataio::crop(dataio::read_png(a.image), cfg.image_width, cfg.image_height);
    s.voxel.calib = dataio::read_calib(a.calib).camera(cfg.image_width, cfg.image_height, defaults.near,
                                                       defaults.far, cfg.depth_bins);
    s.voxel.volume_gt = SemanticVolume::filled(grid, 0);
    const bool fuse = ck.meta.stage == 3 && cfg.detection;
    const auto p = model.predict(s, fuse);
    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    dataio::write_voxel_labels(a.out, p.volume);
    if (!a.viz.empty()) eval::export_visualization(p.volume, {}, a.viz);
    std::size_t occupied = 0;
    for (Label l : p.volume.labels()) occupied += l != 0;
    out << fmt::format("{} occupied voxels, {} boxes -> {}\n", occupied, p.boxes.size(), a.out);
}

struct VizArgs {
    std::string volume;
    std::string out;
    std::string fov;
    std::vector<int> dims;
};

void cmd_viz(const VizArgs& a, std::ostream& out) {
    const VoxelGrid grid = grid_for(a.volume, a.dims);
    const SemanticVolume v = dataio::read_voxel_labels(a.volume, grid);
    const auto fov = a.fov.empty() ? std::vector<std::uint8_t>{} : dataio::read_invalid_mask(a.fov, grid.dims);
    eval::export_visualization(v, fov, a.out);
    out << "wrote " << a.out << '\n';
}

struct SynthArgs {
    std::uint64_t seed = 0;
    std::string out;
    int train_scenes = 64;
    int val_scenes = 16;
    std::vector<int> dims{64, 64, 8};
};

void cmd_synth(const SynthArgs& a, std::ostream& out) {
    if (a.dims.size() != 3) throw ArgumentError("--dims takes three values");
    const TrainConfig d;
    dataio::SyntheticCorpusSpec spec;
    spec.seed = a.seed;
    spec.train_scenes = a.train_scenes;
    spec.val_scenes = a.val_scenes;
    spec.dims = {a.dims[0], a.dims[1], a.dims[2]};
    spec.min_objects = d.min_objects;
    spec.max_objects = d.max_objects;
    spec.scene.image_width = d.image_width;
    spec.scene.image_height = d.image_height;
    spec.scene.depth_bins = d.depth_bins;
    dataio::write_synthetic_corpus(a.out, spec);
    out << fmt::format("wrote {} train and {} val scenes to {}\n", a.train_scenes, a.val_scenes, a.out);
}

struct AblateArgs {
    std::string config;
    std::string out_dir;
    std::vector<std::string> settings{"I", "II", "III", "IV"};
};

void cmd_ablate(const AblateArgs& a, std::ostream& out) {
    const TrainConfig cfg = load_train_config(a.config, a.out_dir);
    std::vector<training::Setting> settings;
    for (const auto& s : a.settings) settings.push_back(training::parse_setting(s));
    const auto results = training::run_ablation(cfg, settings);
    out << training::ablation_table(results);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app("Monocular semantic occupancy with an object-centric detection branch", "objocc");
    app.require_subcommand(1);

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Run training stages");
    t->add_option("--stage", train.stage, "1, 2, 3 or all")->required()->check(CLI::IsMember({"1", "2", "3", "all"}));
    t->add_option("--config", train.config, "Config file (key = value)")->required()->check(CLI::ExistingFile);
    t->add_option("--out-dir", train.out_dir, "Override out_dir");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Score predicted label files against ground truth");
    e->add_option("--pred", ev.pred, "Prediction directory")->required()->check(CLI::ExistingDirectory);
    e->add_option("--gt", ev.gt, "Ground-truth directory")->required()->check(CLI::ExistingDirectory);
    e->add_option("--out", ev.out, "Report JSON path")->required();
    e->add_option("--dims", ev.dims, "Grid dims H,W,D when no meta.txt is present")->delimiter(',')->expected(3);

    PredictArgs pr;
    auto* p = app.add_subcommand("predict", "Predict a volume from one image");
    p->add_option("--image", pr.image, "PNG image")->required()->check(CLI::ExistingFile);
    p->add_option("--calib", pr.calib, "Calibration file")->required()->check(CLI::ExistingFile);
    p->add_option("--ckpt", pr.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
    p->add_option("--out", pr.out, "Output label file")->required();
    p->add_option("--viz", pr.viz, "Also write a PLY mesh");

    VizArgs vz;
    auto* v = app.add_subcommand("viz", "Export a label volume as a PLY mesh");
    v->add_option("--volume", vz.volume, "Label file")->required()->check(CLI::ExistingFile);
    v->add_option("--out", vz.out, "PLY path")->required();
    v->add_option("--fov", vz.fov, "Bit-packed in-view mask");
    v->add_option("--dims", vz.dims, "Grid dims H,W,D when no meta.txt is present")->delimiter(',')->expected(3);

    SynthArgs sy;
    auto* s = app.add_subcommand("synth", "Write a synthetic corpus");
    s->add_option("--seed", sy.seed, "Corpus seed")->required();
    s->add_option("--out", sy.out, "Output directory")->required();
    s->add_option("--train-scenes", sy.train_scenes)->check(CLI::PositiveNumber);
    s->add_option("--val-scenes", sy.val_scenes)->check(CLI::NonNegativeNumber);
    s->add_option("--dims", sy.dims, "Grid dims H,W,D")->delimiter(',')->expected(3);

    AblateArgs ab;
    auto* a = app.add_subcommand("ablate", "Run the ablation settings and print a comparison table");
    a->add_option("--config", ab.config, "Config file")->required()->check(CLI::ExistingFile);
    a->add_option("--out-dir", ab.out_dir, "Override out_dir");
    a->add_option("--settings", ab.settings, "Subset of I,II,III,IV")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        if (ex.get_exit_code() == 0) return app.exit(ex, out, err);
        err << "objocc: " << ex.what() << "\n" << "Run with --help for usage.\n";
        return 2;
    }

    try {
        if (*t) cmd_train(train, out);
        else if (*e) cmd_eval(ev, out);
        else if (*p) cmd_predict(pr, out);
        else if (*v) cmd_viz(vz, out);
        else if (*s) cmd_synth(sy, out);
        else if (*a) cmd_ablate(ab, out);
    } catch (const DependencyError& ex) {
        err << "objocc: dependency error: " << ex.what() << '\n';
        return 1;
    } catch (const DivergenceError& ex) {
        err << "objocc: divergence: " << ex.what() << " (last good checkpoint: " << ex.last_good_checkpoint()
            << ")\n";
        return 1;
    } catch (const ParseError& ex) {
        err << "objocc: line " << ex.line() << ": " << ex.what() << '\n';
        return 1;
    } catch (const std::exception& ex) {
        err << "objocc: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace objocc::cli
