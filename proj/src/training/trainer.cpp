// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "json.hpp"
#include "objocc/core/errors.hpp"
#include "objocc/dataio/image.hpp"
#include "objocc/dataio/synthetic.hpp"
#include "objocc/dataio/voxel_io.hpp"
#include "objocc/nn/adam.hpp"

namespace objocc::training {
namespace fs = std::filesystem;

namespace {

bool contains(const std::vector<std::string>& v, std::string_view s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

nn::ParamList params_of(const OccupancyModel& m, const std::vector<std::string>& modules) {
    nn::ParamList out;
    for (const auto& name : modules) {
        auto p = m.params(name);
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

int steps_per_epoch(std::size_t samples, int batch) {
    return static_cast<int>((samples + batch - 1) / batch);
}

void write_report(const fs::path& path, const eval::MetricsReport& report) {
    fs::create_directories(path.parent_path());
    dataio::write_text_file(path, eval::report_to_json(report));
}

eval::MetricsReport empty_report() {
    return eval::MetricsReport::from_counts({}, std::vector<eval::ClassCounts>(LabelSet::semantic_kitti().num_semantic()));
}

}  // namespace

StagePlan StagePlan::make(int stage, const TrainConfig& c) {
    StagePlan p;
    p.stage = stage;
    if (stage < 1 || stage > 3) throw ArgumentError("stage must be 1, 2 or 3");
    p.epochs = c.stage_epochs[stage - 1];
    p.steps = c.stage_steps[stage - 1];
    p.lr = c.stage_learning_rate(stage);
    const std::string bb(kBackbone), un(kUNet), det(kDetection), fu(kFusion);
    auto completion_losses = [&] {
        p.losses = {"completion"};
        if (c.dual_decoder && c.depth_weight > 0.0) p.losses.push_back("depth");
    };
    switch (stage) {
        case 1:
            p.trainable = {bb, un};
            p.absent = {det, fu};
            completion_losses();
            break;
        case 2:
            if (!c.detection) throw ArgumentError("stage 2 needs the detection branch");
            p.trainable = {det};
            if (c.stage2_train_backbone) p.trainable.push_back(bb);
            else p.frozen = {bb};
            p.absent = {un, fu};
            p.losses = {"heatmap", "obj", "reg", "cls"};
            break;
        case 3:
            p.trainable = {un};
            if (c.stage3_freeze_backbone) p.frozen.push_back(bb);
            else p.trainable.insert(p.trainable.begin(), bb);
            if (c.detection) {
                p.trainable.push_back(fu);
                p.frozen.push_back(det);
                p.nms = true;
                p.fusion = true;
            } else {
                p.absent = {det, fu};
            }
            completion_losses();
            break;
    }
    return p;
}

bool StagePlan::trains(std::string_view module) const { return contains(trainable, module); }

std::uint64_t stage_hash(const TrainConfig& config, int stage) {
    TrainConfig c = config;
    const TrainConfig d;
    c.data_root = fs::weakly_canonical(fs::absolute(config.data_path())).string();
    c.out_dir = d.out_dir;
    c.resume = d.resume;
    for (int s = 0; s < 3; ++s) c.stage_lr[s] = config.stage_learning_rate(s + 1);
    c.lr = d.lr;
    if (stage < 3) {
        c.fusion_mode = d.fusion_mode;
        c.num_sample_points = d.num_sample_points;
        c.query_dim = d.query_dim;
        c.score_thresh = d.score_thresh;
        c.nms_iou = d.nms_iou;
        c.stage3_freeze_backbone = d.stage3_freeze_backbone;
        c.stage_epochs[2] = c.stage_steps[2] = 0;
        c.stage_lr[2] = 0.0;
    }
    if (stage < 2) {
        c.detection = d.detection;
        c.topk = d.topk;
        c.pos_radius = d.pos_radius;
        c.neg_radius = d.neg_radius;
        c.reg_weights = d.reg_weights;
        c.heatmap_weight = d.heatmap_weight;
        c.stage2_train_backbone = d.stage2_train_backbone;
        c.stage_epochs[1] = c.stage_steps[1] = 0;
        c.stage_lr[1] = 0.0;
    }
    return fnv1a64(fmt::format("stage{}\n", stage) + config_to_text(c));
}

std::vector<dataio::Sample> load_split(const TrainConfig& config, bool validation) {
    const fs::path root = config.data_path();
    if (config.synthetic && !fs::exists(root / "sequences" / dataio::synthetic_train_sequences().front())) {
        dataio::SyntheticCorpusSpec spec;
        spec.seed = config.seed;
        spec.train_scenes = config.train_scenes;
        spec.val_scenes = config.val_scenes;
        spec.dims = config.dims;
        spec.min_objects = config.min_objects;
        spec.max_objects = config.max_objects;
        spec.scene.image_width = config.image_width;
        spec.scene.image_height = config.image_height;
        spec.scene.depth_bins = config.depth_bins;
        dataio::write_synthetic_corpus(root, spec);
    }
    dataio::CorpusOptions opt;
    opt.root = root;
    if (config.synthetic) {
        opt.sequences = validation ? dataio::synthetic_val_sequences() : dataio::synthetic_train_sequences();
        opt.grid = dataio::synthetic_grid(config.dims);
    } else {
        opt.sequences = validation ? std::vector<std::string>{"08"}
                                   : std::vector<std::string>{"00", "01", "02", "03", "04", "05", "06", "07", "09", "10"};
        std::erase_if(opt.sequences, [&](const std::string& s) { return !fs::exists(root / "sequences" / s); });
    }
    opt.image_width = config.image_width;
    opt.image_height = config.image_height;
    opt.depth_bins = config.depth_bins;
    auto samples = dataio::Corpus(opt).load_all();
    if (!validation && config.limit_train > 0 && samples.size() > static_cast<std::size_t>(config.limit_train)) {
        samples.resize(config.limit_train);
    }
    return samples;
}

struct Trainer::Cache {
    std::vector<nn::Tensor> images;
    // BEV features of the frozen stage-2 backbone.
    std::vector<nn::Tensor> bev;
};

Trainer::Trainer(TrainConfig config)
    : Trainer(config, load_split(config, false), load_split(config, true)) {}

Trainer::Trainer(TrainConfig config, std::vector<dataio::Sample> train, std::vector<dataio::Sample> val)
    : config_(std::move(config)), train_(std::move(train)), val_(std::move(val)) {
    config_.validate();
    if (train_.empty()) throw ArgumentError("the training split is empty");
    model_ = std::make_unique<OccupancyModel>(config_);
    cache_ = std::make_unique<Cache>();
    std::vector<std::uint64_t> counts;
    for (const auto& s : train_) {
        completion::accumulate_class_counts(s.voxel.volume_gt, s.voxel.invalid_mask, counts);
        cache_->images.push_back(dataio::image_to_tensor(s.voxel.rgb));
    }
    counts.resize(LabelSet::semantic_kitti().num_classes(), 0);
    class_weights_ = completion::class_weights(counts, completion::parse_class_weight_mode(config_.class_weight_mode));
}

Trainer::~Trainer() = default;

std::map<std::string, double> Trainer::step_sample(const StagePlan& plan, std::size_t index, double& loss_value) {
    const auto& s = train_[index];
    const VoxelGrid& grid = s.voxel.volume_gt.grid();
    const auto& cam = s.voxel.calib;
    OccupancyModel& m = *model_;
    std::map<std::string, double> parts;
    nn::Tensor total;

    if (plan.stage == 2) {
        nn::Tensor bev;
        if (!cache_->bev.empty()) {
            bev = cache_->bev[index];
        } else {
            bev = detection::bev_pool(m.backbone.forward(cache_->images[index], cam, grid));
        }
        nn::Tensor heat;
        {
            nn::NoGradGuard guard;
            heat = m.detection.features(bev).second;
        }
        const int k = std::min(config_.topk, grid.dims.h * grid.dims.w);
        const auto cells = detection::training_cells(heat, grid, s.boxes_gt, k);
        const auto props = m.detection.propose_at(bev, grid, cells);
        const auto target = detection::heatmap_target(s.boxes_gt, grid);
        const nn::Tensor hm = nn::scale(nn::focal_heatmap_loss(props.heatmap_logits, target), config_.heatmap_weight);
        const auto assignment =
            detection::assign_targets(props.positions, s.boxes_gt, config_.pos_radius, config_.neg_radius);
        const auto dl = detection::detection_loss(props, assignment, s.boxes_gt, config_.reg_weights);
        total = dl.no_candidates ? hm : nn::add(hm, dl.total);
        parts["heatmap"] = hm.item();
        parts["obj"] = dl.obj.item();
        parts["reg"] = dl.reg.item();
        parts["cls"] = dl.cls.item();
    } else {
        const auto out = m.backbone.run(cache_->images[index]);
        const nn::Tensor f = m.backbone.lift_volume(out, cam, grid);
        const auto enc = m.unet.encode(f);
        std::optional<nn::Tensor> update;
        if (plan.fusion) update = m.fusion.fuse(m.detect(f, grid), enc.latent, grid);
        const nn::Tensor logits = m.unet.decode(enc, update);
        total = completion::completion_loss(logits, s.voxel.volume_gt, s.voxel.invalid_mask, class_weights_);
        parts["completion"] = total.item();
        if (contains(plan.losses, "depth") && s.depth) {
            const nn::Tensor d = nn::scale(m.backbone.depth_loss(out, *s.depth, cam), config_.depth_weight);
            parts["depth"] = d.item();
            total = nn::add(total, d);
        }
    }
    loss_value = total.item();
    parts["total"] = loss_value;
    if (std::isfinite(loss_value)) total.backward();
    return parts;
}

void Trainer::log_step(const StagePlan& plan, int epoch, long step, double lr, double loss,
                       const std::map<std::string, double>& components) {
    nlohmann::ordered_json j;
    j["stage"] = plan.stage;
    j["epoch"] = epoch;
    j["step"] = step;
    j["lr"] = lr;
    j["loss"] = loss;
    for (const auto& [k, v] : components) j[k] = v;
    fs::create_directories(out_dir());
    std::ofstream f(out_dir() / "train_log.jsonl", std::ios::app);
    f << j.dump() << '\n';
}

StageResult Trainer::run_stage(const StagePlan& plan, std::span<const fs::path> inputs) {
    const std::size_t required = plan.stage == 1 ? 0 : (plan.stage == 3 && config_.detection ? 2 : 1);
    if (inputs.size() < required) {
        throw DependencyError(fmt::format("stage {} requires {} earlier checkpoint(s)", plan.stage, required));
    }
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!fs::exists(inputs[i])) {
            throw DependencyError(fmt::format("stage {} requires checkpoint {}", plan.stage, inputs[i].string()));
        }
    }
    const nn::ParamList all = model_->params();
    if (!inputs.empty()) {
        const Checkpoint in = load_checkpoint(inputs.back());
        const int expected = plan.stage == 3 && config_.detection ? 2 : 1;
        if (in.meta.stage != expected) {
            throw DependencyError(fmt::format("stage {} needs a stage-{} checkpoint, got stage {}", plan.stage,
                                              expected, in.meta.stage));
        }
        std::vector<std::string> prefixes{std::string(kBackbone), std::string(kUNet)};
        if (expected == 2) prefixes.push_back(std::string(kDetection));
        in.restore(all, prefixes);
    }
    std::string last_good = inputs.empty() ? std::string() : inputs.back().string();

    nn::set_trainable(all, false);
    const nn::ParamList trainable = params_of(*model_, plan.trainable);
    nn::set_trainable(trainable, true);
    nn::zero_grads(all);
    nn::AdamOptions ao;
    ao.lr = plan.lr;
    ao.weight_decay = config_.weight_decay;
    nn::Adam adam(trainable, ao);

    cache_->bev.clear();
    if (plan.stage == 2 && !plan.trains(kBackbone)) {
        nn::NoGradGuard guard;
        for (std::size_t i = 0; i < train_.size(); ++i) {
            const auto& s = train_[i];
            cache_->bev.push_back(detection::bev_pool(
                model_->backbone.forward(cache_->images[i], s.voxel.calib, s.voxel.volume_gt.grid())));
        }
    }

    const int batch = std::min<int>(config_.batch_size, static_cast<int>(train_.size()));
    const int per_epoch = steps_per_epoch(train_.size(), batch);
    const long total_steps = plan.steps > 0 ? plan.steps : static_cast<long>(plan.epochs) * per_epoch;
    const int epochs = plan.steps > 0 ? static_cast<int>((plan.steps + per_epoch - 1) / per_epoch) : plan.epochs;
    std::mt19937_64 order_rng(config_.seed * 1000003ull + static_cast<std::uint64_t>(plan.stage));

    StageResult result;
    result.stage = plan.stage;
    auto save = [&](int epoch) {
        CheckpointMeta meta;
        meta.stage = plan.stage;
        meta.epoch = epoch;
        meta.steps = result.steps;
        meta.seed = config_.seed;
        meta.config_hash = config_hash(config_);
        meta.stage_hash = stage_hash(config_, plan.stage);
        meta.stage_epochs = config_.stage_epochs;
        meta.config_text = config_to_text(config_);
        const fs::path path = checkpoint_path(out_dir(), plan.stage, epoch);
        save_checkpoint(path, Checkpoint::capture(meta, all));
        result.checkpoint = path;
        last_good = path.string();
    };

    std::vector<std::size_t> order(train_.size());
    for (int epoch = 1; epoch <= epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), order_rng);
        EpochStats stats;
        stats.epoch = epoch;
        int counted = 0;
        for (int b = 0; b < per_epoch && result.steps < total_steps; ++b) {
            adam.zero_grad();
            const std::size_t begin = static_cast<std::size_t>(b) * batch;
            const std::size_t end = std::min(order.size(), begin + batch);
            std::map<std::string, double> mean;
            double step_loss = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                double loss = 0.0;
                const auto parts = step_sample(plan, order[i], loss);
                if (!std::isfinite(loss)) {
                    throw DivergenceError(fmt::format("non-finite loss in stage {} epoch {} step {}", plan.stage,
                                                      epoch, result.steps + 1),
                                          last_good);
                }
                step_loss += loss;
                for (const auto& [k, v] : parts) mean[k] += v / static_cast<double>(end - begin);
            }
            step_loss /= static_cast<double>(end - begin);
            if (observer_) observer_(StepView{plan, result.steps + 1, all, adam.params()});
            const double lr = nn::cosine_lr(plan.lr, result.steps, total_steps);
            adam.step(lr, static_cast<double>(end - begin));
            ++result.steps;
            log_step(plan, epoch, result.steps, lr, step_loss, mean);
            stats.loss += step_loss;
            for (const auto& [k, v] : mean) stats.components[k] += v;
            ++counted;
        }
        if (counted > 0) {
            stats.loss /= counted;
            for (auto& [k, v] : stats.components) v /= counted;
        }
        stats.steps = result.steps;
        result.epochs.push_back(std::move(stats));
        save(epoch);
    }
    if (epochs == 0) save(0);
    adam.zero_grad();
    nn::set_trainable(all, true);
    cache_->bev.clear();
    return result;
}

std::optional<fs::path> Trainer::latest_checkpoint(int stage) const {
    const fs::path dir = out_dir() / fmt::format("stage{}", stage);
    if (!fs::is_directory(dir)) return std::nullopt;
    std::optional<fs::path> best;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (name.rfind("epoch_", 0) != 0 || e.path().extension() != ".ckpt") continue;
        if (!best || name > best->filename().string()) best = e.path();
    }
    return best;
}

void Trainer::load(const fs::path& checkpoint) { load_checkpoint(checkpoint).restore(model_->params()); }

void Trainer::import_stage(int stage, const fs::path& checkpoint) {
    const Checkpoint c = load_checkpoint(checkpoint);
    if (c.meta.stage != stage) throw DependencyError(fmt::format("{} is not a stage-{} checkpoint", checkpoint.string(), stage));
    const fs::path dst = checkpoint_path(out_dir(), stage, c.meta.epoch);
    fs::create_directories(dst.parent_path());
    fs::copy_file(checkpoint, dst, fs::copy_options::overwrite_existing);
}

StageResult Trainer::run_stage(int stage) {
    const StagePlan plan = StagePlan::make(stage, config_);
    std::vector<fs::path> inputs;
    std::vector<int> needs;
    if (stage == 2) needs = {1};
    if (stage == 3) needs = config_.detection ? std::vector<int>{1, 2} : std::vector<int>{1};
    for (int s : needs) {
        const auto p = latest_checkpoint(s);
        if (!p) {
            throw DependencyError(fmt::format("stage {} requires a stage-{} checkpoint under {}", stage, s,
                                              (out_dir() / fmt::format("stage{}", s)).string()));
        }
        inputs.push_back(*p);
    }
    if (config_.resume) {
        const int batch = std::min<int>(config_.batch_size, static_cast<int>(train_.size()));
        const int per_epoch = steps_per_epoch(train_.size(), batch);
        const int epochs = plan.steps > 0 ? (plan.steps + per_epoch - 1) / per_epoch : plan.epochs;
        const fs::path final_path = checkpoint_path(out_dir(), stage, epochs);
        if (fs::exists(final_path)) {
            const Checkpoint c = load_checkpoint(final_path);
            if (c.meta.stage == stage && c.meta.stage_hash == stage_hash(config_, stage)) {
                std::vector<std::string> prefixes{std::string(kBackbone), std::string(kUNet)};
                if (stage >= 2 && config_.detection) prefixes.push_back(std::string(kDetection));
                if (stage == 3 && config_.detection) prefixes.push_back(std::string(kFusion));
                c.restore(model_->params(), prefixes);
                StageResult r;
                r.stage = stage;
                r.checkpoint = final_path;
                r.steps = c.meta.steps;
                r.resumed = true;
                return r;
            }
        }
    }
    return run_stage(plan, inputs);
}

eval::MetricsReport Trainer::evaluate(std::span<const dataio::Sample> samples, bool with_fusion) const {
    if (samples.empty()) return empty_report();
    std::vector<eval::MetricsReport> reports;
    for (const auto& s : samples) {
        const Prediction p = model_->predict(s, with_fusion);
        reports.push_back(eval::compute_metrics(p.volume, s.voxel.volume_gt, s.voxel.invalid_mask));
    }
    return eval::aggregate_reports(reports);
}

PipelineResult Trainer::run_all() {
    PipelineResult r;
    r.stages.push_back(run_stage(1));
    r.stage1_report = evaluate_validation(false);
    write_report(out_dir() / "stage1" / "report.json", r.stage1_report);
    if (config_.detection) r.stages.push_back(run_stage(2));
    r.stages.push_back(run_stage(3));
    r.final_report = evaluate_validation(config_.detection);
    r.report_path = out_dir() / "report.json";
    write_report(r.report_path, r.final_report);
    return r;
}

}  // namespace objocc::training
