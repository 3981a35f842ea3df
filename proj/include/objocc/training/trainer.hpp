// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "objocc/dataio/corpus.hpp"
#include "objocc/eval/metrics.hpp"
#include "objocc/training/checkpoint.hpp"
#include "objocc/training/config.hpp"
#include "objocc/training/model.hpp"

namespace objocc::training {

struct StagePlan {
    int stage = 1;
    int epochs = 0;
    // Fixed optimizer step budget; 0 runs whole epochs.
    int steps = 0;
    double lr = 1e-4;
    std::vector<std::string> trainable;
    std::vector<std::string> frozen;
    // Modules left out of the forward graph entirely.
    std::vector<std::string> absent;
    std::vector<std::string> losses;
    bool nms = false;
    bool fusion = false;

    // Stage 1 trains backbone and U-Net. Stage 2 trains the detection head
    // on the stage-1 backbone with the U-Net removed. Stage 3 freezes the
    // detection head and trains backbone, U-Net and fusion on NMS-filtered
    // detections; without a detection branch it continues stage 1.
    static StagePlan make(int stage, const TrainConfig& config);
    bool trains(std::string_view module) const;
};

struct EpochStats {
    int epoch = 0;
    long steps = 0;
    double loss = 0.0;
    std::map<std::string, double> components;
};

struct StageResult {
    int stage = 0;
    std::filesystem::path checkpoint;
    std::vector<EpochStats> epochs;
    long steps = 0;
    bool resumed = false;
};

struct PipelineResult {
    std::vector<StageResult> stages;
    eval::MetricsReport stage1_report;
    eval::MetricsReport final_report;
    std::filesystem::path report_path;
};

// Hash of the settings that influence stages up to `stage`; a checkpoint
// whose hash matches can stand in for rerunning the stage.
std::uint64_t stage_hash(const TrainConfig& config, int stage);

// Loads the train and val splits named by the config, generating the
// synthetic corpus first when needed.
std::vector<dataio::Sample> load_split(const TrainConfig& config, bool validation);

// What a step observer sees: gradients are accumulated for the batch and the
// optimizer has not yet been applied.
struct StepView {
    const StagePlan& plan;
    long step;
    const nn::ParamList& params;
    const nn::ParamList& optimized;
};

class Trainer {
public:
    explicit Trainer(TrainConfig config);
    Trainer(TrainConfig config, std::vector<dataio::Sample> train, std::vector<dataio::Sample> val);
    ~Trainer();

    const TrainConfig& config() const { return config_; }
    OccupancyModel& model() { return *model_; }
    const OccupancyModel& model() const { return *model_; }
    std::filesystem::path out_dir() const { return config_.out_dir; }

    // Runs one stage. `inputs` are the prerequisite checkpoints (stage 1 for
    // stage 2; stages 1 and 2 for stage 3, or stage 1 alone without a
    // detection branch); the last one is loaded. Throws DependencyError when
    // one is missing and DivergenceError on a non-finite loss.
    StageResult run_stage(const StagePlan& plan, std::span<const std::filesystem::path> inputs);
    // Same, resolving inputs to the newest checkpoints under out_dir and
    // reusing an existing final checkpoint when resume is on.
    StageResult run_stage(int stage);

    // Copies a finished stage's final checkpoint into out_dir.
    void import_stage(int stage, const std::filesystem::path& checkpoint);
    // Newest checkpoint of a stage under out_dir.
    std::optional<std::filesystem::path> latest_checkpoint(int stage) const;
    void load(const std::filesystem::path& checkpoint);

    eval::MetricsReport evaluate(std::span<const dataio::Sample> samples, bool with_fusion) const;
    eval::MetricsReport evaluate_validation(bool with_fusion) const { return evaluate(val_, with_fusion); }

    // Stages 1 to 3, then validation metrics. Writes stage1/report.json and
    // report.json under out_dir.
    PipelineResult run_all();

    void set_step_observer(std::function<void(const StepView&)> observer) { observer_ = std::move(observer); }

    const std::vector<dataio::Sample>& train_samples() const { return train_; }
    const std::vector<dataio::Sample>& val_samples() const { return val_; }
    const std::vector<double>& class_weights() const { return class_weights_; }

private:
    struct Cache;

    std::map<std::string, double> step_sample(const StagePlan& plan, std::size_t index, double& loss_value);
    void log_step(const StagePlan& plan, int epoch, long step, double lr, double loss,
                  const std::map<std::string, double>& components);

    TrainConfig config_;
    std::vector<dataio::Sample> train_;
    std::vector<dataio::Sample> val_;
    std::vector<double> class_weights_;
    std::unique_ptr<OccupancyModel> model_;
    std::unique_ptr<Cache> cache_;
    std::function<void(const StepView&)> observer_;
};

}  // namespace objocc::training
