// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "objocc/eval/metrics.hpp"
#include "objocc/training/config.hpp"

namespace objocc::training {

// I: full model. II: concatenation fusion instead of deformable attention.
// III: main branch only (no detection, no fusion). IV: main branch with a
// single decoder and uniform depth.
enum class Setting { kI, kII, kIII, kIV };

std::string setting_name(Setting s);
// "I".."IV"; throws ArgumentError otherwise.
Setting parse_setting(const std::string& name);
TrainConfig setting_config(const TrainConfig& base, Setting s);

struct SettingResult {
    Setting setting;
    std::filesystem::path out_dir;
    eval::MetricsReport report;
};

// Runs the selected settings under `<base.out_dir>/setting_<name>`. Settings
// II and III reuse the stage checkpoints of Setting I they share with it.
// Writes ablation.md and ablation.json under base.out_dir.
std::vector<SettingResult> run_ablation(const TrainConfig& base, const std::vector<Setting>& settings);

// Markdown comparison table: IoU, mIoU, foreground and background mIoU.
std::string ablation_table(const std::vector<SettingResult>& results);
std::string ablation_json(const std::vector<SettingResult>& results);

// Mean IoU over the defined background classes.
std::optional<double> background_miou(const eval::MetricsReport& report);

}  // namespace objocc::training
