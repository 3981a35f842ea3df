// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/training/ablation.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "json.hpp"
#include "objocc/core/errors.hpp"
#include "objocc/dataio/voxel_io.hpp"
#include "objocc/training/trainer.hpp"

namespace objocc::training {
namespace fs = std::filesystem;

std::string setting_name(Setting s) {
    switch (s) {
        case Setting::kI: return "I";
        case Setting::kII: return "II";
        case Setting::kIII: return "III";
        case Setting::kIV: return "IV";
    }
    return "?";
}

Setting parse_setting(const std::string& name) {
    for (Setting s : {Setting::kI, Setting::kII, Setting::kIII, Setting::kIV}) {
        if (setting_name(s) == name) return s;
    }
    throw ArgumentError("unknown ablation setting '" + name + "'");
}

TrainConfig setting_config(const TrainConfig& base, Setting s) {
    TrainConfig c = base;
    c.out_dir = (fs::path(base.out_dir) / ("setting_" + setting_name(s))).string();
    c.data_root = base.data_path().string();
    switch (s) {
        case Setting::kI:
            c.detection = true;
            c.fusion_mode = "deformable";
            break;
        case Setting::kII:
            c.detection = true;
            c.fusion_mode = "concat";
            break;
        case Setting::kIII:
            c.detection = false;
            break;
        case Setting::kIV:
            c.detection = false;
            c.dual_decoder = false;
            break;
    }
    return c;
}

std::optional<double> background_miou(const eval::MetricsReport& report) {
    const auto& labels = LabelSet::semantic_kitti();
    double sum = 0.0;
    int n = 0;
    for (Label id : labels.background_ids()) {
        if (const auto& v = report.class_iou.at(id - 1)) {
            sum += *v;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

std::vector<SettingResult> run_ablation(const TrainConfig& base, const std::vector<Setting>& settings) {
    std::vector<SettingResult> results;
    std::optional<fs::path> shared1, shared2;
    auto ordered = settings;
    std::stable_sort(ordered.begin(), ordered.end());
    ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());
    for (Setting s : ordered) {
        const TrainConfig cfg = setting_config(base, s);
        Trainer trainer(cfg);
        if (s == Setting::kII || s == Setting::kIII) {
            if (shared1) trainer.import_stage(1, *shared1);
            if (s == Setting::kII && shared2) trainer.import_stage(2, *shared2);
        }
        const PipelineResult r = trainer.run_all();
        if (s == Setting::kI) {
            shared1 = trainer.latest_checkpoint(1);
            shared2 = trainer.latest_checkpoint(2);
        }
        results.push_back({s, cfg.out_dir, r.final_report});
    }
    fs::create_directories(base.out_dir);
    dataio::write_text_file(fs::path(base.out_dir) / "ablation.md", ablation_table(results));
    dataio::write_text_file(fs::path(base.out_dir) / "ablation.json", ablation_json(results));
    return results;
}

namespace {

std::string pct(const std::optional<double>& v) { return v ? fmt::format("{:.2f}", 100.0 * *v) : "-"; }

const char* describe(Setting s) {
    switch (s) {
        case Setting::kI: return "deformable fusion";
        case Setting::kII: return "concat fusion";
        case Setting::kIII: return "no detection";
        case Setting::kIV: return "no detection, single decoder";
    }
    return "";
}

}  // namespace

std::string ablation_table(const std::vector<SettingResult>& results) {
    std::string out = "| Setting | Variant | IoU | mIoU | mIoU_obj | mIoU_bg |\n|---|---|---|---|---|---|\n";
    for (const auto& r : results) {
        out += fmt::format("| {} | {} | {} | {} | {} | {} |\n", setting_name(r.setting), describe(r.setting),
                           pct(r.report.geometry_iou), pct(r.report.miou), pct(r.report.miou_obj),
                           pct(background_miou(r.report)));
    }
    return out;
}

std::string ablation_json(const std::vector<SettingResult>& results) {
    using nlohmann::ordered_json;
    auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
    ordered_json rows = ordered_json::array();
    for (const auto& r : results) {
        ordered_json j;
        j["setting"] = setting_name(r.setting);
        j["variant"] = describe(r.setting);
        j["geometry_iou"] = opt(r.report.geometry_iou);
        j["miou"] = opt(r.report.miou);
        j["miou_obj"] = opt(r.report.miou_obj);
        j["miou_bg"] = opt(background_miou(r.report));
        j["out_dir"] = r.out_dir.string();
        rows.push_back(std::move(j));
    }
    return rows.dump(2) + "\n";
}

}  // namespace objocc::training
