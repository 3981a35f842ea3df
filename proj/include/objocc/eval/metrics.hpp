// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "objocc/core/label_set.hpp"
#include "objocc/core/volume.hpp"

namespace objocc::eval {

struct ClassCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    bool operator==(const ClassCounts&) const = default;
};

// IoU from counts; empty when tp + fp + fn == 0.
std::optional<double> iou_of(const ClassCounts& c);

// Per-class IoU over the semantic classes 1..M (index 0 is class 1). Undefined
// classes are skipped by the means.
struct MetricsReport {
    ClassCounts geometry;
    std::vector<ClassCounts> counts;  // per semantic class, 1..M
    std::optional<double> geometry_iou;
    std::vector<std::optional<double>> class_iou;
    std::optional<double> miou;
    std::optional<double> miou_obj;
    std::int64_t evaluated_voxels = 0;

    // Rebuilds the derived fields from the counts.
    static MetricsReport from_counts(ClassCounts geometry, std::vector<ClassCounts> counts,
                                     std::int64_t evaluated_voxels = 0, const LabelSet& labels = LabelSet::semantic_kitti());
};

struct MeanIou {
    std::optional<double> miou;
    std::optional<double> miou_obj;
};

// Means over the defined entries of a per-class IoU vector in label order
// 1..M; mIoU_obj uses the label set's foreground ids.
MeanIou mean_iou(std::span<const std::optional<double>> class_iou, const LabelSet& labels = LabelSet::semantic_kitti());

// Voxels with unknown ground truth or a set invalid flag are skipped. An
// empty invalid mask means nothing is invalid. Throws ShapeError when the
// volumes or the mask disagree in size.
MetricsReport compute_metrics(const SemanticVolume& pred, const SemanticVolume& gt,
                              std::span<const std::uint8_t> invalid_mask = {},
                              const LabelSet& labels = LabelSet::semantic_kitti());

// Sums the counts, then recomputes every IoU. Throws ArgumentError when empty.
MetricsReport aggregate_reports(std::span<const MetricsReport> reports,
                                const LabelSet& labels = LabelSet::semantic_kitti());

// JSON text with a fixed key order; undefined values are written as null.
std::string report_to_json(const MetricsReport& report, const LabelSet& labels = LabelSet::semantic_kitti());

}  // namespace objocc::eval
