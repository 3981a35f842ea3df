// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/eval/metrics.hpp"

#include "json.hpp"

#include "objocc/core/errors.hpp"

namespace objocc::eval {

std::optional<double> iou_of(const ClassCounts& c) {
    const std::int64_t denom = c.tp + c.fp + c.fn;
    if (denom == 0) return std::nullopt;
    return static_cast<double>(c.tp) / static_cast<double>(denom);
}

MeanIou mean_iou(std::span<const std::optional<double>> class_iou, const LabelSet& labels) {
    if (class_iou.size() != static_cast<std::size_t>(labels.num_semantic())) {
        throw ShapeError("expected one IoU per semantic class");
    }
    MeanIou out;
    double sum = 0.0;
    int n = 0;
    for (const auto& v : class_iou) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    if (n > 0) out.miou = sum / n;
    sum = 0.0;
    n = 0;
    for (Label id : labels.foreground_ids()) {
        if (const auto& v = class_iou[id - 1]) {
            sum += *v;
            ++n;
        }
    }
    if (n > 0) out.miou_obj = sum / n;
    return out;
}

MetricsReport MetricsReport::from_counts(ClassCounts geometry, std::vector<ClassCounts> counts,
                                         std::int64_t evaluated_voxels, const LabelSet& labels) {
    MetricsReport r;
    r.geometry = geometry;
    r.counts = std::move(counts);
    r.evaluated_voxels = evaluated_voxels;
    r.geometry_iou = iou_of(r.geometry);
    r.class_iou.reserve(r.counts.size());
    for (const auto& c : r.counts) r.class_iou.push_back(iou_of(c));
    const MeanIou m = mean_iou(r.class_iou, labels);
    r.miou = m.miou;
    r.miou_obj = m.miou_obj;
    return r;
}

MetricsReport compute_metrics(const SemanticVolume& pred, const SemanticVolume& gt,
                              std::span<const std::uint8_t> invalid_mask, const LabelSet& labels) {
    if (pred.dims() != gt.dims()) throw ShapeError("prediction and ground truth grids differ");
    const auto p = pred.labels();
    const auto g = gt.labels();
    if (!invalid_mask.empty() && invalid_mask.size() != g.size()) throw ShapeError("invalid mask size mismatch");
    const int m = labels.num_semantic();
    std::vector<ClassCounts> counts(m);
    ClassCounts geo;
    std::int64_t evaluated = 0;
    for (std::size_t v = 0; v < g.size(); ++v) {
        const Label gl = g[v];
        if (gl == LabelSet::kUnknown || (!invalid_mask.empty() && invalid_mask[v])) continue;
        const Label pl = p[v] == LabelSet::kUnknown ? labels.empty_id() : p[v];
        ++evaluated;
        const bool go = gl != labels.empty_id();
        const bool po = pl != labels.empty_id();
        geo.tp += go && po;
        geo.fp += !go && po;
        geo.fn += go && !po;
        if (gl == pl) {
            if (go) ++counts[gl - 1].tp;
        } else {
            if (po) ++counts[pl - 1].fp;
            if (go) ++counts[gl - 1].fn;
        }
    }
    return MetricsReport::from_counts(geo, std::move(counts), evaluated, labels);
}

MetricsReport aggregate_reports(std::span<const MetricsReport> reports, const LabelSet& labels) {
    if (reports.empty()) throw ArgumentError("cannot aggregate an empty corpus");
    ClassCounts geo;
    std::vector<ClassCounts> counts(labels.num_semantic());
    std::int64_t evaluated = 0;
    for (const auto& r : reports) {
        if (r.counts.size() != counts.size()) throw ShapeError("report class count mismatch");
        geo.tp += r.geometry.tp;
        geo.fp += r.geometry.fp;
        geo.fn += r.geometry.fn;
        for (std::size_t c = 0; c < counts.size(); ++c) {
            counts[c].tp += r.counts[c].tp;
            counts[c].fp += r.counts[c].fp;
            counts[c].fn += r.counts[c].fn;
        }
        evaluated += r.evaluated_voxels;
    }
    return MetricsReport::from_counts(geo, std::move(counts), evaluated, labels);
}

std::string report_to_json(const MetricsReport& report, const LabelSet& labels) {
    using nlohmann::ordered_json;
    auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
    ordered_json j;
    j["geometry_iou"] = opt(report.geometry_iou);
    j["miou"] = opt(report.miou);
    j["miou_obj"] = opt(report.miou_obj);
    j["evaluated_voxels"] = report.evaluated_voxels;
    j["geometry_counts"] = {{"tp", report.geometry.tp}, {"fp", report.geometry.fp}, {"fn", report.geometry.fn}};
    ordered_json classes = ordered_json::array();
    for (std::size_t c = 0; c < report.counts.size(); ++c) {
        const auto& k = report.counts[c];
        ordered_json e;
        e["id"] = c + 1;
        e["name"] = labels.name(static_cast<Label>(c + 1));
        e["foreground"] = labels.is_foreground(static_cast<Label>(c + 1));
        e["iou"] = opt(report.class_iou[c]);
        e["tp"] = k.tp;
        e["fp"] = k.fp;
        e["fn"] = k.fn;
        classes.push_back(std::move(e));
    }
    j["classes"] = std::move(classes);
    return j.dump(2) + "\n";
}

}  // namespace objocc::eval
