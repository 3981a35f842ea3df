// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <span>
#include <vector>

#include "objocc/core/box.hpp"

namespace objocc::fusion {

// Intersection over union of the yaw-rotated footprints.
double rotated_bev_iou(const ObjectBox& a, const ObjectBox& b);
double rotated_bev_iou(const BoxProposal& a, const BoxProposal& b);

// Indices of the proposals that survive the objectness threshold and greedy
// NMS, in descending objectness (ties by input order). A proposal is
// suppressed when its IoU with a kept one exceeds iou_thresh. Throws
// ArgumentError for thresholds outside [0, 1].
std::vector<int> nms_indices(std::span<const BoxProposal> proposals, double score_thresh = 0.2, double iou_thresh = 0.7);
std::vector<BoxProposal> filter_and_nms(std::span<const BoxProposal> proposals, double score_thresh = 0.2,
                                        double iou_thresh = 0.7);

}  // namespace objocc::fusion
