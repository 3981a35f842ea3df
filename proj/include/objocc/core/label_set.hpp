// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace objocc {

using Label = std::uint16_t;

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    bool operator==(const Rgb&) const = default;
};

// Label taxonomy: c0 is free space, c1..cM are semantic classes and a separate
// marker flags unknown voxels (excluded from losses and metrics).
class LabelSet {
public:
    static constexpr Label kUnknown = 255;

    // 19 semantic classes + free + unknown, contiguous ids in the devkit order.
    static const LabelSet& semantic_kitti();

    int num_semantic() const { return static_cast<int>(names_.size()) - 1; }
    // M + 1: the number of predicted classes (free space included).
    int num_classes() const { return static_cast<int>(names_.size()); }
    Label empty_id() const { return 0; }
    Label unknown_id() const { return kUnknown; }
    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(Label id) const { return names_.at(id); }
    std::optional<Label> find(std::string_view name) const;

    const std::vector<Label>& foreground_ids() const { return foreground_; }
    const std::vector<Label>& background_ids() const { return background_; }
    bool is_foreground(Label id) const;

    bool is_valid(Label id) const { return id == kUnknown || id < names_.size(); }
    Rgb color(Label id) const;

    // Raw SemanticKITTI label id -> contiguous id (or unknown). Empty when the
    // raw id has no table entry.
    std::optional<Label> from_raw(std::uint16_t raw) const;
    // Contiguous id -> canonical raw id used when writing label files.
    std::uint16_t to_raw(Label id) const;

private:
    LabelSet() = default;

    std::vector<std::string> names_;
    std::vector<Label> foreground_;
    std::vector<Label> background_;
    std::vector<Rgb> palette_;
    std::array<std::int16_t, 65536> raw_to_id_{};
    std::vector<std::uint16_t> id_to_raw_;
};

// The three KITTI detection categories and their semantic counterparts.
enum class DetectionClass : int { kCar = 0, kPedestrian = 1, kCyclist = 2 };
inline constexpr int kNumDetectionClasses = 3;

std::string_view detection_class_name(DetectionClass c);
std::optional<DetectionClass> detection_class_from_kitti(std::string_view type);
// Car -> car, Pedestrian -> person, Cyclist -> bicyclist.
Label semantic_label_of(DetectionClass c);

}  // namespace objocc
