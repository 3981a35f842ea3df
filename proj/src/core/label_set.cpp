// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/core/label_set.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace objocc {

const LabelSet& LabelSet::semantic_kitti() {
    static const LabelSet set = [] {
        LabelSet s;
        s.names_ = {"empty",     "car",      "bicycle",  "motorcycle",   "truck",    "other-vehicle", "person",
                    "bicyclist", "motorcyclist", "road", "parking",      "sidewalk", "other-ground",  "building",
                    "fence",     "vegetation", "trunk",  "terrain",      "pole",     "traffic-sign"};
        for (Label i = 1; i <= 8; ++i) s.foreground_.push_back(i);
        for (Label i = 9; i <= 19; ++i) s.background_.push_back(i);
        s.palette_ = {{0, 0, 0},       {100, 150, 245}, {100, 230, 245}, {30, 60, 150},   {80, 30, 180},
                      {0, 0, 255},     {255, 30, 30},   {255, 40, 200},  {150, 30, 90},   {255, 0, 255},
                      {255, 150, 255}, {75, 0, 75},     {175, 0, 75},    {255, 200, 0},   {255, 120, 50},
                      {0, 175, 0},     {135, 60, 0},    {150, 240, 80},  {255, 240, 150}, {255, 0, 0}};

        // semantic-kitti.yaml learning_map
        const std::pair<std::uint16_t, Label> learning_map[] = {
            {0, 0},    {1, 0},    {10, 1},   {11, 2},   {13, 5},   {15, 3},   {16, 5},   {18, 4},   {20, 5},
            {30, 6},   {31, 7},   {32, 8},   {40, 9},   {44, 10},  {48, 11},  {49, 12},  {50, 13},  {51, 14},
            {52, 0},   {60, 9},   {70, 15},  {71, 16},  {72, 17},  {80, 18},  {81, 19},  {99, 0},   {252, 1},
            {253, 7},  {254, 6},  {255, 8},  {256, 5},  {257, 5},  {258, 4},  {259, 5},  {65535, kUnknown}};
        s.raw_to_id_.fill(-1);
        for (auto [raw, id] : learning_map) s.raw_to_id_[raw] = static_cast<std::int16_t>(id);
        // learning_map_inv
        s.id_to_raw_ = {0, 10, 11, 15, 18, 20, 30, 31, 32, 40, 44, 48, 49, 50, 51, 70, 71, 72, 80, 81};
        return s;
    }();
    return set;
}

std::optional<Label> LabelSet::find(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return static_cast<Label>(i);
    }
    return std::nullopt;
}

bool LabelSet::is_foreground(Label id) const {
    return std::find(foreground_.begin(), foreground_.end(), id) != foreground_.end();
}

Rgb LabelSet::color(Label id) const {
    if (id == kUnknown) return {128, 128, 128};
    return palette_.at(id);
}

std::optional<Label> LabelSet::from_raw(std::uint16_t raw) const {
    const std::int16_t v = raw_to_id_[raw];
    if (v < 0) return std::nullopt;
    return static_cast<Label>(v);
}

std::uint16_t LabelSet::to_raw(Label id) const {
    if (id == kUnknown) return 65535;
    return id_to_raw_.at(id);
}

std::string_view detection_class_name(DetectionClass c) {
    switch (c) {
        case DetectionClass::kCar:
            return "Car";
        case DetectionClass::kPedestrian:
            return "Pedestrian";
        case DetectionClass::kCyclist:
            return "Cyclist";
    }
    throw std::invalid_argument("bad detection class");
}

std::optional<DetectionClass> detection_class_from_kitti(std::string_view type) {
    if (type == "Car") return DetectionClass::kCar;
    if (type == "Pedestrian") return DetectionClass::kPedestrian;
    if (type == "Cyclist") return DetectionClass::kCyclist;
    return std::nullopt;
}

Label semantic_label_of(DetectionClass c) {
    switch (c) {
        case DetectionClass::kCar:
            return 1;
        case DetectionClass::kPedestrian:
            return 6;
        case DetectionClass::kCyclist:
            return 7;
    }
    throw std::invalid_argument("bad detection class");
}

}  // namespace objocc
