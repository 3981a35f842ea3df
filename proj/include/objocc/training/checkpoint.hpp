// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "objocc/nn/layers.hpp"

namespace objocc::training {

struct CheckpointMeta {
    int stage = 0;
    int epoch = 0;
    long steps = 0;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    // Hash of the settings this stage and its predecessors depend on.
    std::uint64_t stage_hash = 0;
    std::array<int, 3> stage_epochs{0, 0, 0};
    std::string config_text;
    bool operator==(const CheckpointMeta&) const = default;
};

struct StoredTensor {
    std::string name;
    nn::Shape shape;
    std::vector<double> values;
    bool operator==(const StoredTensor&) const = default;
};

struct Checkpoint {
    CheckpointMeta meta;
    std::vector<StoredTensor> tensors;

    // Copies the current parameter values.
    static Checkpoint capture(const CheckpointMeta& meta, const nn::ParamList& params);
    const StoredTensor* find(const std::string& name) const;
    // Writes stored values into the parameters whose name starts with one of
    // the prefixes (all of them when empty). Throws FormatError for a missing
    // tensor or a shape mismatch.
    void restore(const nn::ParamList& params, std::span<const std::string> prefixes = {}) const;
    bool operator==(const Checkpoint&) const = default;
};

// Little-endian binary layout with a magic header; doubles are stored bit
// for bit.
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
// Throws FormatError on truncated or foreign data.
Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// <root>/stage{N}/epoch_NNN.ckpt
std::filesystem::path checkpoint_path(const std::filesystem::path& root, int stage, int epoch);

}  // namespace objocc::training
