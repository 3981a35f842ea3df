// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "objocc/core/volume.hpp"
#include "objocc/nn/layers.hpp"

namespace objocc::completion {

struct UNetOptions {
    int in_channels = 8;
    // Appends normalized (i, j, k) coordinate channels to the input.
    bool coord_channels = true;
    // Width per resolution level; the last entry is the bottleneck.
    std::vector<int> channels{16, 32, 32};
    int num_classes = 20;

    // Level l gets min(latent_channels, base_channels * 2^l) channels.
    static UNetOptions from_config(int depth, int latent_channels, int base_channels = 16);
};

struct Encoded {
    std::vector<nn::Tensor> skips;  // finest first
    nn::Tensor latent;              // [C_lat, H / 2^depth, W / 2^depth, D / 2^depth]
};

class CompletionUNet {
public:
    CompletionUNet() = default;
    CompletionUNet(const UNetOptions& options, nn::Rng& rng);

    const UNetOptions& options() const { return options_; }
    int depth() const { return static_cast<int>(options_.channels.size()) - 1; }
    int latent_channels() const { return options_.channels.back(); }
    // Throws ShapeError when dims are not divisible by 2^depth.
    std::array<int, 3> latent_dims(const GridDims& dims) const;

    Encoded encode(const nn::Tensor& f3d) const;
    // `update`, when given, is added to the latent before decoding.
    nn::Tensor decode(const Encoded& enc, const std::optional<nn::Tensor>& update = std::nullopt) const;
    // Logits [num_classes, H, W, D].
    nn::Tensor complete(const nn::Tensor& f3d, const std::optional<nn::Tensor>& update = std::nullopt) const {
        return decode(encode(f3d), update);
    }

    // Number of bottleneck injections performed so far.
    long injections() const { return injections_; }
    void collect(nn::ParamList& out, const std::string& prefix = "unet") const;

private:
    UNetOptions options_;
    std::vector<nn::Conv> enc_a_;
    std::vector<nn::Conv> enc_b_;
    std::vector<nn::Conv> dec_;
    nn::Conv head_;
    mutable long injections_ = 0;
};

enum class ClassWeightMode { kLogInverse, kUniform };
// "log_inverse" or "uniform"; throws ArgumentError otherwise.
ClassWeightMode parse_class_weight_mode(std::string_view name);
std::string_view class_weight_mode_name(ClassWeightMode mode);

// kLogInverse: 1 / log(1.02 + f_c), f_c the relative frequency among counted
// voxels. kUniform: all ones.
std::vector<double> class_weights(std::span<const std::uint64_t> counts, ClassWeightMode mode);
// Counts of every class over valid (known, not invalid) voxels.
void accumulate_class_counts(const SemanticVolume& gt, std::span<const std::uint8_t> invalid,
                             std::vector<std::uint64_t>& counts);

// Class-weighted cross entropy over voxels that are neither unknown nor
// invalid. Throws UndefinedLossError when every voxel is masked.
nn::Tensor completion_loss(const nn::Tensor& logits, const SemanticVolume& gt, std::span<const std::uint8_t> invalid,
                           std::span<const double> class_weights);

}  // namespace objocc::completion
