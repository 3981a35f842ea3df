// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/completion/unet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "objocc/core/errors.hpp"
#include "objocc/nn/ops.hpp"

namespace objocc::completion {

using nn::Conv;
using nn::ConvSpec;
using nn::Tensor;

namespace {

Tensor coordinate_grid(int h, int w, int d) {
    const std::size_t n = static_cast<std::size_t>(h) * w * d;
    std::vector<double> v(3 * n);
    auto norm = [](int i, int size) { return size > 1 ? 2.0 * i / (size - 1) - 1.0 : 0.0; };
    std::size_t idx = 0;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int k = 0; k < d; ++k, ++idx) {
                v[idx] = norm(i, h);
                v[n + idx] = norm(j, w);
                v[2 * n + idx] = norm(k, d);
            }
    return Tensor::from({3, h, w, d}, std::move(v));
}

}  // namespace

CompletionUNet::CompletionUNet(const UNetOptions& o, nn::Rng& rng) : options_(o) {
    if (o.channels.size() < 2) throw ArgumentError("U-Net needs at least one downsampling level");
    int in = o.in_channels + (o.coord_channels ? 3 : 0);
    for (std::size_t l = 0; l < o.channels.size(); ++l) {
        const int c = o.channels[l];
        enc_a_.emplace_back(in, c, ConvSpec::cube(3, l == 0 ? 1 : 2), true, rng);
        enc_b_.emplace_back(c, c, ConvSpec::cube(3), true, rng);
        in = c;
    }
    // dec_[0] fuses the bottleneck into the next finer level.
    for (int l = static_cast<int>(o.channels.size()) - 2; l >= 0; --l) {
        dec_.emplace_back(o.channels[l + 1] + o.channels[l], o.channels[l], ConvSpec::cube(3), true, rng);
    }
    head_ = Conv(o.channels.front(), o.num_classes, ConvSpec::cube(1), true, rng);
}

std::array<int, 3> CompletionUNet::latent_dims(const GridDims& dims) const {
    const int f = 1 << depth();
    if (dims.h % f || dims.w % f || dims.d % f) {
        throw ShapeError("volume dims must be divisible by " + std::to_string(f));
    }
    return {dims.h / f, dims.w / f, dims.d / f};
}

Encoded CompletionUNet::encode(const Tensor& f3d) const {
    if (f3d.rank() != 4 || f3d.dim(0) != options_.in_channels) throw ShapeError("feature volume has the wrong channels");
    latent_dims({f3d.dim(1), f3d.dim(2), f3d.dim(3)});
    Tensor x = options_.coord_channels ? nn::concat({f3d, coordinate_grid(f3d.dim(1), f3d.dim(2), f3d.dim(3))}) : f3d;
    Encoded enc;
    for (std::size_t l = 0; l < enc_a_.size(); ++l) {
        x = nn::relu(enc_b_[l](nn::relu(enc_a_[l](x))));
        if (l + 1 < enc_a_.size()) enc.skips.push_back(x);
    }
    enc.latent = x;
    return enc;
}

Tensor CompletionUNet::decode(const Encoded& enc, const std::optional<Tensor>& update) const {
    Tensor x = enc.latent;
    if (update) {
        if (update->shape() != x.shape()) throw ShapeError("fused update does not match the latent shape");
        x = nn::add(x, *update);
        ++injections_;
    }
    for (std::size_t u = 0; u < dec_.size(); ++u) {
        const Tensor& skip = enc.skips[enc.skips.size() - 1 - u];
        x = nn::upsample_nearest(x, {skip.dim(1), skip.dim(2), skip.dim(3)});
        x = nn::relu(dec_[u](nn::concat({x, skip})));
    }
    return head_(x);
}

void CompletionUNet::collect(nn::ParamList& out, const std::string& prefix) const {
    for (std::size_t l = 0; l < enc_a_.size(); ++l) {
        enc_a_[l].collect(out, prefix + ".enc" + std::to_string(l) + ".a");
        enc_b_[l].collect(out, prefix + ".enc" + std::to_string(l) + ".b");
    }
    for (std::size_t u = 0; u < dec_.size(); ++u) dec_[u].collect(out, prefix + ".dec" + std::to_string(u));
    head_.collect(out, prefix + ".head");
}

UNetOptions UNetOptions::from_config(int depth, int latent_channels, int base_channels) {
    if (depth < 1 || depth > 8) throw ArgumentError("unet_depth must be between 1 and 8");
    if (latent_channels < 1 || base_channels < 1) throw ArgumentError("U-Net channel counts must be positive");
    UNetOptions o;
    o.channels.clear();
    for (int l = 0; l < depth; ++l) o.channels.push_back(std::min(latent_channels, base_channels << l));
    o.channels.push_back(latent_channels);
    return o;
}

ClassWeightMode parse_class_weight_mode(std::string_view name) {
    if (name == "log_inverse") return ClassWeightMode::kLogInverse;
    if (name == "uniform") return ClassWeightMode::kUniform;
    throw ArgumentError("unknown class_weight_mode '" + std::string(name) + "'");
}

std::string_view class_weight_mode_name(ClassWeightMode mode) {
    return mode == ClassWeightMode::kUniform ? "uniform" : "log_inverse";
}

std::vector<double> class_weights(std::span<const std::uint64_t> counts, ClassWeightMode mode) {
    if (mode == ClassWeightMode::kUniform) return std::vector<double>(counts.size(), 1.0);
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    std::vector<double> w(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c) {
        const double f = total > 0 ? counts[c] / total : 0.0;
        w[c] = 1.0 / std::log(1.02 + f);
    }
    return w;
}

void accumulate_class_counts(const SemanticVolume& gt, std::span<const std::uint8_t> invalid,
                             std::vector<std::uint64_t>& counts) {
    const auto labels = gt.labels();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == LabelSet::kUnknown || (!invalid.empty() && invalid[i])) continue;
        if (labels[i] >= counts.size()) counts.resize(labels[i] + 1, 0);
        ++counts[labels[i]];
    }
}

Tensor completion_loss(const Tensor& logits, const SemanticVolume& gt, std::span<const std::uint8_t> invalid,
                       std::span<const double> class_weights) {
    const auto& d = gt.dims();
    if (logits.rank() != 4 || logits.dim(1) != d.h || logits.dim(2) != d.w || logits.dim(3) != d.d) {
        throw ShapeError("logits do not match the ground-truth volume");
    }
    if (!invalid.empty() && invalid.size() != d.count()) throw ShapeError("invalid mask does not match the volume");
    const auto labels = gt.labels();
    std::vector<int> targets(labels.size());
    std::vector<std::uint8_t> mask(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool ok = labels[i] != LabelSet::kUnknown && (invalid.empty() || !invalid[i]);
        mask[i] = ok;
        targets[i] = ok ? labels[i] : 0;
    }
    return nn::weighted_cross_entropy(logits, targets, mask, class_weights);
}

}  // namespace objocc::completion
