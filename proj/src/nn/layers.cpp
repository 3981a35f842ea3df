// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/nn/layers.hpp"

#include <cmath>

namespace objocc::nn {

Tensor he_normal(Shape shape, int fan_in, Rng& rng, double gain) {
    const std::size_t n = numel_of(shape);
    std::normal_distribution<double> dist(0.0, gain * std::sqrt(2.0 / std::max(1, fan_in)));
    std::vector<double> values(n);
    for (auto& v : values) v = dist(rng);
    return Tensor::from(std::move(shape), std::move(values), true);
}

Conv::Conv(int in, int out, const ConvSpec& spec, bool with_bias, Rng& rng, double gain) : spec_(spec) {
    const int fan_in = in * spec.kernel[0] * spec.kernel[1] * spec.kernel[2];
    weight_ = he_normal({out, in, spec.kernel[0], spec.kernel[1], spec.kernel[2]}, fan_in, rng, gain);
    if (with_bias) bias_ = Tensor::zeros({out}, true);
}

void Conv::collect(ParamList& out, const std::string& prefix) const {
    out.push_back({prefix + ".weight", weight_});
    if (bias_.defined()) out.push_back({prefix + ".bias", bias_});
}

Linear::Linear(int in, int out, bool with_bias, Rng& rng, double gain) {
    weight_ = he_normal({in, out}, in, rng, gain);
    if (with_bias) bias_ = Tensor::zeros({out}, true);
}

void Linear::collect(ParamList& out, const std::string& prefix) const {
    out.push_back({prefix + ".weight", weight_});
    if (bias_.defined()) out.push_back({prefix + ".bias", bias_});
}

Mlp2::Mlp2(int in, int hidden, int out, Rng& rng) : first_(in, hidden, true, rng), second_(hidden, out, true, rng, 0.5) {}

void Mlp2::collect(ParamList& out, const std::string& prefix) const {
    first_.collect(out, prefix + ".fc1");
    second_.collect(out, prefix + ".fc2");
}

void set_trainable(const ParamList& params, bool on) {
    for (const auto& p : params) p.tensor.node()->requires_grad = on;
}

void zero_grads(const ParamList& params) {
    for (const auto& p : params) {
        Node* n = p.tensor.node();
        if (!n->grad.empty()) std::fill(n->grad.begin(), n->grad.end(), 0.0);
    }
}

}  // namespace objocc::nn
