// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/nn/adam.hpp"

#include <cmath>
#include <numbers>

namespace objocc::nn {

Adam::Adam(ParamList params, AdamOptions options) : params_(std::move(params)), opt_(options) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p.tensor.numel(), 0.0);
        v_.emplace_back(p.tensor.numel(), 0.0);
    }
}

void Adam::step(double lr, double grad_scale) {
    ++t_;
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Node* n = params_[i].tensor.node();
        if (n->grad.empty()) continue;
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < n->value.size(); ++j) {
            double g = n->grad[j] / grad_scale;
            if (opt_.weight_decay != 0.0) g += opt_.weight_decay * n->value[j];
            m[j] = opt_.beta1 * m[j] + (1.0 - opt_.beta1) * g;
            v[j] = opt_.beta2 * v[j] + (1.0 - opt_.beta2) * g * g;
            n->value[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + opt_.eps);
        }
    }
}

void Adam::zero_grad() { zero_grads(params_); }

double cosine_lr(double base_lr, long step, long total_steps) {
    if (total_steps <= 1) return base_lr;
    const double t = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
    return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * t));
}

}  // namespace objocc::nn
