// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <vector>

#include "objocc/nn/layers.hpp"

namespace objocc::nn {

struct AdamOptions {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

// Adaptive moment estimation over a fixed parameter set. Parameters outside
// the set are never touched.
class Adam {
public:
    Adam(ParamList params, AdamOptions options);

    // Applies one update with the given learning rate using the accumulated
    // gradients divided by `grad_scale`.
    void step(double lr, double grad_scale = 1.0);
    void zero_grad();

    const ParamList& params() const { return params_; }
    long steps() const { return t_; }
    const AdamOptions& options() const { return opt_; }

private:
    ParamList params_;
    AdamOptions opt_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    long t_ = 0;
};

// Cosine decay from base_lr to 0 over total_steps.
double cosine_lr(double base_lr, long step, long total_steps);

}  // namespace objocc::nn
