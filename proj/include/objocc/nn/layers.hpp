// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <random>
#include <string>
#include <vector>

#include "objocc/nn/ops.hpp"
#include "objocc/nn/tensor.hpp"

namespace objocc::nn {

using Rng = std::mt19937_64;

struct NamedParam {
    std::string name;
    Tensor tensor;
};
using ParamList = std::vector<NamedParam>;

// He-normal initialisation scaled by `gain`.
Tensor he_normal(Shape shape, int fan_in, Rng& rng, double gain = 1.0);

class Conv {
public:
    Conv() = default;
    Conv(int in, int out, const ConvSpec& spec, bool with_bias, Rng& rng, double gain = 1.0);

    Tensor operator()(const Tensor& x) const { return conv(x, weight_, bias_, spec_); }

    void collect(ParamList& out, const std::string& prefix) const;
    const Tensor& weight() const { return weight_; }
    const Tensor& bias() const { return bias_; }
    Tensor& weight() { return weight_; }
    Tensor& bias() { return bias_; }
    const ConvSpec& spec() const { return spec_; }

private:
    ConvSpec spec_;
    Tensor weight_;
    Tensor bias_;
};

class Linear {
public:
    Linear() = default;
    Linear(int in, int out, bool with_bias, Rng& rng, double gain = 1.0);

    Tensor operator()(const Tensor& x) const { return linear(x, weight_, bias_); }

    void collect(ParamList& out, const std::string& prefix) const;
    Tensor& weight() { return weight_; }
    Tensor& bias() { return bias_; }
    const Tensor& weight() const { return weight_; }
    const Tensor& bias() const { return bias_; }
    int in_features() const { return weight_.dim(0); }
    int out_features() const { return weight_.dim(1); }

private:
    Tensor weight_;  // [in, out]
    Tensor bias_;
};

// Two linear layers with a ReLU in between.
class Mlp2 {
public:
    Mlp2() = default;
    Mlp2(int in, int hidden, int out, Rng& rng);

    Tensor operator()(const Tensor& x) const { return second_(relu(first_(x))); }
    void collect(ParamList& out, const std::string& prefix) const;
    Linear& output_layer() { return second_; }

private:
    Linear first_;
    Linear second_;
};

void set_trainable(const ParamList& params, bool on);
void zero_grads(const ParamList& params);

}  // namespace objocc::nn
