// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace objocc::nn {

using Shape = std::vector<int>;

std::size_t numel_of(const Shape& shape);

struct Node;
using BackwardFn = std::function<void(Node& self)>;

// A value in the computation graph. Leaves (parameters, inputs) have no
// backward function; interior nodes keep their inputs alive until the graph is
// dropped.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    BackwardFn backward;

    // Lazily sizes the gradient buffer; returns it.
    std::vector<double>& ensure_grad();
};

// Shared handle to a graph node. Copies alias the same storage, like a
// framework tensor; use clone() for a deep copy.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double v, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double v);

    bool defined() const { return static_cast<bool>(node_); }
    explicit operator bool() const { return defined(); }

    const Shape& shape() const { return node_->shape; }
    int dim(std::size_t i) const { return node_->shape.at(i); }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t numel() const { return node_->value.size(); }

    std::span<const double> data() const { return node_->value; }
    // Direct writes bypass autodiff; intended for leaves (parameters, inputs).
    std::span<double> mutable_data() { return node_->value; }
    std::span<const double> grad() const;
    std::span<double> mutable_grad() { return node_->ensure_grad(); }
    bool has_grad() const { return !node_->grad.empty(); }

    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool on) { node_->requires_grad = on; }
    void zero_grad();

    // Reverse-mode sweep from a scalar output.
    void backward() const;

    // Same values, cut from the graph.
    Tensor detach() const;
    Tensor clone() const;

    Node* node() const { return node_.get(); }
    const std::shared_ptr<Node>& node_ptr() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
    friend Tensor make_result(Shape, std::vector<double>, std::vector<Tensor>, BackwardFn);

    std::shared_ptr<Node> node_;
};

// Creates an op result. When gradients are enabled and any input requires
// grad, the node records its inputs and backward function.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs, BackwardFn backward);

bool grad_enabled();

// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

// Helper for op implementations: the input's gradient buffer if it takes one.
inline double* grad_if_needed(Node& input) {
    return input.requires_grad ? input.ensure_grad().data() : nullptr;
}

}  // namespace objocc::nn
