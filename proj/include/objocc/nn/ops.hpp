// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "objocc/nn/tensor.hpp"

// Differentiable primitives. Spatial tensors are laid out [C, S0, S1, S2]; 2D
// maps use S2 == 1. Row tensors are [n, d].

namespace objocc::nn {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor sum(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);

// Concatenation along dimension 0; trailing dimensions must agree.
Tensor concat(const std::vector<Tensor>& parts);

struct ConvSpec {
    std::array<int, 3> kernel{3, 3, 3};
    std::array<int, 3> stride{1, 1, 1};
    std::array<int, 3> pad{1, 1, 1};

    static ConvSpec cube(int k, int stride = 1) { return {{k, k, k}, {stride, stride, stride}, {k / 2, k / 2, k / 2}}; }
    static ConvSpec planar(int k, int stride = 1) { return {{k, k, 1}, {stride, stride, 1}, {k / 2, k / 2, 0}}; }
    std::array<int, 3> output_dims(const std::array<int, 3>& in) const;
};

// x [C, S0, S1, S2], w [O, C, k0, k1, k2], bias [O] or undefined.
Tensor conv(const Tensor& x, const Tensor& w, const Tensor& bias, const ConvSpec& spec);

// Nearest-neighbour resize of the spatial dims: src = floor(dst * in / out).
Tensor upsample_nearest(const Tensor& x, const std::array<int, 3>& out_dims);

// Softmax across dimension 0 independently at every trailing position.
Tensor softmax_dim0(const Tensor& x);

// [C, S0, S1, S2] -> [C, S0, S1, 1], mean over the last axis.
Tensor mean_last(const Tensor& x);

// x [C, S0, S1, 1]; cells are flat (i * S1 + j) indices. Returns [n, C].
Tensor gather_cells(const Tensor& x, std::span<const int> cells);

// x [n, in] * w [in, out] + bias [out].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);

Tensor select_rows(const Tensor& x, std::span<const int> rows);

// Row-wise softmax of [n, k].
Tensor softmax_rows(const Tensor& x);

// Columns [begin, end) of [n, d].
Tensor slice_columns(const Tensor& x, int begin, int end);
// Concatenation of [n, d_i] tensors along the columns.
Tensor concat_columns(const std::vector<Tensor>& parts);

// Mean binary cross entropy of logits x (any shape) against 0/1 targets.
// Returns 0 when x is empty.
Tensor bce_with_logits(const Tensor& x, std::span<const double> targets);

// Smooth L1 with transition beta on [n, d]; per-column weights; summed over
// columns and averaged over rows. Returns 0 when n == 0.
Tensor smooth_l1(const Tensor& pred, std::span<const double> target, std::span<const double> column_weights,
                 double beta = 1.0);

// Mean cross entropy of [n, k] logits against class indices. Returns 0 when n == 0.
Tensor cross_entropy_rows(const Tensor& logits, std::span<const int> targets);

// Class-weighted cross entropy over logits [K, N...] (K classes, N positions).
// Positions with mask[i] == 0 are skipped. Returns sum(w_y * ce) / sum(w_y).
// Throws UndefinedLossError when every position is masked.
Tensor weighted_cross_entropy(const Tensor& logits, std::span<const int> targets, std::span<const std::uint8_t> mask,
                              std::span<const double> class_weights);

// Mean cross entropy over logits [K, N...]; targets < 0 are ignored. Returns 0
// (and no gradient) when every target is ignored.
Tensor cross_entropy_dim0(const Tensor& logits, std::span<const int> targets);

// Penalty-reduced focal loss on a [1, S0, S1, 1] logit map against a soft
// target in [0, 1]; cells with target == 1 are positives. Normalized by the
// positive count (at least 1).
Tensor focal_heatmap_loss(const Tensor& logits, std::span<const double> target, double alpha = 2.0,
                          double beta = 4.0);

}  // namespace objocc::nn
