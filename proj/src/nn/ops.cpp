// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "objocc/core/errors.hpp"
#include "objocc/simd/kernels.hpp"

namespace objocc::nn {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) throw ShapeError(std::string(op) + ": shape mismatch");
}

std::array<int, 3> spatial_of(const Tensor& x, const char* op) {
    if (x.rank() != 4) throw ShapeError(std::string(op) + ": expected a [C, S0, S1, S2] tensor");
    return {x.dim(1), x.dim(2), x.dim(3)};
}

double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(sigmoid(z)) without overflow.
double log_sigmoid(double z) { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        for (int k = 0; k < 2; ++k) {
            if (double* g = grad_if_needed(*self.inputs[k])) {
                for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
            }
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        if (double* g = grad_if_needed(*self.inputs[0])) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
        }
        if (double* g = grad_if_needed(*self.inputs[1])) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        const auto& av = self.inputs[0]->value;
        const auto& bv = self.inputs[1]->value;
        if (double* g = grad_if_needed(*self.inputs[0])) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * bv[i];
        }
        if (double* g = grad_if_needed(*self.inputs[1])) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * av[i];
        }
    });
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * s;
    return make_result(a.shape(), std::move(out), {a}, [s](Node& self) {
        if (double* g = grad_if_needed(*self.inputs[0])) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * s;
        }
    });
}

Tensor relu(const Tensor& x) {
    std::vector<double> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, x.data()[i]);
    return make_result(x.shape(), std::move(out), {x}, [](Node& self) {
        if (double* g = grad_if_needed(*self.inputs[0])) {
            const auto& xv = self.inputs[0]->value;
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                if (xv[i] > 0.0) g[i] += self.grad[i];
            }
        }
    });
}

Tensor sigmoid(const Tensor& x) {
    std::vector<double> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(x.data()[i]);
    return make_result(x.shape(), std::move(out), {x}, [](Node& self) {
        if (double* g = grad_if_needed(*self.inputs[0])) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                const double s = self.value[i];
                g[i] += self.grad[i] * s * (1.0 - s);
            }
        }
    });
}

Tensor sum(const Tensor& x) {
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    return make_result({1}, {acc}, {x}, [](Node& self) {
        if (double* g = grad_if_needed(*self.inputs[0])) {
            const double up = self.grad[0];
            for (std::size_t i = 0; i < self.inputs[0]->value.size(); ++i) g[i] += up;
        }
    });
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (numel_of(shape) != x.numel()) throw ShapeError("reshape: element count mismatch");
    std::vector<double> out(x.data().begin(), x.data().end());
    return make_result(std::move(shape), std::move(out), {x}, [](Node& self) {
        if (double* g = grad_if_needed(*self.inputs[0])) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
        }
    });
}

Tensor concat(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    Shape shape = parts.front().shape();
    const std::size_t inner = numel_of(Shape(shape.begin() + 1, shape.end()));
    int lead = 0;
    for (const auto& p : parts) {
        if (p.rank() != shape.size() || !std::equal(shape.begin() + 1, shape.end(), p.shape().begin() + 1)) {
            throw ShapeError("concat: trailing dimensions differ");
        }
        lead += p.dim(0);
    }
    shape[0] = lead;
    std::vector<double> out;
    out.reserve(numel_of(shape));
    for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
    (void)inner;
    return make_result(shape, std::move(out), parts, [](Node& self) {
        std::size_t offset = 0;
        for (auto& in : self.inputs) {
            const std::size_t n = in->value.size();
            if (double* g = grad_if_needed(*in)) {
                for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[offset + i];
            }
            offset += n;
        }
    });
}

std::array<int, 3> ConvSpec::output_dims(const std::array<int, 3>& in) const {
    std::array<int, 3> out{};
    for (int d = 0; d < 3; ++d) {
        const int span = in[d] + 2 * pad[d] - kernel[d];
        if (span < 0 || stride[d] <= 0) throw ShapeError("conv: kernel larger than padded input");
        out[d] = span / stride[d] + 1;
    }
    return out;
}

namespace {

struct ConvGeometry {
    int channels = 0;
    int out_channels = 0;
    std::array<int, 3> in{};
    std::array<int, 3> out{};
    ConvSpec spec;
    int patch = 0;  // channels * prod(kernel)
    int in_count = 0;
    int out_count = 0;

    bool pointwise() const {
        return spec.kernel == std::array<int, 3>{1, 1, 1} && spec.stride == std::array<int, 3>{1, 1, 1} &&
               spec.pad == std::array<int, 3>{0, 0, 0};
    }
};

int tile_columns(int patch) {
    int t = 65536 / std::max(1, patch);
    t = std::clamp(t, 16, 1024);
    return t - t % 8;
}

// offsets[tap * t + j]: flat input offset read by kernel tap `tap` for output
// column n0 + j within one channel, or -1 in the padding.
void tap_offsets(const ConvGeometry& g, int n0, int t, std::vector<int>& offsets) {
    const auto [k0, k1, k2] = g.spec.kernel;
    offsets.resize(static_cast<std::size_t>(k0) * k1 * k2 * t);
    const int o12 = g.out[1] * g.out[2];
    for (int j = 0; j < t; ++j) {
        const int n = n0 + j;
        const int r = n % o12;
        const int b0 = (n / o12) * g.spec.stride[0] - g.spec.pad[0];
        const int b1 = (r / g.out[2]) * g.spec.stride[1] - g.spec.pad[1];
        const int b2 = (r % g.out[2]) * g.spec.stride[2] - g.spec.pad[2];
        int tap = 0;
        for (int a = 0; a < k0; ++a) {
            const int i0 = b0 + a;
            const bool ok0 = static_cast<unsigned>(i0) < static_cast<unsigned>(g.in[0]);
            for (int b = 0; b < k1; ++b) {
                const int i1 = b1 + b;
                const bool ok1 = ok0 && static_cast<unsigned>(i1) < static_cast<unsigned>(g.in[1]);
                for (int e = 0; e < k2; ++e, ++tap) {
                    const int i2 = b2 + e;
                    const bool ok = ok1 && static_cast<unsigned>(i2) < static_cast<unsigned>(g.in[2]);
                    offsets[static_cast<std::size_t>(tap) * t + j] = ok ? (i0 * g.in[1] + i1) * g.in[2] + i2 : -1;
                }
            }
        }
    }
}

// col[patch x t] for output columns [n0, n0 + t).
void im2col_tile(const ConvGeometry& g, const double* x, int n0, int t, std::vector<double>& col,
                 std::vector<int>& offsets) {
    col.resize(static_cast<std::size_t>(g.patch) * t);
    tap_offsets(g, n0, t, offsets);
    const int taps = g.patch / g.channels;
    double* dst = col.data();
    for (int c = 0; c < g.channels; ++c) {
        const double* xc = x + static_cast<std::size_t>(c) * g.in_count;
        const int* off = offsets.data();
        for (int tap = 0; tap < taps; ++tap) {
            for (int j = 0; j < t; ++j) dst[j] = off[j] >= 0 ? xc[off[j]] : 0.0;
            dst += t;
            off += t;
        }
    }
}

void col2im_tile(const ConvGeometry& g, const std::vector<double>& col, const std::vector<int>& offsets, int t,
                 double* dx) {
    const int taps = g.patch / g.channels;
    const double* src = col.data();
    for (int c = 0; c < g.channels; ++c) {
        double* dxc = dx + static_cast<std::size_t>(c) * g.in_count;
        const int* off = offsets.data();
        for (int tap = 0; tap < taps; ++tap) {
            for (int j = 0; j < t; ++j) {
                if (off[j] >= 0) dxc[off[j]] += src[j];
            }
            src += t;
            off += t;
        }
    }
}

}  // namespace

Tensor conv(const Tensor& x, const Tensor& w, const Tensor& bias, const ConvSpec& spec) {
    ConvGeometry g;
    g.in = spatial_of(x, "conv");
    g.channels = x.dim(0);
    if (w.rank() != 5 || w.dim(1) != g.channels || w.dim(2) != spec.kernel[0] || w.dim(3) != spec.kernel[1] ||
        w.dim(4) != spec.kernel[2]) {
        throw ShapeError("conv: weight shape does not match input channels / kernel");
    }
    g.out_channels = w.dim(0);
    if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.out_channels)) {
        throw ShapeError("conv: bias shape mismatch");
    }
    g.spec = spec;
    g.out = spec.output_dims(g.in);
    g.patch = g.channels * spec.kernel[0] * spec.kernel[1] * spec.kernel[2];
    g.in_count = g.in[0] * g.in[1] * g.in[2];
    g.out_count = g.out[0] * g.out[1] * g.out[2];

    const int O = g.out_channels;
    const int N = g.out_count;
    std::vector<double> out(static_cast<std::size_t>(O) * N, 0.0);
    const double* xv = x.data().data();
    const double* wv = w.data().data();
    if (g.pointwise()) {
        simd::gemm(false, false, O, N, g.channels, wv, g.channels, xv, N, out.data(), N);
    } else {
        const int T = tile_columns(g.patch);
        std::vector<double> col;
        std::vector<int> base;
        for (int n0 = 0; n0 < N; n0 += T) {
            const int t = std::min(T, N - n0);
            im2col_tile(g, xv, n0, t, col, base);
            simd::gemm(false, false, O, t, g.patch, wv, g.patch, col.data(), t, out.data() + n0, N);
        }
    }
    if (bias.defined()) {
        for (int o = 0; o < O; ++o) {
            const double b = bias.data()[o];
            double* row = out.data() + static_cast<std::size_t>(o) * N;
            for (int n = 0; n < N; ++n) row[n] += b;
        }
    }
    return make_result({O, g.out[0], g.out[1], g.out[2]}, std::move(out), {x, w, bias}, [g](Node& self) {
        const int O = g.out_channels;
        const int N = g.out_count;
        Node& xn = *self.inputs[0];
        Node& wn = *self.inputs[1];
        const double* dy = self.grad.data();
        if (self.inputs[2]) {
            if (double* db = grad_if_needed(*self.inputs[2])) {
                for (int o = 0; o < O; ++o) {
                    const double* row = dy + static_cast<std::size_t>(o) * N;
                    db[o] += std::accumulate(row, row + N, 0.0);
                }
            }
        }
        double* dw = grad_if_needed(wn);
        double* dx = grad_if_needed(xn);
        if (!dw && !dx) return;
        if (g.pointwise()) {
            if (dw) simd::gemm(false, true, O, g.channels, N, dy, N, xn.value.data(), N, dw, g.channels);
            if (dx) simd::gemm(true, false, g.channels, N, O, wn.value.data(), g.channels, dy, N, dx, N);
            return;
        }
        const int T = tile_columns(g.patch);
        std::vector<double> col;
        std::vector<double> dcol;
        std::vector<int> base;
        for (int n0 = 0; n0 < N; n0 += T) {
            const int t = std::min(T, N - n0);
            im2col_tile(g, xn.value.data(), n0, t, col, base);
            if (dw) simd::gemm(false, true, O, g.patch, t, dy + n0, N, col.data(), t, dw, g.patch);
            if (dx) {
                dcol.assign(static_cast<std::size_t>(g.patch) * t, 0.0);
                simd::gemm(true, false, g.patch, t, O, wn.value.data(), g.patch, dy + n0, N, dcol.data(), t);
                col2im_tile(g, dcol, base, t, dx);
            }
        }
    });
}

Tensor upsample_nearest(const Tensor& x, const std::array<int, 3>& out_dims) {
    const auto in = spatial_of(x, "upsample_nearest");
    const int C = x.dim(0);
    std::vector<int> map0(out_dims[0]), map1(out_dims[1]), map2(out_dims[2]);
    for (int i = 0; i < out_dims[0]; ++i) map0[i] = static_cast<int>(static_cast<long>(i) * in[0] / out_dims[0]);
    for (int i = 0; i < out_dims[1]; ++i) map1[i] = static_cast<int>(static_cast<long>(i) * in[1] / out_dims[1]);
    for (int i = 0; i < out_dims[2]; ++i) map2[i] = static_cast<int>(static_cast<long>(i) * in[2] / out_dims[2]);
    const std::size_t in_count = numel_of({in[0], in[1], in[2]});
    const std::size_t out_count = numel_of({out_dims[0], out_dims[1], out_dims[2]});
    std::vector<std::size_t> src(out_count);
    std::size_t n = 0;
    for (int a = 0; a < out_dims[0]; ++a)
        for (int b = 0; b < out_dims[1]; ++b)
            for (int e = 0; e < out_dims[2]; ++e)
                src[n++] = (static_cast<std::size_t>(map0[a]) * in[1] + map1[b]) * in[2] + map2[e];
    std::vector<double> out(static_cast<std::size_t>(C) * out_count);
    for (int c = 0; c < C; ++c) {
        const double* xc = x.data().data() + c * in_count;
        double* oc = out.data() + c * out_count;
        for (std::size_t i = 0; i < out_count; ++i) oc[i] = xc[src[i]];
    }
    return make_result({C, out_dims[0], out_dims[1], out_dims[2]}, std::move(out), {x},
                       [src = std::move(src), C, in_count, out_count](Node& self) {
                           if (double* g = grad_if_needed(*self.inputs[0])) {
                               for (int c = 0; c < C; ++c) {
                                   double* gc = g + c * in_count;
                                   const double* dy = self.grad.data() + c * out_count;
                                   for (std::size_t i = 0; i < out_count; ++i) gc[src[i]] += dy[i];
                               }
                           }
                       });
}

Tensor softmax_dim0(const Tensor& x) {
    const int K = x.dim(0);
    const std::size_t S = x.numel() / K;
    std::vector<double> out(x.numel());
    const double* xv = x.data().data();
    for (std::size_t s = 0; s < S; ++s) {
        double mx = -INFINITY;
        for (int k = 0; k < K; ++k) mx = std::max(mx, xv[k * S + s]);
        double z = 0.0;
        for (int k = 0; k < K; ++k) {
            const double e = std::exp(xv[k * S + s] - mx);
            out[k * S + s] = e;
            z += e;
        }
        for (int k = 0; k < K; ++k) out[k * S + s] /= z;
    }
    return make_result(x.shape(), std::move(out), {x}, [K, S](Node& self) {
        if (double* g = grad_if_needed(*self.inputs[0])) {
            const auto& p = self.value;
            const auto& dy = self.grad;
            for (std::size_t s = 0; s < S; ++s) {
                double inner = 0.0;
                for (int k = 0; k < K; ++k) inner += p[k * S + s] * dy[k * S + s];
                for (int k = 0; k < K; ++k) g[k * S + s] += p[k * S + s] * (dy[k * S + s] - inner);
            }
        }
    });
}

Tensor mean_last(const Tensor& x) {
    const auto in = spatial_of(x, "mean_last");
    const int C = x.dim(0);
    const std::size_t cols = static_cast<std::size_t>(C) * in[0] * in[1];
    const int D = in[2];
    std::vector<double> out(cols);
    const double* xv = x.data().data();
    for (std::size_t i = 0; i < cols; ++i) {
        double acc = 0.0;
        for (int k = 0; k < D; ++k) acc += xv[i * D + k];
        out[i] = acc / D;
    }
    return make_result({C, in[0], in[1], 1}, std::move(out), {x}, [cols, D](Node& self) {
        if (double* g = grad_if_needed(*self.inputs[0])) {
            for (std::size_t i = 0; i < cols; ++i) {
                const double share = self.grad[i] / D;
                for (int k = 0; k < D; ++k) g[i * D + k] += share;
            }
        }
    });
}

Tensor gather_cells(const Tensor& x, std::span<const int> cells) {
    const auto in = spatial_of(x, "gather_cells");
    if (in[2] != 1) throw ShapeError("gather_cells: expected a planar map");
    const int C = x.dim(0);
    const int plane = in[0] * in[1];
    const int n = static_cast<int>(cells.size());
    std::vector<double> out(static_cast<std::size_t>(n) * C);
    for (int r = 0; r < n; ++r) {
        if (cells[r] < 0 || cells[r] >= plane) throw ShapeError("gather_cells: cell index out of range");
        for (int c = 0; c < C; ++c) out[r * C + c] = x.data()[static_cast<std::size_t>(c) * plane + cells[r]];
    }
    std::vector<int> idx(cells.begin(), cells.end());
    return make_result({n, C}, std::move(out), {x}, [idx = std::move(idx), C, plane](Node& self) {
        if (double* g = grad_if_needed(*self.inputs[0])) {
            for (std::size_t r = 0; r < idx.size(); ++r)
                for (int c = 0; c < C; ++c) g[static_cast<std::size_t>(c) * plane + idx[r]] += self.grad[r * C + c];
        }
    });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
    if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0)) throw ShapeError("linear: shape mismatch");
    const int n = x.dim(0);
    const int in = w.dim(0);
    const int out_dim = w.dim(1);
    if (bias.defined() && bias.numel() != static_cast<std::size_t>(out_dim)) throw ShapeError("linear: bias shape");
    std::vector<double> out(static_cast<std::size_t>(n) * out_dim, 0.0);
    if (bias.defined()) {
        for (int r = 0; r < n; ++r) std::copy(bias.data().begin(), bias.data().end(), out.begin() + r * out_dim);
    }
    simd::gemm(false, false, n, out_dim, in, x.data().data(), in, w.data().data(), out_dim, out.data(), out_dim);
    return make_result({n, out_dim}, std::move(out), {x, w, bias}, [n, in, out_dim](Node& self) {
        Node& xn = *self.inputs[0];
        Node& wn = *self.inputs[1];
        const double* dy = self.grad.data();
        if (double* dx = grad_if_needed(xn)) simd::gemm(false, true, n, in, out_dim, dy, out_dim, wn.value.data(), out_dim, dx, in);
        if (double* dw = grad_if_needed(wn)) simd::gemm(true, false, in, out_dim, n, xn.value.data(), in, dy, out_dim, dw, out_dim);
        if (self.inputs[2]) {
            if (double* db = grad_if_needed(*self.inputs[2])) {
                for (int r = 0; r < n; ++r)
                    for (int c = 0; c < out_dim; ++c) db[c] += dy[r * out_dim + c];
            }
        }
    });
}

Tensor select_rows(const Tensor& x, std::span<const int> rows) {
    if (x.rank() != 2) throw ShapeError("select_rows: expected [n, d]");
    const int d = x.dim(1);
    std::vector<double> out;
    out.reserve(rows.size() * d);
    for (int r : rows) {
        if (r < 0 || r >= x.dim(0)) throw ShapeError("select_rows: row out of range");
        out.insert(out.end(), x.data().begin() + static_cast<std::ptrdiff_t>(r) * d,
                   x.data().begin() + static_cast<std::ptrdiff_t>(r + 1) * d);
    }
    std::vector<int> idx(rows.begin(), rows.end());
    return make_result({static_cast<int>(rows.size()), d}, std::move(out), {x}, [idx = std::move(idx), d](Node& self) {
        if (double* g = grad_if_needed(*self.inputs[0])) {
            for (std::size_t r = 0; r < idx.size(); ++r)
                for (int c = 0; c < d; ++c) g[static_cast<std::size_t>(idx[r]) * d + c] += self.grad[r * d + c];
        }
    });
}

Tensor softmax_rows(const Tensor& x) {
    if (x.rank() != 2) throw ShapeError("softmax_rows: expected [n, k]");
    const int n = x.dim(0);
    const int k = x.dim(1);
    std::vector<double> out(x.numel());
    for (int r = 0; r < n; ++r) {
        const double* xr = x.data().data() + static_cast<std::size_t>(r) * k;
        double* o = out.data() + static_cast<std::size_t>(r) * k;
        const double mx = *std::max_element(xr, xr + k);
        double z = 0.0;
        for (int j = 0; j < k; ++j) z += (o[j] = std::exp(xr[j] - mx));
        for (int j = 0; j < k; ++j) o[j] /= z;
    }
    return make_result(x.shape(), std::move(out), {x}, [n, k](Node& self) {
        if (double* g = grad_if_needed(*self.inputs[0])) {
            for (int r = 0; r < n; ++r) {
                const double* p = self.value.data() + static_cast<std::size_t>(r) * k;
                const double* dy = self.grad.data() + static_cast<std::size_t>(r) * k;
                double inner = 0.0;
                for (int j = 0; j < k; ++j) inner += p[j] * dy[j];
                for (int j = 0; j < k; ++j) g[static_cast<std::size_t>(r) * k + j] += p[j] * (dy[j] - inner);
            }
        }
    });
}

Tensor weighted_cross_entropy(const Tensor& logits, std::span<const int> targets, std::span<const std::uint8_t> mask,
                              std::span<const double> class_weights) {
    const int K = logits.dim(0);
    const std::size_t N = logits.numel() / K;
    if (targets.size() != N || mask.size() != N) throw ShapeError("weighted_cross_entropy: target shape mismatch");
    if (class_weights.size() != static_cast<std::size_t>(K)) throw ShapeError("weighted_cross_entropy: weight count");
    const double* lv = logits.data().data();
    double num = 0.0;
    double den = 0.0;
    std::vector<double> lse(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        if (!mask[i]) continue;
        const int y = targets[i];
        if (y < 0 || y >= K) throw ShapeError("weighted_cross_entropy: target outside the class range");
        double mx = -INFINITY;
        for (int k = 0; k < K; ++k) mx = std::max(mx, lv[k * N + i]);
        double z = 0.0;
        for (int k = 0; k < K; ++k) z += std::exp(lv[k * N + i] - mx);
        lse[i] = mx + std::log(z);
        const double w = class_weights[y];
        num += w * (lse[i] - lv[y * N + i]);
        den += w;
    }
    if (den <= 0.0) throw UndefinedLossError("weighted_cross_entropy: every voxel is masked");
    std::vector<int> tg(targets.begin(), targets.end());
    std::vector<std::uint8_t> mk(mask.begin(), mask.end());
    std::vector<double> cw(class_weights.begin(), class_weights.end());
    return make_result({1}, {num / den}, {logits},
                       [K, N, den, tg = std::move(tg), mk = std::move(mk), cw = std::move(cw),
                        lse = std::move(lse)](Node& self) {
                           double* g = grad_if_needed(*self.inputs[0]);
                           if (!g) return;
                           const double* lv = self.inputs[0]->value.data();
                           const double up = self.grad[0] / den;
                           for (std::size_t i = 0; i < N; ++i) {
                               if (!mk[i]) continue;
                               const double w = cw[tg[i]] * up;
                               for (int k = 0; k < K; ++k) {
                                   const double p = std::exp(lv[k * N + i] - lse[i]);
                                   g[k * N + i] += w * (p - (k == tg[i] ? 1.0 : 0.0));
                               }
                           }
                       });
}

Tensor cross_entropy_dim0(const Tensor& logits, std::span<const int> targets) {
    const int K = logits.dim(0);
    const std::size_t N = logits.numel() / K;
    if (targets.size() != N) throw ShapeError("cross_entropy_dim0: target shape mismatch");
    const double* lv = logits.data().data();
    double total = 0.0;
    std::size_t count = 0;
    std::vector<double> lse(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        const int y = targets[i];
        if (y < 0) continue;
        if (y >= K) throw ShapeError("cross_entropy_dim0: target outside the class range");
        double mx = -INFINITY;
        for (int k = 0; k < K; ++k) mx = std::max(mx, lv[k * N + i]);
        double z = 0.0;
        for (int k = 0; k < K; ++k) z += std::exp(lv[k * N + i] - mx);
        lse[i] = mx + std::log(z);
        total += lse[i] - lv[y * N + i];
        ++count;
    }
    if (count == 0) return Tensor::scalar(0.0);
    std::vector<int> tg(targets.begin(), targets.end());
    const double inv = 1.0 / static_cast<double>(count);
    return make_result({1}, {total * inv}, {logits},
                       [K, N, inv, tg = std::move(tg), lse = std::move(lse)](Node& self) {
                           double* g = grad_if_needed(*self.inputs[0]);
                           if (!g) return;
                           const double* lv = self.inputs[0]->value.data();
                           const double up = self.grad[0] * inv;
                           for (std::size_t i = 0; i < N; ++i) {
                               if (tg[i] < 0) continue;
                               for (int k = 0; k < K; ++k) {
                                   const double p = std::exp(lv[k * N + i] - lse[i]);
                                   g[k * N + i] += up * (p - (k == tg[i] ? 1.0 : 0.0));
                               }
                           }
                       });
}

Tensor focal_heatmap_loss(const Tensor& logits, std::span<const double> target, double alpha, double beta) {
    if (logits.numel() != target.size()) throw ShapeError("focal_heatmap_loss: target shape mismatch");
    const std::size_t N = target.size();
    const double* z = logits.data().data();
    double total = 0.0;
    int positives = 0;
    for (std::size_t i = 0; i < N; ++i) {
        const double p = stable_sigmoid(z[i]);
        if (target[i] >= 1.0) {
            total -= std::pow(1.0 - p, alpha) * log_sigmoid(z[i]);
            ++positives;
        } else {
            total -= std::pow(1.0 - target[i], beta) * std::pow(p, alpha) * log_sigmoid(-z[i]);
        }
    }
    const double norm = 1.0 / std::max(1, positives);
    std::vector<double> tg(target.begin(), target.end());
    return make_result({1}, {total * norm}, {logits}, [N, norm, alpha, beta, tg = std::move(tg)](Node& self) {
        double* g = grad_if_needed(*self.inputs[0]);
        if (!g) return;
        const double* z = self.inputs[0]->value.data();
        const double up = self.grad[0] * norm;
        for (std::size_t i = 0; i < N; ++i) {
            const double p = stable_sigmoid(z[i]);
            double d;
            if (tg[i] >= 1.0) {
                // d/dz of -(1-p)^a log p
                d = alpha * std::pow(1.0 - p, alpha) * p * log_sigmoid(z[i]) - std::pow(1.0 - p, alpha) * (1.0 - p);
            } else {
                // d/dz of -(1-t)^b p^a log(1-p)
                const double wneg = std::pow(1.0 - tg[i], beta);
                d = -wneg * (alpha * std::pow(p, alpha) * (1.0 - p) * log_sigmoid(-z[i]) - std::pow(p, alpha) * p);
            }
            g[i] += up * d;
        }
    });
}

Tensor slice_columns(const Tensor& x, int begin, int end) {
    if (x.rank() != 2 || begin < 0 || end > x.dim(1) || begin >= end) throw ShapeError("slice_columns: bad range");
    const int n = x.dim(0);
    const int d = x.dim(1);
    const int w = end - begin;
    std::vector<double> out(static_cast<std::size_t>(n) * w);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < w; ++c) out[static_cast<std::size_t>(r) * w + c] = x.data()[static_cast<std::size_t>(r) * d + begin + c];
    return make_result({n, w}, std::move(out), {x}, [n, d, w, begin](Node& self) {
        if (double* g = grad_if_needed(*self.inputs[0])) {
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < w; ++c) g[static_cast<std::size_t>(r) * d + begin + c] += self.grad[static_cast<std::size_t>(r) * w + c];
        }
    });
}

Tensor concat_columns(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("concat_columns: no inputs");
    const int n = parts[0].dim(0);
    std::vector<int> widths;
    int total = 0;
    for (const auto& p : parts) {
        if (p.rank() != 2 || p.dim(0) != n) throw ShapeError("concat_columns: row counts differ");
        widths.push_back(p.dim(1));
        total += p.dim(1);
    }
    std::vector<double> out(static_cast<std::size_t>(n) * total);
    int offset = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const int w = widths[i];
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < w; ++c) out[static_cast<std::size_t>(r) * total + offset + c] = parts[i].data()[static_cast<std::size_t>(r) * w + c];
        offset += w;
    }
    return make_result({n, total}, std::move(out), parts, [n, total, widths = std::move(widths)](Node& self) {
        int offset = 0;
        for (std::size_t i = 0; i < widths.size(); ++i) {
            const int w = widths[i];
            if (double* g = grad_if_needed(*self.inputs[i])) {
                for (int r = 0; r < n; ++r)
                    for (int c = 0; c < w; ++c) g[static_cast<std::size_t>(r) * w + c] += self.grad[static_cast<std::size_t>(r) * total + offset + c];
            }
            offset += w;
        }
    });
}

Tensor bce_with_logits(const Tensor& x, std::span<const double> targets) {
    const std::size_t n = x.numel();
    if (targets.size() != n) throw ShapeError("bce_with_logits: target size mismatch");
    if (n == 0) return Tensor::scalar(0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = x.data()[i];
        total -= targets[i] * log_sigmoid(z) + (1.0 - targets[i]) * log_sigmoid(-z);
    }
    std::vector<double> t(targets.begin(), targets.end());
    return make_result({1}, {total / n}, {x}, [n, t = std::move(t)](Node& self) {
        if (double* g = grad_if_needed(*self.inputs[0])) {
            const double up = self.grad[0] / n;
            for (std::size_t i = 0; i < n; ++i) g[i] += up * (stable_sigmoid(self.inputs[0]->value[i]) - t[i]);
        }
    });
}

Tensor smooth_l1(const Tensor& pred, std::span<const double> target, std::span<const double> column_weights,
                 double beta) {
    if (pred.rank() != 2 || target.size() != pred.numel() || column_weights.size() != static_cast<std::size_t>(pred.dim(1))) {
        throw ShapeError("smooth_l1: shape mismatch");
    }
    if (!(beta > 0)) throw ArgumentError("smooth_l1: beta must be positive");
    const int n = pred.dim(0);
    const int d = pred.dim(1);
    if (n == 0) return Tensor::scalar(0.0);
    double total = 0.0;
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < d; ++c) {
            const double e = pred.data()[static_cast<std::size_t>(r) * d + c] - target[static_cast<std::size_t>(r) * d + c];
            const double a = std::abs(e);
            total += column_weights[c] * (a < beta ? 0.5 * e * e / beta : a - 0.5 * beta);
        }
    }
    std::vector<double> t(target.begin(), target.end());
    std::vector<double> w(column_weights.begin(), column_weights.end());
    return make_result({1}, {total / n}, {pred}, [n, d, beta, t = std::move(t), w = std::move(w)](Node& self) {
        if (double* g = grad_if_needed(*self.inputs[0])) {
            const double up = self.grad[0] / n;
            for (int r = 0; r < n; ++r) {
                for (int c = 0; c < d; ++c) {
                    const std::size_t i = static_cast<std::size_t>(r) * d + c;
                    const double e = self.inputs[0]->value[i] - t[i];
                    const double de = std::abs(e) < beta ? e / beta : (e > 0 ? 1.0 : -1.0);
                    g[i] += up * w[c] * de;
                }
            }
        }
    });
}

Tensor cross_entropy_rows(const Tensor& logits, std::span<const int> targets) {
    if (logits.rank() != 2 || targets.size() != static_cast<std::size_t>(logits.dim(0))) {
        throw ShapeError("cross_entropy_rows: shape mismatch");
    }
    const int n = logits.dim(0);
    const int k = logits.dim(1);
    if (n == 0) return Tensor::scalar(0.0);
    std::vector<double> prob(logits.numel());
    double total = 0.0;
    for (int r = 0; r < n; ++r) {
        if (targets[r] < 0 || targets[r] >= k) throw ArgumentError("cross_entropy_rows: target out of range");
        const double* x = logits.data().data() + static_cast<std::size_t>(r) * k;
        double* p = prob.data() + static_cast<std::size_t>(r) * k;
        const double mx = *std::max_element(x, x + k);
        double z = 0.0;
        for (int j = 0; j < k; ++j) z += (p[j] = std::exp(x[j] - mx));
        for (int j = 0; j < k; ++j) p[j] /= z;
        total += mx + std::log(z) - x[targets[r]];
    }
    std::vector<int> t(targets.begin(), targets.end());
    return make_result({1}, {total / n}, {logits}, [n, k, prob = std::move(prob), t = std::move(t)](Node& self) {
        if (double* g = grad_if_needed(*self.inputs[0])) {
            const double up = self.grad[0] / n;
            for (int r = 0; r < n; ++r) {
                for (int j = 0; j < k; ++j) {
                    const std::size_t i = static_cast<std::size_t>(r) * k + j;
                    g[i] += up * (prob[i] - (j == t[r] ? 1.0 : 0.0));
                }
            }
        }
    });
}

}  // namespace objocc::nn
