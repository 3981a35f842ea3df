// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "objocc/simd/kernels.hpp"

namespace objocc::simd {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void gemm_nn_scalar(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc) {
    for (int i = 0; i < m; ++i) {
        double* crow = c + static_cast<std::ptrdiff_t>(i) * ldc;
        for (int p = 0; p < k; ++p) {
            const double av = a[static_cast<std::ptrdiff_t>(i) * lda + p];
            const double* brow = b + static_cast<std::ptrdiff_t>(p) * ldb;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{dot_scalar, axpy_scalar, gemm_nn_scalar};
    return table;
}

}  // namespace objocc::simd
