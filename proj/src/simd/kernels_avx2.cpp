// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Compiled with -mavx2 -mfma. Nothing in this translation unit may run unless
// the dispatcher has confirmed CPU support.

#include <immintrin.h>

#include "objocc/simd/kernels.hpp"

namespace objocc::simd {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        _mm256_storeu_pd(y + i + 4, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

// 4x8 register block: 8 accumulators, two B loads and four broadcasts per k.
inline void block_4x8(int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc) {
    __m256d c00 = _mm256_loadu_pd(c), c01 = _mm256_loadu_pd(c + 4);
    __m256d c10 = _mm256_loadu_pd(c + ldc), c11 = _mm256_loadu_pd(c + ldc + 4);
    __m256d c20 = _mm256_loadu_pd(c + 2 * ldc), c21 = _mm256_loadu_pd(c + 2 * ldc + 4);
    __m256d c30 = _mm256_loadu_pd(c + 3 * ldc), c31 = _mm256_loadu_pd(c + 3 * ldc + 4);
    for (int p = 0; p < k; ++p) {
        const double* bp = b + static_cast<std::ptrdiff_t>(p) * ldb;
        const __m256d b0 = _mm256_loadu_pd(bp);
        const __m256d b1 = _mm256_loadu_pd(bp + 4);
        __m256d av = _mm256_broadcast_sd(a + p);
        c00 = _mm256_fmadd_pd(av, b0, c00);
        c01 = _mm256_fmadd_pd(av, b1, c01);
        av = _mm256_broadcast_sd(a + lda + p);
        c10 = _mm256_fmadd_pd(av, b0, c10);
        c11 = _mm256_fmadd_pd(av, b1, c11);
        av = _mm256_broadcast_sd(a + 2 * lda + p);
        c20 = _mm256_fmadd_pd(av, b0, c20);
        c21 = _mm256_fmadd_pd(av, b1, c21);
        av = _mm256_broadcast_sd(a + 3 * lda + p);
        c30 = _mm256_fmadd_pd(av, b0, c30);
        c31 = _mm256_fmadd_pd(av, b1, c31);
    }
    _mm256_storeu_pd(c, c00);
    _mm256_storeu_pd(c + 4, c01);
    _mm256_storeu_pd(c + ldc, c10);
    _mm256_storeu_pd(c + ldc + 4, c11);
    _mm256_storeu_pd(c + 2 * ldc, c20);
    _mm256_storeu_pd(c + 2 * ldc + 4, c21);
    _mm256_storeu_pd(c + 3 * ldc, c30);
    _mm256_storeu_pd(c + 3 * ldc + 4, c31);
}

inline void block_1x8(int k, const double* a, const double* b, int ldb, double* c) {
    __m256d c0 = _mm256_loadu_pd(c), c1 = _mm256_loadu_pd(c + 4);
    for (int p = 0; p < k; ++p) {
        const double* bp = b + static_cast<std::ptrdiff_t>(p) * ldb;
        const __m256d av = _mm256_broadcast_sd(a + p);
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 4), c1);
    }
    _mm256_storeu_pd(c, c0);
    _mm256_storeu_pd(c + 4, c1);
}

void gemm_nn_avx2(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc) {
    const int n8 = n - n % 8;
    int i = 0;
    for (; i + 4 <= m; i += 4) {
        const double* ai = a + static_cast<std::ptrdiff_t>(i) * lda;
        double* ci = c + static_cast<std::ptrdiff_t>(i) * ldc;
        for (int j = 0; j < n8; j += 8) block_4x8(k, ai, lda, b + j, ldb, ci + j, ldc);
    }
    for (; i < m; ++i) {
        const double* ai = a + static_cast<std::ptrdiff_t>(i) * lda;
        double* ci = c + static_cast<std::ptrdiff_t>(i) * ldc;
        for (int j = 0; j < n8; j += 8) block_1x8(k, ai, b + j, ldb, ci + j);
    }
    if (n8 == n) return;
    // Column remainder (< 8 wide): row-wise axpy over the tail.
    for (int r = 0; r < m; ++r) {
        double* crow = c + static_cast<std::ptrdiff_t>(r) * ldc;
        for (int p = 0; p < k; ++p) {
            const double av = a[static_cast<std::ptrdiff_t>(r) * lda + p];
            const double* brow = b + static_cast<std::ptrdiff_t>(p) * ldb;
            for (int j = n8; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace

const KernelTable& avx2_kernels() {
    static const KernelTable table{dot_avx2, axpy_avx2, gemm_nn_avx2};
    return table;
}

}  // namespace objocc::simd
