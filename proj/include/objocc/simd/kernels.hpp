// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <string_view>

// Dense double-precision inner loops used by the nn layer. Every kernel has a
// scalar reference implementation and, on x86-64, an AVX2/FMA variant. The
// variant is chosen once at runtime from CPUID and can be overridden with the
// OBJOCC_SIMD environment variable ("scalar" or "avx2").

namespace objocc::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

// Best ISA the running CPU supports (and this build was compiled for).
Isa detected_isa();

// ISA currently used by the dispatching entry points below.
Isa active_isa();

// Switches the dispatch target. Throws std::invalid_argument when the CPU
// cannot run the requested variant.
void set_active_isa(Isa isa);

struct KernelTable {
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y += a * x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // C[m x n] += A[m x k] * B[k x n], all row-major with leading dimensions.
    void (*gemm_nn)(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
                    int ldc);
};

const KernelTable& scalar_kernels();
#if defined(OBJOCC_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif
const KernelTable& kernels_for(Isa isa);
const KernelTable& active_kernels();

inline double dot(const double* x, const double* y, std::size_t n) { return active_kernels().dot(x, y, n); }
inline void axpy(double a, const double* x, double* y, std::size_t n) { active_kernels().axpy(a, x, y, n); }

// C += op(A) * op(B) with op(X) = X or X^T. op(A) is m x k, op(B) is k x n.
// lda/ldb/ldc are the row strides of the matrices as stored.
void gemm(const KernelTable& kt, bool trans_a, bool trans_b, int m, int n, int k, const double* a, int lda,
          const double* b, int ldb, double* c, int ldc);

inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, const double* a, int lda, const double* b,
                 int ldb, double* c, int ldc) {
    gemm(active_kernels(), trans_a, trans_b, m, n, k, a, lda, b, ldb, c, ldc);
}

}  // namespace objocc::simd
