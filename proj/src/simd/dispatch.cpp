// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "objocc/simd/kernels.hpp"

namespace objocc::simd {
namespace {

bool cpu_has_avx2() {
#if defined(OBJOCC_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa initial_isa() {
    const Isa best = detected_isa();
    if (const char* env = std::getenv("OBJOCC_SIMD")) {
        const std::string want(env);
        if (want == "scalar") return Isa::kScalar;
        if (want == "avx2" && best == Isa::kAvx2) return Isa::kAvx2;
    }
    return best;
}

std::atomic<Isa>& active_slot() {
    static std::atomic<Isa> slot{initial_isa()};
    return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::kScalar:
            return "scalar";
        case Isa::kAvx2:
            return "avx2";
    }
    return "unknown";
}

Isa detected_isa() {
    static const Isa isa = cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar;
    return isa;
}

Isa active_isa() { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
    if (isa == Isa::kAvx2 && detected_isa() != Isa::kAvx2) {
        throw std::invalid_argument("AVX2 kernels are not available on this CPU or build");
    }
    active_slot().store(isa, std::memory_order_relaxed);
}

const KernelTable& kernels_for(Isa isa) {
#if defined(OBJOCC_HAVE_AVX2)
    if (isa == Isa::kAvx2) return avx2_kernels();
#endif
    (void)isa;
    return scalar_kernels();
}

const KernelTable& active_kernels() { return kernels_for(active_isa()); }

void gemm(const KernelTable& kt, bool trans_a, bool trans_b, int m, int n, int k, const double* a, int lda,
          const double* b, int ldb, double* c, int ldc) {
    if (m <= 0 || n <= 0 || k <= 0) return;
    // Transposed operands are packed row-major so every case runs the blocked kernel.
    thread_local std::vector<double> pa;
    thread_local std::vector<double> pb;
    if (trans_a) {
        pa.resize(static_cast<std::size_t>(m) * k);
        for (int p = 0; p < k; ++p) {
            const double* src = a + static_cast<std::ptrdiff_t>(p) * lda;
            for (int i = 0; i < m; ++i) pa[static_cast<std::size_t>(i) * k + p] = src[i];
        }
        a = pa.data();
        lda = k;
    }
    if (trans_b) {
        pb.resize(static_cast<std::size_t>(k) * n);
        for (int j = 0; j < n; ++j) {
            const double* src = b + static_cast<std::ptrdiff_t>(j) * ldb;
            for (int p = 0; p < k; ++p) pb[static_cast<std::size_t>(p) * n + j] = src[p];
        }
        b = pb.data();
        ldb = n;
    }
    kt.gemm_nn(m, n, k, a, lda, b, ldb, c, ldc);
}

}  // namespace objocc::simd
