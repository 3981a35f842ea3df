// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Scalar reference kernels vs the runtime-selected SIMD variants.

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "objocc/simd/kernels.hpp"

using namespace objocc::simd;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

// Textbook triple loop used as the oracle for every gemm layout.
void naive_gemm(bool ta, bool tb, int m, int n, int k, const std::vector<double>& a, int lda,
                const std::vector<double>& b, int ldb, std::vector<double>& c, int ldc) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) {
                const double av = ta ? a[p * lda + i] : a[i * lda + p];
                const double bv = tb ? b[j * ldb + p] : b[p * ldb + j];
                acc += av * bv;
            }
            c[i * ldc + j] += acc;
        }
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("isa detection is consistent") {
    CHECK((detected_isa() == Isa::kScalar || detected_isa() == Isa::kAvx2));
    const Isa before = active_isa();
    set_active_isa(Isa::kScalar);
    CHECK(active_isa() == Isa::kScalar);
    set_active_isa(before);
    if (detected_isa() == Isa::kScalar) CHECK_THROWS(set_active_isa(Isa::kAvx2));
}

TEST_CASE("dot and axpy variants agree with scalar reference on ragged lengths") {
    std::mt19937_64 rng(11);
    const auto& ref = scalar_kernels();
    const auto& fast = kernels_for(detected_isa());
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 31u, 64u, 257u, 1000u}) {
        auto x = random_vec(n, rng);
        auto y = random_vec(n, rng);
        CHECK(fast.dot(x.data(), y.data(), n) == doctest::Approx(ref.dot(x.data(), y.data(), n)).epsilon(1e-12));
        auto y1 = y, y2 = y;
        ref.axpy(0.37, x.data(), y1.data(), n);
        fast.axpy(0.37, x.data(), y2.data(), n);
        CHECK(max_abs_diff(y1, y2) <= 1e-14);
    }
}

TEST_CASE("gemm layouts agree across variants and with the naive oracle") {
    std::mt19937_64 rng(5);
    const auto& ref = scalar_kernels();
    const auto& fast = kernels_for(detected_isa());
    const int shapes[][3] = {{1, 1, 1}, {4, 8, 3}, {5, 9, 7}, {8, 33, 17}, {13, 64, 27}, {3, 7, 100}};
    for (auto [m, n, k] : shapes) {
        for (int layout = 0; layout < 4; ++layout) {
            const bool ta = layout & 1;
            const bool tb = layout & 2;
            const int lda = ta ? m + 1 : k + 2;  // padded strides exercise the ld handling
            const int ldb = tb ? k + 3 : n + 1;
            const int ldc = n + 2;
            auto a = random_vec(static_cast<std::size_t>(ta ? k : m) * lda, rng);
            auto b = random_vec(static_cast<std::size_t>(tb ? n : k) * ldb, rng);
            auto c0 = random_vec(static_cast<std::size_t>(m) * ldc, rng);
            auto expect = c0, got_ref = c0, got_fast = c0;
            naive_gemm(ta, tb, m, n, k, a, lda, b, ldb, expect, ldc);
            gemm(ref, ta, tb, m, n, k, a.data(), lda, b.data(), ldb, got_ref.data(), ldc);
            gemm(fast, ta, tb, m, n, k, a.data(), lda, b.data(), ldb, got_fast.data(), ldc);
            CAPTURE(m);
            CAPTURE(n);
            CAPTURE(k);
            CAPTURE(layout);
            CHECK(max_abs_diff(expect, got_ref) <= 1e-12);
            CHECK(max_abs_diff(got_ref, got_fast) <= 1e-12);
        }
    }
}

TEST_CASE("scalar path is bit-reproducible") {
    std::mt19937_64 rng(9);
    auto a = random_vec(6 * 20, rng);
    auto b = random_vec(20 * 13, rng);
    std::vector<double> c1(6 * 13, 0.0), c2(6 * 13, 0.0);
    gemm(scalar_kernels(), false, false, 6, 13, 20, a.data(), 20, b.data(), 13, c1.data(), 13);
    gemm(scalar_kernels(), false, false, 6, 13, 20, a.data(), 20, b.data(), 13, c2.data(), 13);
    CHECK(c1 == c2);
}
