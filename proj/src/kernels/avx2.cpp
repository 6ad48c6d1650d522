// Copyright 2026 The ranfm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Built with -mavx2 -mfma; only reached after a CPUID check in dispatch.cpp.

#include <immintrin.h>

#include "ranfm/kernels.hpp"

namespace ranfm::kernels {
namespace {

template <typename T>
struct Vec;

template <>
struct Vec<float> {
  using reg = __m256;
  static constexpr std::size_t width = 8;
  static reg zero() { return _mm256_setzero_ps(); }
  static reg load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, reg v) { _mm256_storeu_ps(p, v); }
  static reg set1(float x) { return _mm256_set1_ps(x); }
  static reg fma(reg a, reg b, reg c) { return _mm256_fmadd_ps(a, b, c); }
  static reg add(reg a, reg b) { return _mm256_add_ps(a, b); }
  static float hsum(reg v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
  }
};

template <>
struct Vec<double> {
  using reg = __m256d;
  static constexpr std::size_t width = 4;
  static reg zero() { return _mm256_setzero_pd(); }
  static reg load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, reg v) { _mm256_storeu_pd(p, v); }
  static reg set1(double x) { return _mm256_set1_pd(x); }
  static reg fma(reg a, reg b, reg c) { return _mm256_fmadd_pd(a, b, c); }
  static reg add(reg a, reg b) { return _mm256_add_pd(a, b); }
  static double hsum(reg v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d high64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
  }
};

template <typename T>
T dot_avx2(const T* a, const T* b, std::size_t n) {
  using V = Vec<T>;
  constexpr std::size_t w = V::width;
  auto acc0 = V::zero();
  auto acc1 = V::zero();
  std::size_t i = 0;
  for (; i + 2 * w <= n; i += 2 * w) {
    acc0 = V::fma(V::load(a + i), V::load(b + i), acc0);
    acc1 = V::fma(V::load(a + i + w), V::load(b + i + w), acc1);
  }
  for (; i + w <= n; i += w) acc0 = V::fma(V::load(a + i), V::load(b + i), acc0);
  T sum = V::hsum(V::add(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

template <typename T>
void axpy_avx2(T alpha, const T* x, T* y, std::size_t n) {
  using V = Vec<T>;
  constexpr std::size_t w = V::width;
  const auto va = V::set1(alpha);
  std::size_t i = 0;
  for (; i + w <= n; i += w) V::store(y + i, V::fma(va, V::load(x + i), V::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// c[i, :] (+)= Σ_p a(i, p) · b[p, :], with a(i, p) read through a stride pair so
// the same body serves a·b (a row-major) and aᵀ·b (a stored k×m).
template <typename T>
void gemm_rows(const T* a, std::size_t a_row_stride, std::size_t a_col_stride, const T* b, T* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  using V = Vec<T>;
  constexpr std::size_t w = V::width;
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * a_row_stride;
    T* crow = c + i * n;
    std::size_t j = 0;
    for (; j + 2 * w <= n; j += 2 * w) {
      auto acc0 = accumulate ? V::load(crow + j) : V::zero();
      auto acc1 = accumulate ? V::load(crow + j + w) : V::zero();
      for (std::size_t p = 0; p < k; ++p) {
        const auto av = V::set1(arow[p * a_col_stride]);
        const T* brow = b + p * n + j;
        acc0 = V::fma(av, V::load(brow), acc0);
        acc1 = V::fma(av, V::load(brow + w), acc1);
      }
      V::store(crow + j, acc0);
      V::store(crow + j + w, acc1);
    }
    for (; j + w <= n; j += w) {
      auto acc = accumulate ? V::load(crow + j) : V::zero();
      for (std::size_t p = 0; p < k; ++p)
        acc = V::fma(V::set1(arow[p * a_col_stride]), V::load(b + p * n + j), acc);
      V::store(crow + j, acc);
    }
    for (; j < n; ++j) {
      T sum = accumulate ? crow[j] : T(0);
      for (std::size_t p = 0; p < k; ++p) sum += arow[p * a_col_stride] * b[p * n + j];
      crow[j] = sum;
    }
  }
}

template <typename T>
void gemm_nn_avx2(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
                  bool accumulate) {
  gemm_rows(a, k, 1, b, c, m, k, n, accumulate);
}

template <typename T>
void gemm_tn_avx2(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
                  bool accumulate) {
  gemm_rows(a, 1, m, b, c, m, k, n, accumulate);
}

template <typename T>
void gemm_nt_avx2(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
                  bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const T v = dot_avx2(a + i * k, b + j * k, k);
      c[i * n + j] = accumulate ? c[i * n + j] + v : v;
    }
  }
}

}  // namespace

template <typename T>
const KernelTable<T>& avx2_table() {
  static const KernelTable<T> table{&dot_avx2<T>, &axpy_avx2<T>, &gemm_nn_avx2<T>,
                                    &gemm_nt_avx2<T>, &gemm_tn_avx2<T>};
  return table;
}

template const KernelTable<float>& avx2_table<float>();
template const KernelTable<double>& avx2_table<double>();

}  // namespace ranfm::kernels
