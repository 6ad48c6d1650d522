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

#include "ranfm/kernels.hpp"

#include <algorithm>

namespace ranfm::kernels {
namespace {

template <typename T>
T dot_scalar(const T* a, const T* b, std::size_t n) {
  T sum = 0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

template <typename T>
void axpy_scalar(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void gemm_nn_scalar(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
                    bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) axpy_scalar(a[i * k + p], b + p * n, crow, n);
  }
}

template <typename T>
void gemm_nt_scalar(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
                    bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const T v = dot_scalar(a + i * k, b + j * k, k);
      c[i * n + j] = accumulate ? c[i * n + j] + v : v;
    }
  }
}

template <typename T>
void gemm_tn_scalar(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
                    bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, T(0));
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t i = 0; i < m; ++i) axpy_scalar(a[p * m + i], b + p * n, c + i * n, n);
  }
}

}  // namespace

template <typename T>
const KernelTable<T>& scalar_table() {
  static const KernelTable<T> table{&dot_scalar<T>, &axpy_scalar<T>, &gemm_nn_scalar<T>,
                                    &gemm_nt_scalar<T>, &gemm_tn_scalar<T>};
  return table;
}

template const KernelTable<float>& scalar_table<float>();
template const KernelTable<double>& scalar_table<double>();

}  // namespace ranfm::kernels
