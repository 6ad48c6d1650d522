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

#pragma once

// Dense inner-loop kernels. Every routine has a portable scalar reference and,
// on x86-64, an AVX2/FMA variant. The variant is picked once at startup from
// CPUID; RANFM_ISA=scalar in the environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace ranfm::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

// True if this binary carries the variant and the CPU can run it.
bool isa_available(Isa isa);

Isa active_isa();

// Override the dispatch choice. Throws ContractError if the ISA is unavailable.
void set_isa(Isa isa);

// All matrices are dense row-major. "accumulate" adds into c instead of overwriting.
template <typename T>
struct KernelTable {
  T (*dot)(const T* a, const T* b, std::size_t n);
  void (*axpy)(T alpha, const T* x, T* y, std::size_t n);
  // c[m×n] = a[m×k] · b[k×n]
  void (*gemm_nn)(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
                  bool accumulate);
  // c[m×n] = a[m×k] · b[n×k]ᵀ
  void (*gemm_nt)(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
                  bool accumulate);
  // c[m×n] = a[k×m]ᵀ · b[k×n]
  void (*gemm_tn)(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
                  bool accumulate);
};

template <typename T>
const KernelTable<T>& scalar_table();

#if defined(RANFM_HAVE_AVX2)
template <typename T>
const KernelTable<T>& avx2_table();
#endif

template <typename T>
const KernelTable<T>& table_for(Isa isa);

template <typename T>
const KernelTable<T>& active() {
  return table_for<T>(active_isa());
}

// Span conveniences over the active table.
template <typename T>
T dot(std::span<const T> a, std::span<const T> b);

template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y);

}  // namespace ranfm::kernels
