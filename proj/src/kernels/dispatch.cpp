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

#include <atomic>
#include <cstdlib>
#include <string>

#include "ranfm/error.hpp"
#include "ranfm/kernels.hpp"

namespace ranfm::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(RANFM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect() {
  if (const char* env = std::getenv("RANFM_ISA"); env != nullptr && std::string(env) == "scalar")
    return Isa::scalar;
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) { return isa == Isa::scalar || cpu_has_avx2(); }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (!isa_available(isa))
    throw ContractError("kernel ISA '" + std::string(isa_name(isa)) + "' is not available");
  current().store(isa, std::memory_order_relaxed);
}

template <typename T>
const KernelTable<T>& table_for(Isa isa) {
#if defined(RANFM_HAVE_AVX2)
  if (isa == Isa::avx2) return avx2_table<T>();
#else
  (void)isa;
#endif
  return scalar_table<T>();
}

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw ContractError("dot: length mismatch");
  return active<T>().dot(a.data(), b.data(), a.size());
}

template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  if (x.size() != y.size()) throw ContractError("axpy: length mismatch");
  active<T>().axpy(alpha, x.data(), y.data(), x.size());
}

template const KernelTable<float>& table_for<float>(Isa);
template const KernelTable<double>& table_for<double>(Isa);
template float dot<float>(std::span<const float>, std::span<const float>);
template double dot<double>(std::span<const double>, std::span<const double>);
template void axpy<float>(float, std::span<const float>, std::span<float>);
template void axpy<double>(double, std::span<const double>, std::span<double>);

}  // namespace ranfm::kernels
