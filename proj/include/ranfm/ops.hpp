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

// Forward primitives on plain tensors. Pure and reentrant; the autodiff graph
// in graph.hpp calls these for its forward values.

#include <optional>
#include <string_view>
#include <vector>

#include "ranfm/tensor.hpp"

namespace ranfm {

enum class Activation { relu, gelu };

Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation kind);

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// a · bᵀ
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);

// aᵀ · b
template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> transpose(const Tensor<T>& a);

// Adds a [cols] vector to every row.
template <typename T>
Tensor<T> add_row_bias(const Tensor<T>& a, const Tensor<T>& bias);

// Row-wise softmax with row-max subtraction. Non-finite input throws NumericError.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& a);

template <typename T>
struct LayerNormOutput {
  Tensor<T> out;
  std::vector<T> mean;
  std::vector<T> inv_std;
};

// Population variance per row, then gain ⊙ x̂ + bias.
template <typename T>
LayerNormOutput<T> layer_norm(const Tensor<T>& a, const Tensor<T>& gain, const Tensor<T>& bias,
                              T eps);

template <typename T>
T activate(T x, Activation kind);

template <typename T>
T activate_derivative(T x, Activation kind);

template <typename T>
Tensor<T> activation(const Tensor<T>& a, Activation kind);

// Single-head scaled dot-product attention, softmax(QKᵀ/√d_h)·V, no causal mask.
template <typename T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v);

// Multi-head attention on already-projected Q, K, V [rows × d]. Rows are grouped
// into independent sequences of `segment` rows (one per batch instance); head h
// uses columns [h·d/heads, (h+1)·d/heads) with scale 1/√(d/heads).
//
// When `probs` is given, the attention weights are materialized there as
// [sequences · heads] blocks of segment×segment (needed for backprop). Without
// it, weights are computed one query row at a time in O(segment) memory.
template <typename T>
Tensor<T> multihead_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                              std::size_t heads, std::size_t segment,
                              std::vector<T>* probs = nullptr);

}  // namespace ranfm
