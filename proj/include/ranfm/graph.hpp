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

// Reverse-mode differentiation over an explicitly recorded tape. Nodes are
// appended in evaluation order, so the tape is its own topological order.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ranfm/ops.hpp"
#include "ranfm/tensor.hpp"

namespace ranfm {

using NodeId = std::size_t;

template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, NodeId self)>;

  // With grad disabled no backward closures are kept and ops skip the caches
  // they would need for backprop (inference mode).
  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  bool grad_enabled() const { return grad_enabled_; }

  NodeId leaf(Tensor<T> value, bool requires_grad = true);
  // Non-owning leaf; `value` must outlive the graph.
  NodeId leaf_ref(const Tensor<T>& value, bool requires_grad = true);
  NodeId constant(Tensor<T> value) { return leaf(std::move(value), false); }

  // Appends an op result. The node requires grad if any input does.
  NodeId record(Tensor<T> value, std::vector<NodeId> inputs, BackwardFn backward);

  const Tensor<T>& value(NodeId id) const;
  bool requires_grad(NodeId id) const { return nodes_.at(id).requires_grad; }
  const std::vector<NodeId>& inputs(NodeId id) const { return nodes_.at(id).inputs; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient of the last backward() w.r.t. this node (empty before backward).
  std::span<const T> grad(NodeId id) const { return nodes_.at(id).grad; }
  // Writable gradient buffer, zero-allocated on first touch. For op closures.
  std::span<T> grad_buffer(NodeId id);

  // Populates gradients of `loss` (must be a 1-element tensor) for every node
  // that requires grad. Unreachable leaves end with zero gradients.
  void backward(NodeId loss);

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* external = nullptr;
    std::vector<NodeId> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    std::vector<T> grad;
  };

  bool grad_enabled_;
  std::vector<Node> nodes_;
};

// Differentiable ops. Each computes its value with the matching primitive in
// ops.hpp and records the local vector-Jacobian product.
namespace ag {

template <typename T>
NodeId matmul(Graph<T>& g, NodeId a, NodeId b);

// x·W + b with b broadcast over rows.
template <typename T>
NodeId linear(Graph<T>& g, NodeId x, NodeId weight, NodeId bias);

template <typename T>
NodeId add(Graph<T>& g, NodeId a, NodeId b);

template <typename T>
NodeId add_row_bias(Graph<T>& g, NodeId a, NodeId bias);

template <typename T>
NodeId sub(Graph<T>& g, NodeId a, NodeId b);

template <typename T>
NodeId mul(Graph<T>& g, NodeId a, NodeId b);

template <typename T>
NodeId scale(Graph<T>& g, NodeId a, T factor);

template <typename T>
NodeId sum(Graph<T>& g, NodeId a);

template <typename T>
NodeId transpose(Graph<T>& g, NodeId a);

template <typename T>
NodeId reshape(Graph<T>& g, NodeId a, Shape shape);

template <typename T>
NodeId activation(Graph<T>& g, NodeId a, Activation kind);

template <typename T>
NodeId softmax_rows(Graph<T>& g, NodeId a);

template <typename T>
NodeId layer_norm(Graph<T>& g, NodeId a, NodeId gain, NodeId bias, T eps);

// Rows flagged in `rows` are replaced by the [cols] vector `token`.
template <typename T>
NodeId replace_rows(Graph<T>& g, NodeId a, NodeId token, const std::vector<std::uint8_t>& rows);

template <typename T>
NodeId multihead_attention(Graph<T>& g, NodeId q, NodeId k, NodeId v, std::size_t heads,
                           std::size_t segment);

// Mean over consecutive blocks of `segment` rows: [rows × d] -> [rows/segment × d].
template <typename T>
NodeId segment_mean(Graph<T>& g, NodeId a, std::size_t segment);

// Mean squared error over the elements flagged in `mask`. Throws ContractError
// if no element is flagged.
template <typename T>
NodeId masked_mse(Graph<T>& g, NodeId pred, const Tensor<T>& target,
                  const std::vector<std::uint8_t>& mask);

template <typename T>
NodeId mse(Graph<T>& g, NodeId pred, const Tensor<T>& target);

// Mean softmax cross-entropy of logits [B×K] against class indices.
template <typename T>
NodeId cross_entropy(Graph<T>& g, NodeId logits, const std::vector<int>& labels);

}  // namespace ag
}  // namespace ranfm
