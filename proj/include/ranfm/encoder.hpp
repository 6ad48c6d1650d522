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

// Forward pass of the patch transformer, expressed on the autodiff graph so
// that training and inference share one code path. With Graph(false) the same
// calls run as a cache-free inference pass.

#include <functional>
#include <string>
#include <vector>

#include "ranfm/graph.hpp"
#include "ranfm/model.hpp"

namespace ranfm {

// Graph leaves referencing every tensor of a ParameterSet. The set must not be
// modified while the graph is alive.
template <typename T>
class BoundParams {
 public:
  using Trainable = std::function<bool(const std::string&)>;

  BoundParams(Graph<T>& g, const ParameterSet<T>& params, const Trainable& trainable);
  NodeId operator[](const std::string& name) const;
  const std::vector<std::pair<std::string, NodeId>>& nodes() const { return nodes_; }

 private:
  std::vector<std::pair<std::string, NodeId>> nodes_;
};

// Normalized patches of B windows that share a channel count, stacked as
// [(B·C·N) × P] rows in instance-major, channel-major order.
template <typename T>
struct PatchBatch {
  Tensor<T> rows;
  std::size_t instances = 0;
  std::size_t channels = 0;
  std::size_t patches = 0;

  std::size_t tokens_per_instance() const { return channels * patches; }
};

template <typename T>
PatchBatch<T> make_patch_batch(const std::vector<Tensor<T>>& normalized_windows, int patch);

// Projection, optional mask-token replacement (one flag per row), positions.
template <typename T>
NodeId embed_tokens(Graph<T>& g, const BoundParams<T>& p, const ModelConfig& cfg, const PatchBatch<T>& batch,
                    const std::vector<std::uint8_t>* mask_rows);

// Pre-norm encoder stack and final norm; attention stays within each block of
// `segment` rows.
template <typename T>
NodeId encode(Graph<T>& g, const BoundParams<T>& p, const ModelConfig& cfg, NodeId tokens, std::size_t segment);

// Linear stack with the activation between layers and none after the last.
template <typename T>
NodeId head_mlp(Graph<T>& g, const BoundParams<T>& p, const char* head, int depth, Activation act, NodeId x);

// [rows × d] -> [rows × P]
template <typename T>
NodeId reconstruct_head(Graph<T>& g, const BoundParams<T>& p, const ModelConfig& cfg, NodeId z);

// [(B·C·N) × d] -> [(B·C) × H], one flattened N·d vector per channel, shared weights.
template <typename T>
NodeId forecast_head(Graph<T>& g, const BoundParams<T>& p, const ModelConfig& cfg, NodeId z, std::size_t patches);

// Mean over each instance's tokens, then [B × d] -> [B × K].
template <typename T>
NodeId classify_head(Graph<T>& g, const BoundParams<T>& p, const ModelConfig& cfg, NodeId z,
                     std::size_t tokens_per_instance);

// ---- single-sequence conveniences over an inference graph ----

template <typename T>
TokenSequence<T> encoder_forward(const TokenSequence<T>& seq, const ParameterSet<T>& params, const ModelConfig& cfg);

template <typename T>
Tensor<T> mean_pool(const TokenSequence<T>& z);

// C×(N·P) in normalized units.
template <typename T>
Tensor<T> head_reconstruct(const TokenSequence<T>& z, const ParameterSet<T>& params, const ModelConfig& cfg);

// C×H in normalized units.
template <typename T>
Tensor<T> head_forecast(const TokenSequence<T>& z, const ParameterSet<T>& params, const ModelConfig& cfg, int horizon);

template <typename T>
Tensor<T> head_classify(const Tensor<T>& pooled, const ParameterSet<T>& params, const ModelConfig& cfg, int classes);

}  // namespace ranfm
