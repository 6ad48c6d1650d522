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

#include "ranfm/encoder.hpp"

#include <algorithm>

#include "ranfm/error.hpp"

namespace ranfm {

template <typename T>
BoundParams<T>::BoundParams(Graph<T>& g, const ParameterSet<T>& params, const Trainable& trainable) {
  nodes_.reserve(params.size());
  for (const auto& [name, tensor] : params.entries())
    nodes_.emplace_back(name, g.leaf_ref(tensor, trainable && trainable(name)));
}

template <typename T>
NodeId BoundParams<T>::operator[](const std::string& name) const {
  for (const auto& [n, id] : nodes_)
    if (n == name) return id;
  throw ContractError("model has no parameter '" + name + "'");
}

template <typename T>
PatchBatch<T> make_patch_batch(const std::vector<Tensor<T>>& normalized_windows, int patch) {
  if (normalized_windows.empty()) throw ContractError("make_patch_batch: empty batch");
  PatchBatch<T> batch;
  batch.instances = normalized_windows.size();
  batch.channels = normalized_windows.front().rows();
  std::vector<T> data;
  for (const auto& w : normalized_windows) {
    if (w.rank() != 2 || w.rows() != batch.channels)
      throw DimensionError("make_patch_batch: windows must share the channel count");
    Tensor<T> p = patchify(w, patch);
    if (batch.patches == 0) batch.patches = p.shape()[1];
    if (p.shape()[1] != batch.patches) throw DimensionError("make_patch_batch: windows must share a length");
    data.insert(data.end(), p.data().begin(), p.data().end());
  }
  batch.rows = Tensor<T>({batch.instances * batch.tokens_per_instance(), static_cast<std::size_t>(patch)},
                         std::move(data));
  return batch;
}

template <typename T>
NodeId embed_tokens(Graph<T>& g, const BoundParams<T>& p, const ModelConfig& cfg, const PatchBatch<T>& batch,
                    const std::vector<std::uint8_t>* mask_rows) {
  const NodeId x = g.leaf_ref(batch.rows, false);
  NodeId e = ag::linear(g, x, p[pname::patch_weight], p[pname::patch_bias]);
  if (mask_rows != nullptr) e = ag::replace_rows(g, e, p[pname::mask_token], *mask_rows);
  const auto d = static_cast<std::size_t>(cfg.d_model);
  const Tensor<T> table = positional_table<T>(batch.patches, d);
  Tensor<T> pe({batch.rows.rows(), d});
  for (std::size_t r = 0; r < pe.rows(); ++r) {
    auto src = table.row(r % batch.patches);
    std::copy(src.begin(), src.end(), pe.row(r).begin());
  }
  return ag::add(g, e, g.constant(std::move(pe)));
}

template <typename T>
NodeId encode(Graph<T>& g, const BoundParams<T>& p, const ModelConfig& cfg, NodeId tokens, std::size_t segment) {
  const T eps = static_cast<T>(cfg.norm_eps);
  NodeId h = tokens;
  for (int l = 0; l < cfg.layers; ++l) {
    auto P = [&](const char* suffix) { return p[pname::layer(l, suffix)]; };
    const NodeId a = ag::layer_norm(g, h, P("norm1.gain"), P("norm1.bias"), eps);
    const NodeId q = ag::linear(g, a, P("attn.q.weight"), P("attn.q.bias"));
    const NodeId k = ag::linear(g, a, P("attn.k.weight"), P("attn.k.bias"));
    const NodeId v = ag::linear(g, a, P("attn.v.weight"), P("attn.v.bias"));
    const NodeId att = ag::multihead_attention(g, q, k, v, static_cast<std::size_t>(cfg.heads), segment);
    h = ag::add(g, h, ag::linear(g, att, P("attn.o.weight"), P("attn.o.bias")));
    const NodeId f = ag::layer_norm(g, h, P("norm2.gain"), P("norm2.bias"), eps);
    const NodeId inner = ag::activation(g, ag::linear(g, f, P("ffn.in.weight"), P("ffn.in.bias")), cfg.activation);
    h = ag::add(g, h, ag::linear(g, inner, P("ffn.out.weight"), P("ffn.out.bias")));
  }
  return ag::layer_norm(g, h, p[pname::final_gain], p[pname::final_bias], eps);
}

template <typename T>
NodeId head_mlp(Graph<T>& g, const BoundParams<T>& p, const char* head, int depth, Activation act, NodeId x) {
  NodeId h = x;
  for (int m = 0; m < depth; ++m) {
    h = ag::linear(g, h, p[pname::head_layer(head, m, "weight")], p[pname::head_layer(head, m, "bias")]);
    if (m + 1 < depth) h = ag::activation(g, h, act);
  }
  return h;
}

template <typename T>
NodeId reconstruct_head(Graph<T>& g, const BoundParams<T>& p, const ModelConfig& cfg, NodeId z) {
  return head_mlp(g, p, pname::head_reconstruct, cfg.head_depth, cfg.activation, z);
}

template <typename T>
NodeId forecast_head(Graph<T>& g, const BoundParams<T>& p, const ModelConfig& cfg, NodeId z, std::size_t patches) {
  const auto& zv = g.value(z);
  if (patches == 0 || zv.rows() % patches != 0) throw DimensionError("forecast_head: token count not a multiple of N");
  const NodeId flat = ag::reshape(g, z, {zv.rows() / patches, patches * zv.cols()});
  return head_mlp(g, p, pname::head_forecast, cfg.head_depth, cfg.activation, flat);
}

template <typename T>
NodeId classify_head(Graph<T>& g, const BoundParams<T>& p, const ModelConfig& cfg, NodeId z,
                     std::size_t tokens_per_instance) {
  const NodeId pooled = ag::segment_mean(g, z, tokens_per_instance);
  return head_mlp(g, p, pname::head_classify, cfg.head_depth, cfg.activation, pooled);
}

template <typename T>
TokenSequence<T> encoder_forward(const TokenSequence<T>& seq, const ParameterSet<T>& params, const ModelConfig& cfg) {
  require_shape(seq.embeddings.cols() == static_cast<std::size_t>(cfg.d_model), "encoder_forward",
                seq.embeddings.shape(), {seq.size(), static_cast<std::size_t>(cfg.d_model)});
  Graph<T> g(false);
  BoundParams<T> p(g, params, nullptr);
  const NodeId z = encode(g, p, cfg, g.leaf_ref(seq.embeddings, false), seq.size());
  TokenSequence<T> out = seq;
  out.embeddings = g.value(z);
  return out;
}

template <typename T>
Tensor<T> mean_pool(const TokenSequence<T>& z) {
  if (z.size() == 0 || z.embeddings.empty()) throw ContractError("mean_pool: empty sequence");
  const std::size_t d = z.embeddings.cols();
  Tensor<T> out({d});
  for (std::size_t r = 0; r < z.embeddings.rows(); ++r) {
    auto row = z.embeddings.row(r);
    for (std::size_t c = 0; c < d; ++c) out[c] += row[c];
  }
  const T inv = T(1) / static_cast<T>(z.embeddings.rows());
  for (T& x : out.data()) x *= inv;
  return out;
}

template <typename T>
Tensor<T> head_reconstruct(const TokenSequence<T>& z, const ParameterSet<T>& params, const ModelConfig& cfg) {
  Graph<T> g(false);
  BoundParams<T> p(g, params, nullptr);
  const NodeId out = reconstruct_head(g, p, cfg, g.leaf_ref(z.embeddings, false));
  return unpatchify(g.value(out), z.channels);
}

template <typename T>
Tensor<T> head_forecast(const TokenSequence<T>& z, const ParameterSet<T>& params, const ModelConfig& cfg, int horizon) {
  if (horizon <= 0) throw ContractError("head_forecast: horizon must be positive");
  const auto& last = params.at(pname::head_layer(pname::head_forecast, cfg.head_depth - 1, "bias"));
  if (last.size() != static_cast<std::size_t>(horizon))
    throw DimensionError("head_forecast: head was built for horizon " + std::to_string(last.size()) +
                         ", asked for " + std::to_string(horizon));
  Graph<T> g(false);
  BoundParams<T> p(g, params, nullptr);
  const NodeId out = forecast_head(g, p, cfg, g.leaf_ref(z.embeddings, false), z.patches);
  return g.value(out);
}

template <typename T>
Tensor<T> head_classify(const Tensor<T>& pooled, const ParameterSet<T>& params, const ModelConfig& cfg, int classes) {
  if (classes < 2) throw ContractError("head_classify: needs at least 2 classes");
  const auto& last = params.at(pname::head_layer(pname::head_classify, cfg.head_depth - 1, "bias"));
  if (last.size() != static_cast<std::size_t>(classes))
    throw DimensionError("head_classify: head was built for " + std::to_string(last.size()) + " classes");
  Graph<T> g(false);
  BoundParams<T> p(g, params, nullptr);
  const NodeId x = g.leaf(pooled.reshaped({1, pooled.size()}), false);
  const NodeId out = head_mlp(g, p, pname::head_classify, cfg.head_depth, cfg.activation, x);
  return g.value(out).reshaped({static_cast<std::size_t>(classes)});
}

#define RANFM_INSTANTIATE_ENCODER(T)                                                                        \
  template class BoundParams<T>;                                                                            \
  template PatchBatch<T> make_patch_batch(const std::vector<Tensor<T>>&, int);                              \
  template NodeId embed_tokens(Graph<T>&, const BoundParams<T>&, const ModelConfig&, const PatchBatch<T>&,  \
                               const std::vector<std::uint8_t>*);                                           \
  template NodeId encode(Graph<T>&, const BoundParams<T>&, const ModelConfig&, NodeId, std::size_t);        \
  template NodeId head_mlp(Graph<T>&, const BoundParams<T>&, const char*, int, Activation, NodeId);          \
  template NodeId reconstruct_head(Graph<T>&, const BoundParams<T>&, const ModelConfig&, NodeId);           \
  template NodeId forecast_head(Graph<T>&, const BoundParams<T>&, const ModelConfig&, NodeId, std::size_t); \
  template NodeId classify_head(Graph<T>&, const BoundParams<T>&, const ModelConfig&, NodeId, std::size_t); \
  template TokenSequence<T> encoder_forward(const TokenSequence<T>&, const ParameterSet<T>&,                 \
                                            const ModelConfig&);                                            \
  template Tensor<T> mean_pool(const TokenSequence<T>&);                                                    \
  template Tensor<T> head_reconstruct(const TokenSequence<T>&, const ParameterSet<T>&, const ModelConfig&); \
  template Tensor<T> head_forecast(const TokenSequence<T>&, const ParameterSet<T>&, const ModelConfig&, int); \
  template Tensor<T> head_classify(const Tensor<T>&, const ParameterSet<T>&, const ModelConfig&, int);

RANFM_INSTANTIATE_ENCODER(float)
RANFM_INSTANTIATE_ENCODER(double)

}  // namespace ranfm
