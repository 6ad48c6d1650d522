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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ranfm/ops.hpp"
#include "ranfm/tensor.hpp"

namespace ranfm {

// Architecture hyperparameters. Window and patch are in samples.
struct ModelConfig {
  int layers = 2;
  int d_model = 32;
  int heads = 4;
  int d_ff = 64;
  int window = 64;
  int patch = 8;
  int head_depth = 2;
  Activation activation = Activation::relu;
  std::string variant = "custom";
  double norm_eps = 1e-5;

  int num_patches() const { return window / patch; }
  // Throws ContractError on a violated invariant.
  void validate() const;

  static ModelConfig small();
  static ModelConfig base();
  static ModelConfig large();
  // Desk-scale configuration used by the examples and acceptance runs.
  static ModelConfig tiny();
  static ModelConfig for_variant(const std::string& name);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Which task heads exist. horizon/classes of 0 mean "not attached".
struct HeadDims {
  bool reconstruction = true;
  int horizon = 0;
  int classes = 0;

  friend bool operator==(const HeadDims&, const HeadDims&) = default;
};

// Named learnable tensors in a fixed insertion order. References returned by
// at() stay valid until the set is structurally modified.
template <typename T>
class ParameterSet {
 public:
  using Entry = std::pair<std::string, Tensor<T>>;

  Tensor<T>& add(std::string name, Tensor<T> value);
  bool contains(const std::string& name) const;
  Tensor<T>& at(const std::string& name);
  const Tensor<T>& at(const std::string& name) const;
  // Drops every tensor whose name starts with `prefix`.
  void remove_prefix(const std::string& prefix);

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& [name, t] : entries_) out.add(name, t.template cast<U>());
    return out;
  }

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<Entry> entries_;
};

template <typename T>
struct Model {
  ModelConfig config;
  HeadDims heads;
  ParameterSet<T> params;
};

// Parameter names.
namespace pname {
inline constexpr const char* patch_weight = "patch.weight";
inline constexpr const char* patch_bias = "patch.bias";
inline constexpr const char* mask_token = "mask_token";
inline constexpr const char* final_gain = "final_norm.gain";
inline constexpr const char* final_bias = "final_norm.bias";
inline constexpr const char* head_reconstruct = "head.reconstruct";
inline constexpr const char* head_forecast = "head.forecast";
inline constexpr const char* head_classify = "head.classify";
std::string layer(int index, const char* suffix);
std::string head_layer(const char* head, int index, const char* suffix);
}  // namespace pname

// Xavier-uniform linear weights, zero biases and mask token, unit norm gains.
// Deterministic in `seed`; float and double sets from one seed agree up to rounding.
template <typename T>
ParameterSet<T> init_params(const ModelConfig& cfg, const HeadDims& heads, std::uint64_t seed);

template <typename T>
Model<T> make_model(const ModelConfig& cfg, const HeadDims& heads, std::uint64_t seed);

// Adds (or re-initializes) a forecast/classification head on an existing model.
template <typename T>
void attach_forecast_head(Model<T>& model, int horizon, std::uint64_t seed);
template <typename T>
void attach_classify_head(Model<T>& model, int classes, std::uint64_t seed);

// Exact scalar count of init_params(cfg, heads).
std::size_t param_count(const ModelConfig& cfg, const HeadDims& heads);

// Names and shapes init_params(cfg, heads) produces, in order.
std::vector<std::pair<std::string, Shape>> param_shapes(const ModelConfig& cfg, const HeadDims& heads);

// ---- reversible instance normalization ----

template <typename T>
struct NormStats {
  std::vector<T> mean;
  std::vector<T> stddev;  // floored at eps
  T eps = T(1e-5);
};

// Per channel (row), (x − mean) / max(std, eps) with population std.
template <typename T>
std::pair<Tensor<T>, NormStats<T>> revin_normalize(const Tensor<T>& x, T eps);

template <typename T>
Tensor<T> revin_denormalize(const Tensor<T>& y, const NormStats<T>& stats);

// ---- patching, projection, masking, positions ----

// C×T -> C×N×P with N = ⌊T/P⌋; trailing samples are dropped.
template <typename T>
Tensor<T> patchify(const Tensor<T>& x, int patch);

// C×N×P (or (C·N)×P with `channels` given) -> C×(N·P).
template <typename T>
Tensor<T> unpatchify(const Tensor<T>& patches, std::size_t channels);

// (C·N)×d tokens, channel-major: token c·N + i is patch i of channel c.
template <typename T>
struct TokenSequence {
  Tensor<T> embeddings;
  std::vector<std::uint8_t> masked;
  std::size_t channels = 0;
  std::size_t patches = 0;

  std::size_t size() const { return channels * patches; }
  std::size_t channel_of(std::size_t token) const { return token / patches; }
  std::size_t patch_of(std::size_t token) const { return token % patches; }
};

template <typename T>
TokenSequence<T> project_patches(const Tensor<T>& patches, const Tensor<T>& weight, const Tensor<T>& bias);

template <typename T>
TokenSequence<T> apply_mask(TokenSequence<T> seq, const std::vector<std::size_t>& indices,
                            const Tensor<T>& mask_token);

// Sinusoidal table [positions × d]: sin at even, cos at odd columns.
template <typename T>
Tensor<T> positional_table(std::size_t positions, std::size_t d);

// Adds PE(patch index) to every token; channels share positions.
template <typename T>
TokenSequence<T> positional_encode(TokenSequence<T> seq);

}  // namespace ranfm
