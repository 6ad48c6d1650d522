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

#include "ranfm/model.hpp"

#include <algorithm>
#include <cmath>

#include "ranfm/error.hpp"
#include "ranfm/rng.hpp"

namespace ranfm {

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ContractError("model config: " + what); };
  if (layers < 0) fail("layers must be >= 0");
  if (d_model < 2 || d_model % 2 != 0) fail("d_model must be even and >= 2");
  if (heads < 1 || d_model % heads != 0) fail("d_model must be divisible by heads");
  if (d_ff < 1) fail("d_ff must be >= 1");
  if (patch < 1) fail("patch must be >= 1");
  if (window < patch) fail("window must be >= patch");
  if (head_depth < 1) fail("head_depth must be >= 1");
  if (!(norm_eps > 0)) fail("norm_eps must be positive");
}

ModelConfig ModelConfig::small() {
  return {6, 512, 8, 2048, 512, 8, 2, Activation::relu, "small", 1e-5};
}

ModelConfig ModelConfig::base() {
  return {12, 768, 12, 3072, 512, 8, 2, Activation::relu, "base", 1e-5};
}

ModelConfig ModelConfig::large() {
  return {24, 1024, 16, 4096, 512, 8, 2, Activation::relu, "large", 1e-5};
}

ModelConfig ModelConfig::tiny() {
  return {2, 32, 4, 64, 64, 8, 2, Activation::relu, "tiny", 1e-5};
}

ModelConfig ModelConfig::for_variant(const std::string& name) {
  if (name == "small") return small();
  if (name == "base") return base();
  if (name == "large") return large();
  if (name == "tiny") return tiny();
  throw ContractError("unknown model variant '" + name + "'");
}

namespace pname {
std::string layer(int index, const char* suffix) {
  return "layers." + std::to_string(index) + "." + suffix;
}
std::string head_layer(const char* head, int index, const char* suffix) {
  return std::string(head) + "." + std::to_string(index) + "." + suffix;
}
}  // namespace pname

template <typename T>
Tensor<T>& ParameterSet<T>::add(std::string name, Tensor<T> value) {
  if (contains(name)) throw ContractError("duplicate parameter '" + name + "'");
  entries_.emplace_back(std::move(name), std::move(value));
  return entries_.back().second;
}

template <typename T>
bool ParameterSet<T>::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.first == name; });
}

template <typename T>
Tensor<T>& ParameterSet<T>::at(const std::string& name) {
  for (auto& e : entries_)
    if (e.first == name) return e.second;
  throw ContractError("no parameter named '" + name + "'");
}

template <typename T>
const Tensor<T>& ParameterSet<T>::at(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.first == name) return e.second;
  throw ContractError("no parameter named '" + name + "'");
}

template <typename T>
void ParameterSet<T>::remove_prefix(const std::string& prefix) {
  std::erase_if(entries_, [&](const Entry& e) { return e.first.starts_with(prefix); });
}

template <typename T>
std::size_t ParameterSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

template class ParameterSet<float>;
template class ParameterSet<double>;

namespace {

// Shape plan shared by init_params and param_count.
struct ParamSpec {
  std::string name;
  Shape shape;
  enum Kind { weight, zero, one } kind;
};

void add_linear(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t in, std::size_t outw) {
  out.push_back({prefix + ".weight", {in, outw}, ParamSpec::weight});
  out.push_back({prefix + ".bias", {outw}, ParamSpec::zero});
}

void add_head(std::vector<ParamSpec>& out, const char* head, int depth, std::size_t in, std::size_t hidden,
              std::size_t outw) {
  for (int m = 0; m < depth; ++m) {
    const std::size_t a = m == 0 ? in : hidden;
    const std::size_t b = m == depth - 1 ? outw : hidden;
    add_linear(out, std::string(head) + "." + std::to_string(m), a, b);
  }
}

std::vector<ParamSpec> backbone_plan(const ModelConfig& cfg) {
  const auto d = static_cast<std::size_t>(cfg.d_model);
  const auto p = static_cast<std::size_t>(cfg.patch);
  const auto ff = static_cast<std::size_t>(cfg.d_ff);
  std::vector<ParamSpec> plan;
  add_linear(plan, "patch", p, d);
  plan.push_back({pname::mask_token, {d}, ParamSpec::zero});
  for (int l = 0; l < cfg.layers; ++l) {
    plan.push_back({pname::layer(l, "norm1.gain"), {d}, ParamSpec::one});
    plan.push_back({pname::layer(l, "norm1.bias"), {d}, ParamSpec::zero});
    for (const char* proj : {"attn.q", "attn.k", "attn.v", "attn.o"}) add_linear(plan, pname::layer(l, proj), d, d);
    plan.push_back({pname::layer(l, "norm2.gain"), {d}, ParamSpec::one});
    plan.push_back({pname::layer(l, "norm2.bias"), {d}, ParamSpec::zero});
    add_linear(plan, pname::layer(l, "ffn.in"), d, ff);
    add_linear(plan, pname::layer(l, "ffn.out"), ff, d);
  }
  plan.push_back({pname::final_gain, {d}, ParamSpec::one});
  plan.push_back({pname::final_bias, {d}, ParamSpec::zero});
  return plan;
}

std::vector<ParamSpec> reconstruct_plan(const ModelConfig& cfg) {
  std::vector<ParamSpec> plan;
  add_head(plan, pname::head_reconstruct, cfg.head_depth, cfg.d_model, cfg.d_model, cfg.patch);
  return plan;
}

std::vector<ParamSpec> forecast_plan(const ModelConfig& cfg, int horizon) {
  std::vector<ParamSpec> plan;
  add_head(plan, pname::head_forecast, cfg.head_depth,
           static_cast<std::size_t>(cfg.num_patches()) * cfg.d_model, cfg.d_model, horizon);
  return plan;
}

std::vector<ParamSpec> classify_plan(const ModelConfig& cfg, int classes) {
  std::vector<ParamSpec> plan;
  add_head(plan, pname::head_classify, cfg.head_depth, cfg.d_model, cfg.d_model, classes);
  return plan;
}

std::vector<ParamSpec> full_plan(const ModelConfig& cfg, const HeadDims& heads) {
  cfg.validate();
  if (heads.horizon < 0) throw ContractError("forecast horizon must be >= 0");
  if (heads.classes == 1 || heads.classes < 0) throw ContractError("classification needs >= 2 classes");
  auto plan = backbone_plan(cfg);
  auto append = [&](std::vector<ParamSpec> more) { plan.insert(plan.end(), more.begin(), more.end()); };
  if (heads.reconstruction) append(reconstruct_plan(cfg));
  if (heads.horizon > 0) append(forecast_plan(cfg, heads.horizon));
  if (heads.classes > 0) append(classify_plan(cfg, heads.classes));
  return plan;
}

std::uint64_t name_seed(std::uint64_t seed, const std::string& name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return seed ^ h;
}

template <typename T>
void materialize(ParameterSet<T>& out, const std::vector<ParamSpec>& plan, std::uint64_t seed) {
  for (const auto& spec : plan) {
    Tensor<T> t(spec.shape, spec.kind == ParamSpec::one ? T(1) : T(0));
    if (spec.kind == ParamSpec::weight) {
      const double limit = std::sqrt(6.0 / static_cast<double>(spec.shape[0] + spec.shape[1]));
      Rng rng(name_seed(seed, spec.name));
      for (T& x : t.data()) x = static_cast<T>(rng.uniform(-limit, limit));
    }
    out.add(spec.name, std::move(t));
  }
}

}  // namespace

std::vector<std::pair<std::string, Shape>> param_shapes(const ModelConfig& cfg, const HeadDims& heads) {
  std::vector<std::pair<std::string, Shape>> out;
  for (auto& spec : full_plan(cfg, heads)) out.emplace_back(std::move(spec.name), std::move(spec.shape));
  return out;
}

template <typename T>
ParameterSet<T> init_params(const ModelConfig& cfg, const HeadDims& heads, std::uint64_t seed) {
  ParameterSet<T> out;
  materialize(out, full_plan(cfg, heads), seed);
  return out;
}

template <typename T>
Model<T> make_model(const ModelConfig& cfg, const HeadDims& heads, std::uint64_t seed) {
  return Model<T>{cfg, heads, init_params<T>(cfg, heads, seed)};
}

template <typename T>
void attach_forecast_head(Model<T>& model, int horizon, std::uint64_t seed) {
  if (horizon <= 0) throw ContractError("forecast horizon must be positive");
  model.params.remove_prefix(std::string(pname::head_forecast) + ".");
  materialize(model.params, forecast_plan(model.config, horizon), seed);
  model.heads.horizon = horizon;
}

template <typename T>
void attach_classify_head(Model<T>& model, int classes, std::uint64_t seed) {
  if (classes < 2) throw ContractError("classification needs >= 2 classes");
  model.params.remove_prefix(std::string(pname::head_classify) + ".");
  materialize(model.params, classify_plan(model.config, classes), seed);
  model.heads.classes = classes;
}

std::size_t param_count(const ModelConfig& cfg, const HeadDims& heads) {
  std::size_t n = 0;
  for (const auto& spec : full_plan(cfg, heads)) n += shape_numel(spec.shape);
  return n;
}

template <typename T>
std::pair<Tensor<T>, NormStats<T>> revin_normalize(const Tensor<T>& x, T eps) {
  if (!(eps > 0)) throw ContractError("revin_normalize: eps must be positive");
  if (x.rank() != 2) throw DimensionError("revin_normalize: expected C×T, got " + shape_string(x.shape()));
  if (!x.all_finite())
    throw DataError("revin_normalize: input contains NaN/Inf; resolve missing values first");
  const std::size_t channels = x.rows(), len = x.cols();
  NormStats<T> stats{std::vector<T>(channels), std::vector<T>(channels), eps};
  Tensor<T> out(x.shape());
  for (std::size_t c = 0; c < channels; ++c) {
    auto row = x.row(c);
    double mean = 0;
    for (T v : row) mean += v;
    mean /= static_cast<double>(len);
    double var = 0;
    for (T v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(len);
    const T sd = std::max(static_cast<T>(std::sqrt(var)), eps);
    stats.mean[c] = static_cast<T>(mean);
    stats.stddev[c] = sd;
    auto o = out.row(c);
    for (std::size_t t = 0; t < len; ++t) o[t] = (row[t] - stats.mean[c]) / sd;
  }
  return {std::move(out), std::move(stats)};
}

template <typename T>
Tensor<T> revin_denormalize(const Tensor<T>& y, const NormStats<T>& stats) {
  if (y.rank() != 2 || y.rows() != stats.mean.size())
    throw DimensionError("revin_denormalize: " + shape_string(y.shape()) + " does not match " +
                         std::to_string(stats.mean.size()) + " channel stats");
  Tensor<T> out = y;
  for (std::size_t c = 0; c < out.rows(); ++c)
    for (T& v : out.row(c)) v = v * stats.stddev[c] + stats.mean[c];
  return out;
}

template <typename T>
Tensor<T> patchify(const Tensor<T>& x, int patch) {
  if (x.rank() != 2) throw DimensionError("patchify: expected C×T, got " + shape_string(x.shape()));
  if (patch < 1 || x.cols() < static_cast<std::size_t>(patch))
    throw DimensionError("patchify: window " + std::to_string(x.cols()) + " shorter than patch " +
                         std::to_string(patch));
  const std::size_t p = static_cast<std::size_t>(patch);
  const std::size_t n = x.cols() / p;
  Tensor<T> out({x.rows(), n, p});
  for (std::size_t c = 0; c < x.rows(); ++c) {
    auto src = x.row(c);
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(n * p), out.data().begin() + c * n * p);
  }
  return out;
}

template <typename T>
Tensor<T> unpatchify(const Tensor<T>& patches, std::size_t channels) {
  if (channels == 0 || patches.size() % channels != 0)
    throw DimensionError("unpatchify: " + shape_string(patches.shape()) + " does not split into " +
                         std::to_string(channels) + " channels");
  return patches.reshaped({channels, patches.size() / channels});
}

template <typename T>
TokenSequence<T> project_patches(const Tensor<T>& patches, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (patches.rank() != 3) throw DimensionError("project_patches: expected C×N×P, got " + shape_string(patches.shape()));
  require_shape(patches.shape()[2] == weight.rows(), "project_patches", patches.shape(), weight.shape());
  TokenSequence<T> seq;
  seq.channels = patches.shape()[0];
  seq.patches = patches.shape()[1];
  const Tensor<T> flat = patches.reshaped({seq.size(), patches.shape()[2]});
  seq.embeddings = add_row_bias(matmul(flat, weight), bias);
  seq.masked.assign(seq.size(), 0);
  return seq;
}

template <typename T>
TokenSequence<T> apply_mask(TokenSequence<T> seq, const std::vector<std::size_t>& indices,
                            const Tensor<T>& mask_token) {
  require_shape(mask_token.size() == seq.embeddings.cols(), "apply_mask", seq.embeddings.shape(),
                mask_token.shape());
  seq.masked.resize(seq.size(), 0);
  for (std::size_t idx : indices) {
    if (idx >= seq.size())
      throw ContractError("apply_mask: token index " + std::to_string(idx) + " out of range [0, " +
                          std::to_string(seq.size()) + ")");
    std::copy(mask_token.data().begin(), mask_token.data().end(), seq.embeddings.row(idx).begin());
    seq.masked[idx] = 1;
  }
  return seq;
}

template <typename T>
Tensor<T> positional_table(std::size_t positions, std::size_t d) {
  if (d % 2 != 0) throw DimensionError("positional encoding needs an even width, got " + std::to_string(d));
  Tensor<T> pe({positions, d});
  for (std::size_t pos = 0; pos < positions; ++pos) {
    for (std::size_t j = 0; j < d / 2; ++j) {
      const double angle = static_cast<double>(pos) / std::pow(10000.0, 2.0 * j / static_cast<double>(d));
      pe(pos, 2 * j) = static_cast<T>(std::sin(angle));
      pe(pos, 2 * j + 1) = static_cast<T>(std::cos(angle));
    }
  }
  return pe;
}

template <typename T>
TokenSequence<T> positional_encode(TokenSequence<T> seq) {
  const Tensor<T> pe = positional_table<T>(seq.patches, seq.embeddings.cols());
  for (std::size_t tok = 0; tok < seq.size(); ++tok) {
    auto row = seq.embeddings.row(tok);
    auto add = pe.row(seq.patch_of(tok));
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += add[c];
  }
  return seq;
}

#define RANFM_INSTANTIATE_MODEL(T)                                                                  \
  template ParameterSet<T> init_params<T>(const ModelConfig&, const HeadDims&, std::uint64_t);      \
  template Model<T> make_model<T>(const ModelConfig&, const HeadDims&, std::uint64_t);              \
  template void attach_forecast_head(Model<T>&, int, std::uint64_t);                                \
  template void attach_classify_head(Model<T>&, int, std::uint64_t);                                \
  template std::pair<Tensor<T>, NormStats<T>> revin_normalize(const Tensor<T>&, T);                 \
  template Tensor<T> revin_denormalize(const Tensor<T>&, const NormStats<T>&);                      \
  template Tensor<T> patchify(const Tensor<T>&, int);                                               \
  template Tensor<T> unpatchify(const Tensor<T>&, std::size_t);                                     \
  template TokenSequence<T> project_patches(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);  \
  template TokenSequence<T> apply_mask(TokenSequence<T>, const std::vector<std::size_t>&,           \
                                       const Tensor<T>&);                                           \
  template Tensor<T> positional_table<T>(std::size_t, std::size_t);                                 \
  template TokenSequence<T> positional_encode(TokenSequence<T>);

RANFM_INSTANTIATE_MODEL(float)
RANFM_INSTANTIATE_MODEL(double)

}  // namespace ranfm
