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

#include "ranfm/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "ranfm/error.hpp"

namespace ranfm {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const char* what) {
  if (!j.is_object()) throw FormatError(std::string(what) + " config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw FormatError(std::string("unknown ") + what + " config key '" + key + "'");
}

template <typename V>
void read(const json& j, const char* key, V& out) {
  if (j.contains(key)) out = j.at(key).get<V>();
}

}  // namespace

ordered_json to_json(const ModelConfig& c) {
  return {{"variant", c.variant},   {"layers", c.layers}, {"d_model", c.d_model},
          {"heads", c.heads},       {"d_ff", c.d_ff},     {"window", c.window},
          {"patch", c.patch},       {"head_depth", c.head_depth},
          {"activation", activation_name(c.activation)}, {"norm_eps", c.norm_eps}};
}

ordered_json to_json(const TrainConfig& c) {
  return {{"mask_ratio", c.mask_ratio}, {"weight_decay", c.weight_decay}, {"beta1", c.beta1},
          {"beta2", c.beta2},           {"eps", c.eps},                   {"clip_norm", c.clip_norm},
          {"batch_size", c.batch_size}, {"lr_max", c.lr_max},             {"lr_min", c.lr_min},
          {"total_steps", c.total_steps}, {"strides", c.strides},         {"seed", c.seed},
          {"regime", regime_name(c.regime)}};
}

ordered_json to_json(const HeadDims& h) {
  return {{"reconstruction", h.reconstruction}, {"horizon", h.horizon}, {"classes", h.classes}};
}

ModelConfig model_config_from_json(const json& j, ModelConfig base) {
  reject_unknown(j, {"variant", "layers", "d_model", "heads", "d_ff", "window", "patch", "head_depth", "activation",
                     "norm_eps"},
                 "model");
  try {
    ModelConfig c = base;
    if (j.contains("variant")) {
      const auto name = j.at("variant").get<std::string>();
      if (name != "custom") c = ModelConfig::for_variant(name);
      c.variant = name;
    }
    read(j, "layers", c.layers);
    read(j, "d_model", c.d_model);
    read(j, "heads", c.heads);
    read(j, "d_ff", c.d_ff);
    read(j, "window", c.window);
    read(j, "patch", c.patch);
    read(j, "head_depth", c.head_depth);
    read(j, "norm_eps", c.norm_eps);
    if (j.contains("activation")) c.activation = parse_activation(j.at("activation").get<std::string>());
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
}

TrainConfig train_config_from_json(const json& j, TrainConfig base) {
  reject_unknown(j, {"mask_ratio", "weight_decay", "beta1", "beta2", "eps", "clip_norm", "batch_size", "lr_max",
                     "lr_min", "total_steps", "strides", "seed", "regime"},
                 "train");
  try {
    TrainConfig c = base;
    read(j, "mask_ratio", c.mask_ratio);
    read(j, "weight_decay", c.weight_decay);
    read(j, "beta1", c.beta1);
    read(j, "beta2", c.beta2);
    read(j, "eps", c.eps);
    read(j, "clip_norm", c.clip_norm);
    read(j, "batch_size", c.batch_size);
    read(j, "lr_max", c.lr_max);
    read(j, "lr_min", c.lr_min);
    read(j, "total_steps", c.total_steps);
    read(j, "strides", c.strides);
    read(j, "seed", c.seed);
    if (j.contains("regime")) c.regime = parse_regime(j.at("regime").get<std::string>());
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("train config: ") + e.what());
  }
}

HeadDims head_dims_from_json(const json& j) {
  reject_unknown(j, {"reconstruction", "horizon", "classes"}, "heads");
  try {
    HeadDims h;
    read(j, "reconstruction", h.reconstruction);
    read(j, "horizon", h.horizon);
    read(j, "classes", h.classes);
    if (h.horizon < 0 || h.classes < 0 || h.classes == 1) throw FormatError("heads config: bad horizon or classes");
    return h;
  } catch (const json::exception& e) {
    throw FormatError(std::string("heads config: ") + e.what());
  }
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j, {"model", "train"}, "run");
  RunConfig rc;
  if (j.contains("model")) rc.model = model_config_from_json(j.at("model"), rc.model);
  if (j.contains("train")) rc.train = train_config_from_json(j.at("train"), rc.train);
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

}  // namespace ranfm
