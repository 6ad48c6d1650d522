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

#include "ranfm/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ranfm/encoder.hpp"
#include "ranfm/error.hpp"
#include "ranfm/graph.hpp"

namespace ranfm {

Regime parse_regime(const std::string& name) {
  if (name == "pretrain") return Regime::pretrain;
  if (name == "ff" || name == "full") return Regime::full;
  if (name == "lp" || name == "linear_probe") return Regime::linear_probe;
  if (name == "zero" || name == "zero_shot") return Regime::zero_shot;
  throw ContractError("unknown regime '" + name + "' (expected pretrain|ff|lp|zero)");
}

std::string regime_name(Regime regime) {
  switch (regime) {
    case Regime::pretrain: return "pretrain";
    case Regime::full: return "ff";
    case Regime::linear_probe: return "lp";
    case Regime::zero_shot: return "zero";
  }
  return "?";
}

Task parse_task(const std::string& name) {
  if (name == "anomaly") return Task::anomaly;
  if (name == "classify") return Task::classify;
  if (name == "forecast") return Task::forecast;
  if (name == "impute") return Task::impute;
  throw ContractError("unknown task '" + name + "' (expected anomaly|classify|forecast|impute)");
}

std::string task_name(Task task) {
  switch (task) {
    case Task::anomaly: return "anomaly";
    case Task::classify: return "classify";
    case Task::forecast: return "forecast";
    case Task::impute: return "impute";
  }
  return "?";
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw ContractError("train config: " + what); };
  if (!(mask_ratio >= 0 && mask_ratio <= 1)) fail("mask_ratio must be in [0, 1]");
  if (!(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1)) fail("betas must be in (0, 1)");
  if (!(clip_norm > 0)) fail("clip_norm must be positive");
  if (!(lr_min > 0) || lr_max < lr_min) fail("need lr_max >= lr_min > 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (total_steps < 0) fail("total_steps must be >= 0");
  if (weight_decay < 0) fail("weight_decay must be >= 0");
  if (!(eps > 0)) fail("eps must be positive");
  if (strides.empty()) fail("strides must not be empty");
  for (int s : strides)
    if (s < 1) fail("strides must be >= 1");
}

std::vector<std::size_t> select_mask_indices(std::size_t n, double ratio, Rng& rng) {
  if (n == 0) throw ContractError("select_mask_indices: need at least one token");
  if (!(ratio >= 0 && ratio <= 1)) throw ContractError("select_mask_indices: ratio must be in [0, 1]");
  const auto count = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  // Partial Fisher-Yates: the first `count` slots become a uniform sample.
  for (std::size_t i = 0; i < count; ++i) std::swap(pool[i], pool[i + rng.below(n - i)]);
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

template <typename T>
T masked_mse(const Tensor<T>& x, const Tensor<T>& xhat, const std::vector<std::size_t>& positions) {
  require_shape(x.shape() == xhat.shape(), "masked_mse", x.shape(), xhat.shape());
  if (positions.empty()) throw ContractError("masked_mse: no masked positions");
  double total = 0;
  for (std::size_t p : positions) {
    if (p >= x.size()) throw ContractError("masked_mse: position out of range");
    const double e = static_cast<double>(x[p]) - static_cast<double>(xhat[p]);
    total += e * e;
  }
  return static_cast<T>(total / static_cast<double>(positions.size()));
}

double cosine_lr(long t, long total_steps, double lr_max, double lr_min) {
  if (total_steps <= 0 || t < 0 || t > total_steps)
    throw ContractError("cosine_lr: step " + std::to_string(t) + " outside [0, " + std::to_string(total_steps) + "]");
  const double progress = static_cast<double>(t) / static_cast<double>(total_steps);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * progress));
}

template <typename T>
double clip_gradients(GradientMap<T>& grads, double clip_norm) {
  if (!(clip_norm > 0)) throw ContractError("clip_gradients: clip_norm must be positive");
  double sq = 0;
  for (const auto& [name, g] : grads)
    for (T x : g) {
      if (!std::isfinite(x)) throw NumericError("training diverged: non-finite gradient in '" + name + "'");
      sq += static_cast<double>(x) * static_cast<double>(x);
    }
  const double norm = std::sqrt(sq);
  if (norm > clip_norm) {
    const T factor = static_cast<T>(clip_norm / norm);
    for (auto& [name, g] : grads)
      for (T& x : g) x *= factor;
  }
  return norm;
}

bool decays(const std::string& name) {
  return name != pname::mask_token && name.find("norm") == std::string::npos;
}

template <typename T>
void adamw_step(ParameterSet<T>& params, const GradientMap<T>& grads, OptimizerState<T>& state, double lr,
                const TrainConfig& cfg) {
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (const auto& [name, g] : grads) {
    Tensor<T>& theta = params.at(name);
    if (g.size() != theta.size()) throw DimensionError("adamw_step: gradient size mismatch for '" + name + "'");
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.empty()) {
      m.assign(theta.size(), T(0));
      v.assign(theta.size(), T(0));
    }
    const double decay = decays(name) ? cfg.weight_decay : 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = g[i];
      const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      const double th = theta[i];
      const double next = th - lr * (mhat / (std::sqrt(vhat) + cfg.eps) + decay * th);
      if (!std::isfinite(next)) throw NumericError("training diverged: non-finite parameter '" + name + "'");
      theta[i] = static_cast<T>(next);
    }
  }
}

std::vector<std::size_t> window_offsets(std::size_t length, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) throw ContractError("window_offsets: window and stride must be positive");
  if (length < window)
    throw DataError("series of length " + std::to_string(length) + " is shorter than window " + std::to_string(window));
  std::vector<std::size_t> out;
  for (std::size_t off = 0; off + window <= length; off += stride) out.push_back(off);
  return out;
}

template <typename T>
Tensor<T> extract_window(const Tensor<double>& series, std::size_t offset, std::size_t window) {
  if (offset + window > series.cols()) throw ContractError("extract_window: window exceeds series");
  Tensor<T> out({series.rows(), window});
  for (std::size_t c = 0; c < series.rows(); ++c)
    for (std::size_t t = 0; t < window; ++t) out(c, t) = static_cast<T>(series(c, offset + t));
  return out;
}

template <typename T>
std::vector<Tensor<T>> window_iter(const CuratedDataset& dataset, std::size_t window, std::size_t stride) {
  std::vector<Tensor<T>> out;
  for (std::size_t off : window_offsets(dataset.length(), window, stride))
    out.push_back(extract_window<T>(dataset.values, off, window));
  return out;
}

std::vector<double> dataset_weights(const std::vector<std::size_t>& sizes) {
  if (sizes.empty()) throw ContractError("dataset_weights: no datasets");
  double total = 0;
  for (std::size_t n : sizes) {
    if (n == 0) throw ContractError("dataset_weights: dataset sizes must be >= 1");
    total += 1.0 / static_cast<double>(n);
  }
  std::vector<double> w;
  for (std::size_t n : sizes) w.push_back((1.0 / static_cast<double>(n)) / total);
  return w;
}

int stride_for_size(std::size_t samples) {
  if (samples < 100'000) return 1;
  if (samples < 1'000'000) return 2;
  return 4;
}

namespace {

std::size_t sample_index(const std::vector<double>& weights, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return weights.size() - 1;
}

int stride_from_config(std::size_t samples, const std::vector<int>& strides) {
  const int bucket = stride_for_size(samples) == 1 ? 0 : (stride_for_size(samples) == 2 ? 1 : 2);
  return strides[std::min<std::size_t>(static_cast<std::size_t>(bucket), strides.size() - 1)];
}

// Normalized windows plus their per-row mask flags for a masked-reconstruction step.
template <typename T>
struct ReconstructionBatch {
  PatchBatch<T> batch;
  std::vector<std::uint8_t> mask_rows;
  std::vector<std::uint8_t> mask_elems;
};

template <typename T>
ReconstructionBatch<T> prepare_reconstruction(const std::vector<Tensor<T>>& raw, const ModelConfig& cfg, double ratio,
                                              Rng& rng) {
  std::vector<Tensor<T>> normalized;
  normalized.reserve(raw.size());
  for (const auto& w : raw) normalized.push_back(revin_normalize(w, static_cast<T>(cfg.norm_eps)).first);
  ReconstructionBatch<T> out{make_patch_batch(normalized, cfg.patch), {}, {}};
  const std::size_t per = out.batch.tokens_per_instance();
  out.mask_rows.assign(out.batch.rows.rows(), 0);
  for (std::size_t b = 0; b < out.batch.instances; ++b)
    for (std::size_t idx : select_mask_indices(per, ratio, rng)) out.mask_rows[b * per + idx] = 1;
  const std::size_t p = static_cast<std::size_t>(cfg.patch);
  out.mask_elems.assign(out.batch.rows.size(), 0);
  for (std::size_t r = 0; r < out.mask_rows.size(); ++r)
    if (out.mask_rows[r]) std::fill_n(out.mask_elems.begin() + static_cast<std::ptrdiff_t>(r * p), p, 1);
  return out;
}

template <typename T>
GradientMap<T> collect_gradients(const Graph<T>& g, const BoundParams<T>& bound) {
  GradientMap<T> grads;
  for (const auto& [name, id] : bound.nodes()) {
    if (!g.requires_grad(id)) continue;
    auto gr = g.grad(id);
    grads[name] = std::vector<T>(gr.begin(), gr.end());
  }
  return grads;
}

// Backprop `loss`, clip, and apply AdamW. Returns the loss value.
template <typename T>
double optimize(Graph<T>& g, const BoundParams<T>& bound, NodeId loss, Model<T>& model, OptimizerState<T>& state,
                double lr, const TrainConfig& cfg) {
  const double value = static_cast<double>(g.value(loss)[0]);
  if (!std::isfinite(value)) throw NumericError("training diverged: loss is " + std::to_string(value));
  g.backward(loss);
  GradientMap<T> grads = collect_gradients(g, bound);
  clip_gradients(grads, cfg.clip_norm);
  adamw_step(model.params, grads, state, lr, cfg);
  return value;
}

double step_lr(int step, const TrainConfig& cfg) {
  return cosine_lr(step - 1, std::max(cfg.total_steps - 1, 1), cfg.lr_max, cfg.lr_min);
}

}  // namespace

template <typename T>
std::vector<LossPoint> pretrain(const std::vector<CuratedDataset>& corpus, Model<T>& model, const TrainConfig& cfg,
                                const StepCallback& on_step) {
  cfg.validate();
  model.config.validate();
  if (corpus.empty()) throw DataError("pretrain: empty corpus");
  if (!model.heads.reconstruction) throw ContractError("pretrain: model has no reconstruction head");
  if (cfg.mask_ratio <= 0) throw ContractError("pretrain: mask ratio 0 leaves no masked positions");

  const auto window = static_cast<std::size_t>(model.config.window);
  std::vector<const CuratedDataset*> usable;
  std::vector<std::vector<std::size_t>> offsets;
  for (const auto& ds : corpus) {
    if (ds.task == "anomaly")
      throw ContractError("pretrain: anomaly-detection dataset '" + ds.name + "' must not be in the corpus");
    if (ds.length() < window || ds.has_missing()) continue;
    usable.push_back(&ds);
    offsets.push_back(window_offsets(ds.length(), window, stride_from_config(ds.length(), cfg.strides)));
  }
  if (usable.empty()) throw DataError("pretrain: every series is shorter than the window or has gaps");

  std::vector<std::size_t> sizes;
  for (const auto* ds : usable) sizes.push_back(ds->length());
  const std::vector<double> weights = dataset_weights(sizes);

  Rng rng(cfg.seed);
  OptimizerState<T> state;
  std::vector<LossPoint> curve;
  for (int step = 1; step <= cfg.total_steps; ++step) {
    const std::size_t which = sample_index(weights, rng);
    std::vector<Tensor<T>> raw;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const auto& offs = offsets[which];
      raw.push_back(extract_window<T>(usable[which]->values, offs[rng.below(offs.size())], window));
    }
    const auto rb = prepare_reconstruction(raw, model.config, cfg.mask_ratio, rng);

    Graph<T> g;
    BoundParams<T> bound(g, model.params, [](const std::string& name) {
      return !name.starts_with(pname::head_forecast) && !name.starts_with(pname::head_classify);
    });
    const NodeId e = embed_tokens(g, bound, model.config, rb.batch, &rb.mask_rows);
    const NodeId z = encode(g, bound, model.config, e, rb.batch.tokens_per_instance());
    const NodeId recon = reconstruct_head(g, bound, model.config, z);
    const NodeId loss = ag::masked_mse(g, recon, rb.batch.rows, rb.mask_elems);
    const double lr = step_lr(step, cfg);
    const double value = optimize(g, bound, loss, model, state, lr, cfg);
    curve.push_back({step, lr, value});
    if (on_step) on_step(curve.back());
  }
  return curve;
}

std::function<bool(const std::string&)> trainable_filter(Task task, Regime regime) {
  std::string head;
  switch (task) {
    case Task::anomaly:
    case Task::impute: head = pname::head_reconstruct; break;
    case Task::forecast: head = pname::head_forecast; break;
    case Task::classify: head = pname::head_classify; break;
  }
  if (regime == Regime::zero_shot) return [](const std::string&) { return false; };
  if (regime == Regime::linear_probe)
    return [head](const std::string& name) { return name.starts_with(head + "."); };
  return [head](const std::string& name) { return !name.starts_with("head.") || name.starts_with(head + "."); };
}

template <typename T>
std::vector<LossPoint> finetune(Model<T>& model, Task task, Regime regime, const std::vector<TaskExample<T>>& examples,
                                const TrainConfig& cfg, const StepCallback& on_step) {
  cfg.validate();
  if (regime == Regime::pretrain) throw ContractError("finetune: use pretrain() for the pretraining regime");
  if (regime == Regime::zero_shot) {
    if (task == Task::classify || task == Task::forecast)
      throw ContractError("zero-shot is only supported for anomaly detection and imputation");
    return {};
  }
  if (examples.empty()) throw DataError("finetune: no training examples");
  if (task == Task::forecast && model.heads.horizon <= 0) throw ContractError("finetune: attach a forecast head first");
  if (task == Task::classify && model.heads.classes < 2) throw ContractError("finetune: attach a classification head first");

  const auto trainable = trainable_filter(task, regime);
  const T eps = static_cast<T>(model.config.norm_eps);
  Rng rng(cfg.seed);
  OptimizerState<T> state;
  std::vector<LossPoint> curve;
  for (int step = 1; step <= cfg.total_steps; ++step) {
    std::vector<const TaskExample<T>*> picks;
    for (int b = 0; b < cfg.batch_size; ++b) picks.push_back(&examples[rng.below(examples.size())]);

    Graph<T> g;
    BoundParams<T> bound(g, model.params, trainable);
    NodeId loss = 0;
    // Batch storage must outlive the graph's non-owning leaves.
    std::optional<ReconstructionBatch<T>> rb;
    std::optional<PatchBatch<T>> batch;
    if (task == Task::anomaly || task == Task::impute) {
      std::vector<Tensor<T>> raw;
      for (const auto* ex : picks) raw.push_back(ex->input);
      rb = prepare_reconstruction(raw, model.config, cfg.mask_ratio, rng);
      const NodeId e = embed_tokens(g, bound, model.config, rb->batch, &rb->mask_rows);
      const NodeId z = encode(g, bound, model.config, e, rb->batch.tokens_per_instance());
      loss = ag::masked_mse(g, reconstruct_head(g, bound, model.config, z), rb->batch.rows, rb->mask_elems);
    } else {
      std::vector<Tensor<T>> normalized;
      std::vector<T> targets;
      std::vector<int> labels;
      for (const auto* ex : picks) {
        auto [xn, stats] = revin_normalize(ex->input, eps);
        normalized.push_back(std::move(xn));
        if (task == Task::forecast) {
          if (ex->target.rank() != 2 || ex->target.cols() != static_cast<std::size_t>(model.heads.horizon))
            throw DimensionError("finetune: forecast target must be C×H with H = " + std::to_string(model.heads.horizon));
          for (std::size_t c = 0; c < ex->target.rows(); ++c)
            for (T y : ex->target.row(c)) targets.push_back((y - stats.mean[c]) / stats.stddev[c]);
        } else {
          labels.push_back(ex->label);
        }
      }
      batch = make_patch_batch(normalized, model.config.patch);
      const NodeId e = embed_tokens(g, bound, model.config, *batch, nullptr);
      const NodeId z = encode(g, bound, model.config, e, batch->tokens_per_instance());
      if (task == Task::forecast) {
        const NodeId pred = forecast_head(g, bound, model.config, z, batch->patches);
        const auto rows = g.value(pred).rows();
        loss = ag::mse(g, pred, Tensor<T>({rows, static_cast<std::size_t>(model.heads.horizon)}, std::move(targets)));
      } else {
        const NodeId logits = classify_head(g, bound, model.config, z, batch->tokens_per_instance());
        loss = ag::cross_entropy(g, logits, labels);
      }
    }
    const double lr = step_lr(step, cfg);
    const double value = optimize(g, bound, loss, model, state, lr, cfg);
    curve.push_back({step, lr, value});
    if (on_step) on_step(curve.back());
  }
  return curve;
}

std::string loss_curve_csv(const std::vector<LossPoint>& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "step,lr,loss\n";
  for (const auto& p : curve) out << p.step << ',' << p.lr << ',' << p.loss << '\n';
  return out.str();
}

#define RANFM_INSTANTIATE_TRAINING(T)                                                                           \
  template T masked_mse(const Tensor<T>&, const Tensor<T>&, const std::vector<std::size_t>&);                   \
  template double clip_gradients(GradientMap<T>&, double);                                                      \
  template void adamw_step(ParameterSet<T>&, const GradientMap<T>&, OptimizerState<T>&, double,                 \
                           const TrainConfig&);                                                                 \
  template Tensor<T> extract_window<T>(const Tensor<double>&, std::size_t, std::size_t);                        \
  template std::vector<Tensor<T>> window_iter<T>(const CuratedDataset&, std::size_t, std::size_t);              \
  template std::vector<LossPoint> pretrain(const std::vector<CuratedDataset>&, Model<T>&, const TrainConfig&,   \
                                           const StepCallback&);                                                \
  template std::vector<LossPoint> finetune(Model<T>&, Task, Regime, const std::vector<TaskExample<T>>&,         \
                                           const TrainConfig&, const StepCallback&);

RANFM_INSTANTIATE_TRAINING(float)
RANFM_INSTANTIATE_TRAINING(double)

}  // namespace ranfm
