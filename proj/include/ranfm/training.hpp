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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ranfm/dataset.hpp"
#include "ranfm/model.hpp"
#include "ranfm/rng.hpp"

namespace ranfm {

enum class Regime { pretrain, full, linear_probe, zero_shot };
enum class Task { anomaly, classify, forecast, impute };

Regime parse_regime(const std::string& name);  // pretrain | ff | lp | zero
std::string regime_name(Regime regime);
Task parse_task(const std::string& name);  // anomaly | classify | forecast | impute
std::string task_name(Task task);

struct TrainConfig {
  double mask_ratio = 0.30;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;
  int batch_size = 32;
  double lr_max = 1e-4;
  double lr_min = 1e-5;
  int total_steps = 300;
  std::vector<int> strides = {1, 2, 4};
  std::uint64_t seed = 0;
  Regime regime = Regime::pretrain;

  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

template <typename T>
struct OptimizerState {
  std::map<std::string, std::vector<T>> m;
  std::map<std::string, std::vector<T>> v;
  long step = 0;
};

struct LossPoint {
  int step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

// Exactly round(ratio·n) distinct indices in [0, n), sorted.
std::vector<std::size_t> select_mask_indices(std::size_t n, double ratio, Rng& rng);

// Mean squared error over the listed flat positions.
template <typename T>
T masked_mse(const Tensor<T>& x, const Tensor<T>& xhat, const std::vector<std::size_t>& positions);

double cosine_lr(long t, long total_steps, double lr_max, double lr_min);

// Named gradient buffers, one per trainable tensor.
template <typename T>
using GradientMap = std::map<std::string, std::vector<T>>;

// Rescales all gradients so the global L2 norm is at most clip_norm. Returns
// the norm before clipping. NaN/Inf throws NumericError.
template <typename T>
double clip_gradients(GradientMap<T>& grads, double clip_norm);

// True for parameters that AdamW shrinks (everything but norms and the mask token).
bool decays(const std::string& name);

// One decoupled-weight-decay Adam update of every parameter named in `grads`.
template <typename T>
void adamw_step(ParameterSet<T>& params, const GradientMap<T>& grads, OptimizerState<T>& state, double lr,
                const TrainConfig& cfg);

// Window start offsets 0, s, 2s, … with offset + window ≤ length.
std::vector<std::size_t> window_offsets(std::size_t length, std::size_t window, std::size_t stride);

// Columns [offset, offset + window) of a C×T matrix.
template <typename T>
Tensor<T> extract_window(const Tensor<double>& series, std::size_t offset, std::size_t window);

// All windows of a dataset in offset order.
template <typename T>
std::vector<Tensor<T>> window_iter(const CuratedDataset& dataset, std::size_t window, std::size_t stride);

std::vector<double> dataset_weights(const std::vector<std::size_t>& sizes);

int stride_for_size(std::size_t samples);

// Called after every optimizer step.
using StepCallback = std::function<void(const LossPoint&)>;

template <typename T>
std::vector<LossPoint> pretrain(const std::vector<CuratedDataset>& corpus, Model<T>& model, const TrainConfig& cfg,
                                const StepCallback& on_step = nullptr);

// One supervised example in raw units. `input` is C×window; `target` is C×H for
// forecasting; `label` is the class for classification.
template <typename T>
struct TaskExample {
  Tensor<T> input;
  Tensor<T> target;
  int label = -1;
};

// Parameter names the regime may update for a task.
std::function<bool(const std::string&)> trainable_filter(Task task, Regime regime);

template <typename T>
std::vector<LossPoint> finetune(Model<T>& model, Task task, Regime regime, const std::vector<TaskExample<T>>& examples,
                                const TrainConfig& cfg, const StepCallback& on_step = nullptr);

// Loss-curve CSV: header `step,lr,loss`.
std::string loss_curve_csv(const std::vector<LossPoint>& curve);

}  // namespace ranfm
