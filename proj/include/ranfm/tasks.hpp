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

// Task adapters: turn a model plus raw windows into scores, forecasts, class
// predictions, and imputations, and evaluate them against curated datasets.

#include <string>
#include <vector>

#include "ranfm/dataset.hpp"
#include "ranfm/metrics.hpp"
#include "ranfm/model.hpp"
#include "ranfm/rng.hpp"
#include "ranfm/training.hpp"

namespace ranfm {

struct ForecastSpec {
  int horizon = 0;
};

struct ClassifySpec {
  int classes = 2;
  std::vector<std::string> label_names;
};

// Samples one model window actually covers: ⌊T/P⌋·P.
int covered_span(const ModelConfig& cfg);

template <typename T>
struct Reconstruction {
  Tensor<T> normalized;      // C×span input after RevIN
  Tensor<T> reconstruction;  // C×span, normalized units
  NormStats<T> stats;
};

// Full (unmasked) reconstruction of one C×span window, or with the listed
// tokens replaced by the mask token.
template <typename T>
Reconstruction<T> reconstruct_window(const Model<T>& model, const Tensor<T>& window,
                                     const std::vector<std::uint8_t>* mask_rows = nullptr);

// Per-timestep anomaly scores over a whole C×len series (len ≥ span), scored in
// consecutive windows with a final window flush with the end.
template <typename T>
std::vector<double> score_series(const Model<T>& model, const Tensor<double>& series);

// C×H forecast in raw units from a C×span window.
template <typename T>
Tensor<T> forecast_window(const Model<T>& model, const Tensor<T>& window);

// Class logits for a C×span window.
template <typename T>
Tensor<T> classify_window(const Model<T>& model, const Tensor<T>& window);

// Mean-pooled encoder embedding [d] of a C×span window.
template <typename T>
Tensor<T> embed_window(const Model<T>& model, const Tensor<T>& window);

// Fills flagged samples of a C×len series (len ≥ span). Observed samples are
// returned bit-exactly; only missing ones are overwritten. A channel with no
// observations throws DataError.
template <typename T>
Tensor<double> impute(const Model<T>& model, const Tensor<double>& x, const std::vector<std::uint8_t>& missing);

enum class BaselineKind { forward_fill, mean, nearest, linear, rolling_mean };

BaselineKind parse_baseline(const std::string& name);
std::string baseline_name(BaselineKind kind);

// Classical per-channel fills. Rolling mean uses a centered window of 5.
Tensor<double> baseline_impute(const Tensor<double>& x, const std::vector<std::uint8_t>& missing, BaselineKind kind);

// Random patch-aligned mask: round(ratio·N) whole patches per channel of every
// consecutive span, flags returned C×len.
std::vector<std::uint8_t> patch_mask(std::size_t channels, std::size_t length, int patch, int span, double ratio,
                                     Rng& rng);

// ---- supervised examples from curated datasets ----

// Non-overlapping span windows labeled by the majority per-timestep label (ties
// to the smaller label), or by the per-series label.
template <typename T>
std::vector<TaskExample<T>> classification_examples(const CuratedDataset& ds, const ModelConfig& cfg);

// Input span followed by the next `horizon` samples as target.
template <typename T>
std::vector<TaskExample<T>> forecast_examples(const CuratedDataset& ds, const ModelConfig& cfg, int horizon,
                                              std::size_t stride);

template <typename T>
std::vector<TaskExample<T>> reconstruction_examples(const CuratedDataset& ds, const ModelConfig& cfg,
                                                    std::size_t stride);

struct EvalOptions {
  std::vector<int> horizons = {32, 64, 128, 208};
  std::vector<double> mask_ratios = {0.10, 0.30, 0.50};
  std::uint64_t seed = 0;
};

template <typename T>
EvalReport evaluate(const Model<T>& model, const CuratedDataset& ds, Task task, Regime regime,
                    const EvalOptions& options = {});

}  // namespace ranfm
