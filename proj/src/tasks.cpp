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

#include "ranfm/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ranfm/encoder.hpp"
#include "ranfm/error.hpp"

namespace ranfm {

int covered_span(const ModelConfig& cfg) { return cfg.num_patches() * cfg.patch; }

namespace {

template <typename T, typename F>
auto with_encoded(const Model<T>& model, const Tensor<T>& normalized, const std::vector<std::uint8_t>* mask_rows,
                  F&& body) {
  Graph<T> g(false);
  const PatchBatch<T> batch = make_patch_batch(std::vector<Tensor<T>>{normalized}, model.config.patch);
  const BoundParams<T> bound(g, model.params, nullptr);
  const NodeId e = embed_tokens(g, bound, model.config, batch, mask_rows);
  const NodeId z = encode(g, bound, model.config, e, batch.tokens_per_instance());
  return body(g, bound, z, batch);
}

template <typename T>
Tensor<T> leading_span(const Tensor<T>& window, int span) {
  if (window.rank() != 2 || window.cols() < static_cast<std::size_t>(span))
    throw DimensionError("window " + shape_string(window.shape()) + " shorter than the model span " +
                         std::to_string(span));
  if (window.cols() == static_cast<std::size_t>(span)) return window;
  Tensor<T> out({window.rows(), static_cast<std::size_t>(span)});
  for (std::size_t c = 0; c < window.rows(); ++c)
    for (int t = 0; t < span; ++t) out(c, t) = window(c, t);
  return out;
}

// Offsets of consecutive span windows plus one flush with the end.
std::vector<std::size_t> tiling_offsets(std::size_t length, std::size_t span) {
  std::vector<std::size_t> offs = window_offsets(length, span, span);
  if (offs.back() + span < length) offs.push_back(length - span);
  return offs;
}

void check_observed(const Tensor<double>& x, const std::vector<std::uint8_t>& missing) {
  if (missing.size() != x.size()) throw DimensionError("missing mask does not match the series shape");
  for (std::size_t c = 0; c < x.rows(); ++c) {
    bool any = false;
    for (std::size_t t = 0; t < x.cols() && !any; ++t) any = !missing[c * x.cols() + t];
    if (!any) throw DataError("channel " + std::to_string(c) + " has no observed samples and cannot be imputed");
  }
}

}  // namespace

template <typename T>
Reconstruction<T> reconstruct_window(const Model<T>& model, const Tensor<T>& window,
                                     const std::vector<std::uint8_t>* mask_rows) {
  const int span = covered_span(model.config);
  auto [normalized, stats] = revin_normalize(leading_span(window, span), static_cast<T>(model.config.norm_eps));
  Tensor<T> recon = with_encoded(model, normalized, mask_rows,
                                 [&](Graph<T>& g, const BoundParams<T>& bound, NodeId z, const PatchBatch<T>& batch) {
                                   const NodeId out = reconstruct_head(g, bound, model.config, z);
                                   return unpatchify(g.value(out), batch.channels);
                                 });
  return {std::move(normalized), std::move(recon), std::move(stats)};
}

template <typename T>
std::vector<double> score_series(const Model<T>& model, const Tensor<double>& series) {
  const auto span = static_cast<std::size_t>(covered_span(model.config));
  std::vector<double> scores(series.cols(), 0.0);
  std::vector<std::uint8_t> done(series.cols(), 0);
  for (std::size_t off : tiling_offsets(series.cols(), span)) {
    const auto r = reconstruct_window(model, extract_window<T>(series, off, span));
    const auto s = anomaly_score(r.normalized, r.reconstruction);
    for (std::size_t t = 0; t < span; ++t)
      if (!done[off + t]) {
        scores[off + t] = s[t];
        done[off + t] = 1;
      }
  }
  return scores;
}

template <typename T>
Tensor<T> forecast_window(const Model<T>& model, const Tensor<T>& window) {
  if (model.heads.horizon <= 0) throw ContractError("model has no forecast head");
  auto [normalized, stats] =
      revin_normalize(leading_span(window, covered_span(model.config)), static_cast<T>(model.config.norm_eps));
  Tensor<T> pred = with_encoded(model, normalized, nullptr,
                                [&](Graph<T>& g, const BoundParams<T>& bound, NodeId z, const PatchBatch<T>& batch) {
                                  return g.value(forecast_head(g, bound, model.config, z, batch.patches));
                                });
  return revin_denormalize(pred, stats);
}

template <typename T>
Tensor<T> classify_window(const Model<T>& model, const Tensor<T>& window) {
  if (model.heads.classes < 2) throw ContractError("model has no classification head");
  auto normalized =
      revin_normalize(leading_span(window, covered_span(model.config)), static_cast<T>(model.config.norm_eps)).first;
  return with_encoded(model, normalized, nullptr,
                      [&](Graph<T>& g, const BoundParams<T>& bound, NodeId z, const PatchBatch<T>& batch) {
                        const NodeId logits = classify_head(g, bound, model.config, z, batch.tokens_per_instance());
                        return g.value(logits).reshaped({static_cast<std::size_t>(model.heads.classes)});
                      });
}

template <typename T>
Tensor<T> embed_window(const Model<T>& model, const Tensor<T>& window) {
  auto normalized =
      revin_normalize(leading_span(window, covered_span(model.config)), static_cast<T>(model.config.norm_eps)).first;
  return with_encoded(model, normalized, nullptr,
                      [&](Graph<T>& g, const BoundParams<T>&, NodeId z, const PatchBatch<T>& batch) {
                        TokenSequence<T> seq{g.value(z), {}, batch.channels, batch.patches};
                        return mean_pool(seq);
                      });
}

BaselineKind parse_baseline(const std::string& name) {
  if (name == "forward_fill") return BaselineKind::forward_fill;
  if (name == "mean") return BaselineKind::mean;
  if (name == "nearest") return BaselineKind::nearest;
  if (name == "linear") return BaselineKind::linear;
  if (name == "rolling_mean") return BaselineKind::rolling_mean;
  throw ContractError("unknown imputation baseline '" + name + "'");
}

std::string baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::forward_fill: return "forward_fill";
    case BaselineKind::mean: return "mean";
    case BaselineKind::nearest: return "nearest";
    case BaselineKind::linear: return "linear";
    case BaselineKind::rolling_mean: return "rolling_mean";
  }
  return "?";
}

Tensor<double> baseline_impute(const Tensor<double>& x, const std::vector<std::uint8_t>& missing, BaselineKind kind) {
  check_observed(x, missing);
  const std::size_t len = x.cols();
  Tensor<double> out = x;
  for (std::size_t c = 0; c < x.rows(); ++c) {
    auto miss = [&](std::size_t t) { return missing[c * len + t] != 0; };
    std::vector<std::size_t> observed;
    double mean = 0;
    for (std::size_t t = 0; t < len; ++t)
      if (!miss(t)) {
        observed.push_back(t);
        mean += x(c, t);
      }
    mean /= static_cast<double>(observed.size());

    for (std::size_t t = 0; t < len; ++t) {
      if (!miss(t)) continue;
      // First observed index at or after t, and the one before it.
      const auto next = std::lower_bound(observed.begin(), observed.end(), t);
      const bool has_next = next != observed.end();
      const bool has_prev = next != observed.begin();
      const std::size_t after = has_next ? *next : 0;
      const std::size_t before = has_prev ? *std::prev(next) : 0;
      double v = mean;
      switch (kind) {
        case BaselineKind::forward_fill:
          v = has_prev ? x(c, before) : x(c, after);
          break;
        case BaselineKind::mean:
          break;
        case BaselineKind::nearest:
          if (!has_prev) v = x(c, after);
          else if (!has_next) v = x(c, before);
          else v = (t - before <= after - t) ? x(c, before) : x(c, after);
          break;
        case BaselineKind::linear:
          if (!has_prev) v = x(c, after);
          else if (!has_next) v = x(c, before);
          else {
            const double w = static_cast<double>(t - before) / static_cast<double>(after - before);
            v = x(c, before) + w * (x(c, after) - x(c, before));
          }
          break;
        case BaselineKind::rolling_mean: {
          double sum = 0;
          int n = 0;
          const std::size_t lo = t >= 2 ? t - 2 : 0;
          const std::size_t hi = std::min(len - 1, t + 2);
          for (std::size_t u = lo; u <= hi; ++u)
            if (!miss(u)) {
              sum += x(c, u);
              ++n;
            }
          v = n > 0 ? sum / n : mean;
          break;
        }
      }
      out(c, t) = v;
    }
  }
  return out;
}

template <typename T>
Tensor<double> impute(const Model<T>& model, const Tensor<double>& x, const std::vector<std::uint8_t>& missing) {
  check_observed(x, missing);
  if (std::none_of(missing.begin(), missing.end(), [](std::uint8_t m) { return m != 0; })) return x;
  const auto span = static_cast<std::size_t>(covered_span(model.config));
  const std::size_t len = x.cols();
  const std::size_t patch = static_cast<std::size_t>(model.config.patch);
  const std::size_t n = span / patch;
  // Interpolated values only seed the normalization statistics.
  const Tensor<double> prefilled = baseline_impute(x, missing, BaselineKind::linear);
  Tensor<double> out = x;
  std::vector<std::uint8_t> filled(missing.size(), 0);

  for (std::size_t off : tiling_offsets(len, span)) {
    std::vector<std::uint8_t> mask_rows(x.rows() * n, 0);
    bool any = false;
    for (std::size_t c = 0; c < x.rows(); ++c)
      for (std::size_t t = 0; t < span; ++t)
        if (missing[c * len + off + t]) {
          mask_rows[c * n + t / patch] = 1;
          any = true;
        }
    if (!any) continue;
    const auto r = reconstruct_window(model, extract_window<T>(prefilled, off, span), &mask_rows);
    const Tensor<T> restored = revin_denormalize(r.reconstruction, r.stats);
    for (std::size_t c = 0; c < x.rows(); ++c)
      for (std::size_t t = 0; t < span; ++t) {
        const std::size_t at = c * len + off + t;
        if (missing[at] && !filled[at]) {
          out[at] = static_cast<double>(restored(c, t));
          filled[at] = 1;
        }
      }
  }
  return out;
}

std::vector<std::uint8_t> patch_mask(std::size_t channels, std::size_t length, int patch, int span, double ratio,
                                     Rng& rng) {
  if (patch < 1 || span < patch) throw ContractError("patch_mask: need span >= patch >= 1");
  const auto p = static_cast<std::size_t>(patch);
  const std::size_t n = static_cast<std::size_t>(span) / p;
  std::vector<std::uint8_t> mask(channels * length, 0);
  for (std::size_t off = 0; off + n * p <= length; off += n * p) {
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t k : select_mask_indices(n, ratio, rng))
        std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(c * length + off + k * p), p, 1);
  }
  return mask;
}

template <typename T>
std::vector<TaskExample<T>> classification_examples(const CuratedDataset& ds, const ModelConfig& cfg) {
  if (ds.label_kind == LabelKind::none || ds.labels.empty())
    throw DataError("dataset '" + ds.name + "' has no class labels");
  const auto span = static_cast<std::size_t>(covered_span(cfg));
  std::vector<TaskExample<T>> out;
  for (std::size_t off : window_offsets(ds.length(), span, span)) {
    TaskExample<T> ex;
    ex.input = extract_window<T>(ds.values, off, span);
    if (ds.label_kind == LabelKind::per_series) {
      ex.label = ds.labels.front();
    } else {
      std::map<int, std::size_t> votes;
      for (std::size_t t = off; t < off + span; ++t) ++votes[ds.labels[t]];
      ex.label = std::max_element(votes.begin(), votes.end(), [](const auto& a, const auto& b) {
                   return a.second < b.second;
                 })->first;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

template <typename T>
std::vector<TaskExample<T>> forecast_examples(const CuratedDataset& ds, const ModelConfig& cfg, int horizon,
                                              std::size_t stride) {
  if (horizon <= 0) throw ContractError("forecast horizon must be positive");
  const auto span = static_cast<std::size_t>(covered_span(cfg));
  const auto h = static_cast<std::size_t>(horizon);
  std::vector<TaskExample<T>> out;
  for (std::size_t off : window_offsets(ds.length(), span + h, stride)) {
    TaskExample<T> ex;
    ex.input = extract_window<T>(ds.values, off, span);
    ex.target = extract_window<T>(ds.values, off + span, h);
    out.push_back(std::move(ex));
  }
  return out;
}

template <typename T>
std::vector<TaskExample<T>> reconstruction_examples(const CuratedDataset& ds, const ModelConfig& cfg,
                                                    std::size_t stride) {
  if (ds.has_missing()) throw DataError("dataset '" + ds.name + "' has gaps; fill them before training on it");
  std::vector<TaskExample<T>> out;
  for (auto& w : window_iter<T>(ds, static_cast<std::size_t>(covered_span(cfg)), stride))
    out.push_back({std::move(w), {}, -1});
  return out;
}

template <typename T>
EvalReport evaluate(const Model<T>& model, const CuratedDataset& ds, Task task, Regime regime,
                    const EvalOptions& options) {
  if (regime == Regime::zero_shot && (task == Task::classify || task == Task::forecast))
    throw ContractError("zero-shot evaluation is only supported for anomaly detection and imputation");
  EvalReport report{task_name(task), ds.name, regime_name(regime), {}};

  switch (task) {
    case Task::anomaly: {
      if (ds.label_kind != LabelKind::per_timestep || ds.labels.size() != ds.length())
        throw DataError("anomaly evaluation needs per-timestep labels on '" + ds.name + "'");
      const auto best = adjusted_best_f1({score_series(model, ds.values), ds.labels});
      report.metrics["adjusted_best_f1"] = best.f1;
      report.metrics["best_threshold"] = best.threshold;
      break;
    }
    case Task::classify: {
      const auto examples = classification_examples<T>(ds, model.config);
      std::vector<int> pred, truth;
      for (const auto& ex : examples) {
        const Tensor<T> logits = classify_window(model, ex.input);
        pred.push_back(static_cast<int>(std::max_element(logits.data().begin(), logits.data().end()) -
                                        logits.data().begin()));
        truth.push_back(ex.label);
      }
      const int k = model.heads.classes;
      const auto r = precision_recall_f1(pred, truth, k == 2 ? Averaging::binary : Averaging::macro, k);
      report.metrics["precision"] = r.precision;
      report.metrics["recall"] = r.recall;
      report.metrics["f1"] = r.f1;
      break;
    }
    case Task::forecast: {
      const int head_h = model.heads.horizon;
      if (head_h <= 0) throw ContractError("model has no forecast head");
      std::vector<int> horizons;
      for (int h : options.horizons)
        if (h > 0 && h <= head_h) horizons.push_back(h);
      if (horizons.empty()) horizons.push_back(head_h);
      const auto examples =
          forecast_examples<T>(ds, model.config, head_h, static_cast<std::size_t>(covered_span(model.config)));
      std::map<int, std::pair<std::vector<double>, std::vector<double>>> pairs;
      for (const auto& ex : examples) {
        const Tensor<T> pred = forecast_window(model, ex.input);
        for (int h : horizons)
          for (std::size_t c = 0; c < pred.rows(); ++c)
            for (int t = 0; t < h; ++t) {
              pairs[h].first.push_back(ex.target(c, t));
              pairs[h].second.push_back(pred(c, t));
            }
      }
      for (int h : horizons) {
        const auto e = mse_mae(pairs[h].first, pairs[h].second);
        report.metrics["mse@" + std::to_string(h)] = e.mse;
        report.metrics["mae@" + std::to_string(h)] = e.mae;
      }
      break;
    }
    case Task::impute: {
      if (ds.has_missing()) throw DataError("imputation evaluation needs a complete dataset; '" + ds.name + "' has gaps");
      Rng rng(options.seed);
      for (double ratio : options.mask_ratios) {
        const auto mask = patch_mask(ds.channels(), ds.length(), model.config.patch, covered_span(model.config),
                                     ratio, rng);
        if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) continue;
        const Tensor<double> filled = impute(model, ds.values, mask);
        const auto e = mse_mae(ds.values.data(), filled.data(), &mask);
        const std::string key = std::to_string(static_cast<int>(std::lround(ratio * 100)));
        report.metrics["mse@" + key] = e.mse;
        report.metrics["mae@" + key] = e.mae;
      }
      break;
    }
  }
  return report;
}

#define RANFM_INSTANTIATE_TASKS(T)                                                                          \
  template Reconstruction<T> reconstruct_window(const Model<T>&, const Tensor<T>&,                          \
                                                const std::vector<std::uint8_t>*);                          \
  template std::vector<double> score_series(const Model<T>&, const Tensor<double>&);                        \
  template Tensor<T> forecast_window(const Model<T>&, const Tensor<T>&);                                    \
  template Tensor<T> classify_window(const Model<T>&, const Tensor<T>&);                                    \
  template Tensor<T> embed_window(const Model<T>&, const Tensor<T>&);                                       \
  template Tensor<double> impute(const Model<T>&, const Tensor<double>&, const std::vector<std::uint8_t>&); \
  template std::vector<TaskExample<T>> classification_examples<T>(const CuratedDataset&, const ModelConfig&); \
  template std::vector<TaskExample<T>> forecast_examples<T>(const CuratedDataset&, const ModelConfig&, int,  \
                                                            std::size_t);                                   \
  template std::vector<TaskExample<T>> reconstruction_examples<T>(const CuratedDataset&, const ModelConfig&, \
                                                                  std::size_t);                             \
  template EvalReport evaluate(const Model<T>&, const CuratedDataset&, Task, Regime, const EvalOptions&);

RANFM_INSTANTIATE_TASKS(float)
RANFM_INSTANTIATE_TASKS(double)

}  // namespace ranfm
