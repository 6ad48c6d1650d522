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

#include "ranfm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "ranfm/error.hpp"

namespace ranfm {

template <typename T>
std::vector<double> anomaly_score(const Tensor<T>& x, const Tensor<T>& xhat) {
  require_shape(x.shape() == xhat.shape() && x.rank() == 2, "anomaly_score", x.shape(), xhat.shape());
  std::vector<double> scores(x.cols(), 0.0);
  for (std::size_t c = 0; c < x.rows(); ++c)
    for (std::size_t t = 0; t < x.cols(); ++t) {
      const double e = static_cast<double>(x(c, t)) - static_cast<double>(xhat(c, t));
      scores[t] += e * e;
    }
  for (double& s : scores) s /= static_cast<double>(x.rows());
  return scores;
}

template std::vector<double> anomaly_score(const Tensor<float>&, const Tensor<float>&);
template std::vector<double> anomaly_score(const Tensor<double>&, const Tensor<double>&);

double f1_from_counts(long tp, long fp, long fn) {
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

AdjustedF1 adjusted_best_f1(const AnomalyScoreTrace& trace) {
  const auto& s = trace.scores;
  const auto& y = trace.labels;
  if (s.size() != y.size()) throw DimensionError("adjusted_best_f1: scores and labels differ in length");
  for (double v : s)
    if (!std::isfinite(v)) throw NumericError("adjusted_best_f1: non-finite score");

  // A segment contributes its whole length once τ drops to its max score; a
  // normal timestep contributes one false positive once τ drops to its score.
  struct Event {
    double at;
    long tp;
    long fp;
  };
  std::vector<Event> events;
  long positives = 0;
  for (std::size_t t = 0; t < y.size();) {
    if (y[t] == 1) {
      std::size_t end = t;
      double peak = s[t];
      while (end < y.size() && y[end] == 1) peak = std::max(peak, s[end++]);
      events.push_back({peak, static_cast<long>(end - t), 0});
      positives += static_cast<long>(end - t);
      t = end;
    } else {
      events.push_back({s[t], 0, 1});
      ++t;
    }
  }
  if (positives == 0) throw DataError("adjusted_best_f1: no positive labels, recall is undefined");

  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.at > b.at; });
  std::vector<double> sorted = s;
  std::sort(sorted.begin(), sorted.end());
  long tp = 0, fp = 0;
  long best_tp = -1, best_fp = 0;
  double best_tau = 0.0;
  for (std::size_t i = 0; i < events.size();) {
    const double tau = events[i].at;
    for (; i < events.size() && events[i].at == tau; ++i) {
      tp += events[i].tp;
      fp += events[i].fp;
    }
    const long fn = positives - tp;
    // Every score in (next event, τ] yields the same counts; report the smallest.
    const double lowest =
        i < events.size() ? *std::upper_bound(sorted.begin(), sorted.end(), events[i].at) : sorted.front();
    // Compare 2tp/(2tp+fp+fn) exactly; on a tie the smaller τ (seen later) wins.
    const bool better = best_tp < 0 || (2 * tp) * (2 * best_tp + best_fp + (positives - best_tp)) >=
                                           (2 * best_tp) * (2 * tp + fp + fn);
    if (better) {
      best_tp = tp;
      best_fp = fp;
      best_tau = lowest;
    }
  }
  return {f1_from_counts(best_tp, best_fp, positives - best_tp), best_tau};
}

PrecisionRecallF1 precision_recall_f1(const std::vector<int>& pred, const std::vector<int>& truth, Averaging averaging,
                                      int num_classes) {
  if (pred.size() != truth.size()) throw DimensionError("precision_recall_f1: length mismatch");
  auto score = [&](int cls) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == cls && truth[i] == cls) ++tp;
      else if (pred[i] == cls) ++fp;
      else if (truth[i] == cls) ++fn;
    }
    PrecisionRecallF1 r;
    r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
  };
  if (averaging == Averaging::binary) return score(1);

  int k = num_classes;
  for (int v : pred) k = std::max(k, v + 1);
  for (int v : truth) k = std::max(k, v + 1);
  PrecisionRecallF1 mean;
  if (k == 0) return mean;
  for (int cls = 0; cls < k; ++cls) {
    const auto r = score(cls);
    mean.precision += r.precision;
    mean.recall += r.recall;
    mean.f1 += r.f1;
  }
  mean.precision /= k;
  mean.recall /= k;
  mean.f1 /= k;
  return mean;
}

ErrorStats mse_mae(std::span<const double> y, std::span<const double> yhat, const std::vector<std::uint8_t>* mask) {
  if (y.size() != yhat.size()) throw DimensionError("mse_mae: length mismatch");
  if (mask && mask->size() != y.size()) throw DimensionError("mse_mae: mask length mismatch");
  double sq = 0, abs = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    const double e = yhat[i] - y[i];
    sq += e * e;
    abs += std::abs(e);
    ++n;
  }
  if (n == 0) throw DataError("mse_mae: empty evaluation set");
  return {sq / static_cast<double>(n), abs / static_cast<double>(n)};
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["task"] = task;
  j["dataset"] = dataset;
  j["regime"] = regime;
  j["metrics"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : metrics) {
    if (!std::isfinite(v)) throw NumericError("eval report: metric '" + k + "' is not finite");
    j["metrics"][k] = v;
  }
  return j.dump(2) + "\n";
}

EvalReport EvalReport::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EvalReport r;
    r.task = j.at("task").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.regime = j.at("regime").get<std::string>();
    for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = v.get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("eval report: ") + e.what());
  }
}

}  // namespace ranfm
