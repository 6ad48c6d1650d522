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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ranfm/tensor.hpp"

namespace ranfm {

// score_t = mean over channels of (x − x̂)² for two C×T matrices.
template <typename T>
std::vector<double> anomaly_score(const Tensor<T>& x, const Tensor<T>& xhat);

struct AnomalyScoreTrace {
  std::vector<double> scores;
  std::vector<int> labels;
};

struct AdjustedF1 {
  double f1 = 0.0;
  double threshold = 0.0;
};

// Best F1 over thresholds τ ∈ distinct scores, predicting score ≥ τ, after
// point adjustment: a label-1 segment with any hit counts as fully detected.
// Ties resolve to the smallest τ. Throws DataError without positive labels.
AdjustedF1 adjusted_best_f1(const AnomalyScoreTrace& trace);

// F1 from confusion counts, 0 when there are no true positives.
double f1_from_counts(long tp, long fp, long fn);

enum class Averaging { binary, macro };

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Binary treats label 1 as positive. Macro averages over classes 0..K−1 with
// K = num_classes (or max label + 1); a class with no support in either
// sequence scores 0.
PrecisionRecallF1 precision_recall_f1(const std::vector<int>& pred, const std::vector<int>& truth, Averaging averaging,
                                      int num_classes = 0);

struct ErrorStats {
  double mse = 0.0;
  double mae = 0.0;
};

// Mean squared / absolute error, optionally restricted to flagged elements.
ErrorStats mse_mae(std::span<const double> y, std::span<const double> yhat,
                   const std::vector<std::uint8_t>* mask = nullptr);

struct EvalReport {
  std::string task;
  std::string dataset;
  std::string regime;
  std::map<std::string, double> metrics;

  // {"task":…, "dataset":…, "regime":…, "metrics":{…}}
  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
};

}  // namespace ranfm
