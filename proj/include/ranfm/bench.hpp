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

#include <string>
#include <vector>

#include "ranfm/model.hpp"

namespace ranfm {

struct BenchRow {
  int window = 0;
  int channels = 0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
  double peak_mb = 0.0;
};

// Same weights with a different window length; heads tied to the patch count
// (forecasting) are dropped.
template <typename T>
Model<T> rewindow(const Model<T>& model, int window);

// Per-window reconstruction latency over `repeat` timed runs after one warmup,
// for every (window, channels) pair in row-major order.
template <typename T>
std::vector<BenchRow> bench(const Model<T>& model, const std::vector<int>& windows, const std::vector<int>& channels,
                            int repeat, std::uint64_t seed = 0);

// `T,C,median_ms,p95_ms,peak_mb`
std::string bench_csv(const std::vector<BenchRow>& rows);

// Resident-set high-water mark and current size in KiB (0 when unavailable).
std::size_t peak_rss_kib();
std::size_t current_rss_kib();

// Nearest-rank percentile of an unsorted sample, q in [0,1].
double percentile(std::vector<double> values, double q);

}  // namespace ranfm
