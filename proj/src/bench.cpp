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

#include "ranfm/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ranfm/error.hpp"
#include "ranfm/rng.hpp"
#include "ranfm/tasks.hpp"

namespace ranfm {

namespace {

std::size_t status_field_kib(const char* key) {
  std::ifstream in("/proc/self/status");
  std::string line;
  const std::string prefix = std::string(key) + ":";
  while (std::getline(in, line))
    if (line.rfind(prefix, 0) == 0) {
      std::istringstream fields(line.substr(prefix.size()));
      std::size_t kib = 0;
      fields >> kib;
      return kib;
    }
  return 0;
}

}  // namespace

std::size_t peak_rss_kib() { return status_field_kib("VmHWM"); }
std::size_t current_rss_kib() { return status_field_kib("VmRSS"); }

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ContractError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

template <typename T>
Model<T> rewindow(const Model<T>& model, int window) {
  Model<T> out = model;
  out.config.window = window;
  out.config.validate();
  if (out.heads.horizon > 0) {
    out.params.remove_prefix(std::string(pname::head_forecast) + ".");
    out.heads.horizon = 0;
  }
  return out;
}

template <typename T>
std::vector<BenchRow> bench(const Model<T>& model, const std::vector<int>& windows, const std::vector<int>& channels,
                            int repeat, std::uint64_t seed) {
  if (repeat < 3) throw ContractError("bench needs repeat >= 3");
  if (!model.heads.reconstruction) throw ContractError("bench runs the reconstruction head, which this model lacks");
  std::vector<BenchRow> rows;
  Rng rng(seed);
  for (int w : windows) {
    const Model<T> m = rewindow(model, w);
    const auto span = static_cast<std::size_t>(covered_span(m.config));
    for (int c : channels) {
      if (c < 1) throw ContractError("channel count must be positive");
      Tensor<T> x({static_cast<std::size_t>(c), span});
      for (T& v : x.data()) v = static_cast<T>(rng.normal());
      const std::size_t rss_before = current_rss_kib();
      (void)reconstruct_window(m, x);  // warmup
      std::vector<double> ms;
      for (int r = 0; r < repeat; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto out = reconstruct_window(m, x);
        const auto t1 = std::chrono::steady_clock::now();
        if (!out.reconstruction.all_finite()) throw NumericError("bench produced a non-finite reconstruction");
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
      const std::size_t peak = peak_rss_kib();
      BenchRow row;
      row.window = w;
      row.channels = c;
      row.median_ms = percentile(ms, 0.5);
      row.p95_ms = percentile(ms, 0.95);
      row.peak_mb = peak > rss_before ? static_cast<double>(peak - rss_before) / 1024.0 : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "T,C,median_ms,p95_ms,peak_mb\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.3f,%.3f,%.3f\n", r.window, r.channels, r.median_ms, r.p95_ms, r.peak_mb);
    out += buf;
  }
  return out;
}

template Model<float> rewindow(const Model<float>&, int);
template Model<double> rewindow(const Model<double>&, int);
template std::vector<BenchRow> bench(const Model<float>&, const std::vector<int>&, const std::vector<int>&, int,
                                     std::uint64_t);
template std::vector<BenchRow> bench(const Model<double>&, const std::vector<int>&, const std::vector<int>&, int,
                                     std::uint64_t);

}  // namespace ranfm
