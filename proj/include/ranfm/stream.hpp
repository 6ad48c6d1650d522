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

// Sliding-window inference over a sample stream.

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ranfm/model.hpp"
#include "ranfm/training.hpp"

namespace ranfm {

struct StreamRecord {
  std::size_t window = 0;      // 0-based index of the emitted window
  std::size_t sample_end = 0;  // samples seen when it fired
  double t_end_ms = 0.0;
  Task task = Task::anomaly;
  std::vector<double> values;  // scores [T], logits [K], forecast C×H, or the filled C×T window
  std::size_t rows = 1;        // row count of `values`

  std::string to_json() const;
};

template <typename T>
class StreamState {
 public:
  StreamState(const Model<T>& model, Task task, std::size_t channels, std::size_t hop = 64);

  // Feeds one sample per channel; NaN entries are missing and only allowed for
  // imputation. Returns true when a record was emitted into `out`.
  bool push(double t_ms, std::span<const double> sample, StreamRecord& out);

  std::size_t window() const { return window_; }
  std::size_t samples_seen() const { return seen_; }
  std::size_t buffered() const { return std::min(seen_, window_); }

 private:
  Tensor<double> ordered(std::vector<std::uint8_t>* missing) const;

  const Model<T>& model_;
  Task task_;
  std::size_t channels_;
  std::size_t hop_;
  std::size_t window_;
  std::vector<double> ring_;  // C×window, column seen_ % window is the next slot
  std::vector<std::uint8_t> ring_missing_;
  std::size_t seen_ = 0;
  std::size_t emitted_ = 0;
};

using RecordSink = std::function<void(const StreamRecord&)>;

// Reads the curation CSV contract from `in` (a `label` column is ignored) and
// returns the number of records emitted.
template <typename T>
std::size_t stream_infer(std::istream& in, const Model<T>& model, Task task, std::size_t hop, const RecordSink& sink);

}  // namespace ranfm
