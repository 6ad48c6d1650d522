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

#include "ranfm/stream.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>

#include "json.hpp"
#include "ranfm/error.hpp"
#include "ranfm/metrics.hpp"
#include "ranfm/tasks.hpp"

namespace ranfm {

std::string StreamRecord::to_json() const {
  nlohmann::ordered_json j;
  j["window"] = window;
  j["sample_end"] = sample_end;
  j["t_end"] = t_end_ms;
  j["task"] = task_name(task);
  switch (task) {
    case Task::anomaly:
      j["max_score"] = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
      j["scores"] = values;
      break;
    case Task::classify:
      j["class"] = std::max_element(values.begin(), values.end()) - values.begin();
      j["logits"] = values;
      break;
    case Task::forecast:
    case Task::impute: {
      const std::size_t cols = values.size() / rows;
      auto rows_json = nlohmann::ordered_json::array();
      for (std::size_t r = 0; r < rows; ++r)
        rows_json.push_back(std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(r * cols),
                                                values.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols)));
      j[task == Task::forecast ? "forecast" : "filled"] = rows_json;
      break;
    }
  }
  return j.dump();
}

template <typename T>
StreamState<T>::StreamState(const Model<T>& model, Task task, std::size_t channels, std::size_t hop)
    : model_(model),
      task_(task),
      channels_(channels),
      hop_(hop),
      window_(static_cast<std::size_t>(covered_span(model.config))) {
  if (hop < 1) throw ContractError("hop must be >= 1");
  if (channels < 1) throw ContractError("stream needs at least one channel");
  if (task == Task::forecast && model.heads.horizon <= 0) throw ContractError("model has no forecast head");
  if (task == Task::classify && model.heads.classes < 2) throw ContractError("model has no classification head");
  ring_.assign(channels * window_, 0.0);
  ring_missing_.assign(channels * window_, 0);
}

template <typename T>
Tensor<double> StreamState<T>::ordered(std::vector<std::uint8_t>* missing) const {
  Tensor<double> w({channels_, window_});
  if (missing) missing->assign(channels_ * window_, 0);
  const std::size_t head = seen_ % window_;  // oldest sample
  for (std::size_t c = 0; c < channels_; ++c)
    for (std::size_t t = 0; t < window_; ++t) {
      const std::size_t slot = c * window_ + (head + t) % window_;
      w(c, t) = ring_[slot];
      if (missing) (*missing)[c * window_ + t] = ring_missing_[slot];
    }
  return w;
}

template <typename T>
bool StreamState<T>::push(double t_ms, std::span<const double> sample, StreamRecord& out) {
  if (sample.size() != channels_)
    throw DataError("stream channel count changed from " + std::to_string(channels_) + " to " +
                    std::to_string(sample.size()) + " at sample " + std::to_string(seen_));
  const std::size_t slot = seen_ % window_;
  for (std::size_t c = 0; c < channels_; ++c) {
    const bool missing = !std::isfinite(sample[c]);
    if (missing && task_ != Task::impute)
      throw DataError("non-finite sample on channel " + std::to_string(c) + " at sample " + std::to_string(seen_));
    ring_[c * window_ + slot] = missing ? 0.0 : sample[c];
    ring_missing_[c * window_ + slot] = missing ? 1 : 0;
  }
  ++seen_;
  if (seen_ < window_ || (seen_ - window_) % hop_ != 0) return false;

  out = StreamRecord{};
  out.window = emitted_++;
  out.sample_end = seen_;
  out.t_end_ms = t_ms;
  out.task = task_;
  switch (task_) {
    case Task::anomaly: {
      const auto r = reconstruct_window(model_, ordered(nullptr).template cast<T>());
      out.values = anomaly_score(r.normalized, r.reconstruction);
      break;
    }
    case Task::classify: {
      const auto logits = classify_window(model_, ordered(nullptr).template cast<T>());
      out.values.assign(logits.data().begin(), logits.data().end());
      break;
    }
    case Task::forecast: {
      const auto f = forecast_window(model_, ordered(nullptr).template cast<T>());
      out.values.assign(f.data().begin(), f.data().end());
      out.rows = f.rows();
      break;
    }
    case Task::impute: {
      std::vector<std::uint8_t> missing;
      const Tensor<double> w = ordered(&missing);
      const Tensor<double> filled = impute(model_, w, missing);
      out.values.assign(filled.data().begin(), filled.data().end());
      out.rows = channels_;
      break;
    }
  }
  return true;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string f = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
    out.push_back(std::move(f));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_cell(const std::string& s, std::size_t line_no) {
  if (s.empty() || s == "NaN" || s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("stream line " + std::to_string(line_no) + ": non-numeric cell '" + s + "'");
  return v;
}

}  // namespace

template <typename T>
std::size_t stream_infer(std::istream& in, const Model<T>& model, Task task, std::size_t hop, const RecordSink& sink) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("stream is empty (no header)");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "timestamp") throw FormatError("stream header must start with 'timestamp'");
  std::vector<std::size_t> value_cols;
  for (std::size_t i = 1; i < header.size(); ++i)
    if (header[i] != "label") value_cols.push_back(i);

  StreamState<T> state(model, task, value_cols.size(), hop);
  std::vector<double> sample(value_cols.size());
  StreamRecord rec;
  std::size_t count = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw DataError("stream line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    double ts = parse_cell(fields[0], line_no);
    if (!std::isfinite(ts)) throw DataError("stream line " + std::to_string(line_no) + ": missing timestamp");
    if (fields[0].find_first_of(".eE") != std::string::npos) ts *= 1000.0;
    for (std::size_t k = 0; k < value_cols.size(); ++k) sample[k] = parse_cell(fields[value_cols[k]], line_no);
    if (state.push(ts, sample, rec)) {
      ++count;
      if (sink) sink(rec);
    }
  }
  return count;
}

template class StreamState<float>;
template class StreamState<double>;
template std::size_t stream_infer(std::istream&, const Model<float>&, Task, std::size_t, const RecordSink&);
template std::size_t stream_infer(std::istream&, const Model<double>&, Task, std::size_t, const RecordSink&);

}  // namespace ranfm
