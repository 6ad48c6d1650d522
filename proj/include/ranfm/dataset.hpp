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
#include <string>
#include <vector>

#include "ranfm/tensor.hpp"

namespace ranfm {

enum class LabelKind { none, per_timestep, per_series };

std::string label_kind_name(LabelKind kind);
LabelKind parse_label_kind(const std::string& name);

// One dropped channel, row range, or file, with the stage that dropped it.
struct DropRecord {
  std::string item;
  std::string stage;
  std::string reason;

  friend bool operator==(const DropRecord&, const DropRecord&) = default;
};

// Unit of training and evaluation: a C×T matrix with its provenance.
struct CuratedDataset {
  std::string name;
  std::string task = "forecast";  // anomaly | classify | forecast | impute
  std::vector<std::string> channel_names;
  Tensor<double> values;  // C×T
  std::vector<double> timestamps_ms;
  double sampling_period_ms = 0.0;
  LabelKind label_kind = LabelKind::none;
  std::vector<int> labels;               // T entries (per_timestep) or 1 (per_series)
  std::vector<std::uint8_t> missing;     // C×T flags; empty unless the dataset keeps gaps
  std::string split = "train";
  std::vector<std::string> files;
  std::vector<DropRecord> report;
  std::uint64_t seed = 0;

  std::size_t channels() const { return values.empty() ? 0 : values.rows(); }
  std::size_t length() const { return values.empty() ? 0 : values.cols(); }
  bool has_missing() const { return !missing.empty(); }
};

}  // namespace ranfm
