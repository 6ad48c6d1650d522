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

// Curation pipeline: CSV ingestion, channel filtering, temporal alignment,
// pruning, sparse-trace interpolation, anomaly injection, and splits.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ranfm/dataset.hpp"

namespace ranfm {

struct RawColumn {
  std::string name;
  std::vector<double> values;          // NaN where missing
  std::vector<std::uint8_t> missing;   // 1 = empty, NaN, or non-numeric cell
  std::size_t non_numeric = 0;         // cells that failed to parse
};

struct RawTable {
  std::string source;
  std::vector<double> timestamps_ms;
  std::vector<RawColumn> columns;
  std::optional<std::vector<int>> labels;  // a column named `label`
  std::vector<DropRecord> report;

  std::size_t length() const { return timestamps_ms.size(); }
};

// Parses the CSV contract. A timestamp with a decimal point is read as seconds.
RawTable ingest_csv(const std::filesystem::path& path);
RawTable parse_csv(const std::string& text, const std::string& source);

RawTable filter_channels(RawTable t);
RawTable align_temporal(RawTable t);
RawTable prune_channels(RawTable t, double sigma_rel_min = 1e-6, double corr_max = 0.99);

// Linear resampling of every row onto k·n points when n < target_min.
Tensor<double> interpolate_sparse(const Tensor<double>& series, std::size_t target_min = 1000);

// Pearson correlation over the positions where both inputs are observed.
double pearson(const RawColumn& a, const RawColumn& b);

enum class AnomalyKind { spike, drop, level_shift, variance_change, saturation };

AnomalyKind parse_anomaly_kind(const std::string& name);
std::string anomaly_kind_name(AnomalyKind kind);

struct AnomalySpec {
  AnomalyKind kind = AnomalyKind::spike;
  std::size_t length = 1;
  double magnitude = 3.0;
  std::vector<std::size_t> channels;  // empty = all
  std::uint64_t seed = 0;
  std::optional<std::size_t> start;   // random when unset
};

CuratedDataset inject_anomalies(CuratedDataset d, const std::vector<AnomalySpec>& specs);

enum class SplitStrategy { temporal, per_series, provided };

SplitStrategy parse_split_strategy(const std::string& name);

struct SplitSpec {
  SplitStrategy strategy = SplitStrategy::temporal;
  double train_fraction = 0.70;
  std::uint64_t seed = 0;
};

struct SplitResult {
  std::vector<CuratedDataset> train;
  std::vector<CuratedDataset> test;
};

SplitResult make_split(const CuratedDataset& d, const SplitSpec& spec);
SplitResult make_split(const std::vector<CuratedDataset>& series, const SplitSpec& spec);

struct CurateOptions {
  std::string task = "forecast";
  SplitSpec split;
  double sigma_rel_min = 1e-6;
  double corr_max = 0.99;
  std::size_t interpolate_min = 1000;
  bool keep_missing = false;  // leave gaps flagged instead of filling them
  std::vector<AnomalySpec> anomalies;
  std::uint64_t seed = 0;
};

struct CurateResult {
  std::vector<CuratedDataset> datasets;
  std::vector<DropRecord> report;    // every drop across all files
  std::vector<std::string> failures; // "<file>: <error>"
};

// Runs the full pipeline over a CSV file or every *.csv in a directory (in
// lexicographic order). When `out_dir` is set, writes curated CSVs and
// manifest.json there.
CurateResult curate(const std::filesystem::path& input, const CurateOptions& options,
                    const std::optional<std::filesystem::path>& out_dir = std::nullopt);

// Curates one already-ingested table into an unsplit dataset.
CuratedDataset curate_table(RawTable t, const CurateOptions& options);

std::string manifest_json(const std::vector<CuratedDataset>& datasets);
std::string dataset_csv(const CuratedDataset& d);
void write_curated(const std::vector<CuratedDataset>& datasets, const std::filesystem::path& out_dir);

// Loads every dataset listed in <dir>/manifest.json.
std::vector<CuratedDataset> load_curated(const std::filesystem::path& dir);

std::string format_timestamp(double ms);

}  // namespace ranfm
