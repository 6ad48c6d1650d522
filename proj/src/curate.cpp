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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "ranfm/datapile.hpp"
#include "ranfm/error.hpp"

namespace ranfm {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void fill_linear(CuratedDataset& d) {
  const std::size_t len = d.length();
  for (std::size_t c = 0; c < d.channels(); ++c) {
    auto row = d.values.row(c);
    auto miss = [&](std::size_t t) { return d.missing[c * len + t] != 0; };
    std::size_t prev = len;
    for (std::size_t t = 0; t < len; ++t) {
      if (miss(t)) continue;
      if (prev == len) {
        for (std::size_t u = 0; u < t; ++u) row[u] = row[t];
      } else if (t > prev + 1) {
        for (std::size_t u = prev + 1; u < t; ++u)
          row[u] = row[prev] + (row[t] - row[prev]) * static_cast<double>(u - prev) / static_cast<double>(t - prev);
      }
      prev = t;
    }
    if (prev == len) throw DataError(d.name + ": channel '" + d.channel_names[c] + "' has no observed samples");
    for (std::size_t u = prev + 1; u < len; ++u) row[u] = row[prev];
  }
  d.missing.clear();
}

std::vector<std::uint8_t> stretch_flags(const std::vector<std::uint8_t>& flags, std::size_t rows, std::size_t n,
                                        std::size_t m) {
  std::vector<std::uint8_t> out(rows * m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    const double pos = static_cast<double>(i) * static_cast<double>(n - 1) / static_cast<double>(m - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(n - 1, static_cast<std::size_t>(std::ceil(pos)));
    for (std::size_t r = 0; r < rows; ++r) out[r * m + i] = flags[r * n + lo] | flags[r * n + hi];
  }
  return out;
}

std::string stem_of(const std::string& source) { return fs::path(source).stem().string(); }

}  // namespace

std::string format_timestamp(double ms) {
  if (ms == std::floor(ms) && std::abs(ms) < 9e15) return std::to_string(static_cast<long long>(ms));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", ms / 1000.0);
  return buf;
}

CuratedDataset curate_table(RawTable t, const CurateOptions& options) {
  t = filter_channels(std::move(t));
  t = align_temporal(std::move(t));
  t = prune_channels(std::move(t), options.sigma_rel_min, options.corr_max);

  CuratedDataset d;
  d.name = stem_of(t.source);
  d.task = options.task;
  d.seed = options.seed;
  d.report = t.report;
  const std::size_t len = t.length();
  const std::size_t channels = t.columns.size();
  d.values = Tensor<double>({channels, len});
  bool any_missing = false;
  std::vector<std::uint8_t> missing(channels * len, 0);
  for (std::size_t c = 0; c < channels; ++c) {
    d.channel_names.push_back(t.columns[c].name);
    for (std::size_t i = 0; i < len; ++i) {
      d.values(c, i) = t.columns[c].values[i];
      missing[c * len + i] = t.columns[c].missing[i];
      any_missing |= missing[c * len + i] != 0;
    }
  }
  d.timestamps_ms = t.timestamps_ms;
  d.sampling_period_ms = len > 1 ? t.timestamps_ms[1] - t.timestamps_ms[0] : 0.0;
  if (t.labels) {
    d.labels = *t.labels;
    const bool constant = std::all_of(d.labels.begin(), d.labels.end(), [&](int l) { return l == d.labels[0]; });
    if (options.task == "classify" && constant) {
      d.label_kind = LabelKind::per_series;
      d.labels = {d.labels[0]};
    } else {
      d.label_kind = LabelKind::per_timestep;
    }
  }
  if (any_missing) {
    d.missing = std::move(missing);
    if (!options.keep_missing) fill_linear(d);
  }

  if (len < options.interpolate_min) {
    const Tensor<double> up = interpolate_sparse(d.values, options.interpolate_min);
    const std::size_t m = up.cols();
    if (d.has_missing()) d.missing = stretch_flags(d.missing, channels, len, m);
    if (d.label_kind == LabelKind::per_timestep) {
      std::vector<int> labels(m);
      for (std::size_t i = 0; i < m; ++i) {
        const double pos = static_cast<double>(i) * static_cast<double>(len - 1) / static_cast<double>(m - 1);
        labels[i] = std::max(d.labels[static_cast<std::size_t>(std::floor(pos))],
                             d.labels[std::min(len - 1, static_cast<std::size_t>(std::ceil(pos)))]);
      }
      d.labels = std::move(labels);
    }
    const double period = d.sampling_period_ms * static_cast<double>(len - 1) / static_cast<double>(m - 1);
    std::vector<double> ts(m);
    for (std::size_t i = 0; i < m; ++i) ts[i] = d.timestamps_ms[0] + static_cast<double>(i) * period;
    d.timestamps_ms = std::move(ts);
    d.sampling_period_ms = period;
    d.values = up;
    d.report.push_back({"all channels", "interpolate_sparse",
                        "upsampled " + std::to_string(len) + " -> " + std::to_string(m)});
  }
  return d;
}

CurateResult curate(const fs::path& input, const CurateOptions& options, const std::optional<fs::path>& out_dir) {
  std::vector<fs::path> files;
  // Files named by an existing manifest keep its name, split and report.
  std::map<std::string, nlohmann::json> listed;
  if (fs::is_directory(input)) {
    for (const auto& entry : fs::directory_iterator(input))
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    const fs::path manifest = input / "manifest.json";
    if (fs::exists(manifest)) {
      std::ifstream in(manifest);
      try {
        for (const auto& m : nlohmann::json::parse(in))
          for (const auto& f : m.at("files")) listed[f.get<std::string>()] = m;
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(manifest.string() + ": " + e.what());
      }
    }
  } else if (fs::exists(input)) {
    files.push_back(input);
  } else {
    throw DataError("input not found: " + input.string());
  }
  if (files.empty()) throw DataError("no CSV files in " + input.string());

  CurateResult result;
  std::vector<CuratedDataset> curated;
  for (const auto& file : files) {
    try {
      CuratedDataset d = curate_table(ingest_csv(file), options);
      if (!options.anomalies.empty()) d = inject_anomalies(std::move(d), options.anomalies);
      const auto it = listed.find(file.filename().string());
      if (it != listed.end()) {
        const auto& m = it->second;
        d.name = m.at("name").get<std::string>();
        d.split = m.at("split").get<std::string>();
        std::vector<DropRecord> report;
        for (const auto& r : m.at("curation_report"))
          report.push_back({r.at("item").get<std::string>(), r.at("stage").get<std::string>(),
                            r.at("reason").get<std::string>()});
        report.insert(report.end(), d.report.begin(), d.report.end());
        d.report = std::move(report);
      }
      for (const auto& r : d.report) result.report.push_back({d.name + "/" + r.item, r.stage, r.reason});
      curated.push_back(std::move(d));
    } catch (const Error& e) {
      const std::string name = file.filename().string();
      const std::string what = e.what();
      result.failures.push_back(what.starts_with(name) ? what : name + ": " + what);
    } catch (const nlohmann::json::exception& e) {
      result.failures.push_back(file.filename().string() + ": manifest entry: " + e.what());
    }
  }

  if (!curated.empty()) {
    SplitResult parts;
    if (options.split.strategy == SplitStrategy::per_series && curated.size() < 2) {
      result.failures.push_back("per_series split needs at least two series; kept all as train");
      parts.train = std::move(curated);
    } else {
      parts = make_split(curated, options.split);
    }
    for (auto& d : parts.train) result.datasets.push_back(std::move(d));
    for (auto& d : parts.test) result.datasets.push_back(std::move(d));
    std::stable_sort(result.datasets.begin(), result.datasets.end(), [](const auto& a, const auto& b) {
      return a.name != b.name ? a.name < b.name : a.split > b.split;  // train before test
    });
  }
  for (auto& d : result.datasets) d.files = {d.name + "." + d.split + ".csv"};
  if (out_dir) write_curated(result.datasets, *out_dir);
  return result;
}

std::string manifest_json(const std::vector<CuratedDataset>& datasets) {
  ordered_json arr = ordered_json::array();
  for (const auto& d : datasets) {
    ordered_json m;
    m["name"] = d.name;
    m["task"] = d.task;
    m["channels"] = d.channel_names;
    m["length"] = d.length();
    m["sampling_period_ms"] = d.sampling_period_ms;
    m["split"] = d.split;
    m["label_kind"] = d.label_kind == LabelKind::none ? ordered_json(nullptr) : ordered_json(label_kind_name(d.label_kind));
    m["files"] = d.files;
    ordered_json report = ordered_json::array();
    for (const auto& r : d.report) report.push_back({{"item", r.item}, {"stage", r.stage}, {"reason", r.reason}});
    m["curation_report"] = report;
    m["seed"] = d.seed;
    arr.push_back(m);
  }
  return arr.dump(2) + "\n";
}

std::string dataset_csv(const CuratedDataset& d) {
  std::ostringstream out;
  const bool labeled = d.label_kind != LabelKind::none;
  out << "timestamp";
  for (const auto& name : d.channel_names) out << ',' << name;
  if (labeled) out << ",label";
  out << '\n';
  const std::size_t len = d.length();
  for (std::size_t t = 0; t < len; ++t) {
    const double ts = t < d.timestamps_ms.size() ? d.timestamps_ms[t] : static_cast<double>(t) * d.sampling_period_ms;
    out << format_timestamp(ts);
    for (std::size_t c = 0; c < d.channels(); ++c) {
      out << ',';
      if (!(d.has_missing() && d.missing[c * len + t])) out << shortest(d.values(c, t));
    }
    if (labeled) out << ',' << (d.label_kind == LabelKind::per_series ? d.labels.at(0) : d.labels.at(t));
    out << '\n';
  }
  return out.str();
}

void write_curated(const std::vector<CuratedDataset>& datasets, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  for (const auto& d : datasets) {
    if (d.files.empty()) throw ContractError("dataset '" + d.name + "' has no file name");
    std::ofstream out(out_dir / d.files.front(), std::ios::binary);
    if (!out) throw DataError("cannot write " + (out_dir / d.files.front()).string());
    out << dataset_csv(d);
  }
  std::ofstream m(out_dir / "manifest.json", std::ios::binary);
  if (!m) throw DataError("cannot write manifest in " + out_dir.string());
  m << manifest_json(datasets);
}

std::vector<CuratedDataset> load_curated(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.json";
  std::ifstream in(manifest);
  if (!in) throw DataError("no manifest.json in " + dir.string());
  std::vector<CuratedDataset> out;
  try {
    for (const auto& m : nlohmann::json::parse(in)) {
      CuratedDataset d;
      d.name = m.at("name").get<std::string>();
      d.task = m.at("task").get<std::string>();
      d.channel_names = m.at("channels").get<std::vector<std::string>>();
      d.sampling_period_ms = m.at("sampling_period_ms").get<double>();
      d.split = m.at("split").get<std::string>();
      d.label_kind = m.at("label_kind").is_null() ? LabelKind::none
                                                  : parse_label_kind(m.at("label_kind").get<std::string>());
      d.files = m.at("files").get<std::vector<std::string>>();
      d.seed = m.at("seed").get<std::uint64_t>();
      for (const auto& r : m.at("curation_report"))
        d.report.push_back({r.at("item").get<std::string>(), r.at("stage").get<std::string>(),
                            r.at("reason").get<std::string>()});
      if (d.files.empty()) throw FormatError("dataset '" + d.name + "' lists no files");

      const RawTable t = ingest_csv(dir / d.files.front());
      const std::size_t len = t.length();
      if (len != m.at("length").get<std::size_t>())
        throw FormatError(d.files.front() + ": length differs from the manifest");
      d.values = Tensor<double>({d.channel_names.size(), len});
      std::vector<std::uint8_t> missing(d.channel_names.size() * len, 0);
      bool any_missing = false;
      for (std::size_t c = 0; c < d.channel_names.size(); ++c) {
        const auto col = std::find_if(t.columns.begin(), t.columns.end(),
                                      [&](const RawColumn& rc) { return rc.name == d.channel_names[c]; });
        if (col == t.columns.end())
          throw FormatError(d.files.front() + ": missing channel '" + d.channel_names[c] + "'");
        for (std::size_t i = 0; i < len; ++i) {
          d.values(c, i) = col->values[i];
          missing[c * len + i] = col->missing[i];
          any_missing |= col->missing[i] != 0;
        }
      }
      if (any_missing) d.missing = std::move(missing);
      d.timestamps_ms = t.timestamps_ms;
      if (d.label_kind != LabelKind::none) {
        if (!t.labels) throw FormatError(d.files.front() + ": manifest declares labels but the file has none");
        d.labels = *t.labels;
        if (d.label_kind == LabelKind::per_series) d.labels = {d.labels.front()};
      }
      out.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
  return out;
}

}  // namespace ranfm
