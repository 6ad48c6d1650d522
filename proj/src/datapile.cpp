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

#include "ranfm/datapile.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "ranfm/error.hpp"
#include "ranfm/rng.hpp"

namespace ranfm {

std::string label_kind_name(LabelKind kind) {
  switch (kind) {
    case LabelKind::none: return "none";
    case LabelKind::per_timestep: return "per_timestep";
    case LabelKind::per_series: return "per_series";
  }
  return "none";
}

LabelKind parse_label_kind(const std::string& name) {
  if (name == "none" || name.empty() || name == "null") return LabelKind::none;
  if (name == "per_timestep") return LabelKind::per_timestep;
  if (name == "per_series") return LabelKind::per_series;
  throw FormatError("unknown label kind '" + name + "'");
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r' || s[a] == '"')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r' || s[b - 1] == '"')) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                       : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool is_nan_literal(const std::string& s) {
  if (s.size() != 3) return false;
  return (s[0] == 'N' || s[0] == 'n') && (s[1] == 'a' || s[1] == 'A') && (s[2] == 'N' || s[2] == 'n');
}

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

Moments moments(const RawColumn& c) {
  Moments m;
  for (std::size_t i = 0; i < c.values.size(); ++i)
    if (!c.missing[i]) {
      m.mean += c.values[i];
      ++m.count;
    }
  if (m.count == 0) return m;
  m.mean /= static_cast<double>(m.count);
  double ss = 0;
  for (std::size_t i = 0; i < c.values.size(); ++i)
    if (!c.missing[i]) ss += (c.values[i] - m.mean) * (c.values[i] - m.mean);
  m.stddev = std::sqrt(ss / static_cast<double>(m.count));
  return m;
}

template <typename V>
V take_rows(const V& v, const std::vector<std::size_t>& rows) {
  V out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(v[r]);
  return out;
}

}  // namespace

RawTable parse_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw FormatError(source + ": missing header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // BOM
  const auto header = split_fields(line);
  if (header.empty() || header[0] != "timestamp")
    throw FormatError(source + ": first column must be named 'timestamp'");

  RawTable t;
  t.source = source;
  std::optional<std::size_t> label_col;
  std::vector<std::size_t> col_of(header.size(), 0);
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i] == "label") {
      if (label_col) throw FormatError(source + ": duplicate 'label' column");
      label_col = i;
      continue;
    }
    col_of[i] = t.columns.size();
    t.columns.push_back({header[i], {}, {}, 0});
  }
  if (label_col) t.labels.emplace();

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw FormatError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " fields, found " + std::to_string(fields.size()));
    double ts = 0;
    if (!parse_double(fields[0], ts) || !std::isfinite(ts))
      throw FormatError(source + ":" + std::to_string(line_no) + ": bad timestamp '" + fields[0] + "'");
    const bool seconds = fields[0].find_first_of(".eE") != std::string::npos;
    t.timestamps_ms.push_back(seconds ? ts * 1000.0 : ts);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (label_col && i == *label_col) {
        double lab = 0;
        if (!parse_double(fields[i], lab) || lab != std::floor(lab))
          throw FormatError(source + ":" + std::to_string(line_no) + ": bad label '" + fields[i] + "'");
        t.labels->push_back(static_cast<int>(lab));
        continue;
      }
      RawColumn& c = t.columns[col_of[i]];
      double v = 0;
      if (fields[i].empty() || is_nan_literal(fields[i])) {
        c.values.push_back(kNaN);
        c.missing.push_back(1);
      } else if (parse_double(fields[i], v) && std::isfinite(v)) {
        c.values.push_back(v);
        c.missing.push_back(0);
      } else {
        c.values.push_back(kNaN);
        c.missing.push_back(1);
        ++c.non_numeric;
      }
    }
  }
  if (t.timestamps_ms.empty()) throw FormatError(source + ": no data rows");
  return t;
}

RawTable ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.filename().string());
}

RawTable filter_channels(RawTable t) {
  std::vector<RawColumn> kept;
  for (auto& c : t.columns) {
    std::vector<double> observed;
    for (std::size_t i = 0; i < c.values.size(); ++i)
      if (!c.missing[i]) observed.push_back(c.values[i]);
    std::string reason;
    if (observed.empty()) {
      reason = c.non_numeric > 0 ? "non_numeric" : "empty";
    } else {
      const bool integral = std::all_of(observed.begin(), observed.end(), [](double v) { return v == std::floor(v); });
      std::set<double> distinct(observed.begin(), observed.end());
      if (integral && observed.size() >= 3 && distinct.size() == observed.size())
        reason = "identifier";
      else if (distinct.size() >= 2 && distinct.size() <= 10 &&
               static_cast<double>(distinct.size()) < 0.01 * static_cast<double>(observed.size()))
        reason = "categorical";
    }
    if (reason.empty())
      kept.push_back(std::move(c));
    else
      t.report.push_back({c.name, "filter_channels", reason});
  }
  if (kept.empty()) throw DataError(t.source + ": no numeric channels left after filtering");
  t.columns = std::move(kept);
  return t;
}

RawTable align_temporal(RawTable t) {
  const std::size_t n = t.length();
  if (n < 2) throw DataError(t.source + ": need at least two timestamps");

  std::map<long long, std::size_t> counts;  // period in 1e-6 ms units
  for (std::size_t i = 1; i < n; ++i) {
    const double gap = t.timestamps_ms[i] - t.timestamps_ms[i - 1];
    if (gap > 0) ++counts[std::llround(gap * 1e6)];
  }
  if (counts.empty()) throw DataError(t.source + ": timestamps never advance");
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it)
    if (it->second > best->second) best = it;
  const double delta = static_cast<double>(best->first) / 1e6;

  std::vector<std::vector<std::size_t>> segments{{0}};
  double last = t.timestamps_ms[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double gap = t.timestamps_ms[i] - last;
    if (gap < 0.5 * delta) {
      t.report.push_back({"row " + std::to_string(i + 1), "align_temporal",
                          gap < 0 ? "non_monotone_timestamp" : "duplicate_timestamp"});
      continue;
    }
    if (gap > 1.5 * delta) segments.emplace_back();
    segments.back().push_back(i);
    last = t.timestamps_ms[i];
  }
  std::size_t keep = 0;
  for (std::size_t s = 1; s < segments.size(); ++s)
    if (segments[s].size() > segments[keep].size()) keep = s;
  if (segments[keep].size() < 2) throw DataError(t.source + ": no time-consistent segment of length >= 2");
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (s == keep) continue;
    t.report.push_back({"rows " + std::to_string(segments[s].front() + 1) + "-" +
                            std::to_string(segments[s].back() + 1),
                        "align_temporal", "inconsistent_sampling"});
  }

  const auto& rows = segments[keep];
  const double t0 = std::round(t.timestamps_ms[rows.front()] / delta) * delta;
  std::vector<double> ts(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) ts[i] = t0 + static_cast<double>(i) * delta;
  t.timestamps_ms = std::move(ts);
  for (auto& c : t.columns) {
    c.values = take_rows(c.values, rows);
    c.missing = take_rows(c.missing, rows);
  }
  if (t.labels) *t.labels = take_rows(*t.labels, rows);
  return t;
}

double pearson(const RawColumn& a, const RawColumn& b) {
  double sa = 0, sb = 0;
  std::size_t n = 0;
  const std::size_t len = std::min(a.values.size(), b.values.size());
  for (std::size_t i = 0; i < len; ++i)
    if (!a.missing[i] && !b.missing[i]) {
      sa += a.values[i];
      sb += b.values[i];
      ++n;
    }
  if (n < 2) return 0.0;
  const double ma = sa / static_cast<double>(n);
  const double mb = sb / static_cast<double>(n);
  double cab = 0, caa = 0, cbb = 0;
  for (std::size_t i = 0; i < len; ++i)
    if (!a.missing[i] && !b.missing[i]) {
      const double da = a.values[i] - ma;
      const double db = b.values[i] - mb;
      cab += da * db;
      caa += da * da;
      cbb += db * db;
    }
  if (caa <= 0 || cbb <= 0) return 0.0;
  return cab / std::sqrt(caa * cbb);
}

RawTable prune_channels(RawTable t, double sigma_rel_min, double corr_max) {
  if (!(sigma_rel_min > 0 && sigma_rel_min < 1) || !(corr_max > 0 && corr_max < 1))
    throw ContractError("prune_channels thresholds must lie in (0,1)");
  std::vector<RawColumn> kept;
  for (auto& c : t.columns) {
    const Moments m = moments(c);
    if (m.count < 2 || m.stddev / (std::abs(m.mean) + 1.0) < sigma_rel_min) {
      t.report.push_back({c.name, "prune_channels", "near_constant"});
      continue;
    }
    const RawColumn* twin = nullptr;
    for (const auto& k : kept)
      if (std::abs(pearson(k, c)) > corr_max) {
        twin = &k;
        break;
      }
    if (twin) {
      t.report.push_back({c.name, "prune_channels", "correlated_with:" + twin->name});
      continue;
    }
    kept.push_back(std::move(c));
  }
  if (kept.empty()) throw DataError(t.source + ": every channel was pruned");
  t.columns = std::move(kept);
  return t;
}

Tensor<double> interpolate_sparse(const Tensor<double>& series, std::size_t target_min) {
  if (series.rank() != 2 || series.cols() < 2) throw DataError("interpolate_sparse needs at least two samples");
  const std::size_t n = series.cols();
  if (n >= target_min) return series;
  const std::size_t k = (target_min + n - 1) / n;
  const std::size_t m = k * n;
  Tensor<double> out({series.rows(), m});
  for (std::size_t i = 0; i < m; ++i) {
    const double pos = static_cast<double>(i) * static_cast<double>(n - 1) / static_cast<double>(m - 1);
    const auto lo = std::min(static_cast<std::size_t>(pos), n - 2);
    const double w = pos - static_cast<double>(lo);
    for (std::size_t c = 0; c < series.rows(); ++c) {
      if (i == 0) out(c, i) = series(c, 0);
      else if (i == m - 1) out(c, i) = series(c, n - 1);
      else out(c, i) = series(c, lo) + w * (series(c, lo + 1) - series(c, lo));
    }
  }
  return out;
}

AnomalyKind parse_anomaly_kind(const std::string& name) {
  if (name == "spike") return AnomalyKind::spike;
  if (name == "drop") return AnomalyKind::drop;
  if (name == "level_shift") return AnomalyKind::level_shift;
  if (name == "variance_change") return AnomalyKind::variance_change;
  if (name == "saturation") return AnomalyKind::saturation;
  throw ContractError("unknown anomaly kind '" + name + "'");
}

std::string anomaly_kind_name(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::spike: return "spike";
    case AnomalyKind::drop: return "drop";
    case AnomalyKind::level_shift: return "level_shift";
    case AnomalyKind::variance_change: return "variance_change";
    case AnomalyKind::saturation: return "saturation";
  }
  return "?";
}

CuratedDataset inject_anomalies(CuratedDataset d, const std::vector<AnomalySpec>& specs) {
  const std::size_t channels = d.channels();
  const std::size_t len = d.length();
  if (d.label_kind == LabelKind::per_series) throw ContractError("cannot inject anomalies into per-series labels");
  if (d.label_kind == LabelKind::none || d.labels.size() != len) {
    d.labels.assign(len, 0);
    d.label_kind = LabelKind::per_timestep;
  }
  if (specs.empty()) return d;

  std::vector<double> stddev(channels), p99(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    std::vector<double> row(d.values.row(c).begin(), d.values.row(c).end());
    double mean = 0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(len);
    double ss = 0;
    for (double v : row) ss += (v - mean) * (v - mean);
    stddev[c] = std::sqrt(ss / static_cast<double>(len));
    std::sort(row.begin(), row.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(len)));
    p99[c] = row[std::max<std::size_t>(rank, 1) - 1];
  }

  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> busy(channels);
  auto overlaps = [&](const std::vector<std::size_t>& chans, std::size_t start, std::size_t n) {
    for (std::size_t c : chans)
      for (auto [s, e] : busy[c])
        if (start < e && s < start + n) return true;
    return false;
  };

  for (const auto& spec : specs) {
    if (spec.length < 1 || spec.length >= len)
      throw ContractError("anomaly segment length must lie in [1, T)");
    if (!(spec.magnitude > 0)) throw ContractError("anomaly magnitude must be positive");
    std::vector<std::size_t> chans = spec.channels;
    if (chans.empty())
      for (std::size_t c = 0; c < channels; ++c) chans.push_back(c);
    for (std::size_t c : chans)
      if (c >= channels) throw ContractError("anomaly channel " + std::to_string(c) + " out of range");

    std::size_t start = 0;
    if (spec.start) {
      start = *spec.start;
      if (start + spec.length > len) throw ContractError("anomaly segment does not fit the series");
      if (overlaps(chans, start, spec.length)) throw ContractError("anomaly segments overlap on a channel");
    } else {
      Rng rng(spec.seed);
      bool placed = false;
      for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        start = static_cast<std::size_t>(rng.below(len - spec.length + 1));
        placed = !overlaps(chans, start, spec.length);
      }
      if (!placed) throw ContractError("could not place a non-overlapping anomaly segment");
    }

    for (std::size_t c : chans) {
      busy[c].emplace_back(start, start + spec.length);
      auto row = d.values.row(c);
      const double shift = spec.magnitude * stddev[c];
      double local_mean = 0;
      for (std::size_t t = start; t < start + spec.length; ++t) local_mean += row[t];
      local_mean /= static_cast<double>(spec.length);
      for (std::size_t t = start; t < start + spec.length; ++t) {
        switch (spec.kind) {
          case AnomalyKind::spike:
          case AnomalyKind::level_shift: row[t] += shift; break;
          case AnomalyKind::drop: row[t] -= shift; break;
          case AnomalyKind::variance_change:
            row[t] = local_mean + (row[t] - local_mean) * (1.0 + spec.magnitude);
            break;
          case AnomalyKind::saturation: row[t] = p99[c]; break;
        }
      }
    }
    for (std::size_t t = start; t < start + spec.length; ++t) d.labels[t] = 1;
  }
  return d;
}

SplitStrategy parse_split_strategy(const std::string& name) {
  if (name == "temporal") return SplitStrategy::temporal;
  if (name == "per_series") return SplitStrategy::per_series;
  if (name == "provided") return SplitStrategy::provided;
  throw ContractError("unknown split strategy '" + name + "'");
}

namespace {

CuratedDataset slice(const CuratedDataset& d, std::size_t from, std::size_t to, const std::string& split) {
  CuratedDataset out = d;
  out.split = split;
  out.files.clear();
  out.values = Tensor<double>({d.channels(), to - from});
  for (std::size_t c = 0; c < d.channels(); ++c)
    for (std::size_t t = from; t < to; ++t) out.values(c, t - from) = d.values(c, t);
  if (!d.timestamps_ms.empty())
    out.timestamps_ms.assign(d.timestamps_ms.begin() + static_cast<std::ptrdiff_t>(from),
                             d.timestamps_ms.begin() + static_cast<std::ptrdiff_t>(to));
  if (d.label_kind == LabelKind::per_timestep)
    out.labels.assign(d.labels.begin() + static_cast<std::ptrdiff_t>(from),
                      d.labels.begin() + static_cast<std::ptrdiff_t>(to));
  if (d.has_missing()) {
    out.missing.clear();
    for (std::size_t c = 0; c < d.channels(); ++c)
      for (std::size_t t = from; t < to; ++t) out.missing.push_back(d.missing[c * d.length() + t]);
  }
  return out;
}

void check_fraction(double f) {
  if (!(f > 0 && f < 1)) throw ContractError("train fraction must lie in (0,1)");
}

}  // namespace

SplitResult make_split(const CuratedDataset& d, const SplitSpec& spec) {
  check_fraction(spec.train_fraction);
  if (spec.strategy == SplitStrategy::provided) return make_split(std::vector<CuratedDataset>{d}, spec);
  if (spec.strategy == SplitStrategy::per_series)
    throw ContractError("per-series splits need a collection of series");
  const std::size_t len = d.length();
  if (len < 2) throw DataError("temporal split needs T >= 2");
  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(len))), 1, len - 1);
  return {{slice(d, 0, n_train, "train")}, {slice(d, n_train, len, "test")}};
}

SplitResult make_split(const std::vector<CuratedDataset>& series, const SplitSpec& spec) {
  check_fraction(spec.train_fraction);
  SplitResult out;
  switch (spec.strategy) {
    case SplitStrategy::temporal:
      for (const auto& d : series) {
        auto part = make_split(d, spec);
        out.train.push_back(std::move(part.train.front()));
        out.test.push_back(std::move(part.test.front()));
      }
      break;
    case SplitStrategy::per_series: {
      if (series.size() < 2) throw DataError("per-series split needs at least two series");
      std::vector<std::size_t> order(series.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng rng(spec.seed);
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
      const auto n_train = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::ceil(spec.train_fraction * static_cast<double>(series.size()))), 1,
          series.size() - 1);
      for (std::size_t i = 0; i < order.size(); ++i) {
        CuratedDataset d = series[order[i]];
        d.split = i < n_train ? "train" : "test";
        (i < n_train ? out.train : out.test).push_back(std::move(d));
      }
      break;
    }
    case SplitStrategy::provided:
      for (const auto& d : series) (d.split == "test" ? out.test : out.train).push_back(d);
      break;
  }
  return out;
}

}  // namespace ranfm
