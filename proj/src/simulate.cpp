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

#include "ranfm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "ranfm/error.hpp"
#include "ranfm/rng.hpp"
#include "ranfm/training.hpp"

namespace ranfm {

Scenario parse_scenario(const std::string& name) {
  if (name == "jamming") return Scenario::jamming;
  if (name == "mobility") return Scenario::mobility;
  if (name == "embb_load") return Scenario::embb_load;
  if (name == "cqi_mask") return Scenario::cqi_mask;
  throw ContractError("unknown scenario '" + name + "' (jamming|mobility|embb_load|cqi_mask)");
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::jamming: return "jamming";
    case Scenario::mobility: return "mobility";
    case Scenario::embb_load: return "embb_load";
    case Scenario::cqi_mask: return "cqi_mask";
  }
  return "?";
}

std::vector<ScheduledEvent> default_schedule(Scenario s, std::size_t duration) {
  switch (s) {
    case Scenario::jamming: {
      const std::size_t len = std::max<std::size_t>(8, duration / 10);
      return {{duration * 3 / 5, len}};
    }
    case Scenario::mobility: {
      // Mobile in every second quarter-length block.
      std::vector<ScheduledEvent> out;
      const std::size_t block = std::max<std::size_t>(1, duration / 8);
      for (std::size_t start = block; start < duration; start += 2 * block)
        out.push_back({start, std::min(block, duration - start)});
      return out;
    }
    default: return {};
  }
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const char* archetype(Scenario s, std::size_t c) {
  static const char* jam[] = {"rsrp", "sinr", "bler", "prb", "throughput", "cqi"};
  static const char* mob[] = {"rsrp", "rsrq", "sinr", "cqi"};
  switch (s) {
    case Scenario::jamming: return jam[c % 6];
    case Scenario::mobility: return mob[c % 4];
    case Scenario::embb_load: return c == 0 ? "prb_util" : "dl_bitrate";
    case Scenario::cqi_mask: return "cqi";
  }
  return "kpi";
}

std::vector<std::string> channel_names(Scenario s, std::size_t channels) {
  std::vector<std::string> names;
  std::map<std::string, int> seen;
  for (std::size_t c = 0; c < channels; ++c) {
    const std::string base = archetype(s, c);
    const int k = seen[base]++;
    names.push_back(k == 0 ? base : base + "_" + std::to_string(k));
  }
  return names;
}

void validate_events(const std::vector<ScheduledEvent>& events, std::size_t duration) {
  for (const auto& e : events)
    if (e.length == 0 || e.start + e.length > duration)
      throw ContractError("scheduled event [" + std::to_string(e.start) + ", +" + std::to_string(e.length) +
                          ") does not fit the duration");
}

void jamming(CuratedDataset& d, const ScenarioSpec& spec, Rng& rng) {
  const std::size_t n = spec.duration;
  const double cycle = 32.0;
  for (std::size_t c = 0; c < d.channels(); ++c) {
    const double level = 10.0 + 5.0 * static_cast<double>(c);
    const double amp = 2.0 + 0.5 * static_cast<double>(c % 3);
    const double phase = kTwoPi * rng.uniform();
    double ar = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      ar = 0.95 * ar + rng.normal(0.0, 0.05);
      d.values(c, t) = level + amp * std::sin(kTwoPi * static_cast<double>(t) / cycle + phase) + ar;
    }
  }
  // SINR/BLER-like channels take the hit; a single-channel trace uses channel 0.
  std::vector<std::size_t> hit;
  for (std::size_t c = 1; c < std::min<std::size_t>(3, d.channels()); ++c) hit.push_back(c);
  if (hit.empty()) hit.push_back(0);
  for (const auto& e : spec.events) {
    for (std::size_t c : hit) {
      const double sign = c == 1 ? -1.0 : 1.0;  // SINR falls, BLER rises
      for (std::size_t t = e.start; t < e.start + e.length; ++t)
        d.values(c, t) += sign * 6.0 + rng.normal(0.0, 2.0);
    }
    for (std::size_t t = e.start; t < e.start + e.length; ++t) d.labels[t] = 1;
  }
}

void mobility(CuratedDataset& d, const ScenarioSpec& spec, Rng& rng) {
  const std::size_t n = spec.duration;
  std::vector<int> mobile(n, 0);
  for (const auto& e : spec.events)
    for (std::size_t t = e.start; t < e.start + e.length; ++t) mobile[t] = 1;
  for (std::size_t c = 0; c < d.channels(); ++c) {
    const double level = -90.0 + 5.0 * static_cast<double>(c);
    double drift = 0.0;
    double ar = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      if (mobile[t]) {
        drift += 0.05 + rng.normal(0.0, 0.05);
        ar = 0.7 * ar + rng.normal(0.0, 3.0);
      } else {
        drift *= 0.98;
        ar = 0.7 * ar + rng.normal(0.0, 0.3);
      }
      d.values(c, t) = level + drift + ar;
    }
  }
  d.labels = mobile;
}

void embb_load(CuratedDataset& d, const ScenarioSpec& spec, Rng& rng) {
  const std::size_t n = spec.duration;
  const double cycle = 32.0;
  const std::size_t burst_every = 256;
  const std::size_t burst_len = 32;
  double walk = 50.0;
  double smooth = 50.0;
  for (std::size_t t = 0; t < n; ++t) {
    walk = std::clamp(walk + rng.normal(0.0, 1.5), 5.0, 95.0);
    smooth = 0.9 * smooth + 0.1 * walk;
    double v = smooth + 15.0 * std::sin(kTwoPi * static_cast<double>(t) / cycle);
    if (t % burst_every < burst_len) v += 25.0;
    d.values(0, t) = std::clamp(v, 0.0, 100.0);
  }
  for (std::size_t c = 1; c < d.channels(); ++c)
    for (std::size_t t = 0; t < n; ++t)
      d.values(c, t) = 2.0 * d.values(0, t) * (1.0 + 0.1 * static_cast<double>(c)) + rng.normal(0.0, 2.0);
}

void cqi_mask(CuratedDataset& d, const ScenarioSpec& spec, Rng& rng) {
  const std::size_t n = spec.duration;
  const std::size_t block = 8;
  for (std::size_t c = 0; c < d.channels(); ++c) {
    const double phase = kTwoPi * rng.uniform();
    double ar = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      ar = 0.9 * ar + rng.normal(0.0, 0.4);
      const double v = 8.0 + 4.0 * std::sin(kTwoPi * static_cast<double>(t) / 256.0 + phase) + ar;
      d.values(c, t) = std::clamp(std::round(v), 0.0, 15.0);
    }
  }
  const std::size_t blocks = n / block;
  d.missing.assign(d.channels() * n, 0);
  for (std::size_t c = 0; c < d.channels(); ++c)
    for (std::size_t b : select_mask_indices(blocks, 0.5, rng))
      std::fill_n(d.missing.begin() + static_cast<std::ptrdiff_t>(c * n + b * block), block, 1);
}

}  // namespace

CuratedDataset simulate_telemetry(const ScenarioSpec& spec) {
  if (spec.duration < spec.min_duration)
    throw ContractError("scenario duration " + std::to_string(spec.duration) + " is shorter than the window " +
                        std::to_string(spec.min_duration));
  if (spec.channels < 1) throw ContractError("scenario needs at least one channel");
  if (!(spec.period_ms > 0)) throw ContractError("sampling period must be positive");

  ScenarioSpec s = spec;
  if (s.events.empty()) s.events = default_schedule(s.scenario, s.duration);
  validate_events(s.events, s.duration);

  CuratedDataset d;
  d.name = scenario_name(s.scenario);
  d.channel_names = channel_names(s.scenario, s.channels);
  d.values = Tensor<double>({s.channels, s.duration}, 0.0);
  d.sampling_period_ms = s.period_ms;
  d.timestamps_ms.resize(s.duration);
  for (std::size_t t = 0; t < s.duration; ++t) d.timestamps_ms[t] = static_cast<double>(t) * s.period_ms;
  d.seed = s.seed;
  d.split = "test";
  Rng rng(s.seed);
  switch (s.scenario) {
    case Scenario::jamming:
      d.task = "anomaly";
      d.label_kind = LabelKind::per_timestep;
      d.labels.assign(s.duration, 0);
      jamming(d, s, rng);
      break;
    case Scenario::mobility:
      d.task = "classify";
      d.label_kind = LabelKind::per_timestep;
      mobility(d, s, rng);
      break;
    case Scenario::embb_load:
      d.task = "forecast";
      embb_load(d, s, rng);
      break;
    case Scenario::cqi_mask:
      d.task = "impute";
      cqi_mask(d, s, rng);
      break;
  }
  return d;
}

}  // namespace ranfm
