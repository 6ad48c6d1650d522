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

// Synthetic RAN telemetry for the four demo scenarios.

#include <cstdint>
#include <string>
#include <vector>

#include "ranfm/dataset.hpp"

namespace ranfm {

enum class Scenario { jamming, mobility, embb_load, cqi_mask };

Scenario parse_scenario(const std::string& name);
std::string scenario_name(Scenario s);

struct ScheduledEvent {
  std::size_t start = 0;
  std::size_t length = 0;
};

struct ScenarioSpec {
  Scenario scenario = Scenario::jamming;
  std::size_t duration = 4096;  // samples
  std::size_t channels = 4;
  double period_ms = 10.0;
  std::uint64_t seed = 0;
  // Jamming bursts or mobile intervals; a default schedule is derived from the
  // duration when empty.
  std::vector<ScheduledEvent> events;
  std::size_t min_duration = 512;
};

// Default event schedule for a scenario and duration.
std::vector<ScheduledEvent> default_schedule(Scenario s, std::size_t duration);

CuratedDataset simulate_telemetry(const ScenarioSpec& spec);

}  // namespace ranfm
