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

// Binary checkpoint: "TRNK", u32 version, u32 config length, config JSON,
// u32 tensor count, then per tensor u16 name length, name, u8 rank, u32 dims,
// u8 dtype, raw little-endian row-major data. dtype 0 is float32, 1 is float64.

#include <cstdint>
#include <filesystem>
#include <string>

#include "ranfm/model.hpp"
#include "ranfm/training.hpp"

namespace ranfm {

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
struct Checkpoint {
  Model<T> model;
  TrainConfig train;
};

template <typename T>
std::string encode_checkpoint(const Model<T>& model, const TrainConfig& train);

// Tensors stored as either dtype are converted to T.
template <typename T>
Checkpoint<T> decode_checkpoint(const std::string& bytes);

template <typename T>
void save_checkpoint(const Model<T>& model, const TrainConfig& train, const std::filesystem::path& path);

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path);

// Size of a float32 checkpoint holding the given parameters and config JSON.
std::size_t checkpoint_size(std::size_t config_bytes, const std::vector<std::pair<std::string, Shape>>& tensors);

}  // namespace ranfm
