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

#include "ranfm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ranfm/config.hpp"
#include "ranfm/error.hpp"

namespace ranfm {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'T', 'R', 'N', 'K'};

template <typename U>
void put(std::string& out, U v) {
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    U v;
    std::memcpy(&v, take(sizeof(U), what), sizeof(U));
    return v;
  }

  const char* take(std::size_t n, const char* what) {
    if (n > bytes_.size() - pos_)
      throw FormatError(std::string("checkpoint truncated while reading ") + what + " at byte " +
                        std::to_string(pos_));
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
constexpr std::uint8_t dtype_of() {
  return sizeof(T) == 4 ? 0 : 1;
}

template <typename S, typename T>
Tensor<T> read_data(Reader& r, const Shape& shape) {
  const std::size_t n = shape_numel(shape);
  std::vector<S> raw(n);
  std::memcpy(raw.data(), r.take(n * sizeof(S), "tensor data"), n * sizeof(S));
  std::vector<T> vals(raw.begin(), raw.end());
  return Tensor<T>(shape, std::move(vals));
}

}  // namespace

std::size_t checkpoint_size(std::size_t config_bytes, const std::vector<std::pair<std::string, Shape>>& tensors) {
  std::size_t total = 4 + 4 + 4 + config_bytes + 4;
  for (const auto& [name, shape] : tensors) total += 2 + name.size() + 1 + 4 * shape.size() + 1 + 4 * shape_numel(shape);
  return total;
}

template <typename T>
std::string encode_checkpoint(const Model<T>& model, const TrainConfig& train) {
  nlohmann::ordered_json cfg;
  cfg["model"] = to_json(model.config);
  cfg["train"] = to_json(train);
  cfg["heads"] = to_json(model.heads);
  const std::string json = cfg.dump();

  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(json.size()));
  out += json;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.params.size()));
  for (const auto& [name, t] : model.params.entries()) {
    if (name.size() > 0xFFFF) throw ContractError("parameter name too long: " + name);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    put<std::uint8_t>(out, dtype_of<T>());
    out.append(reinterpret_cast<const char*>(t.data().data()), t.size() * sizeof(T));
  }
  return out;
}

template <typename T>
Checkpoint<T> decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(4, "magic"), kMagic, 4) != 0) throw FormatError("not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto json_len = r.get<std::uint32_t>("config length");
  const std::string json(r.take(json_len, "config"), json_len);

  Checkpoint<T> ck;
  try {
    const auto cfg = nlohmann::json::parse(json);
    ck.model.config = model_config_from_json(cfg.at("model"));
    ck.train = train_config_from_json(cfg.at("train"));
    ck.model.heads = head_dims_from_json(cfg.at("heads"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }

  const auto count = r.get<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint16_t>("name length");
    std::string name(r.take(name_len, "name"), name_len);
    const auto rank = r.get<std::uint8_t>("rank");
    if (rank == 0) throw FormatError("tensor '" + name + "' has rank 0");
    Shape shape;
    for (std::uint8_t k = 0; k < rank; ++k) {
      const auto d = r.get<std::uint32_t>("dim");
      if (d == 0) throw FormatError("tensor '" + name + "' has a zero dimension");
      shape.push_back(d);
    }
    const auto dtype = r.get<std::uint8_t>("dtype");
    if (ck.model.params.contains(name)) throw FormatError("duplicate tensor '" + name + "'");
    if (dtype == 0)
      ck.model.params.add(name, read_data<float, T>(r, shape));
    else if (dtype == 1)
      ck.model.params.add(name, read_data<double, T>(r, shape));
    else
      throw FormatError("tensor '" + name + "' has unknown dtype " + std::to_string(dtype));
  }
  if (!r.done()) throw FormatError("trailing bytes after the last tensor");

  // Names and shapes must be exactly those the config implies.
  const auto expected = param_shapes(ck.model.config, ck.model.heads);
  if (expected.size() != ck.model.params.size())
    throw FormatError("checkpoint holds " + std::to_string(ck.model.params.size()) + " tensors, config implies " +
                      std::to_string(expected.size()));
  for (const auto& [name, shape] : expected) {
    if (!ck.model.params.contains(name)) throw FormatError("checkpoint lacks tensor '" + name + "'");
    if (ck.model.params.at(name).shape() != shape)
      throw FormatError("tensor '" + name + "' has shape " + shape_string(ck.model.params.at(name).shape()) +
                        ", config implies " + shape_string(shape));
  }
  return ck;
}

template <typename T>
void save_checkpoint(const Model<T>& model, const TrainConfig& train, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(model, train);
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint<T>(buf.str());
}

template std::string encode_checkpoint(const Model<float>&, const TrainConfig&);
template std::string encode_checkpoint(const Model<double>&, const TrainConfig&);
template Checkpoint<float> decode_checkpoint<float>(const std::string&);
template Checkpoint<double> decode_checkpoint<double>(const std::string&);
template void save_checkpoint(const Model<float>&, const TrainConfig&, const std::filesystem::path&);
template void save_checkpoint(const Model<double>&, const TrainConfig&, const std::filesystem::path&);
template Checkpoint<float> load_checkpoint<float>(const std::filesystem::path&);
template Checkpoint<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace ranfm
