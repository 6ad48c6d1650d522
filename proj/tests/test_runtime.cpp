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

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "ranfm/bench.hpp"
#include "ranfm/checkpoint.hpp"
#include "ranfm/cli.hpp"
#include "ranfm/config.hpp"
#include "ranfm/datapile.hpp"
#include "ranfm/error.hpp"
#include "ranfm/metrics.hpp"
#include "ranfm/simulate.hpp"
#include "ranfm/stream.hpp"
#include "test_support.hpp"

using namespace ranfm;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::uint32_t u32_at(const std::string& bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes.at(offset + static_cast<std::size_t>(i)));
  return v;
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "ranfm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

std::string stream_csv(const CuratedDataset& d, std::size_t len) {
  std::ostringstream out;
  out << "timestamp";
  for (const auto& n : d.channel_names) out << ',' << n;
  out << '\n';
  out.precision(17);
  for (std::size_t t = 0; t < len; ++t) {
    out << static_cast<long long>(d.timestamps_ms[t]);
    for (std::size_t c = 0; c < d.channels(); ++c) out << ',' << d.values(c, t);
    out << '\n';
  }
  return out.str();
}

}  // namespace

TEST_SUITE("runtime") {
  TEST_CASE("checkpoint layout and size") {
    const auto model = make_model<float>(ModelConfig::tiny(), HeadDims{}, 3);
    const auto bytes = encode_checkpoint(model, TrainConfig{});
    CHECK(bytes.substr(0, 4) == "TRNK");
    CHECK(u32_at(bytes, 4) == 1);
    const std::size_t json_len = u32_at(bytes, 8);
    const auto config = nlohmann::json::parse(bytes.substr(12, json_len));
    CHECK(config.contains("model"));
    CHECK(config.contains("train"));
    CHECK(u32_at(bytes, 12 + json_len) == model.params.size());

    // Format arithmetic, counting the one dtype byte every tensor carries.
    std::size_t expect = 4 + 4 + 4 + json_len + 4;
    for (const auto& [name, t] : model.params.entries())
      expect += 2 + name.size() + 1 + 4 * t.rank() + 1 + 4 * t.size();
    CHECK(bytes.size() == expect);
    CHECK(checkpoint_size(json_len, param_shapes(model.config, model.heads)) == expect);

    const auto first = 12 + json_len + 4;
    const std::size_t name_len = static_cast<unsigned char>(bytes[first]) | (static_cast<unsigned char>(bytes[first + 1]) << 8);
    CHECK(bytes.substr(first + 2, name_len) == model.params.entries()[0].first);
  }

  TEST_CASE("checkpoint round trips are bit-exact") {
    const auto dir = testing::scratch_dir("ckpt");
    auto model = make_model<float>(ModelConfig::tiny(), HeadDims{true, 16, 3}, 5);
    TrainConfig train;
    train.lr_max = 3e-4;
    train.regime = Regime::linear_probe;
    save_checkpoint(model, train, dir / "a.ckpt");
    const auto loaded = load_checkpoint<float>(dir / "a.ckpt");
    CHECK(loaded.model.params == model.params);
    CHECK(loaded.model.config == model.config);
    CHECK(loaded.model.heads == model.heads);
    CHECK(loaded.train == train);
    save_checkpoint(loaded.model, loaded.train, dir / "b.ckpt");
    CHECK(read_file(dir / "a.ckpt") == read_file(dir / "b.ckpt"));

    const auto wide = make_model<double>(ModelConfig::tiny(), HeadDims{}, 6);
    const auto back = decode_checkpoint<double>(encode_checkpoint(wide, TrainConfig{}));
    CHECK(back.model.params == wide.params);
    const auto narrowed = decode_checkpoint<float>(encode_checkpoint(wide, TrainConfig{}));
    CHECK(narrowed.model.params == wide.params.cast<float>());
    auto bad_dtype = encode_checkpoint(model, train);
    const std::size_t first = 12 + u32_at(bad_dtype, 8) + 4;
    const std::size_t name_len = static_cast<unsigned char>(bad_dtype[first]);
    bad_dtype[first + 2 + name_len + 1 + 4 * model.params.entries()[0].second.rank()] = 7;
    CHECK_THROWS_AS(decode_checkpoint<float>(bad_dtype), FormatError);
  }

  TEST_CASE("corrupt checkpoints are rejected") {
    const auto model = make_model<float>(ModelConfig::tiny(), HeadDims{}, 1);
    const auto good = encode_checkpoint(model, TrainConfig{});
    auto bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint<float>(bad_magic), FormatError);
    auto bad_version = good;
    bad_version[4] = 2;
    CHECK_THROWS_AS(decode_checkpoint<float>(bad_version), FormatError);
    for (std::size_t cut : {std::size_t{3}, std::size_t{11}, good.size() / 2, good.size() - 1})
      CHECK_THROWS_AS(decode_checkpoint<float>(good.substr(0, cut)), FormatError);
    CHECK_THROWS_AS(decode_checkpoint<float>(good + "x"), FormatError);

    // Same tensors, but the embedded config claims a wider model.
    const std::size_t json_len = u32_at(good, 8);
    auto config = nlohmann::json::parse(good.substr(12, json_len));
    config["model"]["d_model"] = 64;
    config["model"]["d_ff"] = 128;
    const auto text = config.dump();
    std::string patched = good.substr(0, 8);
    for (int i = 0; i < 4; ++i) patched.push_back(static_cast<char>((text.size() >> (8 * i)) & 0xff));
    patched += text + good.substr(12 + json_len);
    CHECK_THROWS_AS(decode_checkpoint<float>(patched), FormatError);
    CHECK_THROWS_AS(load_checkpoint<float>("/nonexistent.ckpt"), DataError);
  }

  TEST_CASE("run config parsing") {
    const auto rc = parse_run_config(R"({"model":{"variant":"tiny","layers":1},"train":{"total_steps":7}})");
    CHECK(rc.model.layers == 1);
    CHECK(rc.model.d_model == 32);
    CHECK(rc.train.total_steps == 7);
    CHECK_THROWS_AS(parse_run_config(R"({"model":{"depth":3}})"), FormatError);
    CHECK_THROWS_AS(parse_run_config("{"), FormatError);
    CHECK(model_config_from_json(to_json(ModelConfig::base())) == ModelConfig::base());
    CHECK(train_config_from_json(to_json(TrainConfig{})) == TrainConfig{});
  }

  TEST_CASE("stream window arithmetic") {
    const auto model = make_model<double>(ModelConfig::tiny(), HeadDims{}, 2);
    ScenarioSpec spec;
    spec.duration = 1024;
    spec.channels = 3;
    spec.seed = 4;
    const auto d = simulate_telemetry(spec);
    const std::size_t window = 64;
    for (std::size_t hop : {1, 16, 64}) {
      for (std::size_t len : {window - 1, window, window + 3 * hop, window + 3 * hop + hop - 1, std::size_t{700}}) {
        std::istringstream in(stream_csv(d, len));
        std::vector<StreamRecord> got;
        const auto n = stream_infer(in, model, Task::anomaly, hop, [&](const StreamRecord& r) { got.push_back(r); });
        const std::size_t expect = len < window ? 0 : (len - window) / hop + 1;
        CHECK(n == expect);
        CHECK(got.size() == expect);
        for (std::size_t i = 0; i < got.size(); ++i) {
          CHECK(got[i].window == i);
          CHECK(got[i].sample_end == window + i * hop);
          CHECK(got[i].values.size() == window);
        }
      }
    }
  }

  TEST_CASE("stream output is deterministic") {
    const auto model = make_model<double>(ModelConfig::tiny(), HeadDims{}, 2);
    const auto d = simulate_telemetry(ScenarioSpec{});
    std::string a, b;
    for (std::string* out : {&a, &b}) {
      std::istringstream in(stream_csv(d, 400));
      stream_infer(in, model, Task::anomaly, 32, [&](const StreamRecord& r) { *out += r.to_json() + "\n"; });
    }
    CHECK(a == b);
    const auto j = nlohmann::json::parse(a.substr(0, a.find('\n')));
    for (const char* key : {"window", "sample_end", "t_end", "task", "max_score", "scores"})
      CHECK(j.contains(key));
  }

  TEST_CASE("stream contract errors") {
    const auto model = make_model<double>(ModelConfig::tiny(), HeadDims{}, 2);
    StreamState<double> state(model, Task::anomaly, 2, 8);
    StreamRecord rec;
    const double ok[] = {1.0, 2.0};
    CHECK_FALSE(state.push(0, ok, rec));
    const double three[] = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(state.push(10, three, rec), DataError);
    const double gap[] = {1.0, std::nan("")};
    CHECK_THROWS_AS(state.push(10, gap, rec), DataError);
    StreamState<double> imputing(model, Task::impute, 2, 8);
    CHECK_NOTHROW(imputing.push(0, gap, rec));
    CHECK_THROWS_AS(StreamState<double>(model, Task::forecast, 2, 8), ContractError);
    CHECK_THROWS_AS(StreamState<double>(model, Task::anomaly, 2, 0), ContractError);

    std::istringstream bad("time,a\n0,1\n");
    CHECK_THROWS_AS(stream_infer(bad, model, Task::anomaly, 8, nullptr), FormatError);
  }

  TEST_CASE("simulator determinism and contracts") {
    for (auto s : {Scenario::jamming, Scenario::mobility, Scenario::embb_load, Scenario::cqi_mask}) {
      INFO(scenario_name(s));
      ScenarioSpec spec;
      spec.scenario = s;
      spec.seed = 12;
      const auto a = simulate_telemetry(spec);
      const auto b = simulate_telemetry(spec);
      CHECK(dataset_csv(a) == dataset_csv(b));
      spec.seed = 13;
      CHECK(dataset_csv(simulate_telemetry(spec)) != dataset_csv(a));
      CHECK(a.length() == 4096);
      CHECK(a.sampling_period_ms == 10.0);
      CHECK(parse_scenario(scenario_name(s)) == s);
    }

    ScenarioSpec embb;
    embb.scenario = Scenario::embb_load;
    const auto e = simulate_telemetry(embb);
    for (std::size_t t = 0; t < e.length(); ++t) {
      CHECK(e.values(0, t) >= 0.0);
      CHECK(e.values(0, t) <= 100.0);
    }

    ScenarioSpec jam;
    const auto j = simulate_telemetry(jam);
    const auto bursts = default_schedule(Scenario::jamming, jam.duration);
    for (std::size_t t = 0; t < j.length(); ++t) {
      bool inside = false;
      for (const auto& ev : bursts) inside = inside || (t >= ev.start && t < ev.start + ev.length);
      CHECK(j.labels[t] == (inside ? 1 : 0));
    }

    ScenarioSpec cqi;
    cqi.scenario = Scenario::cqi_mask;
    const auto c = simulate_telemetry(cqi);
    REQUIRE(c.has_missing());
    const auto holes = std::count(c.missing.begin(), c.missing.end(), 1);
    CHECK(static_cast<double>(holes) / static_cast<double>(c.missing.size()) == doctest::Approx(0.5).epsilon(0.05));
    for (std::size_t t = 0; t < c.length(); ++t) {
      const double v = c.values(0, t);
      CHECK(v == std::round(v));
      CHECK(v >= 0.0);
      CHECK(v <= 15.0);
    }

    ScenarioSpec mob;
    mob.scenario = Scenario::mobility;
    const auto m = simulate_telemetry(mob);
    CHECK(m.label_kind == LabelKind::per_timestep);
    CHECK(std::count(m.labels.begin(), m.labels.end(), 1) > 0);
    CHECK(std::count(m.labels.begin(), m.labels.end(), 0) > 0);

    ScenarioSpec tiny;
    tiny.duration = 100;
    CHECK_THROWS_AS(simulate_telemetry(tiny), ContractError);
    CHECK_THROWS_AS(parse_scenario("handover"), ContractError);
  }

  TEST_CASE("bench reports one row per combination") {
    const auto model = make_model<float>(ModelConfig::tiny(), HeadDims{}, 1);
    const auto rows = bench(model, {32, 64}, {1, 3, 5}, 3);
    CHECK(rows.size() == 6);
    for (const auto& r : rows) {
      CHECK(r.median_ms >= 0.0);
      CHECK(r.p95_ms >= r.median_ms);
    }
    const auto csv = bench_csv(rows);
    CHECK(csv.starts_with("T,C,median_ms,p95_ms,peak_mb\n32,1,"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
    CHECK(rewindow(model, 128).config.window == 128);
    CHECK_THROWS_AS(bench(model, {32}, {1}, 2), ContractError);
    CHECK(percentile({5, 1, 3, 2, 4}, 0.5) == 3.0);
    CHECK(percentile({5, 1, 3, 2, 4}, 0.95) == 5.0);
  }

  TEST_CASE("cli exit codes") {
    std::string out, err;
    CHECK(cli({"frobnicate"}, &out, &err) == kExitUsage);
    CHECK_FALSE((out + err).empty());
    CHECK(cli({}, &out, &err) == kExitUsage);
    CHECK(cli({"simulate", "--scenario", "nope", "--out", "x.csv"}) == kExitUsage);
    CHECK(cli({"curate", "/nonexistent/dir", "--out", testing::scratch_dir("cli_missing").string()}) == kExitData);
    CHECK(cli({"eval", "--ckpt", "/nonexistent.ckpt", "--task", "anomaly", "--data", "/tmp", "--report", "r.json"}) ==
          kExitData);
  }

  TEST_CASE("cli simulate is reproducible") {
    const auto dir = testing::scratch_dir("cli_sim");
    const auto a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
    CHECK(cli({"simulate", "--scenario", "jamming", "--seed", "1", "--out", a, "--quiet"}) == kExitOk);
    CHECK(cli({"--seed", "1", "simulate", "--scenario", "jamming", "--out", b, "--quiet"}) == kExitOk);
    CHECK(read_file(a) == read_file(b));
    CHECK(read_file(a).starts_with("timestamp,"));
  }

  TEST_CASE("cli pipeline is reproducible in 64-bit mode") {
    const auto dir = testing::scratch_dir("cli_e2e");
    const auto s = [&](const char* name) { return (dir / name).string(); };
    std::ofstream(dir / "run.json") << R"({"model":{"variant":"tiny"},"train":{"total_steps":4,"batch_size":4}})";
    fs::create_directories(dir / "raw");
    REQUIRE(cli({"simulate", "--scenario", "embb_load", "--seed", "3", "--out", s("raw/load.csv"), "--quiet"}) == 0);
    REQUIRE(cli({"curate", s("raw"), "--out", s("cur"), "--quiet"}) == 0);
    std::string reports[2], curves[2];
    for (int run = 0; run < 2; ++run) {
      const auto ckpt = s(run == 0 ? "a.ckpt" : "b.ckpt");
      const auto curve = s(run == 0 ? "a.csv" : "b.csv");
      const auto report = s(run == 0 ? "a.json" : "b.json");
      REQUIRE(cli({"--precision", "64", "--seed", "9", "--quiet", "pretrain", "--data", s("cur"), "--config",
                   s("run.json"), "--out", ckpt, "--loss-curve", curve}) == 0);
      std::string err;
      REQUIRE(cli({"--precision", "64", "--seed", "9", "--quiet", "eval", "--ckpt", ckpt, "--task", "impute", "--data",
                   s("cur"), "--report", report},
                  nullptr, &err) == 0);
      reports[run] = read_file(report);
      curves[run] = read_file(curve);
    }
    CHECK(read_file(dir / "a.ckpt") == read_file(dir / "b.ckpt"));
    CHECK(curves[0] == curves[1]);
    CHECK(reports[0] == reports[1]);
    const auto rep = EvalReport::from_json(reports[0]);
    CHECK(rep.task == "impute");
    CHECK(rep.metrics.count("mse@30") == 1);
    const auto j = nlohmann::json::parse(reports[0]);
    CHECK(j.size() == 4);
  }
}
