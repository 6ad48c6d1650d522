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

#include "ranfm/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ranfm/bench.hpp"
#include "ranfm/checkpoint.hpp"
#include "ranfm/config.hpp"
#include "ranfm/datapile.hpp"
#include "ranfm/error.hpp"
#include "ranfm/simulate.hpp"
#include "ranfm/stream.hpp"
#include "ranfm/tasks.hpp"

namespace ranfm {

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  int precision = 32;
  bool quiet = false;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  std::ostream& log() const {
    static std::ostringstream sink;
    return quiet ? (sink.str(""), sink) : *err;
  }
};

struct CurateArgs {
  std::string input;
  std::string out;
  std::string anomalies;
  std::string split = "temporal";
  std::string task = "forecast";
  double train_fraction = 0.70;
  bool keep_missing = false;
};

struct PretrainArgs {
  std::string data;
  std::string config;
  std::string out;
  std::string loss_curve;
};

struct FinetuneArgs {
  std::string ckpt;
  std::string task;
  std::string regime;
  std::string data;
  std::string out;
  std::string config;
  std::string loss_curve;
  int horizon = 64;
  int classes = 0;
};

struct EvalArgs {
  std::string ckpt;
  std::string task;
  std::string data;
  std::string report;
  std::string dataset;
  std::string regime;
  std::vector<int> horizons;
  std::vector<double> mask_ratios;
};

struct InferArgs {
  std::string ckpt;
  std::string task;
  std::string stream;
  std::string out;
  std::size_t hop = 64;
};

struct SimulateArgs {
  std::string scenario;
  std::string out;
  std::size_t duration = 4096;
  std::size_t channels = 0;
  double period_ms = 10.0;
};

struct BenchArgs {
  std::string ckpt;
  std::string windows;
  std::string channels;
  std::string out;
  int repeat = 10;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void ensure_parent(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
}

void write_file(const std::string& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ContractError(std::string("bad ") + what + " value '" + item + "'");
    }
  }
  if (out.empty()) throw ContractError(std::string("empty ") + what + " list");
  return out;
}

std::vector<AnomalySpec> load_anomaly_specs(const std::string& path, std::uint64_t seed) {
  std::vector<AnomalySpec> specs;
  try {
    const auto j = nlohmann::json::parse(slurp(path));
    const auto& list = j.is_object() ? j.at("anomalies") : j;
    std::uint64_t k = 0;
    for (const auto& e : list) {
      AnomalySpec s;
      s.kind = parse_anomaly_kind(e.at("kind").get<std::string>());
      s.length = e.at("length").get<std::size_t>();
      s.magnitude = e.value("magnitude", 5.0);
      if (e.contains("channels")) s.channels = e.at("channels").get<std::vector<std::size_t>>();
      s.seed = e.value("seed", seed + k++);
      if (e.contains("start")) s.start = e.at("start").get<std::size_t>();
      specs.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return specs;
}

std::vector<CuratedDataset> pick_split(std::vector<CuratedDataset> all, const std::string& split) {
  std::vector<CuratedDataset> out;
  for (auto& d : all)
    if (d.split == split) out.push_back(std::move(d));
  return out;
}

int cmd_curate(const Globals& g, const CurateArgs& a) {
  CurateOptions opt;
  opt.task = a.task;
  opt.split.strategy = parse_split_strategy(a.split);
  opt.split.train_fraction = a.train_fraction;
  opt.seed = g.seed.value_or(0);
  opt.split.seed = opt.seed;
  opt.keep_missing = a.keep_missing;
  if (!a.anomalies.empty()) opt.anomalies = load_anomaly_specs(a.anomalies, opt.seed);
  const auto res = curate(a.input, opt, std::filesystem::path(a.out));
  for (const auto& r : res.report) g.log() << "dropped " << r.item << " at " << r.stage << ": " << r.reason << "\n";
  for (const auto& f : res.failures) *g.err << "failed: " << f << "\n";
  if (res.datasets.empty()) throw DataError("no dataset survived curation");
  g.log() << "wrote " << res.datasets.size() << " dataset file(s) and manifest.json to " << a.out << "\n";
  return res.failures.empty() ? kExitOk : kExitData;
}

template <typename T>
int cmd_pretrain(const Globals& g, const PretrainArgs& a) {
  RunConfig rc = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  if (g.seed) rc.train.seed = *g.seed;
  rc.train.regime = Regime::pretrain;
  std::vector<CuratedDataset> corpus;
  for (auto& d : pick_split(load_curated(a.data), "train")) {
    if (d.task == "anomaly") {
      g.log() << "skipping anomaly dataset " << d.name << "\n";
      continue;
    }
    corpus.push_back(std::move(d));
  }
  if (corpus.empty()) throw DataError("no train-split datasets usable for pretraining in " + a.data);
  Model<T> model = make_model<T>(rc.model, HeadDims{}, rc.train.seed);
  const auto curve = pretrain(corpus, model, rc.train, [&](const LossPoint& p) {
    if (p.step == 1 || p.step % 50 == 0 || p.step == rc.train.total_steps)
      g.log() << "step " << p.step << " lr " << p.lr << " loss " << p.loss << "\n";
  });
  save_checkpoint(model, rc.train, a.out);
  if (!a.loss_curve.empty()) write_file(a.loss_curve, loss_curve_csv(curve));
  return kExitOk;
}

template <typename T>
int cmd_finetune(const Globals& g, const FinetuneArgs& a) {
  auto ck = load_checkpoint<T>(a.ckpt);
  TrainConfig train = ck.train;
  if (!a.config.empty()) train = parse_run_config(slurp(a.config)).train;
  if (g.seed) train.seed = *g.seed;
  const Task task = parse_task(a.task);
  const Regime regime = parse_regime(a.regime);
  if (regime == Regime::pretrain) throw ContractError("finetune regime must be ff, lp or zero");
  train.regime = regime;
  Model<T>& model = ck.model;

  if (regime == Regime::zero_shot) {
    if (task == Task::classify || task == Task::forecast)
      throw ContractError("zero-shot is only supported for anomaly detection and imputation");
    save_checkpoint(model, train, a.out);
    return kExitOk;
  }

  const auto data = pick_split(load_curated(a.data), "train");
  if (data.empty()) throw DataError("no train-split datasets in " + a.data);
  std::vector<TaskExample<T>> examples;
  const auto span = static_cast<std::size_t>(covered_span(model.config));
  if (task == Task::classify) {
    int classes = a.classes;
    for (const auto& d : data) {
      auto ex = classification_examples<T>(d, model.config);
      for (auto& e : ex) {
        if (e.label < 0) throw DataError("negative class label in " + d.name);
        if (a.classes == 0) classes = std::max(classes, e.label + 1);
        examples.push_back(std::move(e));
      }
    }
    if (model.heads.classes != std::max(classes, 2)) attach_classify_head(model, std::max(classes, 2), train.seed);
  } else if (task == Task::forecast) {
    if (model.heads.horizon != a.horizon) attach_forecast_head(model, a.horizon, train.seed);
    for (const auto& d : data)
      if (d.length() >= span + static_cast<std::size_t>(a.horizon) && !d.has_missing())
        for (auto& e : forecast_examples<T>(d, model.config, a.horizon, std::max<std::size_t>(1, span / 4)))
          examples.push_back(std::move(e));
  } else {
    for (const auto& d : data)
      if (d.length() >= span && !d.has_missing())
        for (auto& e : reconstruction_examples<T>(d, model.config, std::max<std::size_t>(1, span / 4)))
          examples.push_back(std::move(e));
  }
  const auto curve = finetune(model, task, regime, examples, train, [&](const LossPoint& p) {
    if (p.step == 1 || p.step % 50 == 0 || p.step == train.total_steps)
      g.log() << "step " << p.step << " loss " << p.loss << "\n";
  });
  save_checkpoint(model, train, a.out);
  if (!a.loss_curve.empty()) write_file(a.loss_curve, loss_curve_csv(curve));
  return kExitOk;
}

template <typename T>
int cmd_eval(const Globals& g, const EvalArgs& a) {
  const auto ck = load_checkpoint<T>(a.ckpt);
  const Task task = parse_task(a.task);
  Regime regime = ck.train.regime == Regime::pretrain ? Regime::zero_shot : ck.train.regime;
  if (!a.regime.empty()) regime = parse_regime(a.regime);
  auto all = load_curated(a.data);
  const CuratedDataset* ds = nullptr;
  for (const auto& d : all) {
    if (!a.dataset.empty() && d.name != a.dataset) continue;
    if (d.split == "test") {
      ds = &d;
      break;
    }
    if (!a.dataset.empty() && ds == nullptr) ds = &d;
  }
  if (ds == nullptr) throw DataError(a.dataset.empty() ? "no test-split dataset in " + a.data
                                                       : "dataset '" + a.dataset + "' not found in " + a.data);
  EvalOptions opt;
  opt.seed = g.seed.value_or(0);
  if (!a.horizons.empty()) opt.horizons = a.horizons;
  if (!a.mask_ratios.empty()) opt.mask_ratios = a.mask_ratios;
  const EvalReport report = evaluate(ck.model, *ds, task, regime, opt);
  for (const auto& [k, v] : report.metrics)
    if (!std::isfinite(v)) throw NumericError("metric " + k + " is not finite");
  write_file(a.report, report.to_json() + "\n");
  g.log() << report.to_json() << "\n";
  return kExitOk;
}

template <typename T>
int cmd_infer(const Globals& g, const InferArgs& a) {
  const auto ck = load_checkpoint<T>(a.ckpt);
  const Task task = parse_task(a.task);
  std::ofstream file;
  std::ostream* out = g.out;
  if (!a.out.empty()) {
    ensure_parent(a.out);
    file.open(a.out, std::ios::binary);
    if (!file) throw DataError("cannot write " + a.out);
    out = &file;
  }
  const auto sink = [&](const StreamRecord& r) { *out << r.to_json() << "\n"; };
  std::size_t n = 0;
  if (a.stream == "-") {
    n = stream_infer(std::cin, ck.model, task, a.hop, sink);
  } else {
    std::ifstream in(a.stream);
    if (!in) throw DataError("cannot open stream " + a.stream);
    n = stream_infer(in, ck.model, task, a.hop, sink);
  }
  g.log() << n << " window(s) emitted\n";
  return kExitOk;
}

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
  ScenarioSpec spec;
  spec.scenario = parse_scenario(a.scenario);
  spec.seed = g.seed.value_or(0);
  spec.duration = a.duration;
  spec.period_ms = a.period_ms;
  spec.channels = a.channels > 0 ? a.channels : (spec.scenario == Scenario::jamming ? 4 : spec.scenario == Scenario::mobility ? 2 : 1);
  const auto d = simulate_telemetry(spec);
  write_file(a.out, dataset_csv(d));
  g.log() << "wrote " << d.length() << " samples x " << d.channels() << " channels to " << a.out << "\n";
  return kExitOk;
}

template <typename T>
int cmd_bench(const Globals& g, const BenchArgs& a) {
  const auto ck = load_checkpoint<T>(a.ckpt);
  const auto rows = bench(ck.model, parse_int_list(a.windows, "window"), parse_int_list(a.channels, "channel"),
                          a.repeat, g.seed.value_or(0));
  const std::string csv = bench_csv(rows);
  if (a.out.empty())
    *g.out << csv;
  else
    write_file(a.out, csv);
  return kExitOk;
}

template <typename F32, typename F64>
int by_precision(const Globals& g, F32 f32, F64 f64) {
  return g.precision == 64 ? f64() : f32();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Patch-transformer toolkit for RAN telemetry: curation, pretraining, adaptation, inference"};
  app.name("ranfm");
  app.require_subcommand(1);
  Globals g;
  g.out = &out;
  g.err = &err;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Global seed");
  app.add_option("--precision", g.precision, "Arithmetic width")->check(CLI::IsMember({32, 64}));
  app.add_flag("--quiet", g.quiet, "Suppress progress output");
  app.fallthrough();

  CurateArgs ca;
  auto* curate_cmd = app.add_subcommand("curate", "Curate CSV telemetry into datasets and a manifest");
  curate_cmd->add_option("input", ca.input, "CSV file or directory")->required();
  curate_cmd->add_option("--out", ca.out, "Output directory")->required();
  curate_cmd->add_option("--inject-anomalies", ca.anomalies, "JSON list of anomaly specs");
  curate_cmd->add_option("--split", ca.split)->check(CLI::IsMember({"temporal", "per_series", "provided"}));
  curate_cmd->add_option("--task", ca.task)->check(CLI::IsMember({"anomaly", "classify", "forecast", "impute"}));
  curate_cmd->add_option("--train-fraction", ca.train_fraction);
  curate_cmd->add_flag("--keep-missing", ca.keep_missing, "Keep gaps flagged instead of filling them");

  PretrainArgs pa;
  auto* pretrain_cmd = app.add_subcommand("pretrain", "Masked-reconstruction pretraining");
  pretrain_cmd->add_option("--data", pa.data, "Curated directory")->required();
  pretrain_cmd->add_option("--config", pa.config, "Run config JSON");
  pretrain_cmd->add_option("--out", pa.out, "Checkpoint path")->required();
  pretrain_cmd->add_option("--loss-curve", pa.loss_curve, "Loss-curve CSV path");

  FinetuneArgs fa;
  auto* finetune_cmd = app.add_subcommand("finetune", "Adapt a checkpoint to a task");
  finetune_cmd->add_option("--ckpt", fa.ckpt)->required();
  finetune_cmd->add_option("--task", fa.task)->required()->check(CLI::IsMember({"anomaly", "classify", "forecast", "impute"}));
  finetune_cmd->add_option("--regime", fa.regime)->required()->check(CLI::IsMember({"ff", "lp", "zero"}));
  finetune_cmd->add_option("--data", fa.data)->required();
  finetune_cmd->add_option("--out", fa.out)->required();
  finetune_cmd->add_option("--config", fa.config, "Run config JSON (train section used)");
  finetune_cmd->add_option("--horizon", fa.horizon, "Forecast horizon H");
  finetune_cmd->add_option("--classes", fa.classes, "Class count K (default: max label + 1)");
  finetune_cmd->add_option("--loss-curve", fa.loss_curve);

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a test dataset");
  eval_cmd->add_option("--ckpt", ea.ckpt)->required();
  eval_cmd->add_option("--task", ea.task)->required()->check(CLI::IsMember({"anomaly", "classify", "forecast", "impute"}));
  eval_cmd->add_option("--data", ea.data)->required();
  eval_cmd->add_option("--report", ea.report)->required();
  eval_cmd->add_option("--dataset", ea.dataset, "Dataset name (default: first test split)");
  eval_cmd->add_option("--regime", ea.regime, "Regime tag for the report");
  eval_cmd->add_option("--horizons", ea.horizons)->delimiter(',');
  eval_cmd->add_option("--mask-ratios", ea.mask_ratios)->delimiter(',');

  InferArgs ia;
  auto* infer_cmd = app.add_subcommand("infer", "Sliding-window inference over a CSV stream");
  infer_cmd->add_option("--ckpt", ia.ckpt)->required();
  infer_cmd->add_option("--task", ia.task)->required()->check(CLI::IsMember({"anomaly", "classify", "forecast", "impute"}));
  infer_cmd->add_option("--stream", ia.stream, "CSV path or - for stdin")->required();
  infer_cmd->add_option("--hop", ia.hop)->check(CLI::PositiveNumber);
  infer_cmd->add_option("--out", ia.out, "JSON-lines output (default stdout)");

  SimulateArgs sa;
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate synthetic RAN telemetry");
  simulate_cmd->add_option("--scenario", sa.scenario)->required()->check(
      CLI::IsMember({"jamming", "mobility", "embb_load", "cqi_mask"}));
  simulate_cmd->add_option("--out", sa.out)->required();
  simulate_cmd->add_option("--duration", sa.duration, "Samples");
  simulate_cmd->add_option("--channels", sa.channels);
  simulate_cmd->add_option("--period-ms", sa.period_ms);

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "Per-window latency and memory");
  bench_cmd->add_option("--ckpt", ba.ckpt)->required();
  bench_cmd->add_option("--window", ba.windows, "Window length(s), comma separated")->required();
  bench_cmd->add_option("--channels", ba.channels, "Channel count(s), comma separated")->required();
  bench_cmd->add_option("--repeat", ba.repeat)->check(CLI::Range(3, 1000000));
  bench_cmd->add_option("--out", ba.out, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*curate_cmd) return cmd_curate(g, ca);
    if (*pretrain_cmd) return by_precision(g, [&] { return cmd_pretrain<float>(g, pa); }, [&] { return cmd_pretrain<double>(g, pa); });
    if (*finetune_cmd) return by_precision(g, [&] { return cmd_finetune<float>(g, fa); }, [&] { return cmd_finetune<double>(g, fa); });
    if (*eval_cmd) return by_precision(g, [&] { return cmd_eval<float>(g, ea); }, [&] { return cmd_eval<double>(g, ea); });
    if (*infer_cmd) return by_precision(g, [&] { return cmd_infer<float>(g, ia); }, [&] { return cmd_infer<double>(g, ia); });
    if (*simulate_cmd) return cmd_simulate(g, sa);
    if (*bench_cmd) return by_precision(g, [&] { return cmd_bench<float>(g, ba); }, [&] { return cmd_bench<double>(g, ba); });
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace ranfm
