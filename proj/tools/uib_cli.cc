// Command-line driver: generate-data, train, unlearn, evaluate, run, trace.
// Stage commands exchange files inside --out; `run` and `trace` do the whole
// pipeline in one process.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "uib/checkpoint.h"
#include "uib/config.h"
#include "uib/data.h"
#include "uib/error.h"
#include "uib/experiment.h"
#include "uib/metrics.h"
#include "uib/model.h"
#include "uib/unlearn.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitAllTrialsFailed = 3;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string method;
  std::string out;
  std::optional<std::size_t> trials;
};

uib::ExperimentConfig ResolveConfig(const Flags& f) {
  uib::ExperimentConfig cfg =
      f.config.empty() ? uib::ParseConfig("") : uib::LoadConfigFile(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (!f.method.empty()) {
    try {
      cfg.method = uib::ParseMethod(f.method);
    } catch (const uib::Error& e) {
      throw uib::Error(uib::ErrorCode::kValidationError,
                       std::string("--method: ") + e.what());
    }
  }
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (f.trials) cfg.trials = *f.trials;
  cfg.Validate();
  return cfg;
}

fs::path OutDir(const uib::ExperimentConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  return cfg.output_dir;
}

uib::SynthConfig SynthFor(const uib::ExperimentConfig& cfg) {
  uib::SynthConfig s = cfg.synth;
  s.seed = cfg.seed;
  return s;
}

// Rebuilds the state `unlearn` and `evaluate` need from the stage files.
uib::PreparedTrial LoadStage(const uib::ExperimentConfig& cfg,
                             const fs::path& dir, bool need_retrained) {
  uib::PreparedTrial t;
  t.seed = cfg.seed;
  t.splits.train = uib::ReadCsvFile(dir / "train.csv", uib::SplitTag::kTrain);
  t.splits.test_biased =
      uib::ReadCsvFile(dir / "test_biased.csv", uib::SplitTag::kTestBiased);
  t.splits.test_uniform =
      uib::ReadCsvFile(dir / "test_uniform.csv", uib::SplitTag::kTestUniform);
  const uib::Checkpoint ckpt = uib::LoadCheckpoint(dir / "model.ckpt");
  t.spec = ckpt.spec;
  t.original = ckpt.params;
  t.train = cfg.train;
  t.train.seed = cfg.seed;
  t.request = uib::BuildRequest(cfg, t.splits.train, cfg.seed);
  t.remaining = uib::RemainingDataset(t.splits.train, t.request);
  t.forget = uib::ForgetDataset(t.splits.train, t.request);
  if (need_retrained) {
    t.retrained = uib::LoadCheckpoint(dir / "retrained.ckpt").params;
  }
  return t;
}

int GenerateData(const uib::ExperimentConfig& cfg) {
  const fs::path dir = OutDir(cfg);
  const uib::SynthSplits s = uib::GenerateBiased(SynthFor(cfg));
  uib::WriteCsvFile(dir / "train.csv", s.train);
  uib::WriteCsvFile(dir / "test_biased.csv", s.test_biased);
  uib::WriteCsvFile(dir / "test_uniform.csv", s.test_uniform);
  std::printf("wrote %zu rows per split to %s\n", s.train.size(),
              dir.c_str());
  return kExitOk;
}

int Train(const uib::ExperimentConfig& cfg) {
  const fs::path dir = OutDir(cfg);
  const uib::Dataset train =
      uib::ReadCsvFile(dir / "train.csv", uib::SplitTag::kTrain);
  uib::ModelSpec spec = cfg.model;
  spec.input_dim = train.num_features();
  uib::TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  const uib::TrainResult r = uib::TrainSgd(spec, train.ToBatch(), tc);
  uib::SaveCheckpoint(dir / "model.ckpt", {spec, r.params, cfg.seed});
  std::printf("final loss %.6f, checkpoint %s\n", r.loss_trace.back(),
              (dir / "model.ckpt").c_str());
  return kExitOk;
}

int Unlearn(const uib::ExperimentConfig& cfg) {
  const fs::path dir = OutDir(cfg);
  uib::PreparedTrial t = LoadStage(cfg, dir, false);
  t.retrain_seconds = uib::MeasureUt([&] {
    t.retrained =
        uib::BaselineRetrain(t.spec, t.remaining.ToBatch(), t.train).params;
  });
  uib::SaveCheckpoint(dir / "retrained.ckpt", {t.spec, t.retrained, cfg.seed});

  const uib::MethodRun run = uib::ExecuteMethod(cfg, cfg.method, t);
  uib::SaveCheckpoint(dir / "unlearned.ckpt", {t.spec, run.params, cfg.seed});
  nlohmann::ordered_json j;
  j["method"] = uib::MethodName(cfg.method);
  j["ut_seconds"] = run.ut_seconds;
  j["retrain_seconds"] = t.retrain_seconds;
  j["params_digest"] = uib::ContentDigest(run.params.theta.span());
  if (!run.result_json.empty()) {
    j["unlearn_result"] = nlohmann::ordered_json::parse(run.result_json);
  }
  uib::WriteTextFile(dir / "unlearn.json", j.dump(2) + "\n");
  std::printf("%s finished in %.3f s (retrain %.3f s)\n",
              std::string(uib::MethodName(cfg.method)).c_str(),
              run.ut_seconds, t.retrain_seconds);
  return kExitOk;
}

int Evaluate(const uib::ExperimentConfig& cfg) {
  const fs::path dir = OutDir(cfg);
  const uib::PreparedTrial t = LoadStage(cfg, dir, true);
  const uib::Checkpoint unlearned = uib::LoadCheckpoint(dir / "unlearned.ckpt");
  double ut = 0.0;
  if (fs::exists(dir / "unlearn.json")) {
    ut = nlohmann::json::parse(uib::ReadTextFile(dir / "unlearn.json"))
             .value("ut_seconds", 0.0);
  }
  const uib::MetricsRecord m = uib::Evaluate(t, unlearned.params, ut);
  uib::WriteTextFile(dir / "metrics.json", uib::MetricsJson(m) + "\n");
  std::printf("%s\n%s\n", uib::MetricsCsvHeader().c_str(),
              uib::MetricsCsvRow(m).c_str());
  return kExitOk;
}

int Run(const uib::ExperimentConfig& cfg) {
  const uib::AggregateReport report = uib::RunExperiment(cfg, OutDir(cfg));
  for (const uib::TrialReport& t : report.trials) {
    if (!t.ok) {
      std::fprintf(stderr, "trial %zu failed: %s\n", t.trial, t.error.c_str());
    }
  }
  std::printf("%s", uib::AggregateCsv(report).c_str());
  std::printf("%s", uib::TimingCsv(report).c_str());
  return report.failed == report.trials.size() ? kExitAllTrialsFailed
                                               : kExitOk;
}

int Trace(const uib::ExperimentConfig& cfg) {
  const std::vector<uib::TraceRow> rows =
      uib::RunIterationTrace(cfg, OutDir(cfg));
  uib::WriteIterationTrace(std::cout, rows);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Influence-function unlearning with an information-bottleneck "
               "regularizer"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&flags](CLI::App* sub) {
    sub->add_option("--config", flags.config, "config file")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "base seed");
    sub->add_option("--method", flags.method,
                    "retrain, ft, ga, sr, if or uib_if");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--trials", flags.trials, "number of trials");
  };

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const uib::ExperimentConfig&);
  };
  const Command commands[] = {
      {"generate-data", "write the synthetic train/test splits as CSV",
       GenerateData},
      {"train", "train on train.csv and write model.ckpt", Train},
      {"unlearn", "run --method on model.ckpt; also writes retrained.ckpt",
       Unlearn},
      {"evaluate", "score unlearned.ckpt and write metrics.json", Evaluate},
      {"run", "full pipeline over all trials with aggregation", Run},
      {"trace", "uib_if sweep over trace.iterations", Trace},
  };
  std::vector<CLI::App*> subs;
  for (const Command& c : commands) {
    subs.push_back(app.add_subcommand(c.name, c.help));
    add_common(subs.back());
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const uib::ExperimentConfig cfg = ResolveConfig(flags);
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) return commands[i].fn(cfg);
    }
  } catch (const uib::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    switch (e.code()) {
      case uib::ErrorCode::kParseError:
      case uib::ErrorCode::kValidationError:
      case uib::ErrorCode::kInvalidConfig:
        return kExitValidation;
      default:
        return kExitUsage;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
