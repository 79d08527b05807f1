#include "uib/experiment.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "uib/error.h"

namespace uib {
namespace {

std::string G17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::ordered_json MetricsObject(const MetricsRecord& m) {
  return nlohmann::ordered_json::parse(MetricsJson(m));
}

nlohmann::ordered_json BoundsObject(const BoundEstimate& b) {
  nlohmann::ordered_json j;
  j["uib_theta_terms"] = b.uib_theta_terms;
  j["uib_r_terms"] = b.uib_r_terms;
  j["upper_total"] = b.upper_total;
  j["lower_y"] = b.lower_y;
  j["objective"] = b.objective;
  return j;
}

MetricSummary Summarize(const std::string& name,
                        const std::vector<double>& values) {
  MetricSummary s;
  s.name = name;
  s.n = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::string SummaryCsv(const std::vector<MetricSummary>& rows) {
  std::string out = "metric,mean,std,n\n";
  for (const MetricSummary& s : rows) {
    out += s.name + "," + G17(s.mean) + "," + G17(s.std) + "," +
           std::to_string(s.n) + "\n";
  }
  return out;
}

std::string TrialFileName(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "trial_%03zu.json", i);
  return buf;
}

}  // namespace

UnlearnRequest BuildRequest(const ExperimentConfig& cfg, const Dataset& train,
                            std::uint64_t seed) {
  if (cfg.request.mode == RequestMode::kRandomPoints) {
    return MakeRandomRequest(train, cfg.request.budget_fraction, seed);
  }
  return MakeSystematicRequest(
      train, BiasPatternCandidates(train, cfg.synth, cfg.request.replacement),
      cfg.request.budget_fraction, cfg.request.denominator);
}

PreparedTrial PrepareTrial(const ExperimentConfig& cfg, std::uint64_t seed) {
  PreparedTrial t;
  t.seed = seed;
  SynthConfig synth = cfg.synth;
  synth.seed = seed;
  t.splits = GenerateBiased(synth);
  t.spec = cfg.model;
  t.spec.input_dim = synth.num_features();
  t.spec.num_classes = synth.num_classes;
  t.train = cfg.train;
  t.train.seed = seed;

  t.original = TrainSgd(t.spec, t.splits.train.ToBatch(), t.train).params;
  t.request = BuildRequest(cfg, t.splits.train, seed);
  t.remaining = RemainingDataset(t.splits.train, t.request);
  t.forget = ForgetDataset(t.splits.train, t.request);
  const Batch remaining = t.remaining.ToBatch();
  t.retrain_seconds = MeasureUt([&] {
    t.retrained = BaselineRetrain(t.spec, remaining, t.train).params;
  });
  return t;
}

MethodRun ExecuteMethod(const ExperimentConfig& cfg, Method method,
                        const PreparedTrial& trial) {
  const ModelSpec& spec = trial.spec;
  const Batch remaining = trial.remaining.ToBatch();
  MethodRun run;
  switch (method) {
    case Method::kRetrain:
      run.params = trial.retrained;
      run.ut_seconds = trial.retrain_seconds;
      break;
    case Method::kFineTune: {
      TrainConfig tc = trial.train;
      tc.epochs = cfg.baselines.ft_epochs;
      run.ut_seconds = MeasureUt([&] {
        run.params =
            BaselineFineTune(spec, trial.original, remaining, tc).params;
      });
      break;
    }
    case Method::kGradientAscent: {
      const Batch forget = trial.forget.ToBatch();
      run.ut_seconds = MeasureUt([&] {
        run.params = BaselineGradientAscent(spec, trial.original, forget,
                                            cfg.baselines.ga_steps,
                                            cfg.baselines.ga_lr)
                         .params;
      });
      break;
    }
    case Method::kScrub: {
      Prng rng(trial.seed);
      run.ut_seconds = MeasureUt([&] {
        run.params = BaselineFisherScrub(spec, trial.original, remaining,
                                         cfg.baselines.sr_noise_scale, rng);
      });
      break;
    }
    case Method::kIf:
    case Method::kUibIf: {
      UibConfig uc = cfg.uib;
      uc.seed = trial.seed;
      if (method == Method::kIf) {
        uc.reg_strength = 0.0;
        uc.sampler = SamplerKind::kNone;
        uc.iterations = 1;
      }
      UnlearnResult result;
      run.ut_seconds = MeasureUt([&] {
        result = RunUibIf(spec, trial.original, trial.splits.train,
                          trial.request, uc, cfg.solver);
      });
      run.params = result.params_after;
      run.bounds = result.bounds;
      run.result_json = UnlearnResultJson(result, uc, cfg.solver);
      return run;
    }
  }
  run.bounds =
      EstimateBounds(spec, trial.original, run.params, remaining, cfg.uib);
  return run;
}

F1Result TestF1(const ModelSpec& spec, const ParamVector& params,
                const Dataset& test) {
  return F1Macro(Predict(spec, params, test.features), test.labels,
                 spec.num_classes);
}

Association TestBiasCorrelation(const ModelSpec& spec,
                                const ParamVector& params,
                                const Dataset& test) {
  if (!test.bias_attr) {
    throw Error(ErrorCode::kInvalidConfig, "test split has no bias_attr");
  }
  return BiasCorrelation(Predict(spec, params, test.features), *test.bias_attr);
}

MetricsRecord Evaluate(const PreparedTrial& trial, const ParamVector& params,
                       double ut_seconds, MiaResult* mia) {
  const Dataset& test = trial.splits.test_uniform;
  MetricsRecord m;
  m.f1_percent = TestF1(trial.spec, params, test).percent;
  m.rip_percent =
      Rip(m.f1_percent, TestF1(trial.spec, trial.retrained, test).percent);
  const MiaResult r = MiaMemberRate(trial.spec, params, trial.forget.ToBatch(),
                                    trial.remaining.ToBatch(),
                                    trial.splits.test_biased.ToBatch());
  m.mia_member_rate_percent = r.member_rate_percent;
  m.mia_efficacy_paper_percent = MiaEfficacyPaper(r.member_rate_percent);
  m.bias_correlation = TestBiasCorrelation(trial.spec, params, test).value;
  m.ut_seconds = ut_seconds;
  if (mia != nullptr) *mia = r;
  return m;
}

std::string TrialReportJson(const TrialReport& r) {
  nlohmann::ordered_json j;
  j["trial"] = r.trial;
  j["seed"] = r.seed;
  j["method"] = MethodName(r.method);
  j["ok"] = r.ok;
  if (!r.ok) {
    j["error"] = r.error;
    return j.dump(2);
  }
  j["metrics"] = MetricsObject(r.metrics);
  j["bounds"] = BoundsObject(r.bounds);
  j["params_digest"] = r.params_digest;
  j["original_f1"] = r.original_f1;
  j["original_bias_correlation"] = r.original_bias_correlation;
  j["retrain_f1"] = r.retrain_f1;
  j["retrain_seconds"] = r.retrain_seconds;
  j["mia_threshold"] = r.mia_threshold;
  j["forget_size"] = r.forget_size;
  j["num_patterns"] = r.num_patterns;
  j["prng"] = Prng::kAlgorithm;
  return j.dump(2);
}

TrialReport RunTrial(const ExperimentConfig& cfg, std::size_t trial) {
  TrialReport r;
  r.trial = trial;
  r.seed = TrialSeed(cfg, trial);
  r.method = cfg.method;
  try {
    const PreparedTrial t = PrepareTrial(cfg, r.seed);
    const MethodRun run = ExecuteMethod(cfg, cfg.method, t);
    MiaResult mia;
    r.metrics = Evaluate(t, run.params, run.ut_seconds, &mia);
    r.bounds = run.bounds;
    r.params_digest = ContentDigest(run.params.theta.span());
    const Dataset& test = t.splits.test_uniform;
    r.original_f1 = TestF1(t.spec, t.original, test).percent;
    r.original_bias_correlation =
        TestBiasCorrelation(t.spec, t.original, test).value;
    r.retrain_f1 = TestF1(t.spec, t.retrained, test).percent;
    r.retrain_seconds = t.retrain_seconds;
    r.mia_threshold = mia.calibration.threshold;
    r.forget_size = t.forget.size();
    r.num_patterns = t.request.patterns.size();
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

AggregateReport Aggregate(std::vector<TrialReport> trials) {
  AggregateReport report;
  std::vector<double> f1, rip, member, efficacy, bias, upper, lower, objective,
      ut, retrain;
  for (const TrialReport& t : trials) {
    if (!t.ok) {
      ++report.failed;
      continue;
    }
    f1.push_back(t.metrics.f1_percent);
    rip.push_back(t.metrics.rip_percent);
    member.push_back(t.metrics.mia_member_rate_percent);
    efficacy.push_back(t.metrics.mia_efficacy_paper_percent);
    bias.push_back(t.metrics.bias_correlation);
    upper.push_back(t.bounds.upper_total);
    lower.push_back(t.bounds.lower_y);
    objective.push_back(t.bounds.objective);
    ut.push_back(t.metrics.ut_seconds);
    retrain.push_back(t.retrain_seconds);
  }
  report.metrics = {Summarize("f1_percent", f1),
                    Summarize("rip_percent", rip),
                    Summarize("mia_member_rate_percent", member),
                    Summarize("mia_efficacy_paper_percent", efficacy),
                    Summarize("bias_correlation", bias),
                    Summarize("uib_upper_total", upper),
                    Summarize("lower_y", lower),
                    Summarize("bound_objective", objective)};
  report.timing = {Summarize("ut_seconds", ut),
                   Summarize("retrain_seconds", retrain)};
  report.trials = std::move(trials);
  return report;
}

std::string AggregateCsv(const AggregateReport& report) {
  return SummaryCsv(report.metrics);
}

std::string TimingCsv(const AggregateReport& report) {
  return SummaryCsv(report.timing);
}

AggregateReport RunExperiment(const ExperimentConfig& cfg,
                              const std::filesystem::path& out_dir) {
  cfg.Validate();
  std::filesystem::create_directories(out_dir);
  std::vector<TrialReport> trials;
  for (std::size_t i = 0; i < cfg.trials; ++i) {
    trials.push_back(RunTrial(cfg, i));
    WriteTextFile(out_dir / TrialFileName(i),
                  TrialReportJson(trials.back()) + "\n");
  }
  AggregateReport report = Aggregate(std::move(trials));
  WriteTextFile(out_dir / "aggregate.csv", AggregateCsv(report));
  WriteTextFile(out_dir / "timing.csv", TimingCsv(report));
  return report;
}

void WriteIterationTrace(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "iteration,bias_correlation,f1,uib_upper_total,lower_y\n";
  for (const TraceRow& r : rows) {
    out << r.iteration << ',' << G17(r.bias_correlation) << ',' << G17(r.f1)
        << ',' << G17(r.uib_upper_total) << ',' << G17(r.lower_y) << '\n';
  }
}

std::vector<TraceRow> RunIterationTrace(const ExperimentConfig& cfg,
                                        const std::filesystem::path& out_dir) {
  cfg.Validate();
  std::filesystem::create_directories(out_dir);
  std::vector<TraceRow> rows;
  if (!cfg.trace_iterations.empty()) {
    const PreparedTrial trial = PrepareTrial(cfg, TrialSeed(cfg, 0));
    for (std::size_t iterations : cfg.trace_iterations) {
      ExperimentConfig swept = cfg;
      swept.uib.iterations = iterations;
      const MethodRun run = ExecuteMethod(swept, Method::kUibIf, trial);
      const Dataset& test = trial.splits.test_uniform;
      TraceRow row;
      row.iteration = iterations;
      row.bias_correlation =
          TestBiasCorrelation(trial.spec, run.params, test).value;
      row.f1 = TestF1(trial.spec, run.params, test).percent;
      row.uib_upper_total = run.bounds.upper_total;
      row.lower_y = run.bounds.lower_y;
      rows.push_back(row);

      nlohmann::ordered_json j;
      j["iteration"] = row.iteration;
      j["bias_correlation"] = row.bias_correlation;
      j["f1"] = row.f1;
      j["uib_upper_total"] = row.uib_upper_total;
      j["lower_y"] = row.lower_y;
      j["seed"] = trial.seed;
      j["ut_seconds"] = run.ut_seconds;
      j["unlearn_result"] = nlohmann::ordered_json::parse(run.result_json);
      WriteTextFile(out_dir / ("trace_" + std::to_string(iterations) + ".json"),
                    j.dump(2) + "\n");
    }
  }
  std::ostringstream csv;
  WriteIterationTrace(csv, rows);
  WriteTextFile(out_dir / "trace.csv", csv.str());
  return rows;
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace uib
