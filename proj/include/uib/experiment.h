#ifndef UIB_EXPERIMENT_H_
#define UIB_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "uib/bounds.h"
#include "uib/config.h"
#include "uib/data.h"
#include "uib/metrics.h"
#include "uib/model.h"
#include "uib/unlearn.h"

namespace uib {

// Seed of trial i.
inline std::uint64_t TrialSeed(const ExperimentConfig& cfg, std::size_t i) {
  return cfg.seed + i;
}

// Request over `train` per the config: bias-channel patterns for systematic
// mode, a seeded sample subset for random mode.
UnlearnRequest BuildRequest(const ExperimentConfig& cfg, const Dataset& train,
                            std::uint64_t seed);

// Everything that precedes the unlearning call of one trial.
struct PreparedTrial {
  std::uint64_t seed = 0;
  SynthSplits splits;
  ModelSpec spec;
  TrainConfig train;
  ParamVector original;
  UnlearnRequest request;
  Dataset remaining;
  Dataset forget;
  ParamVector retrained;
  double retrain_seconds = 0.0;
};

PreparedTrial PrepareTrial(const ExperimentConfig& cfg, std::uint64_t seed);

struct MethodRun {
  ParamVector params;
  double ut_seconds = 0.0;
  BoundEstimate bounds;
  std::string result_json;  // UnlearnResult JSON for if / uib_if, else empty
};

// Runs `method` on the prepared trial; for retrain the cached oracle and its
// time are returned.
MethodRun ExecuteMethod(const ExperimentConfig& cfg, Method method,
                        const PreparedTrial& trial);

// Macro-F1 and bias correlation of the predictions on `test`.
F1Result TestF1(const ModelSpec& spec, const ParamVector& params,
                const Dataset& test);
Association TestBiasCorrelation(const ModelSpec& spec,
                                const ParamVector& params, const Dataset& test);

// F1 and bias correlation on test_uniform, RIP against the retrained oracle,
// and MIA with forget = the removed data, members = the remaining training
// rows, non-members = test_biased.
MetricsRecord Evaluate(const PreparedTrial& trial, const ParamVector& params,
                       double ut_seconds, MiaResult* mia = nullptr);

struct TrialReport {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  Method method = Method::kUibIf;
  bool ok = false;
  std::string error;
  MetricsRecord metrics;
  BoundEstimate bounds;
  std::string params_digest;
  double original_f1 = 0.0;
  double original_bias_correlation = 0.0;
  double retrain_f1 = 0.0;
  double retrain_seconds = 0.0;
  double mia_threshold = 0.0;
  std::size_t forget_size = 0;
  std::size_t num_patterns = 0;
};

std::string TrialReportJson(const TrialReport& r);

// Never throws for trial-level failures; they are recorded in the report.
TrialReport RunTrial(const ExperimentConfig& cfg, std::size_t trial);

struct MetricSummary {
  std::string name;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single trial
  std::size_t n = 0;
};

struct AggregateReport {
  std::vector<TrialReport> trials;
  std::vector<MetricSummary> metrics;  // deterministic quantities
  std::vector<MetricSummary> timing;   // wall-clock quantities
  std::size_t failed = 0;
};

AggregateReport Aggregate(std::vector<TrialReport> trials);

// Columns metric,mean,std,n. The aggregate CSV carries no timing, so a fixed
// config and seed reproduce it byte for byte; timing goes to its own file.
std::string AggregateCsv(const AggregateReport& report);
std::string TimingCsv(const AggregateReport& report);

// Runs every trial and writes trial_NNN.json, aggregate.csv and timing.csv
// into out_dir.
AggregateReport RunExperiment(const ExperimentConfig& cfg,
                              const std::filesystem::path& out_dir);

struct TraceRow {
  std::size_t iteration = 0;
  double bias_correlation = 0.0;
  double f1 = 0.0;
  double uib_upper_total = 0.0;
  double lower_y = 0.0;
};

// Header iteration,bias_correlation,f1,uib_upper_total,lower_y then one row
// per entry, numbers in %.17g.
void WriteIterationTrace(std::ostream& out, const std::vector<TraceRow>& rows);

// uib_if on the first trial's data once per entry of cfg.trace_iterations;
// writes trace.csv and trace_T.json (one per swept T) into out_dir.
std::vector<TraceRow> RunIterationTrace(const ExperimentConfig& cfg,
                                        const std::filesystem::path& out_dir);

void WriteTextFile(const std::filesystem::path& path, const std::string& text);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace uib

#endif  // UIB_EXPERIMENT_H_
