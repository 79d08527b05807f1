#ifndef UIB_CONFIG_H_
#define UIB_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "uib/data.h"
#include "uib/model.h"
#include "uib/unlearn.h"

namespace uib {

enum class Method { kRetrain, kFineTune, kGradientAscent, kScrub, kIf, kUibIf };

// retrain, ft, ga, sr, if, uib_if
std::string_view MethodName(Method m);
Method ParseMethod(std::string_view name);

struct RequestSpec {
  RequestMode mode = RequestMode::kSystematicPatterns;
  double budget_fraction = 0.1;
  BudgetDenominator denominator = BudgetDenominator::kAllFeatures;
  ReplacementPolicy replacement = ReplacementPolicy::kZeros;
};

struct BaselineConfig {
  std::size_t ft_epochs = 5;
  std::size_t ga_steps = 10;
  double ga_lr = 0.05;
  double sr_noise_scale = 1e-3;
};

// Everything a run needs. Per-trial seeds (data, initialization, request
// selection, samplers, noise) all derive from seed + trial index, so the
// synth/train/uib seed fields are overwritten per trial.
struct ExperimentConfig {
  SynthConfig synth;
  ModelSpec model{Architecture::kMlp, 16, 12, 4, 0.1};
  TrainConfig train;
  RequestSpec request;
  Method method = Method::kUibIf;
  UibConfig uib;
  SolverConfig solver{SolverKind::kCg,
                      LissaConfig{5000, 0.01, 25.0, 1, 1e-7}};
  BaselineConfig baselines;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  std::string output_dir = "results";
  std::vector<std::size_t> trace_iterations{1, 2, 4, 8};

  // Throws kValidationError naming the offending field.
  void Validate() const;
};

// Format: `[section]` headers, `key = value` lines, `#` comments, blank
// lines. Sections: synth, model, train, request, method, uib, solver,
// baselines, experiment, trace. Missing keys keep their defaults; the
// model's input_dim and num_classes follow the synth section, and the
// LiSSA scale defaults to the architecture's value. Throws kParseError
// (with the line number) for malformed lines, unknown sections or keys,
// repeated keys and unreadable values; kValidationError for out-of-range
// values.
ExperimentConfig ParseConfig(std::string_view text);
ExperimentConfig LoadConfigFile(const std::filesystem::path& path);

// Canonical form: every section and key in fixed order, shortest
// round-trip numbers. ParseConfig(SerializeConfig(c)) reproduces c.
std::string SerializeConfig(const ExperimentConfig& cfg);

}  // namespace uib

#endif  // UIB_CONFIG_H_
