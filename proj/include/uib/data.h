#ifndef UIB_DATA_H_
#define UIB_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "uib/model.h"
#include "uib/numerics.h"

namespace uib {

enum class SplitTag { kTrain, kTestBiased, kTestUniform };

std::string_view SplitTagName(SplitTag tag);

struct Dataset {
  Matrix features;  // n x m
  std::vector<std::size_t> labels;
  std::optional<std::vector<std::size_t>> bias_attr;
  SplitTag split = SplitTag::kTrain;

  std::size_t size() const { return labels.size(); }
  std::size_t num_features() const { return features.cols(); }

  void Validate() const;
  Batch ToBatch() const { return {features, labels}; }
  Dataset Subset(const std::vector<std::size_t>& rows) const;
};

// Desk-scale analog of a colour-biased digit set: a class-conditional
// Gaussian "core" block followed by a one-hot "bias" block.
struct SynthConfig {
  std::size_t num_samples = 2000;
  std::size_t num_classes = 4;
  std::size_t core_dim = 8;
  std::size_t bias_dim = 4;
  double bias_strength = 3.0;
  double class_separation = 1.0;
  std::uint64_t seed = 7;

  void Validate() const;
  std::size_t num_features() const { return core_dim + bias_dim; }
};

struct SynthSplits {
  Dataset train;
  Dataset test_biased;
  Dataset test_uniform;
};

// Each split has cfg.num_samples rows and uniformly drawn labels. Core
// features are N(mu_y, I) with class means mu_c ~ N(0, separation^2 I) drawn
// once per seed. The bias block is bias_strength * e_b: in train and
// test_biased b = y mod bias_dim, in test_uniform b is uniform and
// independent of y. bias_attr records b.
SynthSplits GenerateBiased(const SynthConfig& cfg);

enum class ReplacementPolicy { kZeros, kFeatureMean };

std::string_view ReplacementPolicyName(ReplacementPolicy p);
ReplacementPolicy ParseReplacementPolicy(std::string_view name);

// The entries at feature set K over the samples whose label is in L, plus the
// replacement values that define the perturbed pattern.
struct PatternPoint {
  std::vector<std::size_t> feature_idx;  // K, sorted, non-empty
  std::vector<std::size_t> label_idx;    // L, sorted
  std::vector<std::size_t> sample_ids;   // rows whose label is in L
  Vector replacement;                    // one value per entry of K
};

// Throws kIndexOutOfRange for bad K/L indices and kEmptyPattern when no
// sample carries a label in L.
PatternPoint BuildPatternPoint(const Dataset& ds,
                               const std::vector<std::size_t>& feature_idx,
                               const std::vector<std::size_t>& label_idx,
                               std::size_t num_classes,
                               ReplacementPolicy policy);

// Copy of ds with features K of every covered sample set to the replacement.
Dataset ApplyReplacement(const Dataset& ds, const PatternPoint& p);

enum class RequestMode { kSystematicPatterns, kRandomPoints };
enum class BudgetDenominator { kAllFeatures, kPatternFeatures };

std::string_view RequestModeName(RequestMode m);
RequestMode ParseRequestMode(std::string_view name);
std::string_view BudgetDenominatorName(BudgetDenominator d);
BudgetDenominator ParseBudgetDenominator(std::string_view name);

struct UnlearnRequest {
  RequestMode mode = RequestMode::kSystematicPatterns;
  std::vector<PatternPoint> patterns;    // systematic mode
  std::vector<std::size_t> sample_ids;   // random mode, sorted
  double budget_fraction = 0.1;

  bool empty() const { return patterns.empty() && sample_ids.empty(); }
  // Distinct features touched by the patterns.
  std::vector<std::size_t> FeatureUnion() const;
};

// Keeps patterns in order while the distinct-feature count stays within
// budget_fraction of the denominator (all m features, or the features of all
// candidate patterns). Throws kInvalidConfig if the budget admits none.
UnlearnRequest MakeSystematicRequest(const Dataset& ds,
                                     std::vector<PatternPoint> candidates,
                                     double budget_fraction,
                                     BudgetDenominator denominator);

// floor(budget_fraction * n) distinct rows chosen with the seeded Prng.
UnlearnRequest MakeRandomRequest(const Dataset& ds, double budget_fraction,
                                 std::uint64_t seed);

// One pattern per class c: K = {bias channel of c}, L = {c}. Input for
// MakeSystematicRequest.
std::vector<PatternPoint> BiasPatternCandidates(const Dataset& train,
                                                const SynthConfig& cfg,
                                                ReplacementPolicy policy);

// D \ delta-D: replacements applied (systematic) or rows dropped (random).
Dataset RemainingDataset(const Dataset& ds, const UnlearnRequest& request);
// The removed data in its original form.
Dataset ForgetDataset(const Dataset& ds, const UnlearnRequest& request);

struct IdxTensor {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> bytes;

  // Bytes mapped to [0, 1] by /255.
  std::vector<double> AsUnitFloats() const;
};

// Accepts magic 0x00000801 (1-D, labels) or 0x00000803 (3-D, images), both
// big-endian. Throws kBadMagic / kTruncatedPayload.
IdxTensor ParseIdx(std::span<const std::uint8_t> bytes);
IdxTensor ReadIdxFile(const std::filesystem::path& path);
// Flattens each image into one feature row.
Dataset DatasetFromIdx(const IdxTensor& images, const IdxTensor& labels);

// Disjoint and exhaustive; the first part holds round(fraction * n) rows.
std::pair<Dataset, Dataset> SplitRandom(const Dataset& ds, double fraction,
                                        std::uint64_t seed);

// CSV with header feature_0..feature_{m-1},label,bias_attr. bias_attr is left
// empty when the dataset has none. Values use %.17g.
void WriteCsv(std::ostream& out, const Dataset& ds);
Dataset ReadCsv(std::istream& in, SplitTag split);
void WriteCsvFile(const std::filesystem::path& path, const Dataset& ds);
Dataset ReadCsvFile(const std::filesystem::path& path, SplitTag split);

}  // namespace uib

#endif  // UIB_DATA_H_
