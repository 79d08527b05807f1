#include "uib/data.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>

#include "uib/error.h"

namespace uib {
namespace {

std::vector<std::size_t> SortedUnique(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::uint32_t ReadBigEndian32(std::span<const std::uint8_t> bytes,
                              std::size_t offset) {
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

Dataset SampleSplit(const SynthConfig& cfg, const std::vector<Vector>& means,
                    SplitTag split, Prng& rng) {
  const std::size_t n = cfg.num_samples;
  const std::size_t m = cfg.num_features();
  Dataset ds;
  ds.split = split;
  ds.features = Matrix(n, m);
  ds.labels.resize(n);
  std::vector<std::size_t> bias(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = rng.UniformIndex(cfg.num_classes);
    ds.labels[i] = y;
    auto row = ds.features.row(i);
    for (std::size_t k = 0; k < cfg.core_dim; ++k) {
      row[k] = means[y][k] + rng.Normal();
    }
    const std::size_t b = split == SplitTag::kTestUniform
                              ? rng.UniformIndex(cfg.bias_dim)
                              : y % cfg.bias_dim;
    bias[i] = b;
    row[cfg.core_dim + b] = cfg.bias_strength;
  }
  ds.bias_attr = std::move(bias);
  return ds;
}

}  // namespace

std::string_view SplitTagName(SplitTag tag) {
  switch (tag) {
    case SplitTag::kTrain: return "train";
    case SplitTag::kTestBiased: return "test_biased";
    case SplitTag::kTestUniform: return "test_uniform";
  }
  return "train";
}

void Dataset::Validate() const {
  if (labels.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "dataset is empty");
  }
  if (features.rows() != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "feature rows and label count differ");
  }
  if (bias_attr && bias_attr->size() != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "bias_attr length differs from sample count");
  }
  if (!features.all_finite()) {
    throw Error(ErrorCode::kNonFinite, "dataset features are not finite");
  }
}

Dataset Dataset::Subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.split = split;
  const Batch b = ToBatch().Subset(rows);
  out.features = b.features;
  out.labels = b.labels;
  if (bias_attr) {
    std::vector<std::size_t> attr;
    attr.reserve(rows.size());
    for (std::size_t r : rows) attr.push_back((*bias_attr)[r]);
    out.bias_attr = std::move(attr);
  }
  return out;
}

void SynthConfig::Validate() const {
  if (num_samples < 1 || num_classes < 1 || core_dim < 1 || bias_dim < 1) {
    throw Error(ErrorCode::kInvalidConfig, "synth counts must all be >= 1");
  }
  if (!(bias_strength >= 0.0) || !std::isfinite(bias_strength)) {
    throw Error(ErrorCode::kInvalidConfig, "bias_strength must be >= 0");
  }
  if (!std::isfinite(class_separation)) {
    throw Error(ErrorCode::kInvalidConfig, "class_separation must be finite");
  }
}

SynthSplits GenerateBiased(const SynthConfig& cfg) {
  cfg.Validate();
  Prng mean_rng(cfg.seed);
  std::vector<Vector> means;
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    Vector mu(cfg.core_dim);
    for (double& v : mu) v = cfg.class_separation * mean_rng.Normal();
    means.push_back(std::move(mu));
  }
  // Independent streams per split so changing one split's size leaves the
  // others untouched.
  Prng train_rng(cfg.seed * 0x9e3779b97f4a7c15ULL + 1);
  Prng biased_rng(cfg.seed * 0x9e3779b97f4a7c15ULL + 2);
  Prng uniform_rng(cfg.seed * 0x9e3779b97f4a7c15ULL + 3);
  return {SampleSplit(cfg, means, SplitTag::kTrain, train_rng),
          SampleSplit(cfg, means, SplitTag::kTestBiased, biased_rng),
          SampleSplit(cfg, means, SplitTag::kTestUniform, uniform_rng)};
}

std::string_view ReplacementPolicyName(ReplacementPolicy p) {
  return p == ReplacementPolicy::kZeros ? "zeros" : "feature_mean";
}

ReplacementPolicy ParseReplacementPolicy(std::string_view name) {
  if (name == "zeros") return ReplacementPolicy::kZeros;
  if (name == "feature_mean") return ReplacementPolicy::kFeatureMean;
  throw Error(ErrorCode::kValidationError,
              "unknown replacement policy '" + std::string(name) + "'");
}

PatternPoint BuildPatternPoint(const Dataset& ds,
                               const std::vector<std::size_t>& feature_idx,
                               const std::vector<std::size_t>& label_idx,
                               std::size_t num_classes,
                               ReplacementPolicy policy) {
  PatternPoint p;
  p.feature_idx = SortedUnique(feature_idx);
  p.label_idx = SortedUnique(label_idx);
  if (p.feature_idx.empty()) {
    throw Error(ErrorCode::kEmptyPattern, "pattern has no features");
  }
  if (p.feature_idx.back() >= ds.num_features()) {
    throw Error(ErrorCode::kIndexOutOfRange, "feature index out of range");
  }
  if (!p.label_idx.empty() && p.label_idx.back() >= num_classes) {
    throw Error(ErrorCode::kIndexOutOfRange, "label index out of range");
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (std::binary_search(p.label_idx.begin(), p.label_idx.end(),
                           ds.labels[i])) {
      p.sample_ids.push_back(i);
    }
  }
  if (p.sample_ids.empty()) {
    throw Error(ErrorCode::kEmptyPattern, "no sample carries a label in L");
  }
  p.replacement = Vector::Zeros(p.feature_idx.size());
  if (policy == ReplacementPolicy::kFeatureMean) {
    for (std::size_t j = 0; j < p.feature_idx.size(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        s += ds.features(i, p.feature_idx[j]);
      }
      p.replacement[j] = s / static_cast<double>(ds.size());
    }
  }
  return p;
}

Dataset ApplyReplacement(const Dataset& ds, const PatternPoint& p) {
  if (p.replacement.size() != p.feature_idx.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "replacement length differs from |K|");
  }
  Dataset out = ds;
  for (std::size_t i : p.sample_ids) {
    if (i >= ds.size()) {
      throw Error(ErrorCode::kIndexOutOfRange, "sample id out of range");
    }
    for (std::size_t j = 0; j < p.feature_idx.size(); ++j) {
      const std::size_t k = p.feature_idx[j];
      if (k >= ds.num_features()) {
        throw Error(ErrorCode::kIndexOutOfRange, "feature index out of range");
      }
      out.features(i, k) = p.replacement[j];
    }
  }
  return out;
}

std::string_view RequestModeName(RequestMode m) {
  return m == RequestMode::kSystematicPatterns ? "systematic" : "random";
}

RequestMode ParseRequestMode(std::string_view name) {
  if (name == "systematic") return RequestMode::kSystematicPatterns;
  if (name == "random") return RequestMode::kRandomPoints;
  throw Error(ErrorCode::kValidationError,
              "unknown request mode '" + std::string(name) + "'");
}

std::string_view BudgetDenominatorName(BudgetDenominator d) {
  return d == BudgetDenominator::kAllFeatures ? "all_features"
                                              : "pattern_features";
}

BudgetDenominator ParseBudgetDenominator(std::string_view name) {
  if (name == "all_features") return BudgetDenominator::kAllFeatures;
  if (name == "pattern_features") return BudgetDenominator::kPatternFeatures;
  throw Error(ErrorCode::kValidationError,
              "unknown budget denominator '" + std::string(name) + "'");
}

std::vector<std::size_t> UnlearnRequest::FeatureUnion() const {
  std::vector<std::size_t> all;
  for (const PatternPoint& p : patterns) {
    all.insert(all.end(), p.feature_idx.begin(), p.feature_idx.end());
  }
  return SortedUnique(std::move(all));
}

UnlearnRequest MakeSystematicRequest(const Dataset& ds,
                                     std::vector<PatternPoint> candidates,
                                     double budget_fraction,
                                     BudgetDenominator denominator) {
  if (!(budget_fraction > 0.0 && budget_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "budget_fraction must be in (0, 1]");
  }
  UnlearnRequest all{RequestMode::kSystematicPatterns, candidates, {},
                     budget_fraction};
  const double total = denominator == BudgetDenominator::kAllFeatures
                           ? static_cast<double>(ds.num_features())
                           : static_cast<double>(all.FeatureUnion().size());
  const auto allowed =
      static_cast<std::size_t>(std::floor(budget_fraction * total + 1e-9));

  UnlearnRequest request{RequestMode::kSystematicPatterns, {}, {},
                         budget_fraction};
  std::set<std::size_t> used;
  for (PatternPoint& p : candidates) {
    std::set<std::size_t> next = used;
    next.insert(p.feature_idx.begin(), p.feature_idx.end());
    if (next.size() > allowed) continue;
    used = std::move(next);
    request.patterns.push_back(std::move(p));
  }
  if (request.patterns.empty() && !all.patterns.empty()) {
    throw Error(ErrorCode::kInvalidConfig,
                "budget admits " + std::to_string(allowed) +
                    " features, fewer than any candidate pattern needs");
  }
  return request;
}

UnlearnRequest MakeRandomRequest(const Dataset& ds, double budget_fraction,
                                 std::uint64_t seed) {
  if (!(budget_fraction > 0.0 && budget_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "budget_fraction must be in (0, 1]");
  }
  const auto count = static_cast<std::size_t>(
      std::floor(budget_fraction * static_cast<double>(ds.size()) + 1e-9));
  if (count == 0) {
    throw Error(ErrorCode::kInvalidConfig, "budget admits no samples");
  }
  Prng rng(seed);
  std::vector<std::size_t> perm = RandomPermutation(ds.size(), rng);
  perm.resize(count);
  std::sort(perm.begin(), perm.end());
  return {RequestMode::kRandomPoints, {}, std::move(perm), budget_fraction};
}

std::vector<PatternPoint> BiasPatternCandidates(const Dataset& train,
                                                const SynthConfig& cfg,
                                                ReplacementPolicy policy) {
  std::vector<PatternPoint> out;
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    try {
      out.push_back(BuildPatternPoint(train, {cfg.core_dim + c % cfg.bias_dim},
                                      {c}, cfg.num_classes, policy));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyPattern) throw;
    }
  }
  return out;
}

Dataset RemainingDataset(const Dataset& ds, const UnlearnRequest& request) {
  if (request.mode == RequestMode::kRandomPoints) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (!std::binary_search(request.sample_ids.begin(),
                              request.sample_ids.end(), i)) {
        keep.push_back(i);
      }
    }
    return ds.Subset(keep);
  }
  Dataset out = ds;
  for (const PatternPoint& p : request.patterns) out = ApplyReplacement(out, p);
  return out;
}

Dataset ForgetDataset(const Dataset& ds, const UnlearnRequest& request) {
  if (request.mode == RequestMode::kRandomPoints) {
    return ds.Subset(request.sample_ids);
  }
  std::vector<std::size_t> rows;
  for (const PatternPoint& p : request.patterns) {
    rows.insert(rows.end(), p.sample_ids.begin(), p.sample_ids.end());
  }
  return ds.Subset(SortedUnique(std::move(rows)));
}

std::vector<double> IdxTensor::AsUnitFloats() const {
  std::vector<double> out(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = bytes[i] / 255.0;
  return out;
}

IdxTensor ParseIdx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) {
    throw Error(ErrorCode::kBadMagic, "input shorter than the magic number");
  }
  const std::uint32_t magic = ReadBigEndian32(bytes, 0);
  std::size_t ndims = 0;
  if (magic == 0x00000801U) {
    ndims = 1;
  } else if (magic == 0x00000803U) {
    ndims = 3;
  } else {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "0x%08x", magic);
    throw Error(ErrorCode::kBadMagic, std::string("unsupported magic ") + buf);
  }
  const std::size_t header = 4 + 4 * ndims;
  if (bytes.size() < header) {
    throw Error(ErrorCode::kTruncatedPayload, "header is truncated");
  }
  IdxTensor t;
  std::uint64_t count = 1;
  for (std::size_t d = 0; d < ndims; ++d) {
    t.dims.push_back(ReadBigEndian32(bytes, 4 + 4 * d));
    count *= t.dims.back();
  }
  if (bytes.size() - header < count) {
    throw Error(ErrorCode::kTruncatedPayload,
                "payload has " + std::to_string(bytes.size() - header) +
                    " bytes, dims require " + std::to_string(count));
  }
  t.bytes.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header),
                 bytes.begin() + static_cast<std::ptrdiff_t>(header + count));
  return t;
}

IdxTensor ReadIdxFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return ParseIdx(bytes);
}

Dataset DatasetFromIdx(const IdxTensor& images, const IdxTensor& labels) {
  if (images.dims.size() != 3 || labels.dims.size() != 1 ||
      images.dims[0] != labels.dims[0]) {
    throw Error(ErrorCode::kShapeMismatch,
                "IDX image/label tensors do not pair up");
  }
  const std::size_t n = images.dims[0];
  const std::size_t m =
      static_cast<std::size_t>(images.dims[1]) * images.dims[2];
  Dataset ds;
  ds.features = Matrix(n, m, images.AsUnitFloats());
  ds.labels.assign(labels.bytes.begin(), labels.bytes.end());
  return ds;
}

std::pair<Dataset, Dataset> SplitRandom(const Dataset& ds, double fraction,
                                        std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "split fraction must be in (0, 1)");
  }
  Prng rng(seed);
  const std::vector<std::size_t> perm = RandomPermutation(ds.size(), rng);
  const auto first = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(ds.size())));
  std::vector<std::size_t> a(perm.begin(),
                             perm.begin() + static_cast<std::ptrdiff_t>(first));
  std::vector<std::size_t> b(perm.begin() + static_cast<std::ptrdiff_t>(first),
                             perm.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {ds.Subset(a), ds.Subset(b)};
}

void WriteCsv(std::ostream& out, const Dataset& ds) {
  const std::size_t m = ds.num_features();
  for (std::size_t k = 0; k < m; ++k) out << "feature_" << k << ",";
  out << "label,bias_attr\n";
  char buf[40];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.features(i, k));
      out << buf << ",";
    }
    out << ds.labels[i] << ",";
    if (ds.bias_attr) out << (*ds.bias_attr)[i];
    out << "\n";
  }
}

Dataset ReadCsv(std::istream& in, SplitTag split) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kParseError, "csv line 1: missing header");
  }
  std::size_t columns = 1 + static_cast<std::size_t>(
                                std::count(line.begin(), line.end(), ','));
  if (columns < 3) {
    throw Error(ErrorCode::kParseError, "csv line 1: too few columns");
  }
  const std::size_t m = columns - 2;
  std::vector<double> values;
  Dataset ds;
  ds.split = split;
  std::vector<std::size_t> bias;
  bool has_bias = true;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != columns) {
      throw Error(ErrorCode::kParseError,
                  "csv line " + std::to_string(line_no) + ": expected " +
                      std::to_string(columns) + " fields");
    }
    try {
      for (std::size_t k = 0; k < m; ++k) {
        std::size_t used = 0;
        values.push_back(std::stod(fields[k], &used));
        if (used != fields[k].size()) throw std::invalid_argument("trailing");
      }
      ds.labels.push_back(std::stoul(fields[m]));
      if (fields[m + 1].empty()) {
        has_bias = false;
      } else {
        bias.push_back(std::stoul(fields[m + 1]));
      }
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError,
                  "csv line " + std::to_string(line_no) + ": bad number");
    }
  }
  ds.features = Matrix(ds.labels.size(), m, std::move(values));
  if (has_bias && bias.size() == ds.labels.size()) ds.bias_attr = bias;
  ds.Validate();
  return ds;
}

void WriteCsvFile(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  WriteCsv(out, ds);
}

Dataset ReadCsvFile(const std::filesystem::path& path, SplitTag split) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  return ReadCsv(in, split);
}

}  // namespace uib
