#include "uib/metrics.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uib/error.h"

namespace uib {
namespace {

// Dense ids 0..k-1 for the distinct values of `v`, in sorted value order.
std::vector<std::size_t> Compact(std::span<const std::size_t> v,
                                 std::size_t& distinct) {
  std::map<std::size_t, std::size_t> ids;
  for (std::size_t x : v) ids.emplace(x, 0);
  std::size_t next = 0;
  for (auto& [value, id] : ids) id = next++;
  distinct = next;
  std::vector<std::size_t> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = ids[v[i]];
  return out;
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double Rip(double f1_unlearn, double f1_retrain) {
  if (f1_retrain == 0.0) {
    throw Error(ErrorCode::kDivisionByZero, "retrain F1 is zero");
  }
  return (f1_unlearn - f1_retrain) / f1_retrain * 100.0;
}

std::vector<double> MaxConfidence(const ModelSpec& spec,
                                  const ParamVector& params,
                                  const Matrix& features) {
  const Matrix proba = PredictProba(spec, params, features);
  std::vector<double> conf(proba.rows());
  for (std::size_t i = 0; i < proba.rows(); ++i) {
    const auto row = proba.row(i);
    conf[i] = *std::max_element(row.begin(), row.end());
  }
  return conf;
}

MiaThreshold CalibrateMiaThreshold(std::span<const double> member_conf,
                                   std::span<const double> nonmember_conf) {
  if (member_conf.empty() || nonmember_conf.empty()) {
    throw Error(ErrorCode::kInvalidConfig,
                "MIA calibration needs members and non-members");
  }
  std::vector<std::pair<double, bool>> pooled;
  pooled.reserve(member_conf.size() + nonmember_conf.size());
  for (double c : member_conf) pooled.emplace_back(c, true);
  for (double c : nonmember_conf) pooled.emplace_back(c, false);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  const double total = static_cast<double>(pooled.size());
  const double nonmembers = static_cast<double>(nonmember_conf.size());
  MiaThreshold best{std::numeric_limits<double>::infinity(),
                    nonmembers / total};
  double members_flagged = 0.0;
  double nonmembers_flagged = 0.0;
  // Descending sweep, so a strict improvement test keeps the largest t.
  for (std::size_t i = 0; i < pooled.size();) {
    const double t = pooled[i].first;
    for (; i < pooled.size() && pooled[i].first == t; ++i) {
      (pooled[i].second ? members_flagged : nonmembers_flagged) += 1.0;
    }
    const double acc =
        (members_flagged + (nonmembers - nonmembers_flagged)) / total;
    if (acc > best.accuracy) best = {t, acc};
  }
  return best;
}

MiaResult MiaMemberRate(const ModelSpec& spec, const ParamVector& params,
                        const Batch& forget, const Batch& calib_member,
                        const Batch& calib_nonmember) {
  if (forget.empty()) {
    throw Error(ErrorCode::kEmptyForgetSet, "forget set is empty");
  }
  if (calib_member.empty() || calib_nonmember.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "calibration sets must be non-empty");
  }
  MiaResult r;
  r.calibration = CalibrateMiaThreshold(
      MaxConfidence(spec, params, calib_member.features),
      MaxConfidence(spec, params, calib_nonmember.features));
  const std::vector<double> conf =
      MaxConfidence(spec, params, forget.features);
  const auto flagged = std::count_if(conf.begin(), conf.end(), [&](double c) {
    return c >= r.calibration.threshold;
  });
  r.member_rate_percent =
      100.0 * static_cast<double>(flagged) / static_cast<double>(conf.size());
  return r;
}

double MiaEfficacyPaper(double member_rate_percent) {
  return 100.0 - member_rate_percent;
}

Association BiasCorrelation(std::span<const std::size_t> pred_labels,
                            std::span<const std::size_t> bias_attrs) {
  if (pred_labels.size() != bias_attrs.size() || pred_labels.size() < 2) {
    throw Error(ErrorCode::kShapeMismatch,
                "bias correlation needs two equal-length sequences of >= 2");
  }
  std::size_t rows = 0;
  std::size_t cols = 0;
  const std::vector<std::size_t> a = Compact(pred_labels, rows);
  const std::vector<std::size_t> b = Compact(bias_attrs, cols);
  if (rows < 2 || cols < 2) return {0.0, true};

  const double n = static_cast<double>(a.size());
  std::vector<double> table(rows * cols, 0.0);
  std::vector<double> row_sum(rows, 0.0);
  std::vector<double> col_sum(cols, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[a[i] * cols + b[i]] += 1.0;
    row_sum[a[i]] += 1.0;
    col_sum[b[i]] += 1.0;
  }
  double chi2 = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double expected = row_sum[r] * col_sum[c] / n;
      const double d = table[r * cols + c] - expected;
      chi2 += d * d / expected;
    }
  }
  const double k = static_cast<double>(std::min(rows, cols) - 1);
  return {std::clamp(std::sqrt(chi2 / (n * k)), 0.0, 1.0), false};
}

F1Result F1Macro(std::span<const std::size_t> pred_labels,
                 std::span<const std::size_t> true_labels,
                 std::size_t num_classes) {
  if (pred_labels.size() != true_labels.size() || num_classes == 0) {
    throw Error(ErrorCode::kShapeMismatch,
                "F1 needs equal-length label sequences and >= 1 class");
  }
  std::vector<double> tp(num_classes, 0.0), fp(num_classes, 0.0),
      fn(num_classes, 0.0);
  for (std::size_t i = 0; i < pred_labels.size(); ++i) {
    const std::size_t p = pred_labels[i];
    const std::size_t t = true_labels[i];
    if (p >= num_classes || t >= num_classes) {
      throw Error(ErrorCode::kIndexOutOfRange, "label beyond num_classes");
    }
    if (p == t) {
      tp[p] += 1.0;
    } else {
      fp[p] += 1.0;
      fn[t] += 1.0;
    }
  }
  F1Result out;
  double sum = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
    if (denom == 0.0) {
      ++out.absent_classes;
      continue;
    }
    sum += 2.0 * tp[c] / denom;
  }
  out.percent = 100.0 * sum / static_cast<double>(num_classes);
  return out;
}

double MeasureUt(const std::function<void()>& work) {
  const auto start = std::chrono::steady_clock::now();
  work();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

std::string MetricsJson(const MetricsRecord& m) {
  nlohmann::ordered_json j;
  j["f1_percent"] = m.f1_percent;
  j["rip_percent"] = m.rip_percent;
  j["mia_member_rate_percent"] = m.mia_member_rate_percent;
  j["mia_efficacy_paper_percent"] = m.mia_efficacy_paper_percent;
  j["bias_correlation"] = m.bias_correlation;
  j["ut_seconds"] = m.ut_seconds;
  return j.dump();
}

MetricsRecord MetricsFromJson(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    MetricsRecord m;
    m.f1_percent = j.at("f1_percent").get<double>();
    m.rip_percent = j.at("rip_percent").get<double>();
    m.mia_member_rate_percent = j.at("mia_member_rate_percent").get<double>();
    m.mia_efficacy_paper_percent =
        j.at("mia_efficacy_paper_percent").get<double>();
    m.bias_correlation = j.at("bias_correlation").get<double>();
    m.ut_seconds = j.at("ut_seconds").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

std::string MetricsCsvHeader() {
  std::string out;
  for (const char* col : kMetricsColumns) {
    if (!out.empty()) out += ',';
    out += col;
  }
  return out;
}

std::string MetricsCsvRow(const MetricsRecord& m) {
  return FormatDouble(m.f1_percent) + "," + FormatDouble(m.rip_percent) + "," +
         FormatDouble(m.mia_member_rate_percent) + "," +
         FormatDouble(m.mia_efficacy_paper_percent) + "," +
         FormatDouble(m.bias_correlation) + "," + FormatDouble(m.ut_seconds);
}

}  // namespace uib
