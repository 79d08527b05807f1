#ifndef UIB_METRICS_H_
#define UIB_METRICS_H_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "uib/model.h"

namespace uib {

// Relative F1 change against the retrain oracle, in percent and signed.
// Throws kDivisionByZero when f1_retrain is 0.
double Rip(double f1_unlearn, double f1_retrain);

// Max-softmax confidence of every row.
std::vector<double> MaxConfidence(const ModelSpec& spec,
                                  const ParamVector& params,
                                  const Matrix& features);

struct MiaThreshold {
  double threshold = 0.0;  // flagged as member when confidence >= threshold
  double accuracy = 0.0;   // pooled accuracy on the calibration sets
};

// Picks t among the distinct calibration confidences and +infinity to
// maximize pooled member/non-member accuracy; ties go to the largest t.
MiaThreshold CalibrateMiaThreshold(std::span<const double> member_conf,
                                   std::span<const double> nonmember_conf);

struct MiaResult {
  double member_rate_percent = 0.0;
  MiaThreshold calibration;
};

// Percentage of forget rows whose confidence reaches the calibrated
// threshold. Throws kEmptyForgetSet for an empty forget batch and
// kInvalidConfig for an empty calibration set.
MiaResult MiaMemberRate(const ModelSpec& spec, const ParamVector& params,
                        const Batch& forget, const Batch& calib_member,
                        const Batch& calib_nonmember);

double MiaEfficacyPaper(double member_rate_percent);

struct Association {
  double value = 0.0;
  bool degenerate = false;  // a variable was constant; value is 0
};

// Cramer's V of the contingency table of two categorical sequences.
Association BiasCorrelation(std::span<const std::size_t> pred_labels,
                            std::span<const std::size_t> bias_attrs);

struct F1Result {
  double percent = 0.0;
  // Classes absent from both predictions and truth; each scores 0.
  std::size_t absent_classes = 0;
};

F1Result F1Macro(std::span<const std::size_t> pred_labels,
                 std::span<const std::size_t> true_labels,
                 std::size_t num_classes);

// Wall-clock seconds of `work` on a monotone clock.
double MeasureUt(const std::function<void()>& work);

struct MetricsRecord {
  double f1_percent = 0.0;
  double rip_percent = 0.0;
  double mia_member_rate_percent = 0.0;
  double mia_efficacy_paper_percent = 0.0;
  double bias_correlation = 0.0;
  double ut_seconds = 0.0;
};

// Column order of the CSV form, also the key set of the JSON form.
inline constexpr const char* kMetricsColumns[] = {
    "f1_percent",       "rip_percent",      "mia_member_rate_percent",
    "mia_efficacy_paper_percent", "bias_correlation", "ut_seconds"};

std::string MetricsJson(const MetricsRecord& m);
MetricsRecord MetricsFromJson(const std::string& text);
std::string MetricsCsvHeader();
std::string MetricsCsvRow(const MetricsRecord& m);

}  // namespace uib

#endif  // UIB_METRICS_H_
