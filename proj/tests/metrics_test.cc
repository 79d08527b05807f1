#include "uib/metrics.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include "fixtures.h"
#include "gtest/gtest.h"
#include "oracles.h"
#include "uib/error.h"

namespace uib {
namespace {

using fixture::ErrorCodeMismatch;

TEST(RipTest, Examples) {
  EXPECT_NEAR(Rip(94.37, 97.85), -3.556463975472652, 1e-10);
  EXPECT_NEAR(Rip(86.79, 93.65), -7.325146823278163, 1e-10);
  EXPECT_EQ(Rip(50.0, 50.0), 0.0);
  EXPECT_GT(Rip(60.0, 50.0), 0.0);
  EXPECT_EQ(ErrorCodeMismatch(ErrorCode::kDivisionByZero, [] { Rip(10, 0); }),
            "");
}

// One feature, two classes, W = (2, -2), b = 0: confidence grows with |x|.
struct MiaModel {
  ModelSpec spec = fixture::LogReg(1, 2, 0.0);
  ParamVector params = ZeroParams(spec);
  MiaModel() {
    params.theta[0] = 2.0;
    params.theta[1] = -2.0;
  }
};

Batch Column(const std::vector<double>& xs) {
  return {Matrix(xs.size(), 1, std::vector<double>(xs)),
          std::vector<std::size_t>(xs.size(), 0)};
}

TEST(MiaTest, ConstantConfidenceFlagsNothing) {
  const MiaModel m;
  const ParamVector zero = ZeroParams(m.spec);
  const MiaResult r = MiaMemberRate(m.spec, zero, Column({1, 2, 3}),
                                    Column({1, 2}), Column({3, 4}));
  EXPECT_EQ(r.member_rate_percent, 0.0);
  EXPECT_TRUE(std::isinf(r.calibration.threshold));
  EXPECT_EQ(r.calibration.accuracy, 0.5);
}

TEST(MiaTest, SeparableCalibrationFlagsConfidentForgetRows) {
  const MiaModel m;
  const MiaResult r = MiaMemberRate(m.spec, m.params, Column({2.5, -3.0, 4.0}),
                                    Column({2.0, -2.0, 3.0}),
                                    Column({0.1, -0.2, 0.0}));
  EXPECT_EQ(r.member_rate_percent, 100.0);
  EXPECT_EQ(r.calibration.accuracy, 1.0);
  EXPECT_EQ(MiaEfficacyPaper(r.member_rate_percent), 0.0);
}

TEST(MiaTest, CalibrationMatchesExhaustiveSweep) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Prng rng(seed);
    std::vector<double> member(5 + rng.UniformIndex(40)),
        nonmember(5 + rng.UniformIndex(40));
    // Coarse values so ties between and within the sets are common.
    for (double& v : member) v = std::round(rng.Uniform(0.4, 1.0) * 20) / 20;
    for (double& v : nonmember) v = std::round(rng.Uniform(0.3, 0.9) * 20) / 20;
    const MiaThreshold got = CalibrateMiaThreshold(member, nonmember);
    const oracle::Sweep want = oracle::MiaThresholdSweep(member, nonmember);
    EXPECT_EQ(got.threshold, want.threshold) << seed;
    EXPECT_NEAR(got.accuracy, want.accuracy, 1e-9) << seed;
  }
}

TEST(MiaTest, RateAndEfficacySumToHundred) {
  const MiaModel m;
  Prng rng(3);
  std::vector<double> f(37), a(20), b(25);
  for (double& v : f) v = rng.Normal();
  for (double& v : a) v = 2.0 * rng.Normal();
  for (double& v : b) v = 0.5 * rng.Normal();
  const MiaResult r =
      MiaMemberRate(m.spec, m.params, Column(f), Column(a), Column(b));
  EXPECT_NEAR(r.member_rate_percent + MiaEfficacyPaper(r.member_rate_percent),
              100.0, 1e-12);
  EXPECT_DOUBLE_EQ(MiaEfficacyPaper(21.25), 78.75);
}

TEST(MiaTest, Errors) {
  const MiaModel m;
  EXPECT_EQ(ErrorCodeMismatch(ErrorCode::kEmptyForgetSet,
                              [&] {
                                MiaMemberRate(m.spec, m.params,
                                              Batch{Matrix(0, 1), {}},
                                              Column({1}), Column({2}));
                              }),
            "");
  EXPECT_EQ(ErrorCodeMismatch(ErrorCode::kInvalidConfig,
                              [&] {
                                MiaMemberRate(m.spec, m.params, Column({1}),
                                              Batch{Matrix(0, 1), {}},
                                              Column({2}));
                              }),
            "");
}

// Cramer's V from the chi-squared oracle.
double CramerOracle(const std::vector<std::size_t>& a,
                    const std::vector<std::size_t>& b) {
  const std::size_t ra = *std::max_element(a.begin(), a.end()) + 1;
  const std::size_t rb = *std::max_element(b.begin(), b.end()) + 1;
  std::vector<std::vector<double>> table(ra, std::vector<double>(rb, 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) table[a[i]][b[i]] += 1.0;
  std::erase_if(table, [](const std::vector<double>& row) {
    return std::all_of(row.begin(), row.end(), [](double v) { return v == 0; });
  });
  std::size_t cols = 0;
  for (std::size_t c = 0; c < rb; ++c) {
    bool used = false;
    for (const auto& row : table) used = used || row[c] > 0;
    if (!used) continue;
    for (auto& row : table) row[cols] = row[c];
    ++cols;
  }
  for (auto& row : table) row.resize(cols);
  const double k = static_cast<double>(std::min(table.size(), cols) - 1);
  return std::sqrt(oracle::ChiSquared(table) / (a.size() * k));
}

TEST(BiasCorrelationTest, MatchesChiSquaredOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Prng rng(seed);
    const std::size_t n = 50 + rng.UniformIndex(200);
    std::vector<std::size_t> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.UniformIndex(4);
      b[i] = rng.Uniform() < 0.6 ? a[i] % 3 : rng.UniformIndex(3) + 5;
    }
    const Association got = BiasCorrelation(a, b);
    EXPECT_FALSE(got.degenerate);
    EXPECT_NEAR(got.value, CramerOracle(a, b), 1e-10) << seed;
  }
}

TEST(BiasCorrelationTest, IdenticalAndIndependent) {
  const std::vector<std::size_t> a{0, 1, 2, 3, 0, 1, 2, 3};
  EXPECT_NEAR(BiasCorrelation(a, a).value, 1.0, 1e-12);
  Prng rng(4);
  std::vector<std::size_t> x(10000), y(10000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.UniformIndex(4);
    y[i] = rng.UniformIndex(4);
  }
  EXPECT_LT(BiasCorrelation(x, y).value, 0.05);
}

TEST(BiasCorrelationTest, InvariantToRelabeling) {
  Prng rng(5);
  std::vector<std::size_t> a(300), b(300);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.UniformIndex(4);
    b[i] = rng.Uniform() < 0.5 ? a[i] : rng.UniformIndex(4);
  }
  std::vector<std::size_t> a2 = a, b2 = b;
  const std::size_t perm_a[] = {3, 0, 1, 2};
  for (std::size_t& v : a2) v = perm_a[v] + 10;
  for (std::size_t& v : b2) v = 7 - v;
  EXPECT_NEAR(BiasCorrelation(a, b).value, BiasCorrelation(a2, b2).value,
              1e-12);
  EXPECT_NEAR(BiasCorrelation(a, b).value, BiasCorrelation(b, a).value, 1e-12);
}

TEST(BiasCorrelationTest, ConstantVariableIsDegenerate) {
  const std::vector<std::size_t> a{1, 1, 1, 1}, b{0, 1, 2, 3};
  const Association r = BiasCorrelation(a, b);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_THROW(BiasCorrelation(a, std::vector<std::size_t>{0, 1}), Error);
}

TEST(F1MacroTest, PerfectAndHandWorked) {
  const std::vector<std::size_t> t{0, 1, 2, 0, 1, 2};
  EXPECT_EQ(F1Macro(t, t, 3).percent, 100.0);
  // Class 0: TP=1, FP=1, FN=1 -> 0.5; class 1 scores 0; class 2 is perfect.
  const std::vector<std::size_t> pred{0, 0, 1, 2}, truth{0, 1, 0, 2};
  EXPECT_NEAR(F1Macro(pred, truth, 3).percent, 50.0, 1e-12);
  const std::vector<std::size_t> one_p{0, 1, 2}, one_t{1, 0, 2};
  EXPECT_NEAR(F1Macro(one_p, one_t, 3).percent, 100.0 / 3.0, 1e-12);
}

TEST(F1MacroTest, AbsentClassesScoreZero) {
  const std::vector<std::size_t> t{0, 1, 0, 1};
  const F1Result r = F1Macro(t, t, 4);
  EXPECT_EQ(r.absent_classes, 2u);
  EXPECT_EQ(r.percent, 50.0);
}

TEST(F1MacroTest, MatchesConfusionOracleAndIsPermutationInvariant) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Prng rng(seed);
    const std::size_t n = 20 + rng.UniformIndex(300), c = 2 + rng.UniformIndex(5);
    std::vector<std::size_t> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = rng.UniformIndex(c);
      p[i] = rng.Uniform() < 0.7 ? t[i] : rng.UniformIndex(c);
    }
    const double got = F1Macro(p, t, c).percent;
    EXPECT_NEAR(got, oracle::MacroF1FromConfusion(p, t, c), 1e-9);
    const std::vector<std::size_t> perm = RandomPermutation(n, rng);
    std::vector<std::size_t> p2(n), t2(n);
    for (std::size_t i = 0; i < n; ++i) {
      p2[i] = p[perm[i]];
      t2[i] = t[perm[i]];
    }
    EXPECT_NEAR(F1Macro(p2, t2, c).percent, got, 1e-12);
  }
}

TEST(MeasureUtTest, NoOpAndSleep) {
  EXPECT_LT(MeasureUt([] {}), 0.01);
  const double slept = MeasureUt(
      [] { std::this_thread::sleep_for(std::chrono::milliseconds(100)); });
  EXPECT_GE(slept, 0.1);
  EXPECT_LT(slept, 0.5);
}

TEST(MetricsRecordTest, JsonAndCsvRoundTrip) {
  const MetricsRecord m{86.75, -3.5575319622012, 21.25, 78.75, 0.1234567890123,
                        0.1};
  const MetricsRecord back = MetricsFromJson(MetricsJson(m));
  EXPECT_EQ(back.f1_percent, m.f1_percent);
  EXPECT_EQ(back.rip_percent, m.rip_percent);
  EXPECT_EQ(back.bias_correlation, m.bias_correlation);
  EXPECT_EQ(back.ut_seconds, m.ut_seconds);
  EXPECT_EQ(MetricsCsvHeader(),
            "f1_percent,rip_percent,mia_member_rate_percent,"
            "mia_efficacy_paper_percent,bias_correlation,ut_seconds");
  const std::string row = MetricsCsvRow(m);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 5);
  EXPECT_EQ(std::stod(row.substr(row.rfind(',') + 1)), 0.1);
  EXPECT_THROW(MetricsFromJson("{\"f1_percent\": 1}"), Error);
}

}  // namespace
}  // namespace uib
