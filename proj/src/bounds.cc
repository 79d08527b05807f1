#include "uib/bounds.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "uib/error.h"

namespace uib {
namespace {

double Mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double SampleVariance(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

double LowerBoundFromMarginal(const ModelSpec& spec, const ParamVector& params,
                              const Batch& batch,
                              const std::vector<double>& marginal) {
  ValidateBatch(spec, batch);
  const Matrix proba = PredictProba(spec, params, batch.features);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::size_t y = batch.labels[i];
    total += std::log(proba(i, y)) - std::log(marginal[y]);
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace

double KlGaussianDiag(const GaussianDiag& p, const GaussianDiag& q) {
  if (p.mean.size() != q.mean.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "gaussian dimensions " + std::to_string(p.mean.size()) +
                    " and " + std::to_string(q.mean.size()) + " differ");
  }
  if (!(p.std > 0.0) || !(q.std > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "gaussian std must be > 0");
  }
  const double log_ratio = std::log(q.std / p.std);
  const double var_p = p.std * p.std;
  const double two_var_q = 2.0 * q.std * q.std;
  double kl = 0.0;
  for (std::size_t i = 0; i < p.mean.size(); ++i) {
    const double d = p.mean[i] - q.mean[i];
    kl += log_ratio + (var_p + d * d) / two_var_q - 0.5;
  }
  return kl;
}

double UibThetaTerm(const Vector& theta_after, const Vector& prior_mean,
                    const VariationalScales& scales) {
  return KlGaussianDiag({theta_after, scales.sigma_p},
                        {prior_mean, scales.sigma_q});
}

double UibRTerm(const Vector& reg_grad, const VariationalScales& scales) {
  return KlGaussianDiag({reg_grad, scales.sigma_p},
                        {Vector::Zeros(reg_grad.size()), scales.sigma_q});
}

IndexSets DefaultIndexSets(std::size_t num_layers) {
  IndexSets sets;
  sets.s_theta = {std::max<std::size_t>(num_layers, 2) - 1};
  for (std::size_t l = 1; l <= num_layers; ++l) sets.s_r.push_back(l);
  return sets;
}

void ValidateIndexSets(const IndexSets& sets, std::size_t num_layers) {
  if (sets.s_theta.empty()) {
    throw Error(ErrorCode::kInvalidIndexSets, "S_theta must be non-empty");
  }
  for (std::size_t l : sets.s_theta) {
    if (l < 1 || l > num_layers) {
      throw Error(ErrorCode::kInvalidIndexSets,
                  "S_theta layer " + std::to_string(l) + " out of [1, " +
                      std::to_string(num_layers) + "]");
    }
  }
  for (std::size_t l : sets.s_r) {
    if (l < 1 || l > num_layers) {
      throw Error(ErrorCode::kInvalidIndexSets,
                  "S_R layer " + std::to_string(l) + " out of [1, " +
                      std::to_string(num_layers) + "]");
    }
  }
  const std::size_t top =
      *std::max_element(sets.s_theta.begin(), sets.s_theta.end());
  for (std::size_t l = top + 1; l <= num_layers; ++l) {
    if (std::find(sets.s_r.begin(), sets.s_r.end(), l) == sets.s_r.end()) {
      throw Error(ErrorCode::kInvalidIndexSets,
                  "S_R must contain layer " + std::to_string(l) +
                      " above max(S_theta) = " + std::to_string(top));
    }
  }
}

double UpperBoundTotal(std::span<const double> theta_terms,
                       std::span<const double> r_terms, const IndexSets& sets) {
  if (theta_terms.size() != r_terms.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "theta and R term lists differ in length");
  }
  ValidateIndexSets(sets, theta_terms.size());
  double total = 0.0;
  for (std::size_t l : sets.s_theta) total += theta_terms[l - 1];
  for (std::size_t l : sets.s_r) total += r_terms[l - 1];
  return total;
}

double LowerBoundY(const ModelSpec& spec, const ParamVector& params,
                   const Batch& batch) {
  ValidateBatch(spec, batch);
  std::vector<double> marginal(spec.num_classes, 0.0);
  for (std::size_t y : batch.labels) marginal[y] += 1.0;
  for (double& m : marginal) m /= static_cast<double>(batch.size());
  return LowerBoundFromMarginal(spec, params, batch, marginal);
}

double LowerBoundY(const ModelSpec& spec, const ParamVector& params,
                   const Batch& batch,
                   std::span<const std::size_t> reference_labels) {
  std::vector<double> marginal(spec.num_classes, 1.0);
  for (std::size_t y : reference_labels) {
    if (y >= spec.num_classes) {
      throw Error(ErrorCode::kShapeMismatch, "reference label out of range");
    }
    marginal[y] += 1.0;
  }
  const double total =
      static_cast<double>(reference_labels.size() + spec.num_classes);
  for (double& m : marginal) m /= total;
  return LowerBoundFromMarginal(spec, params, batch, marginal);
}

void DiscreteJoint::Validate() const {
  double s = 0.0;
  for (double v : pmf.values()) {
    if (!(v >= 0.0)) {
      throw Error(ErrorCode::kInvalidDistribution, "negative pmf entry");
    }
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-12) {
    throw Error(ErrorCode::kInvalidDistribution,
                "pmf sums to " + std::to_string(s));
  }
}

Vector DiscreteJoint::MarginalX() const {
  Vector px(pmf.rows());
  for (std::size_t x = 0; x < pmf.rows(); ++x) {
    for (std::size_t y = 0; y < pmf.cols(); ++y) px[x] += pmf(x, y);
  }
  return px;
}

Vector DiscreteJoint::MarginalY() const {
  Vector py(pmf.cols());
  for (std::size_t x = 0; x < pmf.rows(); ++x) {
    for (std::size_t y = 0; y < pmf.cols(); ++y) py[y] += pmf(x, y);
  }
  return py;
}

double ExactMiDiscrete(const DiscreteJoint& joint) {
  joint.Validate();
  const Vector px = joint.MarginalX();
  const Vector py = joint.MarginalY();
  double mi = 0.0;
  for (std::size_t x = 0; x < joint.pmf.rows(); ++x) {
    for (std::size_t y = 0; y < joint.pmf.cols(); ++y) {
      const double p = joint.pmf(x, y);
      if (p > 0.0) mi += p * std::log(p / (px[x] * py[y]));
    }
  }
  return std::max(mi, 0.0);
}

double ExpectedConditionalKl(const Vector& parent_pmf, const Matrix& channel,
                             const Vector& q) {
  if (channel.rows() != parent_pmf.size() || channel.cols() != q.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "channel shape does not match the pmfs");
  }
  double total = 0.0;
  for (std::size_t a = 0; a < channel.rows(); ++a) {
    if (parent_pmf[a] <= 0.0) continue;
    double kl = 0.0;
    for (std::size_t b = 0; b < channel.cols(); ++b) {
      const double p = channel(a, b);
      if (p <= 0.0) continue;
      if (q[b] <= 0.0) {
        throw Error(ErrorCode::kInvalidDistribution,
                    "q has zero mass where the channel does not");
      }
      kl += p * std::log(p / q[b]);
    }
    total += parent_pmf[a] * kl;
  }
  return total;
}

NwjEstimate NwjLowerBound(std::span<const double> critic_on_joint,
                          std::span<const double> critic_on_marginal) {
  if (critic_on_joint.empty() || critic_on_marginal.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "NWJ estimate needs samples");
  }
  std::vector<double> expo(critic_on_marginal.size());
  for (std::size_t i = 0; i < expo.size(); ++i) {
    expo[i] = std::exp(critic_on_marginal[i] - 1.0);
  }
  const double mean_g = Mean(critic_on_joint);
  const double mean_e = Mean(expo);
  NwjEstimate est;
  est.value = mean_g - mean_e;
  est.standard_error = std::sqrt(
      SampleVariance(critic_on_joint, mean_g) /
          static_cast<double>(critic_on_joint.size()) +
      SampleVariance(expo, mean_e) / static_cast<double>(expo.size()));
  return est;
}

NwjEstimate NwjLowerBound(const Critic& g,
                          std::span<const SamplePair> joint_samples,
                          std::span<const SamplePair> marginal_samples) {
  std::vector<double> joint(joint_samples.size());
  std::vector<double> marginal(marginal_samples.size());
  for (std::size_t i = 0; i < joint.size(); ++i) {
    joint[i] = g(joint_samples[i].first, joint_samples[i].second);
  }
  for (std::size_t i = 0; i < marginal.size(); ++i) {
    marginal[i] = g(marginal_samples[i].first, marginal_samples[i].second);
  }
  return NwjLowerBound(joint, marginal);
}

}  // namespace uib
