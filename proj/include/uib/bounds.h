#ifndef UIB_BOUNDS_H_
#define UIB_BOUNDS_H_

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "uib/model.h"
#include "uib/numerics.h"

namespace uib {

// Isotropic Gaussian N(mean, std^2 I).
struct GaussianDiag {
  Vector mean;
  double std = 1.0;
};

// Closed-form KL(p || q) for isotropic Gaussians:
//   sum_i log(sq/sp) + (sp^2 + (mp_i - mq_i)^2) / (2 sq^2) - 1/2
// Throws kDimensionMismatch when the means differ in length.
double KlGaussianDiag(const GaussianDiag& p, const GaussianDiag& q);

// Standard deviations of the variational families: P around the realized
// quantity uses sigma_p, the reference Q uses sigma_q.
struct VariationalScales {
  double sigma_p = 0.1;
  double sigma_q = 1.0;
};

// KL( N(theta_after, sigma_p) || N(prior_mean, sigma_q) ) for one layer. The
// prior mean is the layer slice the update started from.
double UibThetaTerm(const Vector& theta_after, const Vector& prior_mean,
                    const VariationalScales& scales);
// KL( N(reg_grad, sigma_p) || N(0, sigma_q) ) for one layer.
double UibRTerm(const Vector& reg_grad, const VariationalScales& scales);

// Layer index sets, 1-based. Valid when s_theta is non-empty and, with
// l = max(s_theta), every layer in [l+1, L] is in s_r.
struct IndexSets {
  std::vector<std::size_t> s_theta;
  std::vector<std::size_t> s_r;
};

// s_theta = {max(L-1, 1)}, s_r = [1, L].
IndexSets DefaultIndexSets(std::size_t num_layers);
// Throws kInvalidIndexSets.
void ValidateIndexSets(const IndexSets& sets, std::size_t num_layers);

// sum_{l in s_theta} theta_terms[l-1] + sum_{l in s_r} r_terms[l-1].
double UpperBoundTotal(std::span<const double> theta_terms,
                       std::span<const double> r_terms, const IndexSets& sets);

struct BoundEstimate {
  std::vector<double> uib_theta_terms;  // per layer
  std::vector<double> uib_r_terms;      // per layer
  double upper_total = 0.0;
  double lower_y = 0.0;
  double objective = 0.0;  // -lower_y + beta * upper_total
};

// Mean over the batch of log p_model(y|x) - log q(y), where q is the label
// marginal of the batch itself. The additive constant of the variational
// bound is omitted.
double LowerBoundY(const ModelSpec& spec, const ParamVector& params,
                   const Batch& batch);
// As above with q estimated from `reference_labels` under add-one smoothing,
// so labels absent from the reference keep a finite log-probability.
double LowerBoundY(const ModelSpec& spec, const ParamVector& params,
                   const Batch& batch,
                   std::span<const std::size_t> reference_labels);

// Joint pmf over a finite X x Y grid.
struct DiscreteJoint {
  Matrix pmf;

  // Throws kInvalidDistribution unless entries are >= 0 and sum to 1 within
  // 1e-12.
  void Validate() const;
  Vector MarginalX() const;
  Vector MarginalY() const;
};

// sum p(x,y) log[p(x,y) / (p(x) p(y))] with 0 log 0 = 0.
double ExactMiDiscrete(const DiscreteJoint& joint);

// E_{parent ~ parent_pmf}[ KL( channel(parent, .) || q ) ]: the discrete form
// of a per-layer bound term, with `channel` a row-stochastic matrix.
double ExpectedConditionalKl(const Vector& parent_pmf, const Matrix& channel,
                             const Vector& q);

struct NwjEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

// E_joint[g] - E_{product of marginals}[exp(g - 1)] from critic values
// evaluated on joint samples and on product-of-marginal samples.
NwjEstimate NwjLowerBound(std::span<const double> critic_on_joint,
                          std::span<const double> critic_on_marginal);

using Critic = std::function<double(std::size_t, std::size_t)>;
using SamplePair = std::pair<std::size_t, std::size_t>;

NwjEstimate NwjLowerBound(const Critic& g,
                          std::span<const SamplePair> joint_samples,
                          std::span<const SamplePair> marginal_samples);

}  // namespace uib

#endif  // UIB_BOUNDS_H_
