#ifndef UIB_UNLEARN_H_
#define UIB_UNLEARN_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uib/bounds.h"
#include "uib/data.h"
#include "uib/error.h"
#include "uib/model.h"
#include "uib/numerics.h"

namespace uib {

// A twice-differentiable scalar function of the flat parameter vector.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::size_t dim() const = 0;
  virtual double Value(const Vector& theta) const = 0;
  virtual Vector Gradient(const Vector& theta) const = 0;
  virtual Vector Hvp(const Vector& theta, const Vector& v) const = 0;
};

// 0.5 theta' A theta - b' theta, with A symmetric.
class QuadraticObjective : public Objective {
 public:
  QuadraticObjective(Matrix a, Vector b);

  std::size_t dim() const override { return b_.size(); }
  double Value(const Vector& theta) const override;
  Vector Gradient(const Vector& theta) const override;
  Vector Hvp(const Vector& theta, const Vector& v) const override;

 private:
  Matrix a_;
  Vector b_;
};

struct WeightedBatch {
  Batch batch;
  double weight = 1.0;  // applied to every per-sample loss; may be negative
};

// sum_t weight_t * sum_{i in batch_t} CE_i(theta), plus (l2/2)||theta||^2
// when with_l2 is set.
class ClassifierObjective : public Objective {
 public:
  ClassifierObjective(ModelSpec spec, std::vector<WeightedBatch> terms,
                      bool with_l2);

  // The model Loss on `batch`: mean cross-entropy plus the l2 term.
  static ClassifierObjective MeanLoss(const ModelSpec& spec,
                                      const Batch& batch);
  // weight * sum of per-sample cross-entropy, no l2.
  static ClassifierObjective DataSum(const ModelSpec& spec, const Batch& batch,
                                     double weight);

  std::size_t dim() const override { return spec_.ParamCount(); }
  double Value(const Vector& theta) const override;
  Vector Gradient(const Vector& theta) const override;
  Vector Hvp(const Vector& theta, const Vector& v) const override;

 private:
  ModelSpec spec_;
  std::vector<WeightedBatch> terms_;
  bool with_l2_;
};

using HvpOracle = std::function<Vector(const Vector&)>;

struct LissaConfig {
  std::size_t depth = 5000;
  double damping = 0.01;
  double scale = 10.0;
  std::size_t repeats = 1;
  double tol = 1e-7;
};

// 10 for LogReg, 25 for the MLP.
double DefaultLissaScale(Architecture a);

struct LissaResult {
  Vector x;
  std::size_t iterations = 0;  // summed over repeats
  bool converged = false;
};

// Neumann-series recursion est_0 = v, est_j = v + (I - H') est_{j-1} on
// H' = (H + damping I) / scale, returning est / scale averaged over
// `repeats` runs. A run stops early once ||est_j - est_{j-1}|| <= tol ||v||,
// which bounds ||(H + damping I) x - v|| by the same amount. Throws
// kDivergence when an iterate's norm exceeds 1e3 ||v||.
LissaResult InverseHvpLissa(const HvpOracle& hvp, const Vector& v,
                            const LissaConfig& cfg);

// (H + damping I)^{-1} v by CgSolve.
Vector InverseHvpCg(const HvpOracle& hvp, const Vector& v, double damping,
                    double tol, int max_iter);

enum class SolverKind { kLissa, kCg };

std::string_view SolverKindName(SolverKind k);
SolverKind ParseSolverKind(std::string_view name);

struct SolverConfig {
  SolverKind kind = SolverKind::kCg;
  LissaConfig lissa;
  double cg_damping = 0.01;
  double cg_tol = 1e-8;
  int cg_max_iter = 2000;
  // On divergence, non-convergence or non-finite iterates the damping is
  // multiplied by 10 (raised to at least 1e-3) and the solve retried.
  int max_retries = 3;

  double damping() const {
    return kind == SolverKind::kLissa ? lissa.damping : cg_damping;
  }
};

struct SolveStats {
  double damping_used = 0.0;
  int retries = 0;
};

Vector SolveInverseHvp(const HvpOracle& hvp, const Vector& v,
                       const SolverConfig& solver, SolveStats* stats = nullptr);

// -H^{-1} grad(pattern), H the Hessian of `train` at theta.
Vector InfluenceUpParams(const Objective& train, const Objective& pattern,
                         const Vector& theta, const SolverConfig& solver);
// Model form: train is the model Loss on `train`, the pattern term is the
// summed per-sample cross-entropy of `pattern`.
Vector InfluenceUpParams(const ModelSpec& spec, const ParamVector& params,
                         const Batch& train, const Batch& pattern,
                         const SolverConfig& solver);

// theta - H^{-1}(grad z_tilde - grad z); the input is not modified.
Vector UnlearnIfStep(const Objective& train, const Vector& theta,
                     const Objective& z, const Objective& z_tilde,
                     const SolverConfig& solver);
// Model form: H from the model Loss on `train`, and each pattern term is
// (1/n_train) * summed cross-entropy, i.e. its share of the training loss.
// z_tilde may be empty (the samples are dropped instead of replaced).
ParamVector UnlearnIfStep(const ModelSpec& spec, const ParamVector& params,
                          const Batch& train, const Batch& z,
                          const Batch& z_tilde, const SolverConfig& solver);

// Gradient of the regularizer ||grad_theta l(z, theta)||^2, which is
// 2 * H_z * grad_z.
Vector UibRegularizerGrad(const Objective& z, const Vector& theta);
// Model form with l(z) the mean cross-entropy over z (no l2).
Vector UibRegularizerGrad(const ModelSpec& spec, const ParamVector& params,
                          const Batch& z);

struct SampleOutcome {
  std::vector<std::size_t> indices;
  bool fallback = false;  // candidate set was empty; uniform over all indices
};

// k draws with replacement from C = {i : |inf_i| >= tau * max |inf|}, with
// probability proportional to |inf_i|.
SampleOutcome SampleParamsCategorical(const Vector& influence, std::size_t k,
                                      double tau, Prng& rng);
// Index i kept independently with probability
// min(1, |inf_i| / (tau * max |inf|)). Sorted.
std::vector<std::size_t> SampleParamsBernoulli(const Vector& influence,
                                               double tau, Prng& rng);

enum class SamplerKind { kNone, kCategorical, kBernoulli };

std::string_view SamplerKindName(SamplerKind k);
SamplerKind ParseSamplerKind(std::string_view name);

struct UibConfig {
  double beta = 0.1;
  double reg_strength = 0.01;  // lambda
  double threshold = 0.1;      // tau
  std::size_t samples_k = 64;
  std::size_t iterations = 1;
  SamplerKind sampler = SamplerKind::kNone;
  VariationalScales scales;
  // Unset means DefaultIndexSets(L).
  std::optional<IndexSets> index_sets;
  // Treat the whole parameter vector as one layer.
  bool single_slice = false;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct IterationRecord {
  std::size_t iteration = 0;  // 1-based
  std::size_t layer = 0;      // 1-based
  std::size_t pattern = 0;    // 0-based
  double uib_theta_term = 0.0;
  double uib_r_term = 0.0;
  std::size_t updated_coordinates = 0;
  bool sampler_fallback = false;
  std::string params_digest;
};

struct UnlearnResult {
  ParamVector params_after;
  std::vector<IterationRecord> per_iteration;
  BoundEstimate bounds;
  double wall_time_seconds = 0.0;
  std::size_t sampler_fallbacks = 0;
  double max_damping_used = 0.0;
};

// Raised when a solve fails mid-run; carries the log up to the failure.
class UnlearnFailure : public Error {
 public:
  UnlearnFailure(const Error& cause, UnlearnResult partial);
  const UnlearnResult& partial() const { return partial_; }

 private:
  UnlearnResult partial_;
};

// Called after every completed outer iteration with its parameters.
using IterationObserver =
    std::function<void(std::size_t iteration, const ParamVector& params)>;

// Influence-function unlearning with the information-bottleneck
// regularizer. The request is removed along a path of `iterations` equal
// steps: step t moves the training data from (t-1)/T to t/T of the way from
// D to D \ delta-D. Within a step, for each layer slice and each pattern,
// the slice is updated by the slice-Hessian inverse applied to that
// pattern's share of the gradient change (optionally masked to sampled
// coordinates), then moved against lambda / T times the regularizer
// gradient, and the two bound terms are recorded. Hessians are those of the
// working objective at the start of the step, evaluated at the current
// parameters. From step 2 on, the first pattern's update of each slice also
// carries the gradient of the working objective itself, a Newton correction
// that pulls the iterate back onto the path before it advances; the trained
// params0 are taken to lie on the path, so step 1 is the plain update.
UnlearnResult RunUibIf(const ModelSpec& spec, const ParamVector& params0,
                       const Dataset& train, const UnlearnRequest& request,
                       const UibConfig& cfg, const SolverConfig& solver,
                       const IterationObserver& observer = {});

// JSON with the config echo, per-update bound terms, wall time and the
// content digest of params_after.
std::string UnlearnResultJson(const UnlearnResult& result, const UibConfig& cfg,
                              const SolverConfig& solver);

// Post-hoc bound terms for any before/after pair: theta terms per layer
// against the starting slices, R terms zero (no regularizer was applied).
BoundEstimate EstimateBounds(const ModelSpec& spec, const ParamVector& before,
                             const ParamVector& after, const Batch& remaining,
                             const UibConfig& cfg);

TrainResult BaselineRetrain(const ModelSpec& spec, const Batch& train_minus,
                            const TrainConfig& cfg);
// Plain SGD from params0 for cfg.epochs; no Newton refinement.
TrainResult BaselineFineTune(const ModelSpec& spec, const ParamVector& params0,
                             const Batch& train_minus, const TrainConfig& cfg);

struct AscentResult {
  ParamVector params;
  std::vector<double> forget_loss_trace;  // before and after each step
};

// `steps` ascent steps of size lr on the mean forget-set cross-entropy.
AscentResult BaselineGradientAscent(const ModelSpec& spec,
                                    const ParamVector& params0,
                                    const Batch& forget, std::size_t steps,
                                    double lr);

// params0 + N(0, s_i^2) per coordinate, s_i = noise_scale /
// sqrt(fisher_i + 1e-8), fisher from FisherDiag on train_minus.
ParamVector BaselineFisherScrub(const ModelSpec& spec,
                                const ParamVector& params0,
                                const Batch& train_minus, double noise_scale,
                                Prng& rng);

}  // namespace uib

#endif  // UIB_UNLEARN_H_
