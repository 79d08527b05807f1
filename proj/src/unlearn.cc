#include "uib/unlearn.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <utility>

#include <json.hpp>

namespace uib {
namespace {

Vector Pad(const Vector& slice, const LayerSlice& at, std::size_t dim) {
  Vector full(dim);
  for (std::size_t i = 0; i < at.length; ++i) full[at.start + i] = slice[i];
  return full;
}

Vector Restrict(const Vector& full, const LayerSlice& at) {
  Vector out(at.length);
  for (std::size_t i = 0; i < at.length; ++i) out[i] = full[at.start + i];
  return out;
}

void RequireFinite(const Vector& v, const char* what) {
  if (!v.all_finite()) {
    throw Error(ErrorCode::kNonFinite, std::string(what) + " is not finite");
  }
}

bool Retryable(ErrorCode code) {
  return code == ErrorCode::kDivergence ||
         code == ErrorCode::kNonConvergence || code == ErrorCode::kNonFinite;
}

Batch EmptyBatchLike(const ModelSpec& spec) {
  return {Matrix(0, spec.input_dim), {}};
}

}  // namespace

QuadraticObjective::QuadraticObjective(Matrix a, Vector b)
    : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() != b_.size() || a_.cols() != b_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "quadratic A must be n x n");
  }
}

double QuadraticObjective::Value(const Vector& theta) const {
  return 0.5 * Dot(theta, a_.Multiply(theta)) - Dot(b_, theta);
}

Vector QuadraticObjective::Gradient(const Vector& theta) const {
  return a_.Multiply(theta) - b_;
}

Vector QuadraticObjective::Hvp(const Vector&, const Vector& v) const {
  return a_.Multiply(v);
}

ClassifierObjective::ClassifierObjective(ModelSpec spec,
                                         std::vector<WeightedBatch> terms,
                                         bool with_l2)
    : spec_(std::move(spec)), terms_(std::move(terms)), with_l2_(with_l2) {
  spec_.Validate();
  for (const WeightedBatch& t : terms_) {
    if (!t.batch.empty()) ValidateBatch(spec_, t.batch);
  }
}

ClassifierObjective ClassifierObjective::MeanLoss(const ModelSpec& spec,
                                                  const Batch& batch) {
  ValidateBatch(spec, batch);
  return ClassifierObjective(
      spec, {{batch, 1.0 / static_cast<double>(batch.size())}}, true);
}

ClassifierObjective ClassifierObjective::DataSum(const ModelSpec& spec,
                                                 const Batch& batch,
                                                 double weight) {
  return ClassifierObjective(spec, {{batch, weight}}, false);
}

double ClassifierObjective::Value(const Vector& theta) const {
  double total = 0.0;
  for (const WeightedBatch& t : terms_) {
    total += WeightedDataLoss(spec_, theta, t.batch, t.weight);
  }
  if (with_l2_) total += 0.5 * spec_.l2_strength * Dot(theta, theta);
  return total;
}

Vector ClassifierObjective::Gradient(const Vector& theta) const {
  Vector g(theta.size());
  for (const WeightedBatch& t : terms_) {
    AccumulateDataGrad(spec_, theta, t.batch, t.weight, g);
  }
  if (with_l2_) Axpy(spec_.l2_strength, theta, g);
  return g;
}

Vector ClassifierObjective::Hvp(const Vector& theta, const Vector& v) const {
  Vector hv(theta.size());
  for (const WeightedBatch& t : terms_) {
    AccumulateDataHvp(spec_, theta, t.batch, t.weight, v, hv);
  }
  if (with_l2_) Axpy(spec_.l2_strength, v, hv);
  return hv;
}

LissaResult InverseHvpLissa(const HvpOracle& hvp, const Vector& v,
                            const LissaConfig& cfg) {
  if (cfg.depth == 0 || cfg.repeats == 0 || !(cfg.scale > 0.0) ||
      cfg.damping < 0.0) {
    throw Error(ErrorCode::kInvalidConfig,
                "lissa needs depth >= 1, repeats >= 1, scale > 0, damping >= 0");
  }
  RequireFinite(v, "lissa right-hand side");
  const double v_norm = Norm2(v);
  const double blowup = 1e3 * v_norm;
  LissaResult result;
  result.x = Vector(v.size());
  result.converged = true;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    Vector est = v;
    bool converged = false;
    for (std::size_t j = 1; j <= cfg.depth; ++j) {
      Vector h_est = hvp(est);
      Axpy(cfg.damping, est, h_est);
      // est_next = v + est - (H + damping I) est / scale
      Vector next = v + est;
      Axpy(-1.0 / cfg.scale, h_est, next);
      RequireFinite(next, "lissa iterate");
      const double step = Norm2(next - est);
      est = std::move(next);
      ++result.iterations;
      if (Norm2(est) > blowup) {
        throw Error(ErrorCode::kDivergence,
                    "lissa iterate norm exceeded 1e3 x ||v|| at depth " +
                        std::to_string(j));
      }
      if (step <= cfg.tol * v_norm) {
        converged = true;
        break;
      }
    }
    result.converged = result.converged && converged;
    Axpy(1.0 / cfg.scale, est, result.x);
  }
  result.x *= 1.0 / static_cast<double>(cfg.repeats);
  return result;
}

double DefaultLissaScale(Architecture a) {
  return a == Architecture::kMlp ? 25.0 : 10.0;
}

Vector InverseHvpCg(const HvpOracle& hvp, const Vector& v, double damping,
                    double tol, int max_iter) {
  if (damping < 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "damping must be >= 0");
  }
  const LinearOperator damped = [&](const Vector& x) {
    Vector hx = hvp(x);
    Axpy(damping, x, hx);
    return hx;
  };
  return CgSolve(damped, v, tol, max_iter).x;
}

std::string_view SolverKindName(SolverKind k) {
  return k == SolverKind::kLissa ? "lissa" : "cg";
}

SolverKind ParseSolverKind(std::string_view name) {
  if (name == "lissa") return SolverKind::kLissa;
  if (name == "cg") return SolverKind::kCg;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown solver '" + std::string(name) + "'");
}

Vector SolveInverseHvp(const HvpOracle& hvp, const Vector& v,
                       const SolverConfig& solver, SolveStats* stats) {
  double damping = solver.damping();
  for (int attempt = 0;; ++attempt) {
    try {
      Vector x;
      if (solver.kind == SolverKind::kLissa) {
        LissaConfig cfg = solver.lissa;
        cfg.damping = damping;
        x = InverseHvpLissa(hvp, v, cfg).x;
      } else {
        x = InverseHvpCg(hvp, v, damping, solver.cg_tol, solver.cg_max_iter);
      }
      if (stats != nullptr) {
        stats->damping_used = damping;
        stats->retries = attempt;
      }
      return x;
    } catch (const Error& e) {
      if (!Retryable(e.code()) || attempt >= solver.max_retries) throw;
      damping = std::max(10.0 * damping, 1e-3);
    }
  }
}

Vector InfluenceUpParams(const Objective& train, const Objective& pattern,
                         const Vector& theta, const SolverConfig& solver) {
  const Vector g = pattern.Gradient(theta);
  const HvpOracle hvp = [&](const Vector& v) { return train.Hvp(theta, v); };
  return -SolveInverseHvp(hvp, g, solver);
}

Vector InfluenceUpParams(const ModelSpec& spec, const ParamVector& params,
                         const Batch& train, const Batch& pattern,
                         const SolverConfig& solver) {
  ValidateBatch(spec, pattern);
  return InfluenceUpParams(ClassifierObjective::MeanLoss(spec, train),
                           ClassifierObjective::DataSum(spec, pattern, 1.0),
                           params.theta, solver);
}

Vector UnlearnIfStep(const Objective& train, const Vector& theta,
                     const Objective& z, const Objective& z_tilde,
                     const SolverConfig& solver) {
  const Vector diff = z_tilde.Gradient(theta) - z.Gradient(theta);
  const HvpOracle hvp = [&](const Vector& v) { return train.Hvp(theta, v); };
  return theta - SolveInverseHvp(hvp, diff, solver);
}

ParamVector UnlearnIfStep(const ModelSpec& spec, const ParamVector& params,
                          const Batch& train, const Batch& z,
                          const Batch& z_tilde, const SolverConfig& solver) {
  ValidateBatch(spec, train);
  const double w = 1.0 / static_cast<double>(train.size());
  ParamVector out = params;
  out.theta = UnlearnIfStep(ClassifierObjective::MeanLoss(spec, train),
                            params.theta,
                            ClassifierObjective::DataSum(spec, z, w),
                            ClassifierObjective::DataSum(spec, z_tilde, w),
                            solver);
  return out;
}

Vector UibRegularizerGrad(const Objective& z, const Vector& theta) {
  return 2.0 * z.Hvp(theta, z.Gradient(theta));
}

Vector UibRegularizerGrad(const ModelSpec& spec, const ParamVector& params,
                          const Batch& z) {
  ValidateBatch(spec, z);
  return UibRegularizerGrad(
      ClassifierObjective::DataSum(spec, z,
                                   1.0 / static_cast<double>(z.size())),
      params.theta);
}

SampleOutcome SampleParamsCategorical(const Vector& influence, std::size_t k,
                                      double tau, Prng& rng) {
  if (influence.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "empty influence vector");
  }
  RequireFinite(influence, "influence");
  const double top = NormInf(influence);
  std::vector<std::size_t> candidates;
  double mass = 0.0;
  if (top > 0.0) {
    for (std::size_t i = 0; i < influence.size(); ++i) {
      if (std::abs(influence[i]) >= tau * top) {
        candidates.push_back(i);
        mass += std::abs(influence[i]);
      }
    }
  }
  SampleOutcome out;
  out.indices.reserve(k);
  if (candidates.empty() || !(mass > 0.0)) {
    out.fallback = true;
    for (std::size_t j = 0; j < k; ++j) {
      out.indices.push_back(rng.UniformIndex(influence.size()));
    }
    return out;
  }
  std::vector<double> p(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    p[c] = std::abs(influence[candidates[c]]) / mass;
  }
  for (std::size_t j = 0; j < k; ++j) {
    out.indices.push_back(candidates[DrawCategorical(p, rng)]);
  }
  return out;
}

std::vector<std::size_t> SampleParamsBernoulli(const Vector& influence,
                                               double tau, Prng& rng) {
  RequireFinite(influence, "influence");
  if (!(tau > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "bernoulli threshold must be > 0");
  }
  const double top = NormInf(influence);
  std::vector<std::size_t> kept;
  if (!(top > 0.0)) return kept;
  for (std::size_t i = 0; i < influence.size(); ++i) {
    const double p = std::min(1.0, std::abs(influence[i]) / (tau * top));
    // Always consume one draw so the stream position depends only on size.
    if (rng.Uniform() < p) kept.push_back(i);
  }
  return kept;
}

std::string_view SamplerKindName(SamplerKind k) {
  switch (k) {
    case SamplerKind::kNone: return "none";
    case SamplerKind::kCategorical: return "categorical";
    case SamplerKind::kBernoulli: return "bernoulli";
  }
  return "none";
}

SamplerKind ParseSamplerKind(std::string_view name) {
  if (name == "none") return SamplerKind::kNone;
  if (name == "categorical") return SamplerKind::kCategorical;
  if (name == "bernoulli") return SamplerKind::kBernoulli;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown sampler '" + std::string(name) + "'");
}

void UibConfig::Validate() const {
  if (!(beta >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "beta < 0");
  if (!(reg_strength >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "reg_strength < 0");
  }
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "threshold must be in (0, 1]");
  }
  if (iterations == 0) {
    throw Error(ErrorCode::kInvalidConfig, "iterations must be >= 1");
  }
  if (sampler == SamplerKind::kCategorical && samples_k == 0) {
    throw Error(ErrorCode::kInvalidConfig, "samples_k must be >= 1");
  }
  if (!(scales.sigma_p > 0.0) || !(scales.sigma_q > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "sigma_p and sigma_q must be > 0");
  }
}

UnlearnFailure::UnlearnFailure(const Error& cause, UnlearnResult partial)
    : Error(cause.code(), std::string("unlearning aborted after ") +
                              std::to_string(partial.per_iteration.size()) +
                              " updates: " + cause.what()),
      partial_(std::move(partial)) {}

namespace {

// One pattern of the request as the pair of batches it swaps: `before` is
// how the covered rows look with all earlier patterns applied, `after` adds
// this pattern's replacement (or is empty when rows are dropped).
struct PatternSwap {
  Batch before;
  Batch after;
};

std::vector<PatternSwap> BuildSwaps(const ModelSpec& spec, const Dataset& train,
                                    const UnlearnRequest& request) {
  std::vector<PatternSwap> swaps;
  if (request.mode == RequestMode::kRandomPoints) {
    if (!request.sample_ids.empty()) {
      swaps.push_back({train.Subset(request.sample_ids).ToBatch(),
                       EmptyBatchLike(spec)});
    }
    return swaps;
  }
  Dataset work = train;
  for (const PatternPoint& p : request.patterns) {
    Dataset next = ApplyReplacement(work, p);
    swaps.push_back({work.Subset(p.sample_ids).ToBatch(),
                     next.Subset(p.sample_ids).ToBatch()});
    work = std::move(next);
  }
  return swaps;
}

// Training objective with each swap a fraction `s` of the way done.
ClassifierObjective WorkingObjective(const ModelSpec& spec, const Batch& base,
                                     const std::vector<PatternSwap>& swaps,
                                     double s) {
  const double w = 1.0 / static_cast<double>(base.size());
  std::vector<WeightedBatch> terms{{base, w}};
  if (s > 0.0) {
    for (const PatternSwap& sw : swaps) {
      terms.push_back({sw.before, -s * w});
      if (!sw.after.empty()) terms.push_back({sw.after, s * w});
    }
  }
  return ClassifierObjective(spec, std::move(terms), true);
}

std::vector<LayerSlice> UpdateSlices(const ParamVector& params,
                                     bool single_slice) {
  if (single_slice) return {LayerSlice{0, params.theta.size()}};
  return params.layers;
}

BoundEstimate FinishBounds(const ModelSpec& spec, const ParamVector& after,
                           const Batch& remaining, const UibConfig& cfg,
                           std::vector<double> theta_terms,
                           std::vector<double> r_terms) {
  const IndexSets sets =
      cfg.index_sets.value_or(DefaultIndexSets(theta_terms.size()));
  BoundEstimate b;
  b.upper_total = UpperBoundTotal(theta_terms, r_terms, sets);
  b.uib_theta_terms = std::move(theta_terms);
  b.uib_r_terms = std::move(r_terms);
  b.lower_y = LowerBoundY(spec, after, remaining);
  b.objective = -b.lower_y + cfg.beta * b.upper_total;
  return b;
}

}  // namespace

UnlearnResult RunUibIf(const ModelSpec& spec, const ParamVector& params0,
                       const Dataset& train, const UnlearnRequest& request,
                       const UibConfig& cfg, const SolverConfig& solver,
                       const IterationObserver& observer) {
  const auto start = std::chrono::steady_clock::now();
  spec.Validate();
  params0.Validate();
  cfg.Validate();
  if (params0.theta.size() != spec.ParamCount()) {
    throw Error(ErrorCode::kShapeMismatch, "parameters do not match the spec");
  }
  const Batch base = train.ToBatch();
  ValidateBatch(spec, base);

  const std::vector<LayerSlice> slices = UpdateSlices(params0, cfg.single_slice);
  const std::size_t num_layers = slices.size();
  ValidateIndexSets(cfg.index_sets.value_or(DefaultIndexSets(num_layers)),
                    num_layers);

  UnlearnResult result;
  result.params_after = params0;
  std::vector<double> theta_terms(num_layers, 0.0);
  std::vector<double> r_terms(num_layers, 0.0);
  const Batch remaining = RemainingDataset(train, request).ToBatch();

  if (request.empty()) {
    result.bounds = FinishBounds(spec, result.params_after, remaining, cfg,
                                 theta_terms, r_terms);
    result.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return result;
  }

  const std::vector<PatternSwap> swaps = BuildSwaps(spec, train, request);
  const std::size_t dim = params0.theta.size();
  const double n = static_cast<double>(base.size());
  const double steps = static_cast<double>(cfg.iterations);
  Prng rng(cfg.seed);
  Vector& theta = result.params_after.theta;

  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    const ClassifierObjective working =
        WorkingObjective(spec, base, swaps, static_cast<double>(t - 1) / steps);
    for (std::size_t l = 0; l < num_layers; ++l) {
      const LayerSlice at = slices[l];
      for (std::size_t p = 0; p < swaps.size(); ++p) {
        const Vector prior = Restrict(theta, at);

        // This pattern's share of the gradient change over one step.
        Vector g_full(dim);
        AccumulateDataGrad(spec, theta, swaps[p].after, 1.0 / (n * steps),
                           g_full);
        AccumulateDataGrad(spec, theta, swaps[p].before, -1.0 / (n * steps),
                           g_full);
        // Corrector: undo the drift left by the previous linear step.
        if (t > 1 && p == 0) g_full += working.Gradient(theta);
        const Vector g = Restrict(g_full, at);
        const Vector theta_now = theta;
        const HvpOracle hvp = [&](const Vector& v) {
          return Restrict(working.Hvp(theta_now, Pad(v, at, dim)), at);
        };

        Vector delta;
        SolveStats stats;
        try {
          delta = SolveInverseHvp(hvp, g, solver, &stats);
        } catch (const Error& e) {
          result.wall_time_seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            start)
                  .count();
          throw UnlearnFailure(e, std::move(result));
        }
        result.max_damping_used =
            std::max(result.max_damping_used, stats.damping_used);

        // Coordinates of the slice allowed to move in this update.
        std::vector<char> mask(at.length, 1);
        IterationRecord rec;
        if (cfg.sampler != SamplerKind::kNone) {
          std::vector<std::size_t> picked;
          if (cfg.sampler == SamplerKind::kCategorical) {
            SampleOutcome s = SampleParamsCategorical(delta, cfg.samples_k,
                                                      cfg.threshold, rng);
            rec.sampler_fallback = s.fallback;
            if (s.fallback) ++result.sampler_fallbacks;
            picked = std::move(s.indices);
          } else {
            picked = SampleParamsBernoulli(delta, cfg.threshold, rng);
          }
          std::fill(mask.begin(), mask.end(), 0);
          for (std::size_t i : picked) mask[i] = 1;
        }

        for (std::size_t i = 0; i < at.length; ++i) {
          if (mask[i]) theta[at.start + i] -= delta[i];
        }

        Vector reg_step(at.length);
        if (cfg.reg_strength > 0.0) {
          const Vector r = Restrict(
              UibRegularizerGrad(
                  ClassifierObjective::DataSum(
                      spec, swaps[p].before,
                      1.0 / static_cast<double>(swaps[p].before.size())),
                  theta),
              at);
          for (std::size_t i = 0; i < at.length; ++i) {
            if (!mask[i]) continue;
            reg_step[i] = cfg.reg_strength / steps * r[i];
            theta[at.start + i] -= reg_step[i];
          }
        }
        if (!theta.all_finite()) {
          throw UnlearnFailure(
              Error(ErrorCode::kNonFinite, "parameters became non-finite"),
              std::move(result));
        }

        rec.iteration = t;
        rec.layer = l + 1;
        rec.pattern = p;
        rec.uib_theta_term =
            UibThetaTerm(Restrict(theta, at), prior, cfg.scales);
        rec.uib_r_term = UibRTerm(reg_step, cfg.scales);
        rec.updated_coordinates = static_cast<std::size_t>(
            std::count(mask.begin(), mask.end(), static_cast<char>(1)));
        rec.params_digest = ContentDigest(theta.span());
        theta_terms[l] += rec.uib_theta_term;
        r_terms[l] += rec.uib_r_term;
        result.per_iteration.push_back(std::move(rec));
      }
    }
    if (observer) observer(t, result.params_after);
  }

  result.bounds = FinishBounds(spec, result.params_after, remaining, cfg,
                               std::move(theta_terms), std::move(r_terms));
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

std::string UnlearnResultJson(const UnlearnResult& result, const UibConfig& cfg,
                              const SolverConfig& solver) {
  nlohmann::ordered_json config;
  config["beta"] = cfg.beta;
  config["reg_strength"] = cfg.reg_strength;
  config["threshold"] = cfg.threshold;
  config["samples_k"] = cfg.samples_k;
  config["iterations"] = cfg.iterations;
  config["sampler"] = SamplerKindName(cfg.sampler);
  config["sigma_p"] = cfg.scales.sigma_p;
  config["sigma_q"] = cfg.scales.sigma_q;
  if (cfg.index_sets) {
    config["s_theta"] = cfg.index_sets->s_theta;
    config["s_r"] = cfg.index_sets->s_r;
  }
  config["single_slice"] = cfg.single_slice;
  config["seed"] = cfg.seed;
  config["solver"] = SolverKindName(solver.kind);
  config["damping"] = solver.damping();

  nlohmann::ordered_json updates = nlohmann::ordered_json::array();
  for (const IterationRecord& r : result.per_iteration) {
    nlohmann::ordered_json u;
    u["iteration"] = r.iteration;
    u["layer"] = r.layer;
    u["pattern"] = r.pattern;
    u["uib_theta_term"] = r.uib_theta_term;
    u["uib_r_term"] = r.uib_r_term;
    u["updated_coordinates"] = r.updated_coordinates;
    u["sampler_fallback"] = r.sampler_fallback;
    u["params_digest"] = r.params_digest;
    updates.push_back(std::move(u));
  }

  nlohmann::ordered_json j;
  j["config"] = std::move(config);
  j["per_iteration"] = std::move(updates);
  j["uib_theta_terms"] = result.bounds.uib_theta_terms;
  j["uib_r_terms"] = result.bounds.uib_r_terms;
  j["upper_total"] = result.bounds.upper_total;
  j["lower_y"] = result.bounds.lower_y;
  j["objective"] = result.bounds.objective;
  j["sampler_fallbacks"] = result.sampler_fallbacks;
  j["max_damping_used"] = result.max_damping_used;
  j["wall_time_seconds"] = result.wall_time_seconds;
  j["params_digest"] = ContentDigest(result.params_after.theta.span());
  return j.dump(2);
}

BoundEstimate EstimateBounds(const ModelSpec& spec, const ParamVector& before,
                             const ParamVector& after, const Batch& remaining,
                             const UibConfig& cfg) {
  if (before.theta.size() != after.theta.size()) {
    throw Error(ErrorCode::kShapeMismatch, "parameter vectors differ in size");
  }
  const std::vector<LayerSlice> slices = UpdateSlices(before, cfg.single_slice);
  std::vector<double> theta_terms;
  std::vector<double> r_terms;
  for (const LayerSlice& at : slices) {
    theta_terms.push_back(UibThetaTerm(Restrict(after.theta, at),
                                       Restrict(before.theta, at), cfg.scales));
    r_terms.push_back(UibRTerm(Vector(at.length), cfg.scales));
  }
  return FinishBounds(spec, after, remaining, cfg, std::move(theta_terms),
                      std::move(r_terms));
}

TrainResult BaselineRetrain(const ModelSpec& spec, const Batch& train_minus,
                            const TrainConfig& cfg) {
  return TrainSgd(spec, train_minus, cfg);
}

TrainResult BaselineFineTune(const ModelSpec& spec, const ParamVector& params0,
                             const Batch& train_minus, const TrainConfig& cfg) {
  TrainConfig plain = cfg;
  plain.refine_grad_tol = 0.0;
  return ContinueSgd(spec, params0, train_minus, plain);
}

AscentResult BaselineGradientAscent(const ModelSpec& spec,
                                    const ParamVector& params0,
                                    const Batch& forget, std::size_t steps,
                                    double lr) {
  ValidateBatch(spec, forget);
  if (!(lr >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "ascent step size must be >= 0");
  }
  const double w = 1.0 / static_cast<double>(forget.size());
  AscentResult out;
  out.params = params0;
  Vector& theta = out.params.theta;
  out.forget_loss_trace.push_back(WeightedDataLoss(spec, theta, forget, w));
  for (std::size_t s = 0; s < steps; ++s) {
    Vector g(theta.size());
    AccumulateDataGrad(spec, theta, forget, w, g);
    Axpy(lr, g, theta);
    if (!theta.all_finite()) {
      throw Error(ErrorCode::kDivergence,
                  "gradient ascent diverged at step " + std::to_string(s + 1));
    }
    out.forget_loss_trace.push_back(WeightedDataLoss(spec, theta, forget, w));
  }
  return out;
}

ParamVector BaselineFisherScrub(const ModelSpec& spec,
                                const ParamVector& params0,
                                const Batch& train_minus, double noise_scale,
                                Prng& rng) {
  if (!(noise_scale >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "noise scale must be >= 0");
  }
  const Vector fisher = FisherDiag(spec, params0, train_minus);
  ParamVector out = params0;
  for (std::size_t i = 0; i < fisher.size(); ++i) {
    const double s = noise_scale / std::sqrt(fisher[i] + 1e-8);
    out.theta[i] += s * rng.Normal();
  }
  return out;
}

}  // namespace uib
