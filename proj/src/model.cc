#include "uib/model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "uib/error.h"

namespace uib {
namespace {

// Per-call scratch buffers for the sample kernels.
struct Scratch {
  std::vector<double> logits, probs, g_out, r_logits, q;
  std::vector<double> hidden, slope, g_hidden, r_hidden, r_g_hidden;

  explicit Scratch(const ModelSpec& spec)
      : logits(spec.num_classes),
        probs(spec.num_classes),
        g_out(spec.num_classes),
        r_logits(spec.num_classes),
        q(spec.num_classes),
        hidden(spec.hidden_width),
        slope(spec.hidden_width),
        g_hidden(spec.hidden_width),
        r_hidden(spec.hidden_width),
        r_g_hidden(spec.hidden_width) {}
};

// Softmax in place over `logits` into `probs`; returns log-sum-exp.
double Softmax(const std::vector<double>& logits, std::vector<double>& probs) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    probs[c] = std::exp(logits[c] - m);
    s += probs[c];
  }
  for (double& p : probs) p /= s;
  return m + std::log(s);
}

// Cross-entropy of one sample. When `grad` is set, adds weight * gradient;
// when `v` and `hv` are set, adds weight * (Hessian of the sample loss) * v.
double LogRegSample(const ModelSpec& spec, const double* theta, const double* x,
                    std::size_t y, double weight, double* grad,
                    const double* v, double* hv, Scratch& s) {
  const std::size_t d = spec.input_dim;
  const std::size_t num_c = spec.num_classes;
  const double* w = theta;
  const double* b = theta + num_c * d;
  for (std::size_t c = 0; c < num_c; ++c) {
    double z = b[c];
    const double* wc = w + c * d;
    for (std::size_t k = 0; k < d; ++k) z += wc[k] * x[k];
    s.logits[c] = z;
  }
  const double lse = Softmax(s.logits, s.probs);
  const double loss = lse - s.logits[y];

  if (grad != nullptr) {
    for (std::size_t c = 0; c < num_c; ++c) {
      const double g = weight * (s.probs[c] - (c == y ? 1.0 : 0.0));
      double* gw = grad + c * d;
      for (std::size_t k = 0; k < d; ++k) gw[k] += g * x[k];
      grad[num_c * d + c] += g;
    }
  }
  if (v != nullptr && hv != nullptr) {
    double pr = 0.0;
    for (std::size_t c = 0; c < num_c; ++c) {
      double r = v[num_c * d + c];
      const double* vc = v + c * d;
      for (std::size_t k = 0; k < d; ++k) r += vc[k] * x[k];
      s.r_logits[c] = r;
      pr += s.probs[c] * r;
    }
    for (std::size_t c = 0; c < num_c; ++c) {
      const double q = weight * s.probs[c] * (s.r_logits[c] - pr);
      double* hc = hv + c * d;
      for (std::size_t k = 0; k < d; ++k) hc[k] += q * x[k];
      hv[num_c * d + c] += q;
    }
  }
  return loss;
}

double MlpSample(const ModelSpec& spec, const double* theta, const double* x,
                 std::size_t y, double weight, double* grad, const double* v,
                 double* hv, Scratch& s) {
  const std::size_t d = spec.input_dim;
  const std::size_t h = spec.hidden_width;
  const std::size_t num_c = spec.num_classes;
  const std::size_t off_b1 = h * d;
  const std::size_t off_w2 = off_b1 + h;
  const std::size_t off_b2 = off_w2 + num_c * h;
  const double* w1 = theta;
  const double* b1 = theta + off_b1;
  const double* w2 = theta + off_w2;
  const double* b2 = theta + off_b2;

  for (std::size_t j = 0; j < h; ++j) {
    double a = b1[j];
    const double* wj = w1 + j * d;
    for (std::size_t k = 0; k < d; ++k) a += wj[k] * x[k];
    s.hidden[j] = std::tanh(a);
    s.slope[j] = 1.0 - s.hidden[j] * s.hidden[j];
  }
  for (std::size_t c = 0; c < num_c; ++c) {
    double z = b2[c];
    const double* wc = w2 + c * h;
    for (std::size_t j = 0; j < h; ++j) z += wc[j] * s.hidden[j];
    s.logits[c] = z;
  }
  const double lse = Softmax(s.logits, s.probs);
  const double loss = lse - s.logits[y];

  const bool want_hvp = v != nullptr && hv != nullptr;
  if (grad == nullptr && !want_hvp) return loss;

  for (std::size_t c = 0; c < num_c; ++c) {
    s.g_out[c] = s.probs[c] - (c == y ? 1.0 : 0.0);
  }
  for (std::size_t j = 0; j < h; ++j) {
    double gh = 0.0;
    for (std::size_t c = 0; c < num_c; ++c) gh += w2[c * h + j] * s.g_out[c];
    s.g_hidden[j] = gh;
  }

  if (grad != nullptr) {
    for (std::size_t c = 0; c < num_c; ++c) {
      const double g = weight * s.g_out[c];
      double* gw = grad + off_w2 + c * h;
      for (std::size_t j = 0; j < h; ++j) gw[j] += g * s.hidden[j];
      grad[off_b2 + c] += g;
    }
    for (std::size_t j = 0; j < h; ++j) {
      const double g1 = weight * s.g_hidden[j] * s.slope[j];
      double* gw = grad + j * d;
      for (std::size_t k = 0; k < d; ++k) gw[k] += g1 * x[k];
      grad[off_b1 + j] += g1;
    }
  }

  if (want_hvp) {
    const double* v_w1 = v;
    const double* v_b1 = v + off_b1;
    const double* v_w2 = v + off_w2;
    const double* v_b2 = v + off_b2;
    // Forward R-pass.
    for (std::size_t j = 0; j < h; ++j) {
      double ra = v_b1[j];
      const double* vj = v_w1 + j * d;
      for (std::size_t k = 0; k < d; ++k) ra += vj[k] * x[k];
      s.r_hidden[j] = s.slope[j] * ra;
    }
    double pr = 0.0;
    for (std::size_t c = 0; c < num_c; ++c) {
      double rz = v_b2[c];
      const double* vc = v_w2 + c * h;
      const double* wc = w2 + c * h;
      for (std::size_t j = 0; j < h; ++j) {
        rz += vc[j] * s.hidden[j] + wc[j] * s.r_hidden[j];
      }
      s.r_logits[c] = rz;
      pr += s.probs[c] * rz;
    }
    // Backward R-pass.
    for (std::size_t c = 0; c < num_c; ++c) {
      s.q[c] = s.probs[c] * (s.r_logits[c] - pr);  // R(g_out)
    }
    for (std::size_t c = 0; c < num_c; ++c) {
      double* hc = hv + off_w2 + c * h;
      for (std::size_t j = 0; j < h; ++j) {
        hc[j] += weight * (s.q[c] * s.hidden[j] + s.g_out[c] * s.r_hidden[j]);
      }
      hv[off_b2 + c] += weight * s.q[c];
    }
    for (std::size_t j = 0; j < h; ++j) {
      double r_gh = 0.0;
      for (std::size_t c = 0; c < num_c; ++c) {
        r_gh += v_w2[c * h + j] * s.g_out[c] + w2[c * h + j] * s.q[c];
      }
      const double r_slope = -2.0 * s.hidden[j] * s.r_hidden[j];
      const double r_g1 =
          weight * (r_gh * s.slope[j] + s.g_hidden[j] * r_slope);
      double* hj = hv + j * d;
      for (std::size_t k = 0; k < d; ++k) hj[k] += r_g1 * x[k];
      hv[off_b1 + j] += r_g1;
    }
  }
  return loss;
}

double SampleKernel(const ModelSpec& spec, const double* theta,
                    const double* x, std::size_t y, double weight,
                    double* grad, const double* v, double* hv, Scratch& s) {
  if (spec.architecture == Architecture::kLogReg) {
    return LogRegSample(spec, theta, x, y, weight, grad, v, hv, s);
  }
  return MlpSample(spec, theta, x, y, weight, grad, v, hv, s);
}

void CheckTheta(const ModelSpec& spec, const Vector& theta) {
  if (theta.size() != spec.ParamCount()) {
    throw Error(ErrorCode::kShapeMismatch,
                "parameter vector has length " + std::to_string(theta.size()) +
                    ", model expects " + std::to_string(spec.ParamCount()));
  }
}

double L2Norm2(const Vector& theta) { return Dot(theta, theta); }

}  // namespace

std::string_view ArchitectureName(Architecture a) {
  return a == Architecture::kLogReg ? "logreg" : "mlp";
}

Architecture ParseArchitecture(std::string_view name) {
  if (name == "logreg") return Architecture::kLogReg;
  if (name == "mlp") return Architecture::kMlp;
  throw Error(ErrorCode::kValidationError,
              "unknown architecture '" + std::string(name) + "'");
}

void ModelSpec::Validate() const {
  if (input_dim < 1) {
    throw Error(ErrorCode::kValidationError, "input_dim must be >= 1");
  }
  if (num_classes < 2) {
    throw Error(ErrorCode::kValidationError, "num_classes must be >= 2");
  }
  if (!(l2_strength >= 0.0) || !std::isfinite(l2_strength)) {
    throw Error(ErrorCode::kValidationError, "l2_strength must be >= 0");
  }
  if (architecture == Architecture::kMlp && hidden_width < 1) {
    throw Error(ErrorCode::kValidationError, "mlp hidden_width must be >= 1");
  }
}

std::size_t ModelSpec::ParamCount() const {
  if (architecture == Architecture::kLogReg) {
    return num_classes * input_dim + num_classes;
  }
  return hidden_width * input_dim + hidden_width +
         num_classes * hidden_width + num_classes;
}

std::size_t ModelSpec::LayerCount() const {
  return architecture == Architecture::kLogReg ? 1 : 2;
}

std::vector<LayerSlice> LayerLayout(const ModelSpec& spec) {
  if (spec.architecture == Architecture::kLogReg) {
    return {{0, spec.ParamCount()}};
  }
  const std::size_t first = spec.hidden_width * spec.input_dim +
                            spec.hidden_width;
  return {{0, first}, {first, spec.ParamCount() - first}};
}

Vector ParamVector::Slice(std::size_t l) const {
  const LayerSlice& s = layers.at(l);
  return Vector(std::vector<double>(
      theta.begin() + static_cast<std::ptrdiff_t>(s.start),
      theta.begin() + static_cast<std::ptrdiff_t>(s.start + s.length)));
}

void ParamVector::SetSlice(std::size_t l, const Vector& values) {
  const LayerSlice& s = layers.at(l);
  if (values.size() != s.length) {
    throw Error(ErrorCode::kShapeMismatch, "slice length mismatch");
  }
  std::copy(values.begin(), values.end(),
            theta.begin() + static_cast<std::ptrdiff_t>(s.start));
}

void ParamVector::Validate() const {
  if (layers.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "parameter vector has no layers");
  }
  std::size_t next = 0;
  for (const LayerSlice& s : layers) {
    if (s.start != next || s.length == 0) {
      throw Error(ErrorCode::kShapeMismatch,
                  "layer offsets do not partition theta");
    }
    next += s.length;
  }
  if (next != theta.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "layer offsets do not cover theta");
  }
  if (!theta.all_finite()) {
    throw Error(ErrorCode::kNonFinite, "theta is not finite");
  }
}

ParamVector ZeroParams(const ModelSpec& spec) {
  spec.Validate();
  return {Vector::Zeros(spec.ParamCount()), LayerLayout(spec)};
}

ParamVector InitParams(const ModelSpec& spec, std::uint64_t seed) {
  ParamVector p = ZeroParams(spec);
  Prng rng(seed);
  for (double& v : p.theta) v = rng.Uniform(-0.05, 0.05);
  return p;
}

Batch Batch::Subset(const std::vector<std::size_t>& rows) const {
  std::vector<double> values;
  values.reserve(rows.size() * features.cols());
  std::vector<std::size_t> sub_labels;
  sub_labels.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= size()) {
      throw Error(ErrorCode::kIndexOutOfRange, "batch row out of range");
    }
    auto row = features.row(r);
    values.insert(values.end(), row.begin(), row.end());
    sub_labels.push_back(labels[r]);
  }
  return {Matrix(rows.size(), features.cols(), std::move(values)),
          std::move(sub_labels)};
}

void ValidateBatch(const ModelSpec& spec, const Batch& batch) {
  if (batch.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "batch is empty");
  }
  if (batch.features.rows() != batch.labels.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "feature rows and label count differ");
  }
  if (batch.features.cols() != spec.input_dim) {
    throw Error(ErrorCode::kShapeMismatch,
                "feature dimension " + std::to_string(batch.features.cols()) +
                    " does not match input_dim " +
                    std::to_string(spec.input_dim));
  }
  for (std::size_t y : batch.labels) {
    if (y >= spec.num_classes) {
      throw Error(ErrorCode::kShapeMismatch, "label index out of range");
    }
  }
}

double WeightedDataLoss(const ModelSpec& spec, const Vector& theta,
                        const Batch& batch, double weight) {
  CheckTheta(spec, theta);
  if (batch.empty()) return 0.0;
  ValidateBatch(spec, batch);
  Scratch s(spec);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    total += SampleKernel(spec, theta.span().data(), batch.features.row(i).data(),
                          batch.labels[i], 1.0, nullptr, nullptr, nullptr, s);
  }
  return weight * total;
}

void AccumulateDataGrad(const ModelSpec& spec, const Vector& theta,
                        const Batch& batch, double weight, Vector& out) {
  CheckTheta(spec, theta);
  CheckTheta(spec, out);
  if (batch.empty()) return;
  ValidateBatch(spec, batch);
  Scratch s(spec);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    SampleKernel(spec, theta.span().data(), batch.features.row(i).data(),
                 batch.labels[i], weight, out.span().data(), nullptr, nullptr,
                 s);
  }
}

void AccumulateDataHvp(const ModelSpec& spec, const Vector& theta,
                       const Batch& batch, double weight, const Vector& v,
                       Vector& out) {
  CheckTheta(spec, theta);
  CheckTheta(spec, v);
  CheckTheta(spec, out);
  if (batch.empty()) return;
  ValidateBatch(spec, batch);
  Scratch s(spec);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    SampleKernel(spec, theta.span().data(), batch.features.row(i).data(),
                 batch.labels[i], weight, nullptr, v.span().data(),
                 out.span().data(), s);
  }
}

double Loss(const ModelSpec& spec, const ParamVector& params,
            const Batch& batch) {
  ValidateBatch(spec, batch);
  const double n = static_cast<double>(batch.size());
  return WeightedDataLoss(spec, params.theta, batch, 1.0 / n) +
         0.5 * spec.l2_strength * L2Norm2(params.theta);
}

Vector Grad(const ModelSpec& spec, const ParamVector& params,
            const Batch& batch) {
  ValidateBatch(spec, batch);
  Vector g = spec.l2_strength * params.theta;
  AccumulateDataGrad(spec, params.theta, batch,
                     1.0 / static_cast<double>(batch.size()), g);
  return g;
}

Vector Hvp(const ModelSpec& spec, const ParamVector& params, const Batch& batch,
           const Vector& v) {
  ValidateBatch(spec, batch);
  CheckTheta(spec, v);
  Vector out = spec.l2_strength * v;
  AccumulateDataHvp(spec, params.theta, batch,
                    1.0 / static_cast<double>(batch.size()), v, out);
  return out;
}

Vector FisherDiag(const ModelSpec& spec, const ParamVector& params,
                  const Batch& batch) {
  ValidateBatch(spec, batch);
  CheckTheta(spec, params.theta);
  const std::size_t p = spec.ParamCount();
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  Vector fisher(p);
  std::vector<double> g(p);
  Scratch s(spec);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::fill(g.begin(), g.end(), 0.0);
    SampleKernel(spec, params.theta.span().data(), batch.features.row(i).data(),
                 batch.labels[i], 1.0, g.data(), nullptr, nullptr, s);
    for (std::size_t k = 0; k < p; ++k) fisher[k] += inv_n * g[k] * g[k];
  }
  for (double& f : fisher) f += spec.l2_strength;
  return fisher;
}

Matrix PredictProba(const ModelSpec& spec, const ParamVector& params,
                    const Matrix& features) {
  CheckTheta(spec, params.theta);
  if (features.cols() != spec.input_dim) {
    throw Error(ErrorCode::kShapeMismatch,
                "feature dimension does not match input_dim");
  }
  Matrix out(features.rows(), spec.num_classes);
  Scratch s(spec);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    SampleKernel(spec, params.theta.span().data(), features.row(i).data(), 0,
                 1.0, nullptr, nullptr, nullptr, s);
    std::copy(s.probs.begin(), s.probs.end(), out.row(i).begin());
  }
  return out;
}

std::vector<std::size_t> Predict(const ModelSpec& spec,
                                 const ParamVector& params,
                                 const Matrix& features) {
  const Matrix proba = PredictProba(spec, params, features);
  std::vector<std::size_t> out(proba.rows());
  for (std::size_t i = 0; i < proba.rows(); ++i) {
    auto row = proba.row(i);
    out[i] = static_cast<std::size_t>(
        std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

TrainResult ContinueSgd(const ModelSpec& spec, const ParamVector& start,
                        const Batch& data, const TrainConfig& cfg) {
  spec.Validate();
  ValidateBatch(spec, data);
  if (cfg.batch_size < 1) {
    throw Error(ErrorCode::kValidationError, "batch_size must be >= 1");
  }
  if (!(cfg.learning_rate > 0.0)) {
    throw Error(ErrorCode::kValidationError, "learning_rate must be > 0");
  }
  TrainResult result{start, {}};
  result.loss_trace.push_back(Loss(spec, result.params, data));
  Prng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  Vector& theta = result.params.theta;
  const std::size_t n = data.size();
  Scratch s(spec);
  std::vector<double> g(spec.ParamCount());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<std::size_t> order = RandomPermutation(n, rng);
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      const double w = 1.0 / static_cast<double>(end - begin);
      for (std::size_t k = 0; k < g.size(); ++k) {
        g[k] = spec.l2_strength * theta[k];
      }
      for (std::size_t b = begin; b < end; ++b) {
        const std::size_t i = order[b];
        SampleKernel(spec, theta.span().data(), data.features.row(i).data(),
                     data.labels[i], w, g.data(), nullptr, nullptr, s);
      }
      for (std::size_t k = 0; k < g.size(); ++k) {
        theta[k] -= cfg.learning_rate * g[k];
      }
    }
    if (!theta.all_finite()) {
      throw Error(ErrorCode::kDivergence,
                  "parameters became non-finite in epoch " +
                      std::to_string(epoch));
    }
    const double loss = Loss(spec, result.params, data);
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kDivergence, "training loss is not finite");
    }
    result.loss_trace.push_back(loss);
  }
  if (cfg.refine_grad_tol > 0.0 && cfg.epochs > 0) {
    result.params =
        RefineToStationary(spec, result.params, data, cfg.refine_grad_tol);
  }
  return result;
}

TrainResult TrainSgd(const ModelSpec& spec, const Batch& data,
                     const TrainConfig& cfg) {
  return ContinueSgd(spec, InitParams(spec, cfg.seed), data, cfg);
}

ParamVector RefineToStationary(const ModelSpec& spec, const ParamVector& start,
                               const Batch& data, double grad_tol,
                               int max_newton_steps) {
  ParamVector current = start;
  double loss = Loss(spec, current, data);
  const int max_cg = static_cast<int>(std::max<std::size_t>(
      50, 4 * spec.ParamCount()));
  for (int step = 0; step < max_newton_steps; ++step) {
    const Vector g = Grad(spec, current, data);
    if (NormInf(g) <= grad_tol) break;
    Vector direction;
    bool found = false;
    for (double damping : {0.0, 1e-4, 1e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0}) {
      try {
        const LinearOperator op = [&](const Vector& v) {
          Vector hv = Hvp(spec, current, data, v);
          if (damping > 0.0) Axpy(damping, v, hv);
          return hv;
        };
        direction = -CgSolve(op, g, 1e-10, max_cg).x;
        if (Dot(direction, g) < 0.0) {
          found = true;
          break;
        }
      } catch (const Error&) {
      }
    }
    if (!found) direction = -g;
    const double slope = Dot(direction, g);
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      ParamVector trial = current;
      Axpy(t, direction, trial.theta);
      const double trial_loss = Loss(spec, trial, data);
      if (std::isfinite(trial_loss) && trial_loss <= loss + 1e-4 * t * slope) {
        current = std::move(trial);
        loss = trial_loss;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  return current;
}

}  // namespace uib
