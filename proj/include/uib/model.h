#ifndef UIB_MODEL_H_
#define UIB_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "uib/numerics.h"

namespace uib {

enum class Architecture { kLogReg, kMlp };

std::string_view ArchitectureName(Architecture a);
Architecture ParseArchitecture(std::string_view name);

// Classifier shape. LogReg has one layer (W: C x d, b: C). Mlp has a tanh
// hidden layer (W1: h x d, b1: h) followed by the output layer
// (W2: C x h, b2: C); the two form layers 1 and 2 of the parameter vector.
struct ModelSpec {
  Architecture architecture = Architecture::kLogReg;
  std::size_t hidden_width = 0;  // Mlp only
  std::size_t input_dim = 1;
  std::size_t num_classes = 2;
  double l2_strength = 0.1;

  void Validate() const;
  std::size_t ParamCount() const;
  std::size_t LayerCount() const;
};

struct LayerSlice {
  std::size_t start = 0;
  std::size_t length = 0;
};

// Flat parameter vector with per-layer offsets; the slices partition theta.
struct ParamVector {
  Vector theta;
  std::vector<LayerSlice> layers;

  std::size_t layer_count() const { return layers.size(); }
  // Copies out layer l (0-based).
  Vector Slice(std::size_t l) const;
  // Overwrites layer l with `values`.
  void SetSlice(std::size_t l, const Vector& values);
  void Validate() const;
};

ParamVector ZeroParams(const ModelSpec& spec);
// Every coordinate uniform in [-0.05, 0.05].
ParamVector InitParams(const ModelSpec& spec, std::uint64_t seed);
std::vector<LayerSlice> LayerLayout(const ModelSpec& spec);

struct Batch {
  Matrix features;  // n x input_dim
  std::vector<std::size_t> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  Batch Subset(const std::vector<std::size_t>& rows) const;
};

// Throws kShapeMismatch unless the batch is non-empty and matches the spec.
void ValidateBatch(const ModelSpec& spec, const Batch& batch);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 256;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  // After SGD, full-batch Newton refinement until ||grad||_inf <= this.
  // Zero disables refinement.
  double refine_grad_tol = 1e-7;
};

struct TrainResult {
  ParamVector params;
  // Full-data loss before training, then after every epoch.
  std::vector<double> loss_trace;
};

// Mean cross-entropy over the batch plus (l2/2)||theta||^2.
double Loss(const ModelSpec& spec, const ParamVector& params,
            const Batch& batch);
Vector Grad(const ModelSpec& spec, const ParamVector& params,
            const Batch& batch);
// Exact Hessian-vector product of Loss, by the R-operator (forward-over-
// reverse) pass; H is never formed.
Vector Hvp(const ModelSpec& spec, const ParamVector& params, const Batch& batch,
           const Vector& v);
// Mean squared per-sample gradient of the cross-entropy, plus l2.
Vector FisherDiag(const ModelSpec& spec, const ParamVector& params,
                  const Batch& batch);
Matrix PredictProba(const ModelSpec& spec, const ParamVector& params,
                    const Matrix& features);
std::vector<std::size_t> Predict(const ModelSpec& spec,
                                 const ParamVector& params,
                                 const Matrix& features);

// Data-term pieces used when per-sample weights differ from 1/n: sums over
// the batch of the per-sample cross-entropy, its gradient and its HVP, each
// multiplied by `weight`. No l2 term.
double WeightedDataLoss(const ModelSpec& spec, const Vector& theta,
                        const Batch& batch, double weight);
void AccumulateDataGrad(const ModelSpec& spec, const Vector& theta,
                        const Batch& batch, double weight, Vector& out);
void AccumulateDataHvp(const ModelSpec& spec, const Vector& theta,
                       const Batch& batch, double weight, const Vector& v,
                       Vector& out);

// Fresh initialization from cfg.seed, then minibatch SGD.
TrainResult TrainSgd(const ModelSpec& spec, const Batch& data,
                     const TrainConfig& cfg);
// SGD continued from `start`; the permutation stream is seeded by cfg.seed.
TrainResult ContinueSgd(const ModelSpec& spec, const ParamVector& start,
                        const Batch& data, const TrainConfig& cfg);

// Damped Newton-CG with Armijo backtracking on the full-batch Loss. Returns
// the best iterate reached; stops early when no descent is possible.
ParamVector RefineToStationary(const ModelSpec& spec, const ParamVector& start,
                               const Batch& data, double grad_tol,
                               int max_newton_steps = 60);

}  // namespace uib

#endif  // UIB_MODEL_H_
