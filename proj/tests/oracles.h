// Independent reference computations for the tests. Nothing here calls the
// library's model, solver or metric code; only the Vector/Matrix containers
// are shared.

#ifndef UIB_TESTS_ORACLES_H_
#define UIB_TESTS_ORACLES_H_

#include <cstddef>
#include <functional>
#include <vector>

#include "uib/numerics.h"

namespace oracle {

using uib::Matrix;
using uib::Vector;

// Gaussian elimination with partial pivoting.
Vector DenseSolve(Matrix a, Vector b);

// True when A (symmetric) admits a Cholesky factorization.
bool CholeskySucceeds(const Matrix& a);

// Column j = apply(e_j).
Matrix AssembleDense(const std::function<Vector(const Vector&)>& apply,
                     std::size_t n);

double Pearson(const std::vector<double>& a, const std::vector<double>& b);

// Softmax regression with theta laid out as W (C x d, row-major) then b (C).
struct SoftmaxData {
  std::vector<std::vector<double>> x;
  std::vector<std::size_t> y;
  std::size_t num_classes = 2;
};

std::vector<double> SoftmaxProbs(const std::vector<double>& theta,
                                 const std::vector<double>& x,
                                 std::size_t num_classes);
// sum_i w_i CE_i / n + l2/2 |theta|^2, with w_i = weights[i] (1 if empty).
double SoftmaxLoss(const SoftmaxData& d, const std::vector<double>& theta,
                   double l2, const std::vector<double>& weights = {});
std::vector<double> SoftmaxGrad(const SoftmaxData& d,
                                const std::vector<double>& theta, double l2,
                                const std::vector<double>& weights = {});
Matrix SoftmaxHessian(const SoftmaxData& d, const std::vector<double>& theta,
                      double l2, const std::vector<double>& weights = {});
// Newton's method to ||grad||_inf < 1e-12 from `start`.
std::vector<double> SoftmaxMinimize(const SoftmaxData& d, double l2,
                                    std::vector<double> start,
                                    const std::vector<double>& weights = {});

// One-hidden-layer tanh network, theta = W1 (h x d), b1, W2 (C x h), b2.
double MlpLoss(const SoftmaxData& d, const std::vector<double>& theta,
               std::size_t hidden, double l2);

// Accuracy-maximizing confidence threshold by trying every candidate and
// counting directly; ties keep the largest threshold.
struct Sweep {
  double threshold;
  double accuracy;
};
Sweep MiaThresholdSweep(const std::vector<double>& member,
                        const std::vector<double>& nonmember);

// Chi-squared statistic of a contingency table given as counts.
double ChiSquared(const std::vector<std::vector<double>>& table);

// Macro F1 (percent) from an explicit confusion matrix.
double MacroF1FromConfusion(const std::vector<std::size_t>& pred,
                            const std::vector<std::size_t>& truth,
                            std::size_t num_classes);

// KL(N(mp, sp^2) || N(mq, sq^2)) by composite Simpson over +-12 sd of p.
double KlQuadrature1d(double mp, double sp, double mq, double sq);

}  // namespace oracle

#endif  // UIB_TESTS_ORACLES_H_
