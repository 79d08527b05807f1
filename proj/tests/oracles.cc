#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace oracle {

Vector DenseSolve(Matrix a, Vector b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    if (a(pivot, col) == 0.0) throw std::runtime_error("singular matrix");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  Vector x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a(i, c) * x[c];
    x[i] = s / a(i, i);
  }
  return x;
}

bool CholeskySucceeds(const Matrix& a) {
  const std::size_t n = a.rows();
  std::vector<double> l(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
    if (!(d > 0.0)) return false;
    l[j * n + j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      l[i * n + j] = s / l[j * n + j];
    }
  }
  return true;
}

Matrix AssembleDense(const std::function<Vector(const Vector&)>& apply,
                     std::size_t n) {
  Matrix m(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const Vector col = apply(Vector::Basis(n, j));
    for (std::size_t i = 0; i < n; ++i) m(i, j) = col[i];
  }
  return m;
}

double Pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> SoftmaxProbs(const std::vector<double>& theta,
                                 const std::vector<double>& x,
                                 std::size_t num_classes) {
  const std::size_t d = x.size();
  std::vector<double> z(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    z[c] = theta[num_classes * d + c];
    for (std::size_t k = 0; k < d; ++k) z[c] += theta[c * d + k] * x[k];
  }
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    s += v;
  }
  for (double& v : z) v /= s;
  return z;
}

namespace {

double WeightOf(const std::vector<double>& w, std::size_t i) {
  return w.empty() ? 1.0 : w[i];
}

}  // namespace

double SoftmaxLoss(const SoftmaxData& d, const std::vector<double>& theta,
                   double l2, const std::vector<double>& weights) {
  double total = 0.0;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    const std::vector<double> p = SoftmaxProbs(theta, d.x[i], d.num_classes);
    total -= WeightOf(weights, i) * std::log(p[d.y[i]]);
  }
  double sq = 0.0;
  for (double t : theta) sq += t * t;
  return total / static_cast<double>(d.x.size()) + 0.5 * l2 * sq;
}

std::vector<double> SoftmaxGrad(const SoftmaxData& d,
                                const std::vector<double>& theta, double l2,
                                const std::vector<double>& weights) {
  const std::size_t dim = d.x.front().size();
  const std::size_t nc = d.num_classes;
  const double n = static_cast<double>(d.x.size());
  std::vector<double> g(theta.size(), 0.0);
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    const std::vector<double> p = SoftmaxProbs(theta, d.x[i], nc);
    const double w = WeightOf(weights, i) / n;
    for (std::size_t c = 0; c < nc; ++c) {
      const double r = w * (p[c] - (c == d.y[i] ? 1.0 : 0.0));
      for (std::size_t k = 0; k < dim; ++k) g[c * dim + k] += r * d.x[i][k];
      g[nc * dim + c] += r;
    }
  }
  for (std::size_t j = 0; j < theta.size(); ++j) g[j] += l2 * theta[j];
  return g;
}

Matrix SoftmaxHessian(const SoftmaxData& d, const std::vector<double>& theta,
                      double l2, const std::vector<double>& weights) {
  const std::size_t dim = d.x.front().size();
  const std::size_t nc = d.num_classes;
  const std::size_t p_count = theta.size();
  const double n = static_cast<double>(d.x.size());
  Matrix h(p_count, p_count);
  // Index of the parameter multiplying feature k (k == dim: bias) in class c.
  auto idx = [&](std::size_t c, std::size_t k) {
    return k == dim ? nc * dim + c : c * dim + k;
  };
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    const std::vector<double> p = SoftmaxProbs(theta, d.x[i], nc);
    const double w = WeightOf(weights, i) / n;
    std::vector<double> xt = d.x[i];
    xt.push_back(1.0);
    for (std::size_t c = 0; c < nc; ++c) {
      for (std::size_t c2 = 0; c2 < nc; ++c2) {
        const double s = w * ((c == c2 ? p[c] : 0.0) - p[c] * p[c2]);
        for (std::size_t k = 0; k <= dim; ++k) {
          for (std::size_t k2 = 0; k2 <= dim; ++k2) {
            h(idx(c, k), idx(c2, k2)) += s * xt[k] * xt[k2];
          }
        }
      }
    }
  }
  for (std::size_t j = 0; j < p_count; ++j) h(j, j) += l2;
  return h;
}

std::vector<double> SoftmaxMinimize(const SoftmaxData& d, double l2,
                                    std::vector<double> theta,
                                    const std::vector<double>& weights) {
  for (int it = 0; it < 100; ++it) {
    const std::vector<double> g = SoftmaxGrad(d, theta, l2, weights);
    double gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::abs(v));
    if (gmax < 1e-12) break;
    const Vector step =
        DenseSolve(SoftmaxHessian(d, theta, l2, weights), Vector(g));
    for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= step[j];
  }
  return theta;
}

double MlpLoss(const SoftmaxData& d, const std::vector<double>& theta,
               std::size_t hidden, double l2) {
  const std::size_t dim = d.x.front().size();
  const std::size_t nc = d.num_classes;
  const double* w1 = theta.data();
  const double* b1 = w1 + hidden * dim;
  const double* w2 = b1 + hidden;
  const double* b2 = w2 + nc * hidden;
  double total = 0.0;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    std::vector<double> a(hidden);
    for (std::size_t j = 0; j < hidden; ++j) {
      double s = b1[j];
      for (std::size_t k = 0; k < dim; ++k) s += w1[j * dim + k] * d.x[i][k];
      a[j] = std::tanh(s);
    }
    std::vector<double> z(nc);
    for (std::size_t c = 0; c < nc; ++c) {
      z[c] = b2[c];
      for (std::size_t j = 0; j < hidden; ++j) z[c] += w2[c * hidden + j] * a[j];
    }
    double m = z[0];
    for (double v : z) m = std::max(m, v);
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    total += m + std::log(s) - z[d.y[i]];
  }
  double sq = 0.0;
  for (double t : theta) sq += t * t;
  return total / static_cast<double>(d.x.size()) + 0.5 * l2 * sq;
}

Sweep MiaThresholdSweep(const std::vector<double>& member,
                        const std::vector<double>& nonmember) {
  std::vector<double> candidates = member;
  candidates.insert(candidates.end(), nonmember.begin(), nonmember.end());
  candidates.push_back(std::numeric_limits<double>::infinity());
  const double total = static_cast<double>(member.size() + nonmember.size());
  Sweep best{0.0, -1.0};
  for (double t : candidates) {
    double correct = 0.0;
    for (double c : member) correct += c >= t ? 1.0 : 0.0;
    for (double c : nonmember) correct += c < t ? 1.0 : 0.0;
    const double acc = correct / total;
    if (acc > best.accuracy || (acc == best.accuracy && t > best.threshold)) {
      best = {t, acc};
    }
  }
  return best;
}

double ChiSquared(const std::vector<std::vector<double>>& table) {
  const std::size_t rows = table.size();
  const std::size_t cols = table.front().size();
  std::vector<double> rs(rows, 0.0), cs(cols, 0.0);
  double n = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      rs[r] += table[r][c];
      cs[c] += table[r][c];
      n += table[r][c];
    }
  }
  double chi2 = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double e = rs[r] * cs[c] / n;
      chi2 += (table[r][c] - e) * (table[r][c] - e) / e;
    }
  }
  return chi2;
}

double MacroF1FromConfusion(const std::vector<std::size_t>& pred,
                            const std::vector<std::size_t>& truth,
                            std::size_t num_classes) {
  std::vector<std::vector<double>> conf(num_classes,
                                        std::vector<double>(num_classes, 0.0));
  for (std::size_t i = 0; i < pred.size(); ++i) conf[truth[i]][pred[i]] += 1.0;
  double sum = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    double tp = conf[c][c], col = 0.0, row = 0.0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      col += conf[k][c];
      row += conf[c][k];
    }
    const double precision = col > 0.0 ? tp / col : 0.0;
    const double recall = row > 0.0 ? tp / row : 0.0;
    if (precision + recall > 0.0) {
      sum += 2.0 * precision * recall / (precision + recall);
    }
  }
  return 100.0 * sum / static_cast<double>(num_classes);
}

double KlQuadrature1d(double mp, double sp, double mq, double sq) {
  const int n = 20000;
  const double lo = mp - 12 * sp, hi = mp + 12 * sp;
  const double h = (hi - lo) / n;
  auto f = [&](double x) {
    const double lp = -0.5 * std::pow((x - mp) / sp, 2) - std::log(sp) -
                      0.5 * std::log(2 * M_PI);
    const double lq = -0.5 * std::pow((x - mq) / sq, 2) - std::log(sq) -
                      0.5 * std::log(2 * M_PI);
    return std::exp(lp) * (lp - lq);
  };
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * f(lo + i * h);
  return s * h / 3;
}

}  // namespace oracle
