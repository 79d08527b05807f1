// Seeded problem instances shared by the unit tests and the acceptance run.

#ifndef UIB_TESTS_FIXTURES_H_
#define UIB_TESTS_FIXTURES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "oracles.h"
#include "uib/bounds.h"
#include "uib/error.h"
#include "uib/model.h"
#include "uib/numerics.h"

namespace fixture {

using uib::Batch;
using uib::Matrix;
using uib::ModelSpec;
using uib::ParamVector;
using uib::Prng;
using uib::Vector;

inline ModelSpec LogReg(std::size_t d, std::size_t c, double l2) {
  return {uib::Architecture::kLogReg, 0, d, c, l2};
}

inline ModelSpec Mlp(std::size_t d, std::size_t h, std::size_t c, double l2) {
  return {uib::Architecture::kMlp, h, d, c, l2};
}

// Gaussian features; labels from a random linear teacher plus noise, so the
// classes overlap and the minimizer stays bounded.
inline Batch RandomBatch(std::size_t n, std::size_t d, std::size_t c,
                         std::uint64_t seed) {
  Prng rng(seed);
  Matrix teacher(c, d);
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t j = 0; j < d; ++j) teacher(k, j) = rng.Normal();
  }
  Batch b{Matrix(n, d), std::vector<std::size_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) b.features(i, j) = rng.Normal();
    std::size_t best = 0;
    double best_score = -1e300;
    for (std::size_t k = 0; k < c; ++k) {
      double s = 2.0 * rng.Normal();
      for (std::size_t j = 0; j < d; ++j) s += teacher(k, j) * b.features(i, j);
      if (s > best_score) {
        best_score = s;
        best = k;
      }
    }
    b.labels[i] = best;
  }
  return b;
}

inline ParamVector RandomParams(const ModelSpec& spec, double scale,
                                std::uint64_t seed) {
  ParamVector p = uib::ZeroParams(spec);
  Prng rng(seed);
  for (double& v : p.theta) v = scale * rng.Normal();
  return p;
}

inline Vector RandomVector(std::size_t n, std::uint64_t seed) {
  Prng rng(seed);
  Vector v(n);
  for (double& x : v) x = rng.Normal();
  return v;
}

inline oracle::SoftmaxData ToSoftmaxData(const Batch& b,
                                         std::size_t num_classes) {
  oracle::SoftmaxData d;
  d.num_classes = num_classes;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto row = b.features.row(i);
    d.x.emplace_back(row.begin(), row.end());
  }
  d.y = b.labels;
  return d;
}

inline double MaxRelError(const Vector& got, const Vector& want) {
  return uib::Norm2(got - want) / std::max(uib::Norm2(want), 1e-300);
}

// Returns "" when fn throws uib::Error with `code`, else a description.
inline std::string ErrorCodeMismatch(uib::ErrorCode code,
                                     const std::function<void()>& fn) {
  try {
    fn();
  } catch (const uib::Error& e) {
    if (e.code() == code) return "";
    return std::string("wrong code: ") + e.what();
  } catch (const std::exception& e) {
    return std::string("foreign exception: ") + e.what();
  }
  return "no exception";
}

// Two-layer stochastic chain on small grids, for checking the layered
// information bound against exact mutual information:
//
//   X uniform on {0..3}
//   R1 | X        ~ disc N(X, 0.8^2)
//   T1 | R1       ~ disc N(a R1, s1^2)
//   R2 | X, T1    ~ disc N(b X + c T1, s(T1)^2), s heteroscedastic
//   T2 | T1, R2   ~ disc N(T1 + R2, s2^2)
//
// "disc N(m, s^2)" is a Gaussian restricted to a fixed grid and
// renormalized. Each layer term is E_parent KL(channel || Q) for a random
// full-support reference Q; exact_mi is I(X; T2) computed by brute-force
// marginalization.
struct ChainInstance {
  std::vector<double> theta_terms;  // layers 1, 2
  std::vector<double> r_terms;      // layers 1, 2
  double exact_mi = 0.0;
};

inline std::vector<double> Grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return g;
}

inline std::vector<double> DiscGaussian(const std::vector<double>& grid,
                                        double mean, double sd) {
  std::vector<double> p(grid.size());
  double z = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double u = (grid[i] - mean) / sd;
    p[i] = std::exp(-0.5 * u * u) + 1e-12;
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

inline uib::Vector RandomPmf(std::size_t n, Prng& rng) {
  uib::Vector q(n);
  double z = 0.0;
  for (double& v : q) {
    v = 0.05 + rng.Uniform();
    z += v;
  }
  for (double& v : q) v /= z;
  return q;
}

inline ChainInstance MakeChain(std::uint64_t seed) {
  Prng rng(seed);
  const double a = rng.Uniform(0.5, 1.5);
  const double s1 = rng.Uniform(0.3, 1.2);
  const double b = rng.Uniform(-1.0, 1.0);
  const double c = rng.Uniform(0.2, 1.0);
  const double s2 = rng.Uniform(0.3, 1.0);
  const std::size_t nx = 4;
  const std::vector<double> gr1 = Grid(-2, 5, 9);
  const std::vector<double> gt1 = Grid(-2, 7, 10);
  const std::vector<double> gr2 = Grid(-4, 8, 10);
  const std::vector<double> gt2 = Grid(-5, 14, 12);

  Matrix r1(nx, gr1.size()), t1(gr1.size(), gt1.size());
  for (std::size_t x = 0; x < nx; ++x) {
    const auto row = DiscGaussian(gr1, static_cast<double>(x), 0.8);
    for (std::size_t k = 0; k < row.size(); ++k) r1(x, k) = row[k];
  }
  for (std::size_t r = 0; r < gr1.size(); ++r) {
    const auto row = DiscGaussian(gt1, a * gr1[r], s1);
    for (std::size_t k = 0; k < row.size(); ++k) t1(r, k) = row[k];
  }
  // R2 channel indexed by (x, t1) flattened.
  Matrix r2(nx * gt1.size(), gr2.size());
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t t = 0; t < gt1.size(); ++t) {
      const double sd = 0.4 + 0.15 * std::abs(gt1[t]);
      const auto row = DiscGaussian(gr2, b * static_cast<double>(x) + c * gt1[t], sd);
      for (std::size_t k = 0; k < row.size(); ++k) r2(x * gt1.size() + t, k) = row[k];
    }
  }
  // T2 channel indexed by (t1, r2) flattened.
  Matrix t2(gt1.size() * gr2.size(), gt2.size());
  for (std::size_t t = 0; t < gt1.size(); ++t) {
    for (std::size_t r = 0; r < gr2.size(); ++r) {
      const auto row = DiscGaussian(gt2, gt1[t] + gr2[r], s2);
      for (std::size_t k = 0; k < row.size(); ++k) t2(t * gr2.size() + r, k) = row[k];
    }
  }

  // Parent distributions of each channel.
  const std::vector<double> px(nx, 1.0 / nx);
  uib::Vector p_r1(gr1.size());
  Matrix p_x_t1(nx, gt1.size());
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t r = 0; r < gr1.size(); ++r) {
      p_r1[r] += px[x] * r1(x, r);
      for (std::size_t t = 0; t < gt1.size(); ++t) {
        p_x_t1(x, t) += px[x] * r1(x, r) * t1(r, t);
      }
    }
  }
  uib::Vector p_xt1(nx * gt1.size());
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t t = 0; t < gt1.size(); ++t) {
      p_xt1[x * gt1.size() + t] = p_x_t1(x, t);
    }
  }
  uib::Vector p_t1r2(gt1.size() * gr2.size());
  // Joint of X and T2 for the exact MI.
  std::vector<std::vector<double>> joint(nx, std::vector<double>(gt2.size()));
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t t = 0; t < gt1.size(); ++t) {
      for (std::size_t r = 0; r < gr2.size(); ++r) {
        const double w = p_x_t1(x, t) * r2(x * gt1.size() + t, r);
        p_t1r2[t * gr2.size() + r] += w;
        for (std::size_t k = 0; k < gt2.size(); ++k) {
          joint[x][k] += w * t2(t * gr2.size() + r, k);
        }
      }
    }
  }

  ChainInstance out;
  const uib::Vector uniform_x{px};
  out.r_terms.push_back(
      uib::ExpectedConditionalKl(uniform_x, r1, RandomPmf(gr1.size(), rng)));
  out.theta_terms.push_back(
      uib::ExpectedConditionalKl(p_r1, t1, RandomPmf(gt1.size(), rng)));
  out.r_terms.push_back(
      uib::ExpectedConditionalKl(p_xt1, r2, RandomPmf(gr2.size(), rng)));
  out.theta_terms.push_back(
      uib::ExpectedConditionalKl(p_t1r2, t2, RandomPmf(gt2.size(), rng)));

  std::vector<double> pt2(gt2.size(), 0.0);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t k = 0; k < gt2.size(); ++k) pt2[k] += joint[x][k];
  }
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t k = 0; k < gt2.size(); ++k) {
      if (joint[x][k] > 0.0) {
        out.exact_mi += joint[x][k] * std::log(joint[x][k] / (px[x] * pt2[k]));
      }
    }
  }
  return out;
}

// Every index-set pair over two layers that satisfies the validity rule.
inline std::vector<uib::IndexSets> ValidTwoLayerSets() {
  std::vector<uib::IndexSets> out;
  const std::vector<std::vector<std::size_t>> subsets{{}, {1}, {2}, {1, 2}};
  for (const auto& st : subsets) {
    for (const auto& sr : subsets) {
      if (st.empty()) continue;
      const std::size_t top = st.back();
      if (top == 1 && std::find(sr.begin(), sr.end(), 2) == sr.end()) continue;
      out.push_back({st, sr});
    }
  }
  return out;
}

// Joint pmf with cubed-uniform cells, so some cells are tiny.
inline Matrix RandomJoint(std::size_t nx, std::size_t ny, std::uint64_t seed) {
  Prng rng(seed);
  Matrix m(nx, ny);
  double z = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      m(i, j) = std::pow(rng.Uniform(), 3.0);
      z += m(i, j);
    }
  }
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) m(i, j) /= z;
  }
  return m;
}

// n joint draws and n product-of-marginal draws.
struct Samples {
  std::vector<uib::SamplePair> joint, marginal;
};

inline Samples Draw(const Matrix& pmf, std::size_t n, Prng& rng) {
  const std::size_t ny = pmf.cols();
  uib::DiscreteJoint j{pmf};
  const Vector px = j.MarginalX(), py = j.MarginalY();
  Samples s;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = uib::DrawCategorical(pmf.values(), rng);
    s.joint.push_back({k / ny, k % ny});
    s.marginal.push_back(
        {uib::DrawCategorical(px.span(), rng), uib::DrawCategorical(py.span(), rng)});
  }
  return s;
}

}  // namespace fixture

#endif  // UIB_TESTS_FIXTURES_H_
