#include "uib/numerics.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <utility>

#include "uib/error.h"

namespace uib {
namespace {

void RequireFinite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFinite,
                  std::string(what) + " contains a non-finite entry");
    }
  }
}

void RequireSameSize(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "vector lengths " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()) + " differ");
  }
}

}  // namespace

Vector::Vector(std::size_t n, double fill) : values_(n, fill) {
  RequireFinite(values_, "vector");
}

Vector::Vector(std::vector<double> values) : values_(std::move(values)) {
  RequireFinite(values_, "vector");
}

Vector::Vector(std::initializer_list<double> values) : values_(values) {
  RequireFinite(values_, "vector");
}

Vector Vector::Basis(std::size_t n, std::size_t i) {
  Vector e(n);
  e[i] = 1.0;
  return e;
}

bool Vector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

Vector& Vector::operator+=(const Vector& other) {
  RequireSameSize(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other[i];
  return *this;
}

Vector& Vector::operator-=(const Vector& other) {
  RequireSameSize(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other[i];
  return *this;
}

Vector& Vector::operator*=(double a) {
  for (double& v : values_) v *= a;
  return *this;
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator*(double a, Vector v) { return v *= a; }
Vector operator-(Vector v) { return v *= -1.0; }

double Dot(const Vector& a, const Vector& b) {
  RequireSameSize(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double Norm2(const Vector& v) { return std::sqrt(Dot(v, v)); }

double NormInf(const Vector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void Axpy(double a, const Vector& x, Vector& y) {
  RequireSameSize(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {
  RequireFinite(values_, "matrix");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kShapeMismatch,
                "matrix value count does not equal rows*cols");
  }
  RequireFinite(values_, "matrix");
}

Matrix Matrix::Identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::Diagonal(const Vector& d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Vector Matrix::Multiply(const Vector& x) const {
  if (x.size() != cols_) {
    throw Error(ErrorCode::kShapeMismatch, "matrix-vector shape mismatch");
  }
  Vector y(rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    const double* a = values_.data() + r * cols_;
    double s = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) s += a[c] * x[c];
    y[r] = s;
  }
  return y;
}

Matrix Matrix::Transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

bool Matrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

Prng::Prng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

double Prng::Uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Prng::Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

double Prng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * Uniform() - 1.0;
    v = 2.0 * Uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

std::size_t Prng::UniformIndex(std::size_t n) {
  if (n == 0) {
    throw Error(ErrorCode::kInvalidDistribution, "UniformIndex over empty range");
  }
  // Rejection sampling removes modulo bias.
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % range);
}

std::size_t DrawCategorical(std::span<const double> p, Prng& rng) {
  if (p.empty()) {
    throw Error(ErrorCode::kInvalidDistribution, "empty probability vector");
  }
  double total = 0.0;
  for (double pi : p) {
    if (!(pi >= 0.0) || !std::isfinite(pi)) {
      throw Error(ErrorCode::kInvalidDistribution,
                  "probabilities must be finite and non-negative");
    }
    total += pi;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidDistribution,
                "probabilities sum to " + std::to_string(total));
  }
  const double u = rng.Uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    acc += p[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

std::vector<std::size_t> RandomPermutation(std::size_t n, Prng& rng) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.UniformIndex(i)]);
  }
  return perm;
}

CgResult CgSolve(const LinearOperator& apply_a, const Vector& b, double tol,
                 int max_iter) {
  if (!(tol > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "cg tolerance must be positive");
  }
  CgResult result;
  result.x = Vector::Zeros(b.size());
  const double b_norm = Norm2(b);
  result.residual_norms.push_back(b_norm);
  if (b_norm == 0.0) return result;
  const double target = tol * b_norm;

  Vector r = b;
  Vector p = r;
  Vector ar = apply_a(r);
  if (ar.size() != b.size()) {
    throw Error(ErrorCode::kShapeMismatch, "operator changed vector length");
  }
  Vector ap = ar;
  double r_ar = Dot(r, ar);

  while (result.iterations < max_iter) {
    if (!(r_ar > 0.0)) {
      throw Error(ErrorCode::kNonConvergence,
                  "operator is not positive definite along the residual");
    }
    const double alpha = r_ar / Dot(ap, ap);
    Axpy(alpha, p, result.x);
    Axpy(-alpha, ap, r);
    ++result.iterations;
    if (!result.x.all_finite() || !r.all_finite()) {
      throw Error(ErrorCode::kNonFinite, "cg iterate is not finite");
    }
    double r_norm = Norm2(r);
    if (r_norm <= target) {
      // The recursive residual drifts; confirm against the true one and
      // restart from the current iterate if it has.
      r = b - apply_a(result.x);
      r_norm = Norm2(r);
      result.residual_norms.push_back(r_norm);
      if (r_norm <= target) return result;
      p = r;
      ar = apply_a(r);
      ap = ar;
      r_ar = Dot(r, ar);
      continue;
    }
    result.residual_norms.push_back(r_norm);
    Vector ar_next = apply_a(r);
    const double r_ar_next = Dot(r, ar_next);
    const double beta = r_ar_next / r_ar;
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = r[i] + beta * p[i];
      ap[i] = ar_next[i] + beta * ap[i];
    }
    ar = std::move(ar_next);
    r_ar = r_ar_next;
  }
  throw Error(ErrorCode::kNonConvergence,
              "cg reached " + std::to_string(max_iter) +
                  " iterations with relative residual " +
                  std::to_string(result.residual_norms.back() / b_norm));
}

Vector FiniteDiffGrad(const std::function<double(const Vector&)>& f,
                      const Vector& x, double eps) {
  if (!(eps > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "finite-difference eps must be > 0");
  }
  Vector g(x.size());
  Vector probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = f(probe);
    probe[i] = x[i] - eps;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw Error(ErrorCode::kNonFinite, "function value is not finite");
    }
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

std::string ContentDigest(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k) {
      h ^= (bits >> (8 * k)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xfU];
    h >>= 4;
  }
  return out;
}

}  // namespace uib
