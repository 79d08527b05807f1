#ifndef UIB_NUMERICS_H_
#define UIB_NUMERICS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace uib {

// Dense vector of doubles. Length is fixed at construction and every
// constructor rejects NaN/Inf with ErrorCode::kNonFinite. Element access is
// mutable, so callers that write entries are responsible for finiteness;
// all_finite() re-checks.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0);
  explicit Vector(std::vector<double> values);
  Vector(std::initializer_list<double> values);

  static Vector Zeros(std::size_t n) { return Vector(n, 0.0); }
  static Vector Basis(std::size_t n, std::size_t i);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  const std::vector<double>& values() const { return values_; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool all_finite() const;

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double a);

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> values_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator*(double a, Vector v);
Vector operator-(Vector v);

double Dot(const Vector& a, const Vector& b);
double Norm2(const Vector& v);
double NormInf(const Vector& v);
// y += a * x
void Axpy(double a, const Vector& x, Vector& y);

// Row-major dense matrix with the same finiteness contract as Vector.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix Identity(std::size_t n);
  static Matrix Diagonal(const Vector& d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) {
    return values_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  const std::vector<double>& values() const { return values_; }

  Vector Multiply(const Vector& x) const;
  Matrix Transposed() const;
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Seeded generator. The engine is std::mt19937_64, whose output sequence is
// fixed by the C++ standard; the variates below are derived by hand so the
// whole stream is identical across standard libraries and platforms.
class Prng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64";

  explicit Prng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t NextU64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi);
  // Standard normal via the Marsaglia polar method.
  double Normal();
  // Uniform integer in [0, n); n must be >= 1.
  std::size_t UniformIndex(std::size_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Draws index i with probability p[i]. Requires p[i] >= 0 and sum(p) within
// 1e-9 of 1, else throws kInvalidDistribution.
std::size_t DrawCategorical(std::span<const double> p, Prng& rng);

// Fisher-Yates permutation of [0, n).
std::vector<std::size_t> RandomPermutation(std::size_t n, Prng& rng);

using LinearOperator = std::function<Vector(const Vector&)>;

struct CgResult {
  Vector x;
  int iterations = 0;
  // ||A x_k - b|| for k = 0..iterations.
  std::vector<double> residual_norms;
};

// Matrix-free solve of A x = b for symmetric positive definite A, stopping
// once ||A x - b|| <= tol * ||b||. Uses the conjugate-residual recurrence, so
// the residual norm is non-increasing. No preconditioning; damping belongs to
// the caller. Throws kNonConvergence after max_iter iterations and
// kNonFinite if an iterate stops being finite.
CgResult CgSolve(const LinearOperator& apply_a, const Vector& b, double tol,
                 int max_iter);

// Central differences: (f(x + eps e_i) - f(x - eps e_i)) / (2 eps).
Vector FiniteDiffGrad(const std::function<double(const Vector&)>& f,
                      const Vector& x, double eps);

// FNV-1a 64 over the little-endian IEEE-754 bytes of the values, as hex.
std::string ContentDigest(std::span<const double> values);

}  // namespace uib

#endif  // UIB_NUMERICS_H_
