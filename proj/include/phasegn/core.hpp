#ifndef PHASEGN_CORE_HPP
#define PHASEGN_CORE_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace phasegn {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Index = Eigen::Index;

// Error hierarchy. Everything thrown by the library derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class FieldMismatch : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  SingularSystem(const std::string& what, double smallest_pivot)
      : Error(what), smallest_pivot_(smallest_pivot) {}
  double smallest_pivot() const noexcept { return smallest_pivot_; }

 private:
  double smallest_pivot_;
};

class DegenerateInstance : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Field { Real, Complex };

std::string_view to_string(Field field);
Field parse_field(std::string_view name);

/// A length-n vector over a declared field.
///
/// Storage is always complex; a Real signal keeps every imaginary part at
/// exactly zero, which the constructor enforces.
class Signal {
 public:
  Signal(ComplexVector values, Field field);

  static Signal real(const RealVector& values);
  static Signal complex(ComplexVector values);

  Field field() const noexcept { return field_; }
  Index size() const noexcept { return values_.size(); }
  const ComplexVector& values() const noexcept { return values_; }
  RealVector real_part() const { return values_.real(); }
  double norm() const { return values_.norm(); }

  Signal scaled(Complex factor) const;

 private:
  ComplexVector values_;
  Field field_;
};

/// Orbit distance: min over the global phase (Complex) or sign (Real) of
/// ||z - c x||. Complex uses the closed form sqrt(|x|^2 + |z|^2 - 2|<x,z>|).
double dist(const Signal& x, const Signal& z);

/// Same metric on raw vectors, for callers that already hold Eigen data.
double dist(const ComplexVector& x, const ComplexVector& z, Field field);

using LinearMap = std::function<ComplexVector(const ComplexVector&)>;

struct PowerOptions {
  int iters = 50;
  double tol = 1e-10;
  std::uint64_t seed = 0;
  // Real draws a real start vector; the map must then preserve reals.
  Field field = Field::Complex;
};

struct PowerResult {
  ComplexVector vector;
  double eigenvalue = 0.0;
  int iterations = 0;
  int restarts = 0;
};

/// Dominant eigenpair of a symmetric/Hermitian map by power iteration.
///
/// Stops early once successive normalized iterates agree up to a global
/// phase within `tol`. The returned vector is rotated so that its
/// largest-magnitude entry is real and positive. A map that sends the
/// current vector to zero triggers a restart from a fresh seeded vector;
/// the third restart fails with DegenerateInstance.
PowerResult power_iteration(const LinearMap& apply, Index n,
                            const PowerOptions& options = {});

struct SpdSolution {
  RealVector x;
  bool regularized = false;
};

/// Cholesky solve of M x = b for symmetric M. On factorization failure the
/// system is retried once with M + eps*I, eps = 1e-10 * trace(M) / n.
SpdSolution solve_spd(const RealMatrix& m, const RealVector& b);

/// Minimal-norm least squares through a cached thin SVD.
///
/// Singular values at or below sigma_max * max(rows, cols) * 2.2e-16 are
/// treated as zero. An all-zero matrix has rank 0 and yields the zero vector.
template <typename Scalar>
class MinNormSolver {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit MinNormSolver(const Matrix& a);

  Vector solve(const Vector& b) const;
  Index rank() const noexcept { return rank_; }
  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  double tolerance() const noexcept { return tolerance_; }
  const RealVector& singular_values() const noexcept { return sigma_; }
  /// Orthonormal basis of the numerical null space (cols x (cols - rank)).
  Matrix null_space() const;

 private:
  Index rows_;
  Index cols_;
  Index rank_ = 0;
  double tolerance_ = 0.0;
  Matrix u_;
  Matrix v_;  // full cols x cols right singular basis
  RealVector sigma_;
};

extern template class MinNormSolver<double>;
extern template class MinNormSolver<Complex>;

struct LsqSolution {
  ComplexVector x;
  Index rank = 0;
};

LsqSolution min_norm_lsq(const ComplexMatrix& a, const ComplexVector& b);

inline constexpr double kRankEpsilon = 2.2e-16;

}  // namespace phasegn

#endif  // PHASEGN_CORE_HPP
