#include "phasegn/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "phasegn/random.hpp"

namespace phasegn {

std::string_view to_string(Field field) {
  return field == Field::Real ? "real" : "complex";
}

Field parse_field(std::string_view name) {
  if (name == "real") return Field::Real;
  if (name == "complex") return Field::Complex;
  throw ConfigError("unknown field '" + std::string(name) +
                    "' (expected real or complex)");
}

Signal::Signal(ComplexVector values, Field field)
    : values_(std::move(values)), field_(field) {
  if (values_.size() < 1) throw DimensionMismatch("signal must have n >= 1");
  if (!values_.allFinite()) throw Error("signal has non-finite entries");
  if (field_ == Field::Real && !values_.imag().isZero(0.0)) {
    throw FieldMismatch("real signal with nonzero imaginary part");
  }
}

Signal Signal::real(const RealVector& values) {
  return Signal(values.cast<Complex>(), Field::Real);
}

Signal Signal::complex(ComplexVector values) {
  return Signal(std::move(values), Field::Complex);
}

Signal Signal::scaled(Complex factor) const {
  if (field_ == Field::Real && factor.imag() != 0.0) {
    throw FieldMismatch("complex scaling of a real signal");
  }
  return Signal(values_ * factor, field_);
}

double dist(const ComplexVector& x, const ComplexVector& z, Field field) {
  if (x.size() != z.size()) {
    throw DimensionMismatch("dist: length mismatch");
  }
  if (field == Field::Real) {
    return std::min((z - x).norm(), (z + x).norm());
  }
  // Align the phase explicitly; the expanded form |x|^2 + |z|^2 - 2|x^* z|
  // cancels catastrophically once x is close to z.
  const Complex inner = x.dot(z);
  const double mag = std::abs(inner);
  if (mag == 0.0) return std::sqrt(x.squaredNorm() + z.squaredNorm());
  return (z - (inner / mag) * x).norm();
}

double dist(const Signal& x, const Signal& z) {
  if (x.field() != z.field()) throw FieldMismatch("dist: field mismatch");
  return dist(x.values(), z.values(), x.field());
}

namespace {

ComplexVector random_unit(Index n, Field field, std::uint64_t seed,
                          int restart) {
  auto engine = make_engine(seed, Stream::PowerStart,
                            static_cast<std::uint64_t>(restart));
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexVector v(n);
  for (Index i = 0; i < n; ++i) {
    const double re = normal(engine);
    const double im = field == Field::Complex ? normal(engine) : 0.0;
    v(i) = Complex(re, im);
  }
  return v / v.norm();
}

// Rotate so the largest-magnitude entry is real positive (first on ties).
void normalize_phase(ComplexVector& v) {
  Index best = 0;
  double best_abs = -1.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  if (best_abs > 0.0) v *= std::conj(v(best)) / best_abs;
}

}  // namespace

PowerResult power_iteration(const LinearMap& apply, Index n,
                            const PowerOptions& options) {
  if (n < 1) throw DimensionMismatch("power_iteration: n must be >= 1");
  if (options.iters < 1) throw ConfigError("power_iteration: iters >= 1");
  constexpr int kMaxRestarts = 3;

  PowerResult result;
  ComplexVector v = random_unit(n, options.field, options.seed, 0);
  int k = 0;
  while (k < options.iters) {
    ComplexVector w = apply(v);
    if (w.size() != n) {
      throw DimensionMismatch("power_iteration: map returned length " +
                              std::to_string(w.size()) + ", expected " +
                              std::to_string(n));
    }
    const double norm = w.norm();
    if (!std::isfinite(norm)) {
      throw DegenerateInstance("power_iteration: non-finite iterate");
    }
    if (!(norm > std::numeric_limits<double>::min())) {
      if (result.restarts == kMaxRestarts) {
        throw DegenerateInstance(
            "power_iteration: map annihilated the iterate after 3 restarts");
      }
      ++result.restarts;
      v = random_unit(n, options.field, options.seed, result.restarts);
      continue;
    }
    w /= norm;
    ++k;
    const bool settled = dist(w, v, Field::Complex) < options.tol;
    v = std::move(w);
    if (settled) break;
  }
  normalize_phase(v);
  result.iterations = k;
  result.eigenvalue = v.dot(apply(v)).real();
  result.vector = std::move(v);
  return result;
}

SpdSolution solve_spd(const RealMatrix& m, const RealVector& b) {
  const Index n = m.rows();
  if (n == 0 || m.cols() != n || b.size() != n) {
    throw DimensionMismatch("solve_spd: need square M matching b");
  }
  const double scale = std::max(m.cwiseAbs().maxCoeff(),
                                std::numeric_limits<double>::min());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error("solve_spd: matrix is not symmetric");
  }

  Eigen::LLT<RealMatrix> llt(m);
  if (llt.info() == Eigen::Success) {
    return {llt.solve(b), false};
  }
  const double ridge = 1e-10 * m.trace() / static_cast<double>(n);
  RealMatrix shifted = m;
  shifted.diagonal().array() += ridge;
  llt.compute(shifted);
  if (ridge > 0.0 && llt.info() == Eigen::Success) {
    return {llt.solve(b), true};
  }
  const double pivot = Eigen::LDLT<RealMatrix>(shifted).vectorD().minCoeff();
  std::ostringstream msg;
  msg << "solve_spd: matrix indefinite after ridge " << ridge
      << "; smallest pivot " << pivot;
  throw SingularSystem(msg.str(), pivot);
}

template <typename Scalar>
MinNormSolver<Scalar>::MinNormSolver(const Matrix& a)
    : rows_(a.rows()), cols_(a.cols()) {
  if (rows_ < 1 || cols_ < 1) {
    throw DimensionMismatch("min_norm_lsq: empty matrix");
  }
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
  sigma_ = svd.singularValues();
  u_ = svd.matrixU();
  v_ = svd.matrixV();
  const double sigma_max = sigma_.size() > 0 ? sigma_(0) : 0.0;
  tolerance_ = sigma_max * static_cast<double>(std::max(rows_, cols_)) *
               kRankEpsilon;
  rank_ = 0;
  for (Index i = 0; i < sigma_.size(); ++i) {
    if (sigma_(i) > tolerance_) ++rank_;
  }
}

template <typename Scalar>
typename MinNormSolver<Scalar>::Vector MinNormSolver<Scalar>::solve(
    const Vector& b) const {
  if (b.size() != rows_) {
    throw DimensionMismatch("min_norm_lsq: rhs length mismatch");
  }
  Vector coeffs = u_.leftCols(rank_).adjoint() * b;
  for (Index i = 0; i < rank_; ++i) coeffs(i) /= sigma_(i);
  return v_.leftCols(rank_) * coeffs;
}

template <typename Scalar>
typename MinNormSolver<Scalar>::Matrix MinNormSolver<Scalar>::null_space()
    const {
  return v_.rightCols(cols_ - rank_);
}

template class MinNormSolver<double>;
template class MinNormSolver<Complex>;

LsqSolution min_norm_lsq(const ComplexMatrix& a, const ComplexVector& b) {
  MinNormSolver<Complex> solver(a);
  return {solver.solve(b), solver.rank()};
}

}  // namespace phasegn
