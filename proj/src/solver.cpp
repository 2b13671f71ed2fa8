#include "phasegn/solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "trace_recorder.hpp"

namespace phasegn {

std::string flags_to_string(unsigned flags) {
  std::string out;
  auto add = [&out](const char* name) {
    if (!out.empty()) out += '|';
    out += name;
  };
  if (flags & kFlagRegularized) add("regularized");
  if (flags & kFlagRankDeficient) add("rank_deficient");
  if (flags & kFlagStepFailed) add("step_failed");
  if (flags & kFlagDiverged) add("diverged");
  return out;
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::MaxIterations:
      return "max_iterations";
    case SolveStatus::StepFailed:
      return "step_failed";
    case SolveStatus::Diverged:
      return "diverged";
  }
  return "?";
}

std::optional<int> SolveTrace::first_below(double tol) const {
  for (std::size_t k = 0; k < rel_errors.size(); ++k) {
    if (rel_errors[k] < tol) return static_cast<int>(k);
  }
  return std::nullopt;
}

void write_trace_csv(std::ostream& out, const SolveTrace& trace) {
  out << "iter,rel_err,residual,wall_ms,flags\n";
  out.precision(17);
  for (std::size_t k = 0; k < trace.size(); ++k) {
    out << k << ',' << trace.rel_errors[k] << ',' << trace.residuals[k] << ','
        << trace.wall_times[k] * 1e3 << ',' << flags_to_string(trace.flags[k])
        << '\n';
  }
}

double objective(const SensingEnsemble& ensemble,
                 const Observations& observations, const Signal& x) {
  check_compatible(ensemble, observations);
  check_compatible(ensemble, x);
  const RealVector r =
      (ensemble.a * x.values()).cwiseAbs2() - observations.y;
  const Index m = r.size();
  double total = 0.0;
  if (m > 100000) {
    // Neumaier compensated sum.
    double carry = 0.0;
    for (Index j = 0; j < m; ++j) {
      const double term = r(j) * r(j);
      const double t = total + term;
      if (std::abs(total) >= std::abs(term)) {
        carry += (total - t) + term;
      } else {
        carry += (term - t) + total;
      }
      total = t;
    }
    total += carry;
  } else {
    total = r.squaredNorm();
  }
  return total / (2.0 * static_cast<double>(m));
}

namespace {

void require_real(const SensingEnsemble& ensemble, const Signal& x) {
  check_compatible(ensemble, x);
  if (x.field() != Field::Real) {
    throw FieldMismatch("real Gauss-Newton step needs a real iterate");
  }
}

// Rows G_j = (a_jR^T x) a_jR^T + (a_jI^T x) a_jI^T, plus the residuals
// (a_jR^T x)^2 + (a_jI^T x)^2 - y_j. Row j of A stores a_j^*, so its real
// part is a_jR and its imaginary part is -a_jI; G is unaffected by the sign.
struct RealJacobian {
  RealMatrix g;
  RealVector residual;
};

RealJacobian real_jacobian(const SensingEnsemble& ensemble, const Signal& x,
                           const RealVector* y) {
  const RealVector xr = x.real_part();
  const RealMatrix re = ensemble.a.real();
  RealVector pr = re * xr;
  RealJacobian out{pr.asDiagonal() * re, RealVector()};
  RealVector sq = pr.cwiseAbs2();
  if (ensemble.field == Field::Complex) {
    const RealMatrix im = ensemble.a.imag();
    RealVector pi = im * xr;
    out.g.noalias() += pi.asDiagonal() * im;
    sq += pi.cwiseAbs2();
  }
  if (y != nullptr) out.residual = sq - *y;
  return out;
}

}  // namespace

RealMatrix gn_normal_matrix(const SensingEnsemble& ensemble, const Signal& x) {
  require_real(ensemble, x);
  const RealJacobian jac = real_jacobian(ensemble, x, nullptr);
  RealMatrix m = RealMatrix::Zero(x.size(), x.size());
  m.selfadjointView<Eigen::Lower>().rankUpdate(jac.g.transpose(),
                                               4.0 / static_cast<double>(ensemble.m()));
  return m.selfadjointView<Eigen::Lower>();
}

RealVector gn_gradient(const SensingEnsemble& ensemble,
                       const Observations& observations, const Signal& x) {
  require_real(ensemble, x);
  check_compatible(ensemble, observations);
  const RealJacobian jac = real_jacobian(ensemble, x, &observations.y);
  return (2.0 / static_cast<double>(ensemble.m())) *
         (jac.g.transpose() * jac.residual);
}

RealStep gn_step_real(const SensingEnsemble& ensemble,
                      const Observations& observations, const Signal& x) {
  require_real(ensemble, x);
  check_compatible(ensemble, observations);
  const RealJacobian jac = real_jacobian(ensemble, x, &observations.y);
  const double inv_m = 1.0 / static_cast<double>(ensemble.m());
  RealMatrix normal = RealMatrix::Zero(x.size(), x.size());
  normal.selfadjointView<Eigen::Lower>().rankUpdate(jac.g.transpose(),
                                                    4.0 * inv_m);
  normal = normal.selfadjointView<Eigen::Lower>();
  const RealVector grad = 2.0 * inv_m * (jac.g.transpose() * jac.residual);
  SpdSolution sol = solve_spd(normal, -grad);
  return RealStep{Signal::real(x.real_part() + sol.x), std::move(sol.x),
                  sol.regularized};
}

ComplexSystem complex_step_system(const SensingEnsemble& ensemble,
                                  const Observations& observations,
                                  const Signal& x) {
  check_compatible(ensemble, x);
  check_compatible(ensemble, observations);
  const Index n = ensemble.n();
  const ComplexVector r = ensemble.a * x.values();
  ComplexSystem sys{ComplexMatrix(ensemble.m(), 2 * n),
                    r.cwiseAbs2() - observations.y};
  // x^* a_j a_j^* = conj(r_j) * row_j, and the second block is its conjugate.
  sys.jacobian.leftCols(n) = r.conjugate().asDiagonal() * ensemble.a;
  sys.jacobian.rightCols(n) = sys.jacobian.leftCols(n).conjugate();
  return sys;
}

ComplexStep gn_step_complex(const SensingEnsemble& ensemble,
                            const Observations& observations,
                            const Signal& x) {
  if (x.field() != Field::Complex) {
    throw FieldMismatch("complex Gauss-Newton step needs a complex iterate");
  }
  if (!(x.norm() > 0.0)) {
    throw DegenerateInstance("complex Gauss-Newton step from the zero vector");
  }
  const ComplexSystem sys = complex_step_system(ensemble, observations, x);
  const MinNormSolver<Complex> solver(sys.jacobian);
  if (solver.rank() == 0) {
    throw DegenerateInstance("complex Gauss-Newton step: rank collapse");
  }
  ComplexVector u = -solver.solve(sys.residual.cast<Complex>());
  const Index n = x.size();
  ComplexStep step{Signal::complex(x.values() + u.head(n)), std::move(u),
                   solver.rank()};
  return step;
}

double relative_error(const SensingEnsemble& ensemble,
                      const Observations& observations, const Signal& x,
                      const std::optional<Signal>& truth) {
  if (truth) return dist(x, *truth) / truth->norm();
  const double ynorm = observations.y.norm();
  const double f = objective(ensemble, observations, x);
  return ynorm > 0.0 ? std::sqrt(2.0 * f) / ynorm : std::sqrt(2.0 * f);
}

namespace {

bool reached(double rel_error, const std::optional<Signal>& truth,
             const GNConfig& config) {
  return rel_error < (truth ? config.rel_err_tol : config.residual_tol);
}

}  // namespace

SolveTrace solve_gn(const SensingEnsemble& ensemble,
                    const Observations& observations, const Signal& x0,
                    const std::optional<Signal>& truth,
                    const GNConfig& config) {
  check_compatible(ensemble, observations);
  check_compatible(ensemble, x0);
  if (truth && truth->field() != x0.field()) {
    throw FieldMismatch("solve_gn: truth and start differ in field");
  }
  if (config.max_iters < 0) throw ConfigError("max_iters must be >= 0");

  detail::TraceRecorder recorder;
  SolveTrace trace;
  Signal x = x0;
  unsigned flags = kFlagNone;
  for (int k = 0;; ++k) {
    const double err = relative_error(ensemble, observations, x, truth);
    recorder.record(trace, x, err, objective(ensemble, observations, x), flags);
    if (reached(err, truth, config)) {
      trace.status = SolveStatus::Converged;
      break;
    }
    if (k == config.max_iters) {
      trace.status = SolveStatus::MaxIterations;
      break;
    }
    try {
      if (x.field() == Field::Real) {
        RealStep step = gn_step_real(ensemble, observations, x);
        flags = step.regularized ? kFlagRegularized : kFlagNone;
        x = std::move(step.next);
      } else {
        ComplexStep step = gn_step_complex(ensemble, observations, x);
        flags = step.rank < 2 * x.size() - 1 ? kFlagRankDeficient : kFlagNone;
        x = std::move(step.next);
      }
    } catch (const Error& e) {
      trace.flags.back() |= kFlagStepFailed;
      trace.status = SolveStatus::StepFailed;
      trace.message = e.what();
      break;
    }
    trace.rows_used.push_back({ensemble.row_offset, ensemble.m()});
  }
  return trace;
}

int resample_steps(double epsilon, double c) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw ConfigError("epsilon must lie in (0, 1/2)");
  }
  if (!(c > 0.0)) throw ConfigError("resample constant must be positive");
  const double loglog = std::log2(std::log2(1.0 / epsilon));
  return std::max(1, static_cast<int>(std::ceil(c * loglog)));
}

SolveTrace solve_gn_resampled(const SensingEnsemble& ensemble,
                              const Observations& observations, double epsilon,
                              const std::optional<Signal>& truth,
                              const GNConfig& config) {
  check_compatible(ensemble, observations);
  if (truth) {
    check_compatible(ensemble, *truth);
    if (truth->field() != Field::Real) {
      throw FieldMismatch("re-sampled Gauss-Newton is defined for real signals");
    }
  }
  const int steps = resample_steps(epsilon, config.resample_c);
  const Index blocks = steps + 1;
  const Index rows = ensemble.m() / blocks;
  if (rows < ensemble.n()) {
    throw ConfigError("re-sampling needs m >= (T+1) n = " +
                      std::to_string(blocks * ensemble.n()) + ", got m = " +
                      std::to_string(ensemble.m()));
  }
  const auto parts = partition(ensemble, observations, blocks);

  InitConfig init = config.init;
  init.method = InitMethod::ExpSpectral;
  init.signal_field = Field::Real;
  detail::TraceRecorder recorder;
  const InitResult start =
      init_exp_spectral(parts[0].ensemble, parts[0].observations, init);

  SolveTrace trace;
  Signal x = start.x0;
  unsigned flags = kFlagNone;
  for (int k = 0;; ++k) {
    // Progress is measured on the block that produced x_k.
    const Block& own = parts[static_cast<std::size_t>(k)];
    recorder.record(trace, x,
                    relative_error(own.ensemble, own.observations, x, truth),
                    objective(own.ensemble, own.observations, x), flags);
    if (k == steps) {
      trace.status = truth && trace.rel_errors.back() < config.rel_err_tol
                         ? SolveStatus::Converged
                         : SolveStatus::MaxIterations;
      break;
    }
    const Block& next = parts[static_cast<std::size_t>(k + 1)];
    try {
      RealStep step = gn_step_real(next.ensemble, next.observations, x);
      flags = step.regularized ? kFlagRegularized : kFlagNone;
      x = std::move(step.next);
    } catch (const Error& e) {
      trace.flags.back() |= kFlagStepFailed;
      trace.status = SolveStatus::StepFailed;
      trace.message = e.what();
      break;
    }
    trace.rows_used.push_back({next.ensemble.row_offset, next.ensemble.m()});
  }
  return trace;
}

}  // namespace phasegn
