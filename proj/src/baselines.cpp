#include "phasegn/baselines.hpp"

#include <cmath>

#include "trace_recorder.hpp"

namespace phasegn {

namespace {

void check_config(const BaselineConfig& config) {
  if (config.max_iters < 0 || !(config.rel_err_tol > 0.0) ||
      !(config.residual_tol > 0.0) || !(config.wf_mu_max > 0.0) ||
      !(config.wf_tau0 > 0.0)) {
    throw ConfigError("baseline configuration values must be positive");
  }
}

void check_inputs(const SensingEnsemble& ensemble,
                  const Observations& observations, const Signal& x0,
                  const std::optional<Signal>& truth) {
  check_compatible(ensemble, observations);
  check_compatible(ensemble, x0);
  if (truth && truth->field() != x0.field()) {
    throw FieldMismatch("truth and start differ in field");
  }
}

bool reached(double err, const std::optional<Signal>& truth,
             const BaselineConfig& config) {
  return err < (truth ? config.rel_err_tol : config.residual_tol);
}

}  // namespace

ComplexVector wf_gradient(const SensingEnsemble& ensemble,
                          const Observations& observations, const Signal& x) {
  check_compatible(ensemble, observations);
  check_compatible(ensemble, x);
  ComplexVector r = ensemble.a * x.values();
  const RealVector resid = r.cwiseAbs2() - observations.y;
  r.array() *= resid.array().cast<Complex>();
  return (ensemble.a.adjoint() * r) / static_cast<double>(ensemble.m());
}

SolveTrace wf_solve(const SensingEnsemble& ensemble,
                    const Observations& observations, const Signal& x0,
                    const std::optional<Signal>& truth,
                    const BaselineConfig& config) {
  check_config(config);
  check_inputs(ensemble, observations, x0, truth);
  const double x0_sq = x0.values().squaredNorm();
  if (!(x0_sq > 0.0)) {
    throw DegenerateInstance("Wirtinger flow needs a nonzero start");
  }

  detail::TraceRecorder recorder;
  SolveTrace trace;
  Signal x = x0;
  double initial_residual = 0.0;
  for (int k = 0;; ++k) {
    const double err = relative_error(ensemble, observations, x, truth);
    const double f = objective(ensemble, observations, x);
    if (k == 0) initial_residual = f;
    recorder.record(trace, x, err, f, kFlagNone);
    if (!std::isfinite(f) ||
        (initial_residual > 0.0 && f > 1e6 * initial_residual)) {
      trace.flags.back() |= kFlagDiverged;
      trace.status = SolveStatus::Diverged;
      trace.message = "residual exceeded 1e6 times its initial value";
      break;
    }
    if (reached(err, truth, config)) {
      trace.status = SolveStatus::Converged;
      break;
    }
    if (k == config.max_iters) {
      trace.status = SolveStatus::MaxIterations;
      break;
    }
    ComplexVector grad = wf_gradient(ensemble, observations, x);
    if (x.field() == Field::Real) grad = grad.real().cast<Complex>();
    const double mu = std::min(
        1.0 - std::exp(-static_cast<double>(k + 1) / config.wf_tau0),
        config.wf_mu_max);
    ComplexVector next = x.values() - (mu / x0_sq) * grad;
    if (!next.allFinite()) {
      trace.flags.back() |= kFlagDiverged;
      trace.status = SolveStatus::Diverged;
      trace.message = "non-finite iterate";
      break;
    }
    x = Signal(std::move(next), x.field());
    trace.rows_used.push_back({ensemble.row_offset, ensemble.m()});
  }
  return trace;
}

double amplitude_residual(const SensingEnsemble& ensemble,
                          const Observations& observations, const Signal& x) {
  check_compatible(ensemble, observations);
  check_compatible(ensemble, x);
  const RealVector mags = (ensemble.a * x.values()).cwiseAbs();
  return (mags - observations.y.cwiseMax(0.0).cwiseSqrt()).norm();
}

SolveTrace altmin_solve(const SensingEnsemble& ensemble,
                        const Observations& observations, const Signal& x0,
                        const std::optional<Signal>& truth,
                        const BaselineConfig& config) {
  check_config(config);
  check_inputs(ensemble, observations, x0, truth);
  const Index m = ensemble.m();
  const Index n = ensemble.n();
  const bool real_model = x0.field() == Field::Real;
  const RealVector amplitude = observations.y.cwiseMax(0.0).cwiseSqrt();

  // The matrix never changes, so one factorization serves every substep.
  std::optional<MinNormSolver<double>> real_solver;
  std::optional<MinNormSolver<Complex>> complex_solver;
  Index rank = 0;
  if (real_model) {
    RealMatrix stacked(2 * m, n);
    stacked.topRows(m) = ensemble.a.real();
    stacked.bottomRows(m) = ensemble.a.imag();
    real_solver.emplace(stacked);
    rank = real_solver->rank();
  } else {
    complex_solver.emplace(ensemble.a);
    rank = complex_solver->rank();
  }
  const unsigned rank_flag = rank < n ? kFlagRankDeficient : kFlagNone;

  detail::TraceRecorder recorder;
  SolveTrace trace;
  Signal x = x0;
  for (int k = 0;; ++k) {
    const double err = relative_error(ensemble, observations, x, truth);
    recorder.record(trace, x, err, objective(ensemble, observations, x),
                    k == 0 ? kFlagNone : rank_flag);
    if (reached(err, truth, config)) {
      trace.status = SolveStatus::Converged;
      break;
    }
    if (k == config.max_iters) {
      trace.status = SolveStatus::MaxIterations;
      break;
    }
    const ComplexVector proj = ensemble.a * x.values();
    ComplexVector target(m);
    for (Index j = 0; j < m; ++j) {
      const double mag = std::abs(proj(j));
      const Complex phase = mag > 0.0 ? proj(j) / mag : Complex(1.0, 0.0);
      target(j) = amplitude(j) * phase;
    }
    if (real_model) {
      RealVector rhs(2 * m);
      rhs.head(m) = target.real();
      rhs.tail(m) = target.imag();
      x = Signal::real(real_solver->solve(rhs));
    } else {
      x = Signal::complex(complex_solver->solve(target));
    }
    trace.rows_used.push_back({ensemble.row_offset, ensemble.m()});
  }
  return trace;
}

}  // namespace phasegn
