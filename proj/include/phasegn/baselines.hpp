#ifndef PHASEGN_BASELINES_HPP
#define PHASEGN_BASELINES_HPP

#include <optional>

#include "phasegn/core.hpp"
#include "phasegn/measure.hpp"
#include "phasegn/solver.hpp"

namespace phasegn {

struct BaselineConfig {
  int max_iters = 2500;
  double rel_err_tol = 1e-5;
  double residual_tol = 1e-12;
  double wf_mu_max = 0.2;
  double wf_tau0 = 330.0;
};

/// Wirtinger gradient (1/m) sum_j (|a_j^* x|^2 - y_j) a_j a_j^* x.
ComplexVector wf_gradient(const SensingEnsemble& ensemble,
                          const Observations& observations, const Signal& x);

/// Wirtinger flow: x_{k+1} = x_k - mu_k / ||x_0||^2 * grad, with
/// mu_k = min(1 - exp(-k / tau0), mu_max) for k = 1, 2, ... A real x0 keeps
/// the iterate real by stepping along the real part of the gradient.
SolveTrace wf_solve(const SensingEnsemble& ensemble,
                    const Observations& observations, const Signal& x0,
                    const std::optional<Signal>& truth,
                    const BaselineConfig& config);

/// || |A x| - sqrt(max(y, 0)) ||, the functional alternating minimization
/// decreases.
double amplitude_residual(const SensingEnsemble& ensemble,
                          const Observations& observations, const Signal& x);

/// Error reduction: fix phases p = Ax/|Ax| (1 where Ax = 0), then solve
/// min ||Ax - sqrt(y) p|| in the minimal-norm sense. A real x0 restricts the
/// least-squares substep to real x.
SolveTrace altmin_solve(const SensingEnsemble& ensemble,
                        const Observations& observations, const Signal& x0,
                        const std::optional<Signal>& truth,
                        const BaselineConfig& config);

}  // namespace phasegn

#endif  // PHASEGN_BASELINES_HPP
