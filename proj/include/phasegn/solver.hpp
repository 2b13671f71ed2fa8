#ifndef PHASEGN_SOLVER_HPP
#define PHASEGN_SOLVER_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phasegn/core.hpp"
#include "phasegn/init.hpp"
#include "phasegn/measure.hpp"

namespace phasegn {

struct GNConfig {
  int max_iters = 100;
  double rel_err_tol = 1e-5;
  // Stop criterion without ground truth: sqrt(2 f(x)) / ||y||.
  double residual_tol = 1e-12;
  double epsilon_target = 1e-3;
  double resample_c = 3.0;
  InitConfig init;
};

// Per-iteration event bits.
enum StepFlag : unsigned {
  kFlagNone = 0,
  kFlagRegularized = 1u << 0,
  kFlagRankDeficient = 1u << 1,
  kFlagStepFailed = 1u << 2,
  kFlagDiverged = 1u << 3,
};

std::string flags_to_string(unsigned flags);

enum class SolveStatus { Converged, MaxIterations, StepFailed, Diverged };

std::string_view to_string(SolveStatus status);

struct RowRange {
  Index first = 0;
  Index count = 0;
};

/// Iterate history of one solve. Entry k describes x_k; entry 0 is the
/// starting point.
struct SolveTrace {
  std::vector<Signal> iterates;
  std::vector<double> rel_errors;
  std::vector<double> residuals;
  std::vector<double> wall_times;  // seconds since the solve started
  std::vector<unsigned> flags;
  // Rows (in the caller's original ensemble) that produced iterate k + 1.
  std::vector<RowRange> rows_used;
  SolveStatus status = SolveStatus::MaxIterations;
  std::string message;

  std::size_t size() const noexcept { return iterates.size(); }
  const Signal& last() const { return iterates.back(); }
  /// Number of update steps taken.
  int steps() const noexcept { return static_cast<int>(iterates.size()) - 1; }
  /// First index whose rel_error is below tol, or nullopt.
  std::optional<int> first_below(double tol) const;
};

/// iter,rel_err,residual,wall_ms,flags
void write_trace_csv(std::ostream& out, const SolveTrace& trace);

/// f(x) = 1/(2m) sum_j (|a_j^* x|^2 - y_j)^2. Neumaier summation past 1e5 rows.
double objective(const SensingEnsemble& ensemble,
                 const Observations& observations, const Signal& x);

/// J^T J = (4/m) G^T G with G_j = (a_jR^T x) a_jR^T + (a_jI^T x) a_jI^T.
RealMatrix gn_normal_matrix(const SensingEnsemble& ensemble,
                            const Signal& x);

/// grad f = (2/m) sum_j ((a_jR^T x)^2 + (a_jI^T x)^2 - y_j) G_j^T.
RealVector gn_gradient(const SensingEnsemble& ensemble,
                       const Observations& observations, const Signal& x);

struct RealStep {
  Signal next;
  RealVector direction;
  bool regularized = false;
};

/// x_{k+1} = x_k - (J^T J)^{-1} grad f(x_k), solved through solve_spd.
/// Throws SingularSystem when the normal matrix cannot be factored.
RealStep gn_step_real(const SensingEnsemble& ensemble,
                      const Observations& observations, const Signal& x);

/// Linearized system of the complex step: A_k = (J, conj(J)) with rows
/// (x^* a_j a_j^*, x^T conj(a_j) a_j^T), residual F_j = |a_j^* x|^2 - y_j.
struct ComplexSystem {
  ComplexMatrix jacobian;  // m x 2n
  RealVector residual;     // m
};

ComplexSystem complex_step_system(const SensingEnsemble& ensemble,
                                  const Observations& observations,
                                  const Signal& x);

struct ComplexStep {
  Signal next;
  ComplexVector correction;  // full length-2n minimal-norm solution
  Index rank = 0;
};

/// x_{k+1} = x_k + u(1:n), u = -pinv(A_k) F. Throws DegenerateInstance when
/// every singular value is truncated.
ComplexStep gn_step_complex(const SensingEnsemble& ensemble,
                            const Observations& observations,
                            const Signal& x);

/// Plain Gauss-Newton driver; the step variant follows x0's field.
SolveTrace solve_gn(const SensingEnsemble& ensemble,
                    const Observations& observations, const Signal& x0,
                    const std::optional<Signal>& truth,
                    const GNConfig& config);

/// T = max(1, ceil(c * log2(log2(1 / epsilon)))).
int resample_steps(double epsilon, double c);

/// Re-sampled driver for real signals: T + 1 equal disjoint row blocks,
/// initialization on block 0, step k on block k + 1. The trace always holds
/// T + 1 iterates unless a step fails.
SolveTrace solve_gn_resampled(const SensingEnsemble& ensemble,
                              const Observations& observations, double epsilon,
                              const std::optional<Signal>& truth,
                              const GNConfig& config);

/// Relative error of x: dist(x, truth) / ||truth|| when truth is known,
/// otherwise sqrt(2 f(x)) / ||y||.
double relative_error(const SensingEnsemble& ensemble,
                      const Observations& observations, const Signal& x,
                      const std::optional<Signal>& truth);

}  // namespace phasegn

#endif  // PHASEGN_SOLVER_HPP
