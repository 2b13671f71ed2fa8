#ifndef PHASEGN_INIT_HPP
#define PHASEGN_INIT_HPP

#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

#include "phasegn/core.hpp"
#include "phasegn/measure.hpp"

namespace phasegn {

enum class InitMethod { ExpSpectral, Spectral, TruncatedSpectral, Null };

std::string_view to_string(InitMethod method);
InitMethod parse_init_method(std::string_view name);

struct InitConfig {
  InitMethod method = InitMethod::ExpSpectral;
  int power_iters = 50;
  double power_tol = 1e-10;
  double tsi_beta_y = 9.0;
  double ni_fraction = 0.5;
  Field signal_field = Field::Complex;
  std::uint64_t power_seed = 0;
  // Above this dimension the weighted matrix is applied as an operator.
  Index materialize_limit = 512;
};

struct InitResult {
  Signal x0;
  double lambda = 0.0;
  int matrix_builds = 0;
  PowerResult power;
};

/// Weighted second-moment operator v -> (1/m) sum_j w_j a_j a_j^* v.
///
/// For a Real signal field the real part of the matrix is used (real rows
/// make this a no-op). Below `materialize_limit` the n x n matrix is built
/// once; otherwise every application streams over the rows.
class WeightedOperator {
 public:
  WeightedOperator(const SensingEnsemble& ensemble, RealVector weights,
                   double scale, Field signal_field, bool materialize);

  ComplexVector operator()(const ComplexVector& v) const;
  bool materialized() const noexcept { return materialized_; }
  /// Dense form of the operator (built on demand if not materialized).
  ComplexMatrix dense() const;

 private:
  const SensingEnsemble* ensemble_;
  RealVector weights_;
  double scale_;
  Field signal_field_;
  bool materialized_;
  ComplexMatrix matrix_;
};

/// lambda^2 = sum(y) / m. Throws DegenerateInstance when it is not positive.
double lambda_squared(const Observations& observations);

/// Weights of the exponential spectral matrix: 1/2 - exp(-y_j / lambda^2), or
/// 1/sqrt(3) - exp(...) when both the rows and the signal are real. Clamped to
/// [-10, 10].
RealVector exp_spectral_weights(const Observations& observations,
                                double lambda_sq, bool real_rows_and_signal);

/// Indices removed by truncation: {j : |y_j| > beta_y * lambda^2}.
std::vector<Index> truncated_indices(const Observations& observations,
                                     double beta_y);

/// The round(fraction * m) indices with the largest y_j / ||a_j||^2, ties
/// resolved toward the lower index. Returned in ascending order.
std::vector<Index> null_init_indices(const SensingEnsemble& ensemble,
                                     const Observations& observations,
                                     double fraction);

InitResult init_exp_spectral(const SensingEnsemble& ensemble,
                             const Observations& observations,
                             const InitConfig& config);
InitResult init_spectral(const SensingEnsemble& ensemble,
                         const Observations& observations,
                         const InitConfig& config);
InitResult init_truncated_spectral(const SensingEnsemble& ensemble,
                                   const Observations& observations,
                                   const InitConfig& config);
InitResult init_null(const SensingEnsemble& ensemble,
                     const Observations& observations,
                     const InitConfig& config);

/// Dispatch on config.method.
InitResult initialize(const SensingEnsemble& ensemble,
                      const Observations& observations,
                      const InitConfig& config);

}  // namespace phasegn

#endif  // PHASEGN_INIT_HPP
