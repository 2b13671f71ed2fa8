#include "phasegn/init.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace phasegn {

std::string_view to_string(InitMethod method) {
  switch (method) {
    case InitMethod::ExpSpectral:
      return "exp";
    case InitMethod::Spectral:
      return "si";
    case InitMethod::TruncatedSpectral:
      return "tsi";
    case InitMethod::Null:
      return "ni";
  }
  return "?";
}

InitMethod parse_init_method(std::string_view name) {
  if (name == "exp" || name == "exp-spectral") return InitMethod::ExpSpectral;
  if (name == "si" || name == "spectral") return InitMethod::Spectral;
  if (name == "tsi" || name == "truncated") {
    return InitMethod::TruncatedSpectral;
  }
  if (name == "ni" || name == "null") return InitMethod::Null;
  throw ConfigError("unknown initializer '" + std::string(name) + "'");
}

WeightedOperator::WeightedOperator(const SensingEnsemble& ensemble,
                                   RealVector weights, double scale,
                                   Field signal_field, bool materialize)
    : ensemble_(&ensemble),
      weights_(std::move(weights)),
      scale_(scale),
      signal_field_(signal_field),
      materialized_(materialize) {
  if (weights_.size() != ensemble.m()) {
    throw DimensionMismatch("weighted operator: one weight per row required");
  }
  if (materialized_) matrix_ = dense();
}

ComplexMatrix WeightedOperator::dense() const {
  if (materialized_ && matrix_.size() > 0) return matrix_;
  const ComplexMatrix& a = ensemble_->a;
  if (signal_field_ == Field::Real) {
    const RealMatrix re = a.real();
    const RealMatrix im = a.imag();
    RealMatrix m = re.transpose() * weights_.asDiagonal() * re;
    if (ensemble_->field == Field::Complex) {
      m.noalias() += im.transpose() * weights_.asDiagonal() * im;
    }
    return (scale_ * m).cast<Complex>();
  }
  ComplexMatrix weighted = weights_.cast<Complex>().asDiagonal() * a;
  ComplexMatrix m = a.adjoint() * weighted;
  return scale_ * m;
}

ComplexVector WeightedOperator::operator()(const ComplexVector& v) const {
  if (materialized_) return matrix_ * v;
  const ComplexMatrix& a = ensemble_->a;
  ComplexVector projected = a * v;
  projected.array() *= weights_.array().cast<Complex>();
  ComplexVector out = scale_ * (a.adjoint() * projected);
  if (signal_field_ == Field::Real) out = out.real().cast<Complex>();
  return out;
}

double lambda_squared(const Observations& observations) {
  if (observations.m() < 1) throw DimensionMismatch("no observations");
  const double lsq = observations.y.sum() / static_cast<double>(observations.m());
  if (!(lsq > 0.0) || !std::isfinite(lsq)) {
    throw DegenerateInstance(
        "sum of observations is not positive; lambda is undefined");
  }
  return lsq;
}

RealVector exp_spectral_weights(const Observations& observations,
                                double lambda_sq, bool real_rows_and_signal) {
  const double offset = real_rows_and_signal ? 1.0 / std::sqrt(3.0) : 0.5;
  RealVector w = (offset - (-observations.y.array() / lambda_sq).exp()).matrix();
  return w.cwiseMax(-10.0).cwiseMin(10.0);
}

std::vector<Index> truncated_indices(const Observations& observations,
                                     double beta_y) {
  const double cutoff = beta_y * lambda_squared(observations);
  std::vector<Index> out;
  for (Index j = 0; j < observations.m(); ++j) {
    if (std::abs(observations.y(j)) > cutoff) out.push_back(j);
  }
  return out;
}

std::vector<Index> null_init_indices(const SensingEnsemble& ensemble,
                                     const Observations& observations,
                                     double fraction) {
  check_compatible(ensemble, observations);
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("ni_fraction must lie in (0, 1]");
  }
  const Index m = ensemble.m();
  const auto keep = static_cast<Index>(std::llround(fraction * static_cast<double>(m)));
  if (keep < 1) throw ConfigError("ni_fraction * m rounds to zero rows");

  const RealVector row_norms = ensemble.a.rowwise().squaredNorm();
  RealVector score(m);
  for (Index j = 0; j < m; ++j) {
    score(j) = row_norms(j) > 0.0 ? observations.y(j) / row_norms(j) : 0.0;
  }
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index l, Index r) { return score(l) > score(r); });
  order.resize(static_cast<std::size_t>(keep));
  std::sort(order.begin(), order.end());
  return order;
}

namespace {

void check_fields(const SensingEnsemble& ensemble, const InitConfig& config) {
  if (ensemble.field == Field::Real && config.signal_field == Field::Complex) {
    throw FieldMismatch("complex signal model with a real ensemble");
  }
  if (config.power_iters < 1) throw ConfigError("power_iters must be >= 1");
}

InitResult top_eigvec_scaled(const SensingEnsemble& ensemble,
                             RealVector weights, double scale, double lambda,
                             const InitConfig& config) {
  const bool materialize = ensemble.n() <= config.materialize_limit;
  WeightedOperator op(ensemble, std::move(weights), scale, config.signal_field,
                      materialize);
  PowerOptions options;
  options.iters = config.power_iters;
  options.tol = config.power_tol;
  options.seed = config.power_seed;
  options.field = config.signal_field;
  PowerResult power = power_iteration(
      [&op](const ComplexVector& v) { return op(v); }, ensemble.n(), options);
  ComplexVector x = power.vector * lambda;
  if (config.signal_field == Field::Real) x = x.real().cast<Complex>();
  return InitResult{Signal(std::move(x), config.signal_field), lambda,
                    materialize ? 1 : 0, std::move(power)};
}

}  // namespace

InitResult init_exp_spectral(const SensingEnsemble& ensemble,
                             const Observations& observations,
                             const InitConfig& config) {
  check_compatible(ensemble, observations);
  check_fields(ensemble, config);
  const double lsq = lambda_squared(observations);
  const bool all_real = ensemble.field == Field::Real &&
                        config.signal_field == Field::Real;
  return top_eigvec_scaled(ensemble,
                           exp_spectral_weights(observations, lsq, all_real),
                           1.0 / static_cast<double>(ensemble.m()),
                           std::sqrt(lsq), config);
}

InitResult init_spectral(const SensingEnsemble& ensemble,
                         const Observations& observations,
                         const InitConfig& config) {
  check_compatible(ensemble, observations);
  check_fields(ensemble, config);
  const double lsq = lambda_squared(observations);
  return top_eigvec_scaled(ensemble, observations.y,
                           1.0 / static_cast<double>(ensemble.m()),
                           std::sqrt(lsq), config);
}

InitResult init_truncated_spectral(const SensingEnsemble& ensemble,
                                   const Observations& observations,
                                   const InitConfig& config) {
  check_compatible(ensemble, observations);
  check_fields(ensemble, config);
  if (!(config.tsi_beta_y > 0.0)) throw ConfigError("tsi_beta_y must be > 0");
  const double lsq = lambda_squared(observations);
  RealVector weights = observations.y;
  const auto dropped = truncated_indices(observations, config.tsi_beta_y);
  if (static_cast<Index>(dropped.size()) == observations.m()) {
    throw DegenerateInstance("truncation removed every observation");
  }
  for (Index j : dropped) weights(j) = 0.0;
  return top_eigvec_scaled(ensemble, std::move(weights),
                           1.0 / static_cast<double>(ensemble.m()),
                           std::sqrt(lsq), config);
}

InitResult init_null(const SensingEnsemble& ensemble,
                     const Observations& observations,
                     const InitConfig& config) {
  check_compatible(ensemble, observations);
  check_fields(ensemble, config);
  const double lsq = lambda_squared(observations);
  const auto selected =
      null_init_indices(ensemble, observations, config.ni_fraction);
  RealVector weights = RealVector::Zero(ensemble.m());
  for (Index j : selected) weights(j) = 1.0;
  return top_eigvec_scaled(ensemble, std::move(weights),
                           1.0 / static_cast<double>(selected.size()),
                           std::sqrt(lsq), config);
}

InitResult initialize(const SensingEnsemble& ensemble,
                      const Observations& observations,
                      const InitConfig& config) {
  switch (config.method) {
    case InitMethod::ExpSpectral:
      return init_exp_spectral(ensemble, observations, config);
    case InitMethod::Spectral:
      return init_spectral(ensemble, observations, config);
    case InitMethod::TruncatedSpectral:
      return init_truncated_spectral(ensemble, observations, config);
    case InitMethod::Null:
      return init_null(ensemble, observations, config);
  }
  throw ConfigError("unknown initializer");
}

}  // namespace phasegn
