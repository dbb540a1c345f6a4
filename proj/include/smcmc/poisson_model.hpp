#pragma once

#include "smcmc/gh.hpp"
#include "smcmc/model.hpp"
#include "smcmc/sensor_grid.hpp"

namespace smcmc {

struct PoissonObsParams {
  double m1 = 1.0;
  double m2 = 1.0 / 3.0;

  void validate() const;
};

/// Skewed-t field over a sensor grid: dispersion from build_dispersion, constant
/// skewness `gamma` at every site.
GhParams skewed_t_field(const SensorGrid& grid, double nu, double gamma, double alpha,
                        double alpha0, double alpha1, double beta);

/// GH skewed-t dynamics with Poisson counts:
///   x_n ~ GH(mu = alpha x_{n-1}, Sigma, gamma, lambda, chi, psi)
///   y_n(k) ~ Poisson(m1 exp(m2 x_n(k)))
/// The metric is the Gaussian approximation G(x) = Lambda(x) + Sigma~^-1 where
/// Lambda(x) is the expected Fisher information of the counts and Sigma~ the
/// transition covariance.
class PoissonModel final : public StateSpaceModel {
 public:
  PoissonModel(GhParams gh, PoissonObsParams obs);

  std::string name() const override { return "poisson"; }
  Index dimension() const override { return dist_.dimension(); }

  double log_transition(const StateVector& x, const StateVector& x_prev) const override;
  double log_likelihood(const Observation& y, const StateVector& x) const override;
  Vector grad_log_transition(const StateVector& x, const StateVector& x_prev) const override;
  Vector grad_log_likelihood(const Observation& y, const StateVector& x) const override;
  StateVector sample_transition(const StateVector& x_prev, Rng& rng) const override;
  Observation sample_observation(const StateVector& x, Rng& rng) const override;
  StateVector transition_mean(const StateVector& x_prev) const override;
  const Matrix& transition_covariance() const override { return covariance_; }

  MetricBundle metric(const StateVector& x, const StateVector& x_prev,
                      MetricDetail detail) const override;
  bool metric_is_constant() const override { return false; }
  bool metric_depends_on_previous() const override { return false; }

  bool likelihood_is_separable() const override { return true; }
  double log_likelihood_block(const Observation& y, const StateVector& x,
                              const std::vector<Index>& block) const override;

  bool has_conditional_transition() const override { return true; }
  Vector sample_conditional_transition(const std::vector<Index>& block, const StateVector& x,
                                       const StateVector& x_prev, Rng& rng) const override;

  /// Diagonal of Lambda(x): m1 m2^2 exp(m2 x(k)).
  Vector fisher_diagonal(const StateVector& x) const;

  const GhDistribution& distribution() const { return dist_; }
  const PoissonObsParams& observation_params() const { return obs_; }
  const Matrix& covariance_inverse() const { return covariance_inv_; }

 private:
  Vector mean_counts(const StateVector& x) const;

  GhDistribution dist_;
  PoissonObsParams obs_;
  Matrix covariance_;
  Matrix covariance_inv_;
};

}  // namespace smcmc
