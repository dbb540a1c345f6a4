#pragma once

#include "smcmc/model.hpp"
#include "smcmc/sensor_grid.hpp"

namespace smcmc {

struct GaussianModelParams {
  double alpha = 0.9;     ///< AR coefficient of the field
  double sigma_y2 = 2.0;  ///< sensor noise variance
  double alpha0 = 3.0;    ///< dispersion amplitude
  double alpha1 = 0.01;   ///< dispersion nugget
  double beta = 20.0;     ///< dispersion length scale (squared distance units)

  void validate() const;
};

/// Linear-Gaussian spatial field:
///   x_n = alpha x_{n-1} + w,  w ~ N(0, Sigma)
///   y_n = x_n + v,            v ~ N(0, sigma_y2 I)
/// with the constant metric G = I/sigma_y2 + Sigma^-1.
class GaussianModel final : public StateSpaceModel {
 public:
  GaussianModel(GaussianModelParams params, const SensorGrid& grid);
  /// Direct construction from a dispersion matrix (used by tests at d = 1).
  GaussianModel(GaussianModelParams params, Matrix sigma);

  std::string name() const override { return "gaussian"; }
  Index dimension() const override { return sigma_.rows(); }

  double log_transition(const StateVector& x, const StateVector& x_prev) const override;
  double log_likelihood(const Observation& y, const StateVector& x) const override;
  Vector grad_log_transition(const StateVector& x, const StateVector& x_prev) const override;
  Vector grad_log_likelihood(const Observation& y, const StateVector& x) const override;
  StateVector sample_transition(const StateVector& x_prev, Rng& rng) const override;
  Observation sample_observation(const StateVector& x, Rng& rng) const override;
  StateVector transition_mean(const StateVector& x_prev) const override {
    return params_.alpha * x_prev;
  }
  const Matrix& transition_covariance() const override { return sigma_; }

  MetricBundle metric(const StateVector& x, const StateVector& x_prev,
                      MetricDetail detail) const override;
  bool metric_is_constant() const override { return true; }
  bool metric_depends_on_previous() const override { return false; }

  bool likelihood_is_separable() const override { return true; }
  double log_likelihood_block(const Observation& y, const StateVector& x,
                              const std::vector<Index>& block) const override;

  bool has_conditional_transition() const override { return true; }
  Vector sample_conditional_transition(const std::vector<Index>& block, const StateVector& x,
                                       const StateVector& x_prev, Rng& rng) const override;

  /// log p(y_n | x_{n-1}) = log N(y; alpha x_prev, Sigma + sigma_y2 I)
  double log_predictive_likelihood(const Observation& y, const StateVector& x_prev) const;
  /// Mean of p(x_n | y_n, x_{n-1}); the covariance is metric_inverse().
  Vector optimal_proposal_mean(const Observation& y, const StateVector& x_prev) const;
  /// Draw from p(x_n | y_n, x_{n-1}).
  StateVector sample_optimal_proposal(const Observation& y, const StateVector& x_prev,
                                      Rng& rng) const;

  const GaussianModelParams& params() const { return params_; }
  const Matrix& sigma() const { return sigma_; }
  const Matrix& precision() const { return precision_; }
  const MetricBundle& constant_metric() const { return metric_; }

 private:
  void initialize();

  GaussianModelParams params_;
  Matrix sigma_;
  Eigen::LLT<Matrix> sigma_llt_;
  Matrix precision_;
  double sigma_log_det_ = 0.0;
  MetricBundle metric_;
  Eigen::LLT<Matrix> predictive_llt_;
};

}  // namespace smcmc
