#include "smcmc/gaussian_model.hpp"

#include <cmath>

namespace smcmc {

void GaussianModelParams::validate() const {
  if (!(sigma_y2 > 0.0)) {
    throw std::invalid_argument("GaussianModelParams: sigma_y2 must be positive");
  }
  if (!(alpha1 > 0.0) || !(alpha0 > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("GaussianModelParams: alpha0, alpha1, beta must be positive");
  }
  if (!std::isfinite(alpha)) {
    throw std::invalid_argument("GaussianModelParams: alpha must be finite");
  }
}

GaussianModel::GaussianModel(GaussianModelParams params, const SensorGrid& grid)
    : params_(params) {
  params_.validate();
  Dispersion disp = build_dispersion(grid, params_.alpha0, params_.alpha1, params_.beta);
  sigma_ = std::move(disp.sigma);
  initialize();
}

GaussianModel::GaussianModel(GaussianModelParams params, Matrix sigma)
    : params_(params), sigma_(std::move(sigma)) {
  if (!(params_.sigma_y2 > 0.0)) {
    throw std::invalid_argument("GaussianModelParams: sigma_y2 must be positive");
  }
  initialize();
}

void GaussianModel::initialize() {
  sigma_llt_.compute(sigma_);
  if (sigma_llt_.info() != Eigen::Success) {
    throw NumericalError("GaussianModel: dispersion matrix is not positive definite");
  }
  sigma_log_det_ = log_det_from_llt(sigma_llt_);
  precision_ = inverse_from_llt(sigma_llt_);
  Matrix g = precision_;
  g.diagonal().array() += 1.0 / params_.sigma_y2;
  metric_ = MetricBundle::from_metric(std::move(g), MetricDetail::inverse);
  Matrix s = sigma_;
  s.diagonal().array() += params_.sigma_y2;
  predictive_llt_.compute(s);
}

double GaussianModel::log_transition(const StateVector& x, const StateVector& x_prev) const {
  require_dimension(x.size(), dimension(), "GaussianModel::log_transition");
  const Vector r = x - params_.alpha * x_prev;
  const Vector w = sigma_llt_.matrixL().solve(r);
  return -0.5 * (static_cast<double>(dimension()) * kLog2Pi + sigma_log_det_ + w.squaredNorm());
}

double GaussianModel::log_likelihood(const Observation& y, const StateVector& x) const {
  require_dimension(y.size(), dimension(), "GaussianModel::log_likelihood");
  const double d = static_cast<double>(dimension());
  return -0.5 * (d * std::log(2.0 * M_PI * params_.sigma_y2) +
                 (y - x).squaredNorm() / params_.sigma_y2);
}

Vector GaussianModel::grad_log_transition(const StateVector& x, const StateVector& x_prev) const {
  return -(precision_ * (x - params_.alpha * x_prev));
}

Vector GaussianModel::grad_log_likelihood(const Observation& y, const StateVector& x) const {
  return (y - x) / params_.sigma_y2;
}

StateVector GaussianModel::sample_transition(const StateVector& x_prev, Rng& rng) const {
  const Vector z = rng.normal_vector(dimension());
  return params_.alpha * x_prev + sigma_llt_.matrixL() * z;
}

Observation GaussianModel::sample_observation(const StateVector& x, Rng& rng) const {
  return x + std::sqrt(params_.sigma_y2) * rng.normal_vector(dimension());
}

MetricBundle GaussianModel::metric(const StateVector&, const StateVector&, MetricDetail) const {
  return metric_;
}

double GaussianModel::log_likelihood_block(const Observation& y, const StateVector& x,
                                           const std::vector<Index>& block) const {
  double s = 0.0;
  for (Index k : block) {
    const double r = y(k) - x(k);
    s += r * r;
  }
  const double n = static_cast<double>(block.size());
  return -0.5 * (n * std::log(2.0 * M_PI * params_.sigma_y2) + s / params_.sigma_y2);
}

Vector GaussianModel::sample_conditional_transition(const std::vector<Index>& block,
                                                    const StateVector& x,
                                                    const StateVector& x_prev, Rng& rng) const {
  const auto b = static_cast<Index>(block.size());
  const Vector r = x - params_.alpha * x_prev;
  // x_B | x_rest ~ N(mu_B - P_BB^-1 P_B,rest r_rest, P_BB^-1) in precision form.
  Matrix p_bb(b, b);
  Vector t(b);
  for (Index i = 0; i < b; ++i) {
    t(i) = precision_.row(block[i]).dot(r);
    for (Index j = 0; j < b; ++j) {
      p_bb(i, j) = precision_(block[i], block[j]);
    }
  }
  Vector r_b(b);
  Vector mu_b(b);
  for (Index i = 0; i < b; ++i) {
    r_b(i) = r(block[i]);
    mu_b(i) = params_.alpha * x_prev(block[i]);
  }
  t -= p_bb * r_b;
  Eigen::LLT<Matrix> llt(p_bb);
  const Vector mean = mu_b - llt.solve(t);
  const Vector z = rng.normal_vector(b);
  return mean + llt.matrixU().solve(z);
}

double GaussianModel::log_predictive_likelihood(const Observation& y,
                                                const StateVector& x_prev) const {
  return mvn_log_density(y, params_.alpha * x_prev, predictive_llt_);
}

Vector GaussianModel::optimal_proposal_mean(const Observation& y, const StateVector& x_prev) const {
  const Vector rhs = precision_ * (params_.alpha * x_prev) + y / params_.sigma_y2;
  return metric_.solve(rhs);
}

StateVector GaussianModel::sample_optimal_proposal(const Observation& y, const StateVector& x_prev,
                                                   Rng& rng) const {
  const Vector z = rng.normal_vector(dimension());
  return optimal_proposal_mean(y, x_prev) + metric_.inverse_sqrt_times(z);
}

}  // namespace smcmc
