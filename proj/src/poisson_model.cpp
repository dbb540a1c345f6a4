#include "smcmc/poisson_model.hpp"

#include "smcmc/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace smcmc {

namespace {

bool is_count(double y) { return y >= 0.0 && std::isfinite(y) && y == std::floor(y); }

double log_poisson(double y, double log_mean, double mean) {
  if (!is_count(y)) {
    return -std::numeric_limits<double>::infinity();
  }
  return y * log_mean - mean - std::lgamma(y + 1.0);
}

}  // namespace

void PoissonObsParams::validate() const {
  if (!(m1 > 0.0) || !std::isfinite(m1)) {
    throw std::invalid_argument("PoissonObsParams: m1 must be positive");
  }
  if (m2 == 0.0 || !std::isfinite(m2)) {
    throw std::invalid_argument("PoissonObsParams: m2 must be finite and non-zero");
  }
}

GhParams skewed_t_field(const SensorGrid& grid, double nu, double gamma, double alpha,
                        double alpha0, double alpha1, double beta) {
  Dispersion disp = build_dispersion(grid, alpha0, alpha1, beta);
  return GhParams::skewed_t(nu, Vector::Constant(grid.size(), gamma), std::move(disp.sigma),
                            alpha);
}

PoissonModel::PoissonModel(GhParams gh, PoissonObsParams obs)
    : dist_(std::move(gh)), obs_(obs) {
  obs_.validate();
  covariance_ = gh_covariance(dist_.params());
  const JitteredCholesky c = cholesky_with_jitter(covariance_);
  covariance_inv_ = inverse_from_llt(c.llt);
}

Vector PoissonModel::mean_counts(const StateVector& x) const {
  Vector m = obs_.m1 * (obs_.m2 * x.array()).exp();
  for (Index k = 0; k < m.size(); ++k) {
    if (!std::isfinite(m(k))) {
      std::ostringstream msg;
      msg << "poisson: likelihood mean overflow at site " << k << " (x = " << x(k) << ")";
      throw ModelError(msg.str());
    }
  }
  return m;
}

Vector PoissonModel::fisher_diagonal(const StateVector& x) const {
  return obs_.m2 * obs_.m2 * mean_counts(x);
}

double PoissonModel::log_transition(const StateVector& x, const StateVector& x_prev) const {
  return dist_.log_pdf(x, transition_mean(x_prev));
}

double PoissonModel::log_likelihood(const Observation& y, const StateVector& x) const {
  require_dimension(y.size(), dimension(), "PoissonModel::log_likelihood y");
  require_dimension(x.size(), dimension(), "PoissonModel::log_likelihood x");
  const Vector m = mean_counts(x);
  const double log_m1 = std::log(obs_.m1);
  double s = 0.0;
  for (Index k = 0; k < x.size(); ++k) {
    s += log_poisson(y(k), log_m1 + obs_.m2 * x(k), m(k));
  }
  return s;
}

double PoissonModel::log_likelihood_block(const Observation& y, const StateVector& x,
                                          const std::vector<Index>& block) const {
  const double log_m1 = std::log(obs_.m1);
  double s = 0.0;
  for (Index k : block) {
    const double eta = log_m1 + obs_.m2 * x(k);
    const double m = std::exp(eta);
    if (!std::isfinite(m)) {
      throw ModelError("poisson: likelihood mean overflow in block");
    }
    s += log_poisson(y(k), eta, m);
  }
  return s;
}

Vector PoissonModel::grad_log_transition(const StateVector& x, const StateVector& x_prev) const {
  return dist_.grad_log_pdf(x, transition_mean(x_prev));
}

Vector PoissonModel::grad_log_likelihood(const Observation& y, const StateVector& x) const {
  require_dimension(y.size(), dimension(), "PoissonModel::grad_log_likelihood y");
  return obs_.m2 * (y - mean_counts(x));
}

StateVector PoissonModel::sample_transition(const StateVector& x_prev, Rng& rng) const {
  return dist_.sample(transition_mean(x_prev), rng);
}

Observation PoissonModel::sample_observation(const StateVector& x, Rng& rng) const {
  const Vector m = mean_counts(x);
  Observation y(m.size());
  for (Index k = 0; k < m.size(); ++k) {
    y(k) = static_cast<double>(rng.poisson(m(k)));
  }
  return y;
}

StateVector PoissonModel::transition_mean(const StateVector& x_prev) const {
  require_dimension(x_prev.size(), dimension(), "PoissonModel::transition_mean");
  return dist_.params().alpha * x_prev;
}

MetricBundle PoissonModel::metric(const StateVector& x, const StateVector&,
                                  MetricDetail detail) const {
  require_dimension(x.size(), dimension(), "PoissonModel::metric");
  const Vector lambda = fisher_diagonal(x);
  Matrix g = covariance_inv_;
  g.diagonal() += lambda;
  MetricDerivative dg;
  if (detail == MetricDetail::derivative) {
    dg = MetricDerivative::diagonal(obs_.m2 * lambda);
  }
  return MetricBundle::from_metric(std::move(g), detail, std::move(dg));
}

Vector PoissonModel::sample_conditional_transition(const std::vector<Index>& block,
                                                   const StateVector& x,
                                                   const StateVector& x_prev, Rng& rng) const {
  return dist_.sample_conditional(block, x, transition_mean(x_prev), rng);
}

}  // namespace smcmc
