#pragma once

#include "smcmc/gaussian_model.hpp"
#include "smcmc/kalman.hpp"
#include "smcmc/model.hpp"
#include "smcmc/rng.hpp"

#include <cmath>
#include <vector>

namespace testing {

using namespace smcmc;

struct Simulated {
  std::vector<StateVector> states;
  std::vector<Observation> ys;
};

inline Simulated simulate(const StateSpaceModel& model, int steps, Rng& rng) {
  Simulated s;
  StateVector x = model.initial_anchor();
  for (int n = 0; n < steps; ++n) {
    x = model.sample_transition(x, rng);
    s.states.push_back(x);
    s.ys.push_back(model.sample_observation(x, rng));
  }
  return s;
}

inline GaussianModel scalar_gaussian(double sigma2 = 3.01) {
  return GaussianModel(GaussianModelParams{}, Matrix::Constant(1, 1, sigma2));
}

/// Standard normal CDF.
inline double phi(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

/// Forwards everything to another model but keeps the base-class capability
/// defaults: non-separable likelihood, no conditional transition.
class OpaqueModel final : public StateSpaceModel {
 public:
  explicit OpaqueModel(const StateSpaceModel& inner) : inner_(&inner) {}
  std::string name() const override { return "opaque"; }
  Index dimension() const override { return inner_->dimension(); }
  double log_transition(const StateVector& x, const StateVector& p) const override {
    return inner_->log_transition(x, p);
  }
  double log_likelihood(const Observation& y, const StateVector& x) const override {
    return inner_->log_likelihood(y, x);
  }
  Vector grad_log_transition(const StateVector& x, const StateVector& p) const override {
    return inner_->grad_log_transition(x, p);
  }
  Vector grad_log_likelihood(const Observation& y, const StateVector& x) const override {
    return inner_->grad_log_likelihood(y, x);
  }
  StateVector sample_transition(const StateVector& p, Rng& rng) const override {
    return inner_->sample_transition(p, rng);
  }
  Observation sample_observation(const StateVector& x, Rng& rng) const override {
    return inner_->sample_observation(x, rng);
  }
  StateVector transition_mean(const StateVector& p) const override {
    return inner_->transition_mean(p);
  }
  const Matrix& transition_covariance() const override { return inner_->transition_covariance(); }
  MetricBundle metric(const StateVector& x, const StateVector& p,
                      MetricDetail detail) const override {
    return inner_->metric(x, p, detail);
  }
  bool metric_is_constant() const override { return inner_->metric_is_constant(); }

 private:
  const StateSpaceModel* inner_;
};

}  // namespace testing
