#include "smcmc/model.hpp"

#include <cmath>
#include <limits>

namespace smcmc {

double StateSpaceModel::log_likelihood_block(const Observation&, const StateVector&,
                                             const std::vector<Index>&) const {
  throw CapabilityError(name() + ": likelihood is not block-separable");
}

Vector StateSpaceModel::sample_conditional_transition(const std::vector<Index>&,
                                                      const StateVector&, const StateVector&,
                                                      Rng&) const {
  throw CapabilityError(name() + ": conditional transition sampling is not available");
}

double log_conditional_target(const StateSpaceModel& model, const StateVector& x,
                              const StateVector& x_prev, const Observation& y) {
  require_dimension(x.size(), model.dimension(), "log_conditional_target(x)");
  require_dimension(x_prev.size(), model.dimension(), "log_conditional_target(x_prev)");
  require_dimension(y.size(), model.observation_dimension(), "log_conditional_target(y)");
  const double ll = model.log_likelihood(y, x);
  if (std::isnan(ll) || ll == std::numeric_limits<double>::infinity()) {
    throw ModelError(model.name() + ": log_likelihood returned " + std::to_string(ll));
  }
  const double lt = model.log_transition(x, x_prev);
  if (std::isnan(lt) || lt == std::numeric_limits<double>::infinity()) {
    throw ModelError(model.name() + ": log_transition returned " + std::to_string(lt));
  }
  return ll + lt;
}

Vector grad_log_conditional_target(const StateSpaceModel& model, const StateVector& x,
                                   const StateVector& x_prev, const Observation& y) {
  if (!std::isfinite(log_conditional_target(model, x, x_prev, y))) {
    throw ModelError(model.name() + ": gradient requested outside the support");
  }
  Vector g = model.grad_log_likelihood(y, x) + model.grad_log_transition(x, x_prev);
  if (!g.allFinite()) {
    throw ModelError(model.name() + ": non-finite gradient");
  }
  return g;
}

MetricBundle DifferentiableTarget::metric(const Vector&, MetricDetail) const {
  throw CapabilityError("target does not provide a metric");
}

}  // namespace smcmc
