#pragma once

#include "smcmc/metric.hpp"
#include "smcmc/rng.hpp"
#include "smcmc/types.hpp"

#include <string>
#include <vector>

namespace smcmc {

/// Hidden Markov model contract consumed by every filter in the library.
///
/// Densities return -inf outside their support; errors are reserved for NaN
/// output and dimension mismatch. The initial density mu(x1) is the transition
/// evaluated at `initial_anchor()`. Implementations must be reentrant: all
/// randomness comes through the caller's Rng.
class StateSpaceModel {
 public:
  virtual ~StateSpaceModel() = default;

  virtual std::string name() const = 0;
  virtual Index dimension() const = 0;
  virtual Index observation_dimension() const { return dimension(); }

  virtual double log_transition(const StateVector& x, const StateVector& x_prev) const = 0;
  virtual double log_likelihood(const Observation& y, const StateVector& x) const = 0;
  virtual Vector grad_log_transition(const StateVector& x, const StateVector& x_prev) const = 0;
  virtual Vector grad_log_likelihood(const Observation& y, const StateVector& x) const = 0;

  virtual StateVector sample_transition(const StateVector& x_prev, Rng& rng) const = 0;
  virtual Observation sample_observation(const StateVector& x, Rng& rng) const = 0;

  /// E[X_n | X_{n-1} = x_prev]
  virtual StateVector transition_mean(const StateVector& x_prev) const = 0;
  /// Var[X_n | X_{n-1}]; the models here are homoscedastic.
  virtual const Matrix& transition_covariance() const = 0;

  virtual MetricBundle metric(const StateVector& x, const StateVector& x_prev,
                              MetricDetail detail) const = 0;
  virtual bool metric_is_constant() const = 0;
  /// False when G(x) ignores x_prev, so a cached metric survives an ancestor change.
  virtual bool metric_depends_on_previous() const { return true; }

  virtual StateVector initial_anchor() const { return Vector::Zero(dimension()); }

  /// True when log g(y|x) = sum_k term_k(y(k), x(k)).
  virtual bool likelihood_is_separable() const { return false; }
  /// Sum of the likelihood terms over `block`; requires a separable likelihood.
  virtual double log_likelihood_block(const Observation& y, const StateVector& x,
                                      const std::vector<Index>& block) const;

  /// True when x(block) | x(rest), x_prev can be drawn from the transition.
  virtual bool has_conditional_transition() const { return false; }
  virtual Vector sample_conditional_transition(const std::vector<Index>& block,
                                               const StateVector& x, const StateVector& x_prev,
                                               Rng& rng) const;
};

/// log g(y|x) + log f(x|x_prev), unnormalized. Throws ModelError on NaN output,
/// naming the offending term.
double log_conditional_target(const StateSpaceModel& model, const StateVector& x,
                              const StateVector& x_prev, const Observation& y);

/// Gradient of log_conditional_target with respect to x. Throws ModelError when x
/// is outside the support.
Vector grad_log_conditional_target(const StateSpaceModel& model, const StateVector& x,
                                   const StateVector& x_prev, const Observation& y);

/// Smooth density on R^d that the gradient kernels sample from.
class DifferentiableTarget {
 public:
  virtual ~DifferentiableTarget() = default;
  virtual Index dimension() const = 0;
  virtual double log_density(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual MetricBundle metric(const Vector& x, MetricDetail detail) const;
  virtual bool metric_is_constant() const { return false; }
};

/// pi~(x) ∝ g(y|x) f(x|x_prev): the target of the x_n update given an ancestor.
class ConditionalTarget final : public DifferentiableTarget {
 public:
  ConditionalTarget(const StateSpaceModel& model, StateVector x_prev, Observation y)
      : model_(&model), x_prev_(std::move(x_prev)), y_(std::move(y)) {}

  Index dimension() const override { return model_->dimension(); }
  double log_density(const Vector& x) const override {
    return log_conditional_target(*model_, x, x_prev_, y_);
  }
  Vector gradient(const Vector& x) const override {
    return grad_log_conditional_target(*model_, x, x_prev_, y_);
  }
  MetricBundle metric(const Vector& x, MetricDetail detail) const override {
    return model_->metric(x, x_prev_, detail);
  }
  bool metric_is_constant() const override { return model_->metric_is_constant(); }

  const StateVector& previous_state() const { return x_prev_; }
  const Observation& observation() const { return y_; }

 private:
  const StateSpaceModel* model_;
  StateVector x_prev_;
  Observation y_;
};

}  // namespace smcmc
