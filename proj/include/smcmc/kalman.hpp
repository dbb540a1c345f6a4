#pragma once

#include "smcmc/gaussian_model.hpp"
#include "smcmc/types.hpp"

#include <vector>

namespace smcmc {

struct GaussianBelief {
  Vector mean;
  Matrix cov;
};

/// One predict/update step for x_n = alpha x_{n-1} + w, y_n = x_n + v.
/// The covariance update uses the Joseph form and is symmetrized afterwards.
GaussianBelief kalman_step(const GaussianBelief& belief, const Observation& y,
                           const GaussianModelParams& params, const Matrix& sigma);

/// Belief before the first step: x_0 = 0 exactly, so the first prediction is N(0, Sigma).
GaussianBelief kalman_initial_belief(Index d);

/// Filtering means and covariances for n = 1..T.
std::vector<GaussianBelief> kalman_filter(const std::vector<Observation>& ys,
                                          const GaussianModelParams& params, const Matrix& sigma);

}  // namespace smcmc
