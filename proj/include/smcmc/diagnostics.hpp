#pragma once

#include "smcmc/types.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace smcmc {

struct ChainEss {
  double value = 0.0;
  bool degenerate = false;  ///< zero-variance chain
  Index pairs = 0;          ///< autocovariance pairs kept by the monotone rule
};

struct GeyerSum {
  double sum = 0.0;  ///< sum of the kept pairs Gamma_k = gamma(2k) + gamma(2k+1), k >= 0
  Index pairs = 0;
};

/// Geyer's initial monotone sequence over autocovariances gamma(0..max_lag): pairs
/// are kept while positive and clipped to be non-increasing. `autocov` is only
/// called for the lags that are needed.
GeyerSum initial_monotone_sum(const std::function<double(Index)>& autocov, Index max_lag);

/// N / (1 + 2 sum rho(k)) with the autocorrelation sum truncated by Geyer's
/// initial monotone sequence rule. Clamped to N. Requires at least 10 samples.
ChainEss chain_ess(const std::vector<double>& samples);

struct EssSummary {
  double min = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double max = 0.0;
  Index degenerate_dims = 0;
};

/// chain_ess per coordinate of a vector-valued chain, summarized across coordinates.
EssSummary ess_summary(const std::vector<StateVector>& chain);

struct PosteriorSummary {
  Vector mean;
  Vector variance;  ///< unbiased; zero for a single sample
};

PosteriorSummary posterior_summary(const std::vector<StateVector>& samples);
/// Weighted mean of states with normalized log weights.
Vector weighted_mean(const std::vector<StateVector>& states, const Vector& log_weights);

constexpr double kLogRelMseFloor = -20.0;

/// log( mean_k (estimate_k - kalman_mean_k)^2 / mean_k kalman_var_k ), floored at -20.
double log_relative_mse(const Vector& estimate, const Vector& kalman_mean,
                        const Vector& kalman_variance);

/// Mean over sensors of (estimate - truth)^2.
double mse_per_sensor(const Vector& estimate, const Vector& truth);

/// log( mse_per_sensor(estimate, truth) / mse_per_sensor(kalman_mean, truth) ): the
/// error against the simulated state relative to the Kalman filter's own error.
/// This is the scale of the published Example 1 tables. Floored at -20.
double log_mse_ratio(const Vector& estimate, const Vector& kalman_mean, const Vector& truth);

/// Per time step bookkeeping shared by every filter. Rates that do not apply to
/// an algorithm are NaN.
struct ChainDiagnostics {
  static constexpr double kNotApplicable = std::numeric_limits<double>::quiet_NaN();

  double accept_joint = kNotApplicable;
  double accept_refine = kNotApplicable;
  double accept_kernel = kNotApplicable;
  EssSummary ess;
  bool has_chain_ess = false;
  double weight_ess = kNotApplicable;  ///< SMC only, before resampling
  Index unique_ancestors = 0;
  Index kernel_failures = 0;
  double wall_ms = 0.0;
  double step_size = kNotApplicable;
  std::vector<std::string> warnings;
};

/// Number of distinct values in `ancestors`.
Index count_unique(const std::vector<Index>& ancestors);

}  // namespace smcmc
