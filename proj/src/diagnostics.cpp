#include "smcmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smcmc {

GeyerSum initial_monotone_sum(const std::function<double(Index)>& autocov, Index max_lag) {
  GeyerSum out;
  double previous = std::numeric_limits<double>::infinity();
  for (Index k = 0; 2 * k + 1 <= max_lag; ++k) {
    const double g = autocov(2 * k) + autocov(2 * k + 1);
    if (g <= 0.0) {
      break;
    }
    const double monotone = std::min(g, previous);
    out.sum += monotone;
    out.pairs += 1;
    previous = monotone;
  }
  return out;
}

ChainEss chain_ess(const std::vector<double>& samples) {
  const auto n = static_cast<Index>(samples.size());
  if (n < 10) {
    throw std::invalid_argument("chain_ess: need at least 10 samples");
  }
  double mean = 0.0;
  for (double s : samples) {
    mean += s;
  }
  mean /= static_cast<double>(n);
  std::vector<double> centred(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    centred[i] = samples[i] - mean;
  }
  auto autocov = [&](Index lag) -> double {
    double acc = 0.0;
    for (Index t = 0; t + lag < n; ++t) {
      acc += centred[static_cast<std::size_t>(t)] * centred[static_cast<std::size_t>(t + lag)];
    }
    return acc / static_cast<double>(n);
  };
  const double gamma0 = autocov(0);
  ChainEss out;
  if (!(gamma0 > 0.0) || gamma0 < 1e-300) {
    out.degenerate = true;
    return out;
  }
  const GeyerSum g = initial_monotone_sum(autocov, n / 2);
  out.pairs = g.pairs;
  const double pair_sum = g.sum;
  const double tau = -1.0 + 2.0 * pair_sum / gamma0;
  const double nd = static_cast<double>(n);
  out.value = tau > 0.0 ? std::min(nd, nd / tau) : nd;
  return out;
}

EssSummary ess_summary(const std::vector<StateVector>& chain) {
  if (chain.empty()) {
    throw std::invalid_argument("ess_summary: empty chain");
  }
  const Index d = chain.front().size();
  std::vector<double> per_dim;
  per_dim.reserve(static_cast<std::size_t>(d));
  std::vector<double> column(chain.size());
  EssSummary s;
  for (Index k = 0; k < d; ++k) {
    for (std::size_t t = 0; t < chain.size(); ++t) {
      column[t] = chain[t](k);
    }
    const ChainEss e = chain_ess(column);
    if (e.degenerate) {
      ++s.degenerate_dims;
    }
    per_dim.push_back(e.value);
  }
  std::sort(per_dim.begin(), per_dim.end());
  s.min = per_dim.front();
  s.max = per_dim.back();
  const std::size_t m = per_dim.size();
  s.median = m % 2 == 1 ? per_dim[m / 2] : 0.5 * (per_dim[m / 2 - 1] + per_dim[m / 2]);
  double total = 0.0;
  for (double v : per_dim) {
    total += v;
  }
  s.mean = total / static_cast<double>(m);
  return s;
}

PosteriorSummary posterior_summary(const std::vector<StateVector>& samples) {
  if (samples.empty()) {
    throw std::invalid_argument("posterior_summary: empty sample set");
  }
  const Index d = samples.front().size();
  PosteriorSummary s;
  s.mean = Vector::Zero(d);
  for (const auto& x : samples) {
    s.mean += x;
  }
  s.mean /= static_cast<double>(samples.size());
  s.variance = Vector::Zero(d);
  if (samples.size() > 1) {
    for (const auto& x : samples) {
      s.variance += (x - s.mean).cwiseAbs2();
    }
    s.variance /= static_cast<double>(samples.size() - 1);
  }
  return s;
}

Vector weighted_mean(const std::vector<StateVector>& states, const Vector& log_weights) {
  if (states.empty() || static_cast<Index>(states.size()) != log_weights.size()) {
    throw std::invalid_argument("weighted_mean: size mismatch");
  }
  const double top = log_weights.maxCoeff();
  Vector acc = Vector::Zero(states.front().size());
  double total = 0.0;
  for (std::size_t j = 0; j < states.size(); ++j) {
    const double w = std::exp(log_weights(static_cast<Index>(j)) - top);
    acc += w * states[j];
    total += w;
  }
  return acc / total;
}

double log_relative_mse(const Vector& estimate, const Vector& kalman_mean,
                        const Vector& kalman_variance) {
  if (estimate.size() != kalman_mean.size() || estimate.size() != kalman_variance.size()) {
    throw std::invalid_argument("log_relative_mse: size mismatch");
  }
  const double dev = (estimate - kalman_mean).squaredNorm() / static_cast<double>(estimate.size());
  const double norm = kalman_variance.mean();
  if (!(norm > 0.0)) {
    throw std::invalid_argument("log_relative_mse: Kalman variance must be positive");
  }
  if (!(dev > 0.0)) {
    return kLogRelMseFloor;
  }
  return std::max(kLogRelMseFloor, std::log(dev / norm));
}

double mse_per_sensor(const Vector& estimate, const Vector& truth) {
  if (estimate.size() != truth.size()) {
    throw std::invalid_argument("mse_per_sensor: size mismatch");
  }
  return (estimate - truth).squaredNorm() / static_cast<double>(estimate.size());
}

double log_mse_ratio(const Vector& estimate, const Vector& kalman_mean, const Vector& truth) {
  const double base = mse_per_sensor(kalman_mean, truth);
  if (!(base > 0.0)) {
    throw std::invalid_argument("log_mse_ratio: Kalman error is zero");
  }
  const double err = mse_per_sensor(estimate, truth);
  if (!(err > 0.0)) {
    return kLogRelMseFloor;
  }
  return std::max(kLogRelMseFloor, std::log(err / base));
}

Index count_unique(const std::vector<Index>& ancestors) {
  std::vector<Index> sorted = ancestors;
  std::sort(sorted.begin(), sorted.end());
  return static_cast<Index>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

}  // namespace smcmc
