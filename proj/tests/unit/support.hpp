#pragma once

#include "smcmc/types.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace testing {

using smcmc::Index;
using smcmc::Matrix;
using smcmc::Vector;

inline Vector central_difference(const std::function<double(const Vector&)>& f, const Vector& x,
                                 double h = 1e-5) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector xp = x;
    Vector xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Largest componentwise error, relative where the reference is not near zero.
inline double gradient_error(const Vector& analytic, const Vector& numeric) {
  double worst = 0.0;
  for (Index i = 0; i < analytic.size(); ++i) {
    const double diff = std::fabs(analytic(i) - numeric(i));
    const double scale = std::fabs(numeric(i));
    worst = std::max(worst, scale > 1e-2 ? diff / scale : diff);
  }
  return worst;
}

/// Upper tail of the chi-square distribution.
inline double chi_square_p(double stat, double dof) {
  return boost::math::gamma_q(0.5 * dof, 0.5 * stat);
}

/// Asymptotic Kolmogorov distribution tail P(K > t).
inline double kolmogorov_tail(double t) {
  if (t < 0.2) {
    return 1.0;
  }
  double s = 0.0;
  for (int k = 1; k < 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    s += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) {
      break;
    }
  }
  return std::clamp(s, 0.0, 1.0);
}

/// One-sample KS test p-value against a continuous CDF.
inline double ks_p_value(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    dmax = std::max({dmax, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  const double sn = std::sqrt(n);
  return kolmogorov_tail((sn + 0.12 + 0.11 / sn) * dmax);
}

/// Monte Carlo standard error of the mean of a correlated chain via batch means.
inline double batch_means_se(const std::vector<double>& xs, int batches = 50) {
  const std::size_t len = xs.size() / static_cast<std::size_t>(batches);
  std::vector<double> means;
  double total = 0.0;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      s += xs[static_cast<std::size_t>(b) * len + i];
    }
    means.push_back(s / static_cast<double>(len));
    total += means.back();
  }
  const double grand = total / batches;
  double v = 0.0;
  for (double m : means) {
    v += (m - grand) * (m - grand);
  }
  return std::sqrt(v / (batches - 1) / batches);
}

/// Two-sample KS p-value (asymptotic).
inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double dmax = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    dmax = std::max(dmax, std::fabs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double ne = std::sqrt(n * m / (n + m));
  return kolmogorov_tail((ne + 0.12 + 0.11 / ne) * dmax);
}

inline Matrix sample_covariance(const std::vector<Vector>& xs) {
  const Index d = xs.front().size();
  Vector mean = Vector::Zero(d);
  for (const auto& x : xs) {
    mean += x;
  }
  mean /= static_cast<double>(xs.size());
  Matrix c = Matrix::Zero(d, d);
  for (const auto& x : xs) {
    c += (x - mean) * (x - mean).transpose();
  }
  return c / static_cast<double>(xs.size() - 1);
}

inline Vector sample_mean(const std::vector<Vector>& xs) {
  Vector mean = Vector::Zero(xs.front().size());
  for (const auto& x : xs) {
    mean += x;
  }
  return mean / static_cast<double>(xs.size());
}

/// Random SPD matrix with eigenvalues bounded away from zero.
template <class Rng>
Matrix random_spd(Index d, Rng& rng) {
  Matrix a(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      a(i, j) = rng.normal();
    }
  }
  Matrix s = a * a.transpose() / static_cast<double>(d);
  s.diagonal().array() += 0.5;
  return s;
}

}  // namespace testing
