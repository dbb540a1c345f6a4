#include "smcmc/bessel.hpp"

#include "smcmc/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace smcmc {

namespace {

// Integrand exponent -z cosh t + log cosh(v t).
double log_integrand(double v, double z, double t) {
  const double vt = v * t;
  const double tail = vt > 18.0 ? 0.0 : std::log1p(std::exp(-2.0 * vt));
  const double log_cosh = vt + tail - M_LN2;
  return -z * std::cosh(t) + log_cosh;
}

double slope(double v, double z, double t) { return -z * std::sinh(t) + v * std::tanh(v * t); }

double curvature(double v, double z, double t) {
  const double sech = 1.0 / std::cosh(v * t);
  return z * std::cosh(t) - v * v * sech * sech;
}

double peak_location(double v, double z) {
  if (v * v <= z) {
    return 0.0;  // the exponent is concave with its maximum at t = 0
  }
  // z sinh t = v tanh(v t) has a single positive root below asinh(v / z).
  // Newton steps, falling back to bisection when they leave the bracket.
  double lo = 0.0;
  double hi = std::asinh(v / z) + 1e-12;
  double t = hi;
  for (int it = 0; it < 200; ++it) {
    const double s = slope(v, z, t);
    if (s > 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    const double c = curvature(v, z, t);
    double next = c > 0.0 ? t + s / c : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) {
      next = 0.5 * (lo + hi);
    }
    if (std::fabs(next - t) <= 1e-15 * (1.0 + t) || hi - lo <= 1e-14 * (1.0 + hi)) {
      return next;
    }
    t = next;
  }
  return t;
}

}  // namespace

double log_bessel_k(double order, double z) {
  if (!std::isfinite(order) || std::isnan(z) || z <= 0.0) {
    std::ostringstream msg;
    msg << "log_bessel_k: invalid argument (order " << order << ", z " << z << ")";
    throw NumericalError(msg.str());
  }
  if (std::isinf(z)) {
    return -std::numeric_limits<double>::infinity();
  }
  const double v = std::fabs(order);
  const double t_peak = peak_location(v, z);
  const double f_peak = log_integrand(v, z, t_peak);
  const double c = curvature(v, z, t_peak);
  const double width = c > 1e-12 ? 1.0 / std::sqrt(c) : 1.0;
  // The trapezoid error is governed by growth of exp(-z cosh t) off the real
  // axis, which bounds the step by roughly 1/sqrt(z) even when the peak is flat.
  const double h = std::min({0.2, width / 2.5, 0.7 / std::sqrt(z + v)});
  constexpr double kDrop = 40.0;

  // Extend the window on both sides until the integrand is negligible.
  double t_hi = t_peak + width;
  while (log_integrand(v, z, t_hi) > f_peak - kDrop) {
    t_hi = t_peak + 2.0 * (t_hi - t_peak);
  }
  double t_lo = t_peak;
  if (t_peak > 0.0) {
    double step = width;
    t_lo = std::max(0.0, t_peak - step);
    while (t_lo > 0.0 && log_integrand(v, z, t_lo) > f_peak - kDrop) {
      step *= 2.0;
      t_lo = std::max(0.0, t_peak - step);
    }
  }
  // Grid anchored at the peak with spacing h. When the window reaches t = 0 the
  // integrand is summed over the symmetric line [-t_hi, t_hi] and halved, which
  // keeps the trapezoid rule exponentially accurate.
  double sum = 0.0;
  double scale = h;
  if (t_lo > 0.0) {
    const auto n_lo = static_cast<long>(std::ceil((t_peak - t_lo) / h));
    const auto n_hi = static_cast<long>(std::ceil((t_hi - t_peak) / h));
    for (long k = -n_lo; k <= n_hi; ++k) {
      sum += std::exp(log_integrand(v, z, t_peak + static_cast<double>(k) * h) - f_peak);
    }
  } else {
    const auto n_lo = static_cast<long>(std::ceil((t_peak + t_hi) / h));
    const auto n_hi = static_cast<long>(std::ceil((t_hi - t_peak) / h));
    for (long k = -n_lo; k <= n_hi; ++k) {
      const double t = std::fabs(t_peak + static_cast<double>(k) * h);
      sum += std::exp(log_integrand(v, z, t) - f_peak);
    }
    scale = 0.5 * h;
  }
  const double out = f_peak + std::log(scale * sum);
  if (!std::isfinite(out)) {
    std::ostringstream msg;
    msg << "log_bessel_k: overflow at order " << order << ", |z| = " << z;
    throw NumericalError(msg.str());
  }
  return out;
}

double dlog_bessel_k(double order, double z) {
  const double lk = log_bessel_k(order, z);
  const double down = std::exp(log_bessel_k(order - 1.0, z) - lk);
  const double up = std::exp(log_bessel_k(order + 1.0, z) - lk);
  return -0.5 * (down + up);
}

double bessel_k_ratio(double order_a, double order_b, double z) {
  return std::exp(log_bessel_k(order_a, z) - log_bessel_k(order_b, z));
}

}  // namespace smcmc
