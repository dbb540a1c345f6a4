#pragma once

namespace smcmc {

/// log K_v(z), the modified Bessel function of the second kind, for z > 0.
///
/// Evaluated from K_v(z) = int_0^inf exp(-z cosh t) cosh(v t) dt with a
/// peak-centred trapezoid rule in log space, so large orders (v grows with d/2
/// in the GH density) neither overflow nor lose relative accuracy.
/// K_{-v} = K_v, so the sign of the order is ignored.
/// Throws NumericalError for z <= 0 or non-finite arguments.
double log_bessel_k(double order, double z);

/// d/dz log K_v(z) = -(K_{v-1}(z) + K_{v+1}(z)) / (2 K_v(z)).
double dlog_bessel_k(double order, double z);

/// K_a(z) / K_b(z) evaluated in log space.
double bessel_k_ratio(double order_a, double order_b, double z);

}  // namespace smcmc
