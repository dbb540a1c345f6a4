#pragma once

#include "smcmc/types.hpp"

#include <Eigen/Cholesky>

#include <vector>

namespace smcmc {

/// The d partial-derivative matrices dG/dx(i) of a position-dependent metric.
///
/// Two storage forms are supported. `diagonal` covers metrics whose i-th
/// derivative has a single non-zero entry c(i) at (i, i), which is what the
/// Gaussian-approximation metric of a separable likelihood produces; it keeps all
/// contractions O(d^2). `dense` stores every matrix explicitly.
class MetricDerivative {
 public:
  enum class Kind { none, diagonal, dense };

  MetricDerivative() = default;
  static MetricDerivative diagonal(Vector coefficients);
  static MetricDerivative dense(std::vector<Matrix> components);

  Kind kind() const { return kind_; }
  bool empty() const { return kind_ == Kind::none; }
  /// c(i) for the diagonal form.
  const Vector& coefficients() const { return coefficients_; }

  /// Materialized dG/dx(i); zero matrix of size d when empty.
  Matrix component(Index i, Index d) const;

  /// Tr(G^-1 dG/dx(i)) for every i.
  Vector trace_with(const Matrix& g_inv) const;

  /// w^T (dG/dx(i)) w for every i.
  Vector quadratic_forms(const Vector& w) const;

  /// Lambda_i = -sum_j [G^-1 (dG/dx(j)) G^-1]_ij, the manifold Langevin drift.
  Vector langevin_drift(const Matrix& g_inv) const;

 private:
  Kind kind_ = Kind::none;
  Vector coefficients_;
  std::vector<Matrix> components_;
};

/// How much of a metric to compute. Each level includes the previous ones.
enum class MetricDetail {
  factor,      ///< G, its Cholesky factor, log det
  inverse,     ///< + explicit G^-1
  derivative,  ///< + dG/dx(i)
};

/// Position-dependent metric G(x) with the quantities the manifold kernels need.
class MetricBundle {
 public:
  MetricBundle() = default;

  /// Factorizes `g`; throws NumericalError when G is not positive definite.
  static MetricBundle from_metric(Matrix g, MetricDetail detail,
                                  MetricDerivative derivative = MetricDerivative());

  Index dimension() const { return g_.rows(); }
  const Matrix& g() const { return g_; }
  const Eigen::LLT<Matrix>& chol() const { return llt_; }
  Matrix chol_lower() const { return llt_.matrixL(); }
  double log_det() const { return log_det_; }
  bool has_inverse() const { return detail_ != MetricDetail::factor; }
  /// Computed on first use.
  const Matrix& g_inv() const;
  /// diag(G^-1); cheaper than the full inverse.
  const Vector& inverse_diagonal() const;
  const MetricDerivative& derivative() const { return derivative_; }

  /// G^-1 v
  Vector solve(const Vector& v) const { return llt_.solve(v); }
  /// L z with G = L L^T; maps N(0, I) onto N(0, G).
  Vector sqrt_times(const Vector& z) const { return llt_.matrixL() * z; }
  /// L^-T z; maps N(0, I) onto N(0, G^-1).
  Vector inverse_sqrt_times(const Vector& z) const { return llt_.matrixU().solve(z); }
  /// v^T G^-1 v
  double inverse_quadratic(const Vector& v) const {
    return llt_.matrixL().solve(v).squaredNorm();
  }
  /// v^T G v
  double quadratic(const Vector& v) const { return v.dot(g_ * v); }

  /// Lambda(x); zero when the derivative is empty.
  Vector langevin_drift() const;
  /// Tr(G^-1 dG/dx(i)) for every i; zero when the derivative is empty.
  Vector derivative_trace() const;

 private:
  Matrix g_;
  Eigen::LLT<Matrix> llt_;
  MetricDetail detail_ = MetricDetail::factor;
  mutable Matrix g_inv_;
  mutable Vector inv_diag_;
  double log_det_ = 0.0;
  MetricDerivative derivative_;
};

}  // namespace smcmc
