#include "smcmc/metric.hpp"

#include "smcmc/linalg.hpp"

namespace smcmc {

MetricDerivative MetricDerivative::diagonal(Vector coefficients) {
  MetricDerivative m;
  m.kind_ = Kind::diagonal;
  m.coefficients_ = std::move(coefficients);
  return m;
}

MetricDerivative MetricDerivative::dense(std::vector<Matrix> components) {
  MetricDerivative m;
  m.kind_ = components.empty() ? Kind::none : Kind::dense;
  m.components_ = std::move(components);
  return m;
}

Matrix MetricDerivative::component(Index i, Index d) const {
  switch (kind_) {
    case Kind::none:
      return Matrix::Zero(d, d);
    case Kind::diagonal: {
      Matrix m = Matrix::Zero(d, d);
      m(i, i) = coefficients_(i);
      return m;
    }
    case Kind::dense:
      return components_.at(static_cast<std::size_t>(i));
  }
  return Matrix::Zero(d, d);
}

Vector MetricDerivative::trace_with(const Matrix& g_inv) const {
  const Index d = g_inv.rows();
  switch (kind_) {
    case Kind::none:
      return Vector::Zero(d);
    case Kind::diagonal:
      return coefficients_.cwiseProduct(g_inv.diagonal());
    case Kind::dense: {
      Vector t(d);
      for (Index i = 0; i < d; ++i) {
        // Tr(A B) for symmetric B is the sum of the elementwise product.
        t(i) = g_inv.cwiseProduct(components_[static_cast<std::size_t>(i)].transpose()).sum();
      }
      return t;
    }
  }
  return Vector::Zero(d);
}

Vector MetricDerivative::quadratic_forms(const Vector& w) const {
  const Index d = w.size();
  switch (kind_) {
    case Kind::none:
      return Vector::Zero(d);
    case Kind::diagonal:
      return coefficients_.cwiseProduct(w.cwiseAbs2());
    case Kind::dense: {
      Vector q(d);
      for (Index i = 0; i < d; ++i) {
        q(i) = w.dot(components_[static_cast<std::size_t>(i)] * w);
      }
      return q;
    }
  }
  return Vector::Zero(d);
}

Vector MetricDerivative::langevin_drift(const Matrix& g_inv) const {
  const Index d = g_inv.rows();
  switch (kind_) {
    case Kind::none:
      return Vector::Zero(d);
    case Kind::diagonal:
      // [G^-1 e_j c_j e_j^T G^-1]_ij = c_j G^-1_ij G^-1_jj
      return -(g_inv * coefficients_.cwiseProduct(g_inv.diagonal()));
    case Kind::dense: {
      Vector lambda = Vector::Zero(d);
      for (Index j = 0; j < d; ++j) {
        const Matrix m = g_inv * components_[static_cast<std::size_t>(j)] * g_inv;
        lambda -= m.col(j);
      }
      return lambda;
    }
  }
  return Vector::Zero(d);
}

MetricBundle MetricBundle::from_metric(Matrix g, MetricDetail detail, MetricDerivative derivative) {
  MetricBundle b;
  b.llt_.compute(g);
  if (b.llt_.info() != Eigen::Success) {
    throw NumericalError("MetricBundle: metric is not positive definite");
  }
  b.g_ = std::move(g);
  b.log_det_ = log_det_from_llt(b.llt_);
  b.detail_ = detail;
  if (detail == MetricDetail::derivative) {
    b.derivative_ = std::move(derivative);
  }
  return b;
}

const Matrix& MetricBundle::g_inv() const {
  if (!has_inverse()) {
    throw std::logic_error("MetricBundle: inverse was not requested");
  }
  if (g_inv_.size() == 0) {
    g_inv_ = inverse_from_llt(llt_);
  }
  return g_inv_;
}

const Vector& MetricBundle::inverse_diagonal() const {
  if (!has_inverse()) {
    throw std::logic_error("MetricBundle: inverse was not requested");
  }
  if (inv_diag_.size() == 0) {
    if (g_inv_.size() > 0) {
      inv_diag_ = g_inv_.diagonal();
    } else {
      // G^-1 = L^-T L^-1, so its diagonal holds the squared column norms of L^-1.
      const Index d = dimension();
      Matrix l_inv = Matrix::Identity(d, d);
      llt_.matrixL().solveInPlace(l_inv);
      inv_diag_ = l_inv.colwise().squaredNorm().transpose();
    }
  }
  return inv_diag_;
}

Vector MetricBundle::derivative_trace() const {
  switch (derivative_.kind()) {
    case MetricDerivative::Kind::none:
      return Vector::Zero(dimension());
    case MetricDerivative::Kind::diagonal:
      return derivative_.coefficients().cwiseProduct(inverse_diagonal());
    case MetricDerivative::Kind::dense:
      return derivative_.trace_with(g_inv());
  }
  return Vector::Zero(dimension());
}

Vector MetricBundle::langevin_drift() const {
  switch (derivative_.kind()) {
    case MetricDerivative::Kind::none:
      return Vector::Zero(dimension());
    case MetricDerivative::Kind::diagonal:
      return -solve(derivative_.coefficients().cwiseProduct(inverse_diagonal()));
    case MetricDerivative::Kind::dense:
      return derivative_.langevin_drift(g_inv());
  }
  return Vector::Zero(dimension());
}

}  // namespace smcmc
