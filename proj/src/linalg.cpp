#include "smcmc/linalg.hpp"

#include <cmath>
#include <limits>

namespace smcmc {

JitteredCholesky cholesky_with_jitter(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw NumericalError("cholesky_with_jitter: matrix must be square and non-empty");
  }
  JitteredCholesky out;
  out.llt.compute(a);
  if (out.llt.info() == Eigen::Success) {
    return out;
  }
  const double base = 1e-10 * a.trace() / static_cast<double>(a.rows());
  double jitter = base;
  for (int attempt = 0; attempt < 3; ++attempt, jitter *= 10.0) {
    Matrix repaired = a;
    repaired.diagonal().array() += jitter;
    out.llt.compute(repaired);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
  }
  throw NumericalError("cholesky_with_jitter: matrix not positive definite after jitter " +
                       std::to_string(jitter / 10.0));
}

Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

double log_det_from_llt(const Eigen::LLT<Matrix>& llt) {
  const Matrix& l = llt.matrixLLT();
  double s = 0.0;
  for (Index i = 0; i < l.rows(); ++i) {
    s += std::log(l(i, i));
  }
  return 2.0 * s;
}

Matrix inverse_from_llt(const Eigen::LLT<Matrix>& llt) {
  const Index d = llt.matrixLLT().rows();
  return symmetrized(llt.solve(Matrix::Identity(d, d)));
}

double mvn_log_density(const Vector& x, const Vector& mean, const Eigen::LLT<Matrix>& cov_llt) {
  const Vector r = x - mean;
  const Vector w = cov_llt.matrixL().solve(r);
  const double d = static_cast<double>(x.size());
  return -0.5 * (d * kLog2Pi + log_det_from_llt(cov_llt) + w.squaredNorm());
}

double log_sum_exp(const Vector& v) {
  if (v.size() == 0) {
    return -std::numeric_limits<double>::infinity();
  }
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) {
    return m;
  }
  double s = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    s += std::exp(v(i) - m);
  }
  return m + std::log(s);
}

}  // namespace smcmc
