#include "smcmc/kalman.hpp"

#include "smcmc/linalg.hpp"

namespace smcmc {

GaussianBelief kalman_initial_belief(Index d) {
  return GaussianBelief{Vector::Zero(d), Matrix::Zero(d, d)};
}

GaussianBelief kalman_step(const GaussianBelief& belief, const Observation& y,
                           const GaussianModelParams& params, const Matrix& sigma) {
  const Index d = sigma.rows();
  require_dimension(belief.mean.size(), d, "kalman_step mean");
  require_dimension(belief.cov.rows(), d, "kalman_step cov");
  require_dimension(y.size(), d, "kalman_step y");
  const double a = params.alpha;
  const Vector m_pred = a * belief.mean;
  const Matrix p_pred = symmetrized(a * a * belief.cov + sigma);

  Matrix s = p_pred;
  s.diagonal().array() += params.sigma_y2;
  const Eigen::LLT<Matrix> s_llt(s);
  if (s_llt.info() != Eigen::Success) {
    throw NumericalError("kalman_step: innovation covariance is singular");
  }
  // K = P S^-1, and S, P are symmetric, so K^T = S^-1 P.
  const Matrix gain = s_llt.solve(p_pred).transpose();
  GaussianBelief out;
  out.mean = m_pred + gain * (y - m_pred);
  Matrix i_minus_k = -gain;
  i_minus_k.diagonal().array() += 1.0;
  out.cov = symmetrized(i_minus_k * p_pred * i_minus_k.transpose() +
                        params.sigma_y2 * gain * gain.transpose());
  return out;
}

std::vector<GaussianBelief> kalman_filter(const std::vector<Observation>& ys,
                                          const GaussianModelParams& params, const Matrix& sigma) {
  std::vector<GaussianBelief> out;
  out.reserve(ys.size());
  GaussianBelief b = kalman_initial_belief(sigma.rows());
  for (const Observation& y : ys) {
    b = kalman_step(b, y, params, sigma);
    out.push_back(b);
  }
  return out;
}

}  // namespace smcmc
