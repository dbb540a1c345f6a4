#pragma once

#include "smcmc/rng.hpp"
#include "smcmc/types.hpp"

#include <Eigen/Cholesky>

#include <vector>

namespace smcmc {

/// Multivariate generalized hyperbolic law as a normal mean-variance mixture:
///   X = mu + gamma W + sqrt(W) L Z,  W ~ GIG(lambda, chi, psi),  Sigma = L L^T.
/// The location of the transition density is mu = alpha x_prev.
struct GhParams {
  double lambda = -3.5;
  double chi = 7.0;
  double psi = 0.0;
  Vector gamma;
  Matrix sigma;
  double alpha = 0.9;

  /// lambda = -nu/2, chi = nu, psi = 0.
  static GhParams skewed_t(double nu, Vector gamma, Matrix sigma, double alpha);

  Index dimension() const { return sigma.rows(); }
  /// psi small enough that the inverse-gamma mixing limit is used.
  bool psi_is_zero() const { return psi < kPsiZero; }
  bool is_skewed_t() const;
  /// Degrees of freedom of the skewed-t specialization; throws otherwise.
  double nu() const;
  void validate() const;

  static constexpr double kPsiZero = 1e-12;
};

/// Mean and variance of the GIG mixing variable.
struct MixingMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Moments of GIG(lambda, chi, psi), including the inverse-gamma (psi = 0) and
/// gamma (chi = 0) limits. Throws NumericalError when a moment does not exist.
MixingMoments gig_moments(double lambda, double chi, double psi);

/// Draw from GIG(lambda, chi, psi) with density ∝ w^(lambda-1) exp(-(chi/w + psi w)/2).
double sample_gig(double lambda, double chi, double psi, Rng& rng);

/// Precomputed GH density for repeated evaluation at one parameter set.
class GhDistribution {
 public:
  explicit GhDistribution(GhParams params);

  const GhParams& params() const { return params_; }
  Index dimension() const { return params_.dimension(); }

  double log_pdf(const Vector& x, const Vector& mu) const;
  Vector grad_log_pdf(const Vector& x, const Vector& mu) const;
  Vector sample(const Vector& mu, Rng& rng) const;
  double sample_mixing(Rng& rng) const;

  /// Draw x(block) from its conditional law given x(rest), which is again GH.
  Vector sample_conditional(const std::vector<Index>& block, const Vector& x, const Vector& mu,
                            Rng& rng) const;

  const Matrix& precision() const { return precision_; }
  const Eigen::LLT<Matrix>& sigma_llt() const { return sigma_llt_; }

 private:
  double log_pdf_from(const Vector& r, const Vector& s) const;

  GhParams params_;
  Eigen::LLT<Matrix> sigma_llt_;
  Matrix precision_;
  Vector precision_gamma_;
  double gamma_quad_ = 0.0;  // gamma^T Sigma^-1 gamma
  double log_det_sigma_ = 0.0;
  double log_norm_ = 0.0;    // terms of the log density that do not depend on x
};

double gh_logpdf(const Vector& x, const Vector& mu, const GhParams& p);
Vector grad_gh_logpdf(const Vector& x, const Vector& mu, const GhParams& p);
Vector sample_gh(const Vector& mu, const GhParams& p, Rng& rng);

/// nu/(nu-2) Sigma + nu^2/((2nu-8)(nu/2-1)^2) gamma gamma^T. Requires nu > 4.
Matrix skewed_t_covariance(const GhParams& p);

/// E[W] Sigma + Var[W] gamma gamma^T for any parameterization with finite moments.
Matrix gh_covariance(const GhParams& p);

}  // namespace smcmc
