#include "smcmc/gh.hpp"

#include "smcmc/bessel.hpp"
#include "smcmc/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace smcmc {

namespace {

constexpr double kLogPi = 1.1447298858494002;
constexpr double kTinyQuad = 1e-100;

double sample_inverse_gamma(double shape, double scale, Rng& rng) {
  return scale / rng.gamma(shape);
}

// Density ∝ y^(lam-1) exp(-omega (y + 1/y) / 2) with lam >= 0, omega > 0,
// sampled by the mode-shifted ratio-of-uniforms method.
double sample_gig_standard(double lam, double omega, Rng& rng) {
  const double m = ((lam - 1.0) + std::sqrt((lam - 1.0) * (lam - 1.0) + omega * omega)) / omega;
  const double log_hm = (lam - 1.0) * std::log(m) - 0.5 * omega * (m + 1.0 / m);
  auto log_h = [&](double y) {
    return (lam - 1.0) * std::log(y) - 0.5 * omega * (y + 1.0 / y) - log_hm;
  };
  auto bracket_term = [&](double y) {
    return 0.5 * ((lam - 1.0) / y - 0.5 * omega + 0.5 * omega / (y * y));
  };
  auto bisect = [](auto&& deriv, double lo, double hi) {
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (deriv(mid) > 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };

  auto right = [&](double y) { return 1.0 / (y - m) + bracket_term(y); };
  double hi = m + 1.0;
  while (right(hi) > 0.0) {
    hi = m + 2.0 * (hi - m);
  }
  const double y_plus = bisect(right, m, hi);
  const double v_plus = (y_plus - m) * std::exp(0.5 * log_h(y_plus));

  auto left = [&](double y) { return -1.0 / (m - y) + bracket_term(y); };
  const double y_minus = bisect(left, 0.0, m);
  const double v_minus = -(m - y_minus) * std::exp(0.5 * log_h(y_minus));

  // Slight widening guards against the bisection landing just short of the extremum.
  const double vp = v_plus * (1.0 + 1e-9);
  const double vm = v_minus * (1.0 + 1e-9);
  for (;;) {
    const double u = rng.uniform_open();
    const double v = vm + (vp - vm) * rng.uniform();
    const double y = v / u + m;
    if (y <= 0.0) {
      continue;
    }
    if (2.0 * std::log(u) <= log_h(y)) {
      return y;
    }
  }
}

}  // namespace

GhParams GhParams::skewed_t(double nu, Vector gamma, Matrix sigma, double alpha) {
  GhParams p;
  p.lambda = -0.5 * nu;
  p.chi = nu;
  p.psi = 0.0;
  p.gamma = std::move(gamma);
  p.sigma = std::move(sigma);
  p.alpha = alpha;
  return p;
}

bool GhParams::is_skewed_t() const {
  return psi_is_zero() && std::fabs(chi + 2.0 * lambda) <= 1e-12 * std::fabs(chi);
}

double GhParams::nu() const {
  if (!is_skewed_t()) {
    throw std::invalid_argument("GhParams: not a skewed-t parameterization");
  }
  return chi;
}

void GhParams::validate() const {
  const Index d = sigma.rows();
  if (d == 0 || sigma.cols() != d) {
    throw std::invalid_argument("GhParams: Sigma must be square and non-empty");
  }
  if (gamma.size() != d) {
    throw std::invalid_argument("GhParams: gamma has the wrong dimension");
  }
  if (!(chi > 0.0) || !(psi >= 0.0) || !std::isfinite(lambda) || !std::isfinite(chi) ||
      !std::isfinite(psi) || !std::isfinite(alpha)) {
    throw std::invalid_argument("GhParams: need chi > 0, psi >= 0 and finite parameters");
  }
  if (psi_is_zero() && !(lambda < 0.0)) {
    throw std::invalid_argument("GhParams: the psi = 0 limit requires lambda < 0");
  }
  if (!sigma.isApprox(sigma.transpose(), 1e-12)) {
    throw std::invalid_argument("GhParams: Sigma must be symmetric");
  }
}

MixingMoments gig_moments(double lambda, double chi, double psi) {
  MixingMoments out;
  if (psi < GhParams::kPsiZero) {
    const double a = -lambda;
    const double beta = 0.5 * chi;
    if (!(a > 2.0)) {
      throw NumericalError("gig_moments: inverse-gamma variance needs shape > 2");
    }
    out.mean = beta / (a - 1.0);
    out.variance = beta * beta / ((a - 1.0) * (a - 1.0) * (a - 2.0));
    return out;
  }
  if (chi < GhParams::kPsiZero) {
    out.mean = 2.0 * lambda / psi;
    out.variance = 4.0 * lambda / (psi * psi);
    return out;
  }
  const double omega = std::sqrt(chi * psi);
  const double eta = std::sqrt(chi / psi);
  const double lk = log_bessel_k(lambda, omega);
  out.mean = eta * std::exp(log_bessel_k(lambda + 1.0, omega) - lk);
  const double second = eta * eta * std::exp(log_bessel_k(lambda + 2.0, omega) - lk);
  out.variance = second - out.mean * out.mean;
  return out;
}

double sample_gig(double lambda, double chi, double psi, Rng& rng) {
  if (!(chi >= 0.0) || !(psi >= 0.0)) {
    throw std::invalid_argument("sample_gig: chi and psi must be non-negative");
  }
  if (psi < GhParams::kPsiZero) {
    if (!(lambda < 0.0) || !(chi > 0.0)) {
      throw std::invalid_argument("sample_gig: psi = 0 requires lambda < 0 and chi > 0");
    }
    return sample_inverse_gamma(-lambda, 0.5 * chi, rng);
  }
  if (chi < GhParams::kPsiZero) {
    if (!(lambda > 0.0)) {
      throw std::invalid_argument("sample_gig: chi = 0 requires lambda > 0");
    }
    return rng.gamma(lambda) * 2.0 / psi;
  }
  const double omega = std::sqrt(chi * psi);
  const double eta = std::sqrt(chi / psi);
  double y = sample_gig_standard(std::fabs(lambda), omega, rng);
  if (lambda < 0.0) {
    y = 1.0 / y;  // GIG(-lambda) and 1/GIG(lambda) coincide in this parameterization
  }
  return eta * y;
}

GhDistribution::GhDistribution(GhParams params) : params_(std::move(params)) {
  params_.validate();
  const Index d = params_.dimension();
  sigma_llt_.compute(params_.sigma);
  if (sigma_llt_.info() != Eigen::Success) {
    throw NumericalError("GhDistribution: Sigma is not positive definite");
  }
  precision_ = inverse_from_llt(sigma_llt_);
  precision_gamma_ = sigma_llt_.solve(params_.gamma);
  gamma_quad_ = std::max(0.0, params_.gamma.dot(precision_gamma_));
  log_det_sigma_ = log_det_from_llt(sigma_llt_);

  const double half_d = 0.5 * static_cast<double>(d);
  const double lambda = params_.lambda;
  const double chi = params_.chi;
  const double w = half_d - lambda;
  if (params_.psi_is_zero()) {
    if (gamma_quad_ <= kTinyQuad) {
      log_norm_ = std::lgamma(w) - std::lgamma(-lambda) - half_d * kLogPi -
                  0.5 * log_det_sigma_ - lambda * std::log(chi);
    } else {
      log_norm_ = -lambda * std::log(chi) + w * std::log(gamma_quad_) - half_d * kLog2Pi -
                  0.5 * log_det_sigma_ - std::lgamma(-lambda) + (lambda + 1.0) * M_LN2;
    }
  } else {
    const double psi = params_.psi;
    const double big_b = psi + gamma_quad_;
    log_norm_ = -0.5 * lambda * std::log(chi * psi) + lambda * std::log(psi) +
                w * std::log(big_b) - half_d * kLog2Pi - 0.5 * log_det_sigma_ -
                log_bessel_k(lambda, std::sqrt(chi * psi));
  }
}

double GhDistribution::log_pdf_from(const Vector& r, const Vector& s) const {
  const double half_d = 0.5 * static_cast<double>(dimension());
  const double w = half_d - params_.lambda;
  const double q = std::max(0.0, r.dot(s));
  const double lin = r.dot(precision_gamma_);
  if (params_.psi_is_zero() && gamma_quad_ <= kTinyQuad) {
    return log_norm_ - w * std::log(params_.chi + q) + lin;
  }
  const double big_b = params_.psi + gamma_quad_;
  const double z = std::sqrt((params_.chi + q) * big_b);
  if (!std::isfinite(z)) {
    std::ostringstream msg;
    msg << "gh_logpdf: Bessel argument overflow, |z| = " << z;
    throw NumericalError(msg.str());
  }
  return log_norm_ + log_bessel_k(w, z) - w * std::log(z) + lin;
}

double GhDistribution::log_pdf(const Vector& x, const Vector& mu) const {
  require_dimension(x.size(), dimension(), "gh_logpdf x");
  require_dimension(mu.size(), dimension(), "gh_logpdf mu");
  const Vector r = x - mu;
  if (!r.allFinite()) {
    if (r.hasNaN()) {
      throw ModelError("gh_logpdf: NaN input");
    }
    return -std::numeric_limits<double>::infinity();
  }
  const Vector s = sigma_llt_.solve(r);
  return log_pdf_from(r, s);
}

Vector GhDistribution::grad_log_pdf(const Vector& x, const Vector& mu) const {
  require_dimension(x.size(), dimension(), "grad_gh_logpdf x");
  require_dimension(mu.size(), dimension(), "grad_gh_logpdf mu");
  const Vector r = x - mu;
  const Vector s = sigma_llt_.solve(r);
  const double half_d = 0.5 * static_cast<double>(dimension());
  const double w = half_d - params_.lambda;
  const double q = std::max(0.0, r.dot(s));
  if (params_.psi_is_zero() && gamma_quad_ <= kTinyQuad) {
    return -2.0 * w / (params_.chi + q) * s + precision_gamma_;
  }
  const double big_b = params_.psi + gamma_quad_;
  const double z = std::sqrt((params_.chi + q) * big_b);
  if (!std::isfinite(z)) {
    std::ostringstream msg;
    msg << "grad_gh_logpdf: Bessel argument overflow, |z| = " << z;
    throw NumericalError(msg.str());
  }
  // d/dz [log K_w(z) - w log z] = -K_{w+1}(z) / K_w(z)
  const double ratio = bessel_k_ratio(w + 1.0, w, z);
  return -ratio * (big_b / z) * s + precision_gamma_;
}

double GhDistribution::sample_mixing(Rng& rng) const {
  return sample_gig(params_.lambda, params_.chi, params_.psi, rng);
}

Vector GhDistribution::sample(const Vector& mu, Rng& rng) const {
  require_dimension(mu.size(), dimension(), "sample_gh mu");
  const double w = sample_mixing(rng);
  const Vector z = rng.normal_vector(dimension());
  const Vector lz = sigma_llt_.matrixL() * z;
  return mu + params_.gamma * w + std::sqrt(w) * lz;
}

Vector GhDistribution::sample_conditional(const std::vector<Index>& block, const Vector& x,
                                          const Vector& mu, Rng& rng) const {
  const Index d = dimension();
  require_dimension(x.size(), d, "sample_conditional x");
  require_dimension(mu.size(), d, "sample_conditional mu");
  const auto nb = static_cast<Index>(block.size());
  if (nb == 0) {
    return Vector();
  }
  const Vector r = x - mu;
  const Vector pr = precision_ * r;
  const double q = std::max(0.0, r.dot(pr));

  Matrix p_bb(nb, nb);
  Vector pr_b(nb);
  Vector pg_b(nb);
  Vector x_b(nb);
  for (Index i = 0; i < nb; ++i) {
    const Index bi = block[static_cast<std::size_t>(i)];
    pr_b(i) = pr(bi);
    pg_b(i) = precision_gamma_(bi);
    x_b(i) = x(bi);
    for (Index j = 0; j < nb; ++j) {
      p_bb(i, j) = precision_(bi, block[static_cast<std::size_t>(j)]);
    }
  }
  const Eigen::LLT<Matrix> p_llt(p_bb);
  if (p_llt.info() != Eigen::Success) {
    throw NumericalError("sample_conditional: precision block is not positive definite");
  }
  const Vector shift = p_llt.solve(pr_b);
  const Vector gamma_c = p_llt.solve(pg_b);
  const double q_rest = std::max(0.0, q - pr_b.dot(shift));
  const double b_rest = std::max(0.0, gamma_quad_ - pg_b.dot(gamma_c));

  const double lambda_c = params_.lambda - 0.5 * static_cast<double>(d - nb);
  const double chi_c = params_.chi + q_rest;
  double psi_c = params_.psi + b_rest;
  if (psi_c < GhParams::kPsiZero) {
    psi_c = 0.0;
  }
  const double w = sample_gig(lambda_c, chi_c, psi_c, rng);
  const Vector z = rng.normal_vector(nb);
  const Vector noise = p_llt.matrixU().solve(z);
  return (x_b - shift) + gamma_c * w + std::sqrt(w) * noise;
}

double gh_logpdf(const Vector& x, const Vector& mu, const GhParams& p) {
  return GhDistribution(p).log_pdf(x, mu);
}

Vector grad_gh_logpdf(const Vector& x, const Vector& mu, const GhParams& p) {
  return GhDistribution(p).grad_log_pdf(x, mu);
}

Vector sample_gh(const Vector& mu, const GhParams& p, Rng& rng) {
  return GhDistribution(p).sample(mu, rng);
}

Matrix skewed_t_covariance(const GhParams& p) {
  const double nu = p.nu();
  if (!(nu > 4.0)) {
    throw std::invalid_argument("skewed_t_covariance: requires nu > 4");
  }
  const double c1 = nu / (nu - 2.0);
  const double c2 = nu * nu / ((2.0 * nu - 8.0) * (0.5 * nu - 1.0) * (0.5 * nu - 1.0));
  return symmetrized(c1 * p.sigma + c2 * p.gamma * p.gamma.transpose());
}

Matrix gh_covariance(const GhParams& p) {
  if (p.is_skewed_t()) {
    return skewed_t_covariance(p);
  }
  const MixingMoments m = gig_moments(p.lambda, p.chi, p.psi);
  return symmetrized(m.mean * p.sigma + m.variance * p.gamma * p.gamma.transpose());
}

}  // namespace smcmc
