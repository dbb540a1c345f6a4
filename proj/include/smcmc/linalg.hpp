#pragma once

#include "smcmc/types.hpp"

#include <Eigen/Cholesky>

namespace smcmc {

/// Cholesky factorization with diagonal jitter repair.
///
/// A plain LLT is attempted first. On failure, jitter 1e-10 * trace(A)/d is added
/// to the diagonal and escalated x10 up to three times before giving up.
struct JitteredCholesky {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;  ///< diagonal amount that was finally added (0 if none)
};

JitteredCholesky cholesky_with_jitter(const Matrix& a);

/// (A + A^T) / 2
Matrix symmetrized(const Matrix& a);

/// log det(A) from a successful LLT factorization.
double log_det_from_llt(const Eigen::LLT<Matrix>& llt);

/// Inverse of an SPD matrix through its LLT factor, symmetrized.
Matrix inverse_from_llt(const Eigen::LLT<Matrix>& llt);

/// log N(x; mean, cov) where cov = L L^T is supplied through its factorization.
double mvn_log_density(const Vector& x, const Vector& mean, const Eigen::LLT<Matrix>& cov_llt);

/// log of sum(exp(v)) computed stably; -inf when all entries are -inf.
double log_sum_exp(const Vector& v);

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

}  // namespace smcmc
