#pragma once

#include "smcmc/metric.hpp"
#include "smcmc/model.hpp"
#include "smcmc/rng.hpp"
#include "smcmc/types.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace smcmc {

/// A state together with the target quantities evaluated there, so that an
/// accepted proposal can become the next current point without re-evaluation.
struct TargetPoint {
  Vector x;
  double log_density = -std::numeric_limits<double>::infinity();
  Vector grad;
  std::optional<MetricBundle> metric;
  MetricDetail metric_detail = MetricDetail::factor;

  bool in_support() const { return std::isfinite(log_density); }
};

/// log density and gradient at x; the gradient is skipped outside the support.
TargetPoint evaluate_target(const DifferentiableTarget& target, Vector x);
/// As above and also the metric at the requested detail.
TargetPoint evaluate_target(const DifferentiableTarget& target, Vector x, MetricDetail detail);
/// Makes sure `p` carries a metric with at least `detail`.
void ensure_metric(TargetPoint& p, const DifferentiableTarget& target, MetricDetail detail);

/// Fixed proposal covariance Sigma_pre for pre-conditioned MALA.
class Preconditioner {
 public:
  explicit Preconditioner(Matrix sigma_pre);
  static Preconditioner identity(Index d) { return Preconditioner(Matrix::Identity(d, d)); }

  Index dimension() const { return sigma_.rows(); }
  const Matrix& matrix() const { return sigma_; }
  Vector times(const Vector& v) const { return sigma_ * v; }
  Vector sqrt_times(const Vector& z) const { return llt_.matrixL() * z; }
  double inverse_quadratic(const Vector& v) const {
    return llt_.matrixL().solve(v).squaredNorm();
  }
  double log_det() const { return log_det_; }

 private:
  Matrix sigma_;
  Eigen::LLT<Matrix> llt_;
  double log_det_ = 0.0;
};

/// Proposed point with log q(x*|x) and log q(x|x*).
struct LangevinProposal {
  TargetPoint point;
  double log_q_fwd = 0.0;
  double log_q_rev = 0.0;
};

/// x* ~ N(x + (eps^2/2) Sigma_pre grad, eps^2 Sigma_pre).
LangevinProposal mala_propose(const TargetPoint& current, const DifferentiableTarget& target,
                              const Preconditioner& pre, double eps, Rng& rng);
/// The same proposal with Sigma_pre = G^-1 supplied through a metric factorization.
LangevinProposal mala_propose(const TargetPoint& current, const DifferentiableTarget& target,
                              const MetricBundle& metric, double eps, Rng& rng);
/// Manifold MALA: mean x + (eps^2/2)(G^-1 grad + Lambda), covariance eps^2 G^-1, with the
/// reverse density evaluated under the metric at x*. `current` must carry a metric
/// with derivative detail unless the target's metric is constant.
LangevinProposal smmala_propose(const TargetPoint& current, const DifferentiableTarget& target,
                                double eps, Rng& rng);
/// Manifold MALA without the drift term; only ever requests MetricDetail::factor.
LangevinProposal simplified_smmala_propose(const TargetPoint& current,
                                           const DifferentiableTarget& target, double eps,
                                           Rng& rng);

/// Metropolis-Hastings decision in log space. Always consumes exactly one uniform.
bool metropolis_accept(double log_ratio, Rng& rng);

struct KernelOutcome {
  bool accepted = false;
  bool failed = false;  ///< trajectory or proposal evaluation broke down; counted as a rejection
};

enum class LangevinVariant { mala, smmala, simplified_smmala };

/// One Langevin MH step; `current` is replaced on acceptance. `pre` is used by the
/// mala variant only.
KernelOutcome langevin_kernel(TargetPoint& current, const DifferentiableTarget& target,
                              LangevinVariant variant, const Preconditioner* pre, double eps,
                              Rng& rng);

struct HmcConfig {
  double epsilon = 0.1;
  int n_leapfrog = 20;
  int n_fixed_point = 2;
  bool jitter = true;  ///< per-call step size drawn uniformly from [0.8 eps, 1.2 eps]
};

struct PhasePoint {
  Vector x;
  Vector q;
  Vector grad_u;  ///< gradient of U = -log pi at x
};

/// Algorithm-5 leapfrog for H = U(x) + q^T M^-1 q / 2. `grad_u0` is the gradient at
/// x0. Throws NumericalError on a non-finite intermediate.
PhasePoint leapfrog(const Vector& x0, const Vector& q0, const Vector& grad_u0,
                    const std::function<Vector(const Vector&)>& grad_u, const MetricBundle& mass,
                    double eps, int n_leapfrog);

/// q ~ N(0, M), leapfrog, MH on H.
KernelOutcome hmc_kernel(TargetPoint& current, const DifferentiableTarget& target,
                         const MetricBundle& mass, const HmcConfig& cfg, Rng& rng);

/// Iterate-to-iterate distances of the implicit updates, one vector per step.
struct FixedPointTrace {
  std::vector<std::vector<double>> momentum;
  std::vector<std::vector<double>> position;
};

/// H~(x, q) = -log pi(x) + log((2 pi)^d |G(x)|)/2 + q^T G(x)^-1 q / 2.
double manifold_hamiltonian(const TargetPoint& p, const Vector& q);

/// Algorithm-7 generalized leapfrog with a fixed number of fixed-point iterations.
/// `start` must carry a metric with derivative detail. Throws NumericalError when a
/// fixed-point iteration diverges (step grows x10) or leaves the support.
std::pair<TargetPoint, Vector> generalized_leapfrog(const TargetPoint& start, const Vector& q0,
                                                    const DifferentiableTarget& target,
                                                    double eps, int n_leapfrog, int n_fixed_point,
                                                    FixedPointTrace* trace = nullptr);

/// Manifold HMC. A constant metric reduces the kernel to hmc_kernel with M = G.
KernelOutcome mhmc_kernel(TargetPoint& current, const DifferentiableTarget& target,
                          const HmcConfig& cfg, Rng& rng);

/// Draws the per-call step size when jitter is on.
double jittered_epsilon(const HmcConfig& cfg, Rng& rng);

}  // namespace smcmc
