#include "smcmc/kernels.hpp"

#include "smcmc/linalg.hpp"

#include <cmath>

namespace smcmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log N(x; mean, eps^2 G^-1)
double log_q_metric(const Vector& x, const Vector& mean, const MetricBundle& g, double eps) {
  const double d = static_cast<double>(x.size());
  const Vector r = x - mean;
  return -0.5 * d * kLog2Pi - d * std::log(eps) + 0.5 * g.log_det() -
         0.5 * g.quadratic(r) / (eps * eps);
}

bool failed_point(const TargetPoint& p) { return !p.in_support(); }

// Evaluates the target at a proposed point, mapping breakdowns to an out-of-support
// point so the MH step rejects it.
TargetPoint try_evaluate(const DifferentiableTarget& target, Vector x,
                         std::optional<MetricDetail> detail) {
  try {
    if (!x.allFinite()) {
      TargetPoint p;
      p.x = std::move(x);
      return p;
    }
    return detail ? evaluate_target(target, std::move(x), *detail)
                  : evaluate_target(target, std::move(x));
  } catch (const ModelError&) {
  } catch (const NumericalError&) {
  }
  return TargetPoint{};
}

// Shared Gaussian proposal with covariance eps^2 G^-1. The metric at the proposed
// point is either `g` again (constant metric) or re-evaluated at `new_detail`.
LangevinProposal metric_proposal(const TargetPoint& current, const DifferentiableTarget& target,
                                 const MetricBundle& g, bool drift,
                                 std::optional<MetricDetail> new_detail, double eps, Rng& rng) {
  const double h = 0.5 * eps * eps;
  Vector mean = current.x + h * g.solve(current.grad);
  if (drift) {
    mean += h * g.langevin_drift();
  }
  const Vector z = rng.normal_vector(current.x.size());
  Vector x_new = mean + eps * g.inverse_sqrt_times(z);

  LangevinProposal out;
  out.point = try_evaluate(target, std::move(x_new), new_detail);
  if (failed_point(out.point)) {
    out.log_q_fwd = 0.0;
    out.log_q_rev = kNegInf;
    return out;
  }
  const MetricBundle& g_new = new_detail ? *out.point.metric : g;
  if (!new_detail) {
    out.point.metric = g;
    out.point.metric_detail = current.metric_detail;
  }
  out.log_q_fwd = log_q_metric(out.point.x, mean, g, eps);
  Vector mean_rev = out.point.x + h * g_new.solve(out.point.grad);
  if (drift) {
    mean_rev += h * g_new.langevin_drift();
  }
  out.log_q_rev = log_q_metric(current.x, mean_rev, g_new, eps);
  return out;
}

double langevin_log_ratio(const TargetPoint& current, const LangevinProposal& p) {
  if (!p.point.in_support()) {
    return kNegInf;
  }
  return p.point.log_density - current.log_density + p.log_q_rev - p.log_q_fwd;
}

Vector checked(Vector v, const char* what) {
  if (!v.allFinite()) {
    throw NumericalError(std::string(what) + ": non-finite intermediate");
  }
  return v;
}

// dH~/dx without the q-dependent term, which is fixed for a given position.
Vector position_force(const TargetPoint& p) {
  const MetricBundle& g = *p.metric;
  Vector f = -p.grad;
  if (!g.derivative().empty()) {
    f += 0.5 * g.derivative_trace();
  }
  return f;
}

Vector momentum_force(const TargetPoint& p, const Vector& base, const Vector& q) {
  const MetricBundle& g = *p.metric;
  if (g.derivative().empty()) {
    return base;
  }
  const Vector w = g.solve(q);
  return base - 0.5 * g.derivative().quadratic_forms(w);
}

void guard_divergence(double delta, double previous, const char* what) {
  if (!std::isfinite(delta) || (previous > 0.0 && delta > 10.0 * previous && delta > 1e-12)) {
    throw NumericalError(std::string("generalized_leapfrog: ") + what +
                         " fixed-point iteration diverged");
  }
}

}  // namespace

TargetPoint evaluate_target(const DifferentiableTarget& target, Vector x) {
  TargetPoint p;
  p.log_density = target.log_density(x);
  if (p.in_support()) {
    p.grad = target.gradient(x);
  }
  p.x = std::move(x);
  return p;
}

TargetPoint evaluate_target(const DifferentiableTarget& target, Vector x, MetricDetail detail) {
  TargetPoint p = evaluate_target(target, std::move(x));
  if (p.in_support()) {
    p.metric = target.metric(p.x, detail);
    p.metric_detail = detail;
  }
  return p;
}

void ensure_metric(TargetPoint& p, const DifferentiableTarget& target, MetricDetail detail) {
  if (p.metric && static_cast<int>(p.metric_detail) >= static_cast<int>(detail)) {
    return;
  }
  p.metric = target.metric(p.x, detail);
  p.metric_detail = detail;
}

Preconditioner::Preconditioner(Matrix sigma_pre) : sigma_(std::move(sigma_pre)) {
  llt_.compute(sigma_);
  if (llt_.info() != Eigen::Success) {
    throw NumericalError("Preconditioner: Sigma_pre is not positive definite");
  }
  log_det_ = log_det_from_llt(llt_);
}

LangevinProposal mala_propose(const TargetPoint& current, const DifferentiableTarget& target,
                              const Preconditioner& pre, double eps, Rng& rng) {
  if (!current.grad.allFinite()) {
    throw ModelError("mala_propose: non-finite gradient at the current point");
  }
  const double d = static_cast<double>(current.x.size());
  const double h = 0.5 * eps * eps;
  auto log_q = [&](const Vector& x, const Vector& mean) {
    return -0.5 * d * kLog2Pi - d * std::log(eps) - 0.5 * pre.log_det() -
           0.5 * pre.inverse_quadratic(x - mean) / (eps * eps);
  };
  const Vector mean = current.x + h * pre.times(current.grad);
  const Vector z = rng.normal_vector(current.x.size());
  LangevinProposal out;
  out.point = try_evaluate(target, mean + eps * pre.sqrt_times(z), std::nullopt);
  if (failed_point(out.point)) {
    out.log_q_rev = kNegInf;
    return out;
  }
  out.log_q_fwd = log_q(out.point.x, mean);
  out.log_q_rev = log_q(current.x, out.point.x + h * pre.times(out.point.grad));
  return out;
}

LangevinProposal mala_propose(const TargetPoint& current, const DifferentiableTarget& target,
                              const MetricBundle& metric, double eps, Rng& rng) {
  if (!current.grad.allFinite()) {
    throw ModelError("mala_propose: non-finite gradient at the current point");
  }
  return metric_proposal(current, target, metric, false, std::nullopt, eps, rng);
}

LangevinProposal smmala_propose(const TargetPoint& current, const DifferentiableTarget& target,
                                double eps, Rng& rng) {
  if (target.metric_is_constant()) {
    const MetricBundle g = current.metric ? *current.metric
                                          : target.metric(current.x, MetricDetail::factor);
    return mala_propose(current, target, g, eps, rng);
  }
  if (!current.metric || current.metric_detail != MetricDetail::derivative) {
    throw std::logic_error("smmala_propose: current point needs a metric with derivative");
  }
  return metric_proposal(current, target, *current.metric, true, MetricDetail::derivative, eps,
                         rng);
}

LangevinProposal simplified_smmala_propose(const TargetPoint& current,
                                           const DifferentiableTarget& target, double eps,
                                           Rng& rng) {
  const MetricBundle g = current.metric ? *current.metric
                                        : target.metric(current.x, MetricDetail::factor);
  if (target.metric_is_constant()) {
    return mala_propose(current, target, g, eps, rng);
  }
  return metric_proposal(current, target, g, false, MetricDetail::factor, eps, rng);
}

bool metropolis_accept(double log_ratio, Rng& rng) {
  const double u = rng.uniform_open();
  if (std::isnan(log_ratio) || log_ratio == kNegInf) {
    return false;
  }
  return log_ratio >= 0.0 || std::log(u) < log_ratio;
}

KernelOutcome langevin_kernel(TargetPoint& current, const DifferentiableTarget& target,
                              LangevinVariant variant, const Preconditioner* pre, double eps,
                              Rng& rng) {
  LangevinProposal prop;
  switch (variant) {
    case LangevinVariant::mala:
      if (pre == nullptr) {
        throw std::invalid_argument("langevin_kernel: mala needs a preconditioner");
      }
      prop = mala_propose(current, target, *pre, eps, rng);
      break;
    case LangevinVariant::smmala:
      if (!target.metric_is_constant()) {
        ensure_metric(current, target, MetricDetail::derivative);
      }
      prop = smmala_propose(current, target, eps, rng);
      break;
    case LangevinVariant::simplified_smmala:
      ensure_metric(current, target, MetricDetail::factor);
      prop = simplified_smmala_propose(current, target, eps, rng);
      break;
  }
  KernelOutcome out;
  out.failed = !prop.point.in_support() && prop.point.x.size() == 0;
  out.accepted = metropolis_accept(langevin_log_ratio(current, prop), rng);
  if (out.accepted) {
    current = std::move(prop.point);
  }
  return out;
}

double jittered_epsilon(const HmcConfig& cfg, Rng& rng) {
  if (!cfg.jitter) {
    return cfg.epsilon;
  }
  return cfg.epsilon * (0.8 + 0.4 * rng.uniform());
}

PhasePoint leapfrog(const Vector& x0, const Vector& q0, const Vector& grad_u0,
                    const std::function<Vector(const Vector&)>& grad_u, const MetricBundle& mass,
                    double eps, int n_leapfrog) {
  PhasePoint s{x0, q0, grad_u0};
  for (int i = 0; i < n_leapfrog; ++i) {
    s.q = checked(s.q - 0.5 * eps * s.grad_u, "leapfrog");
    s.x = checked(s.x + eps * mass.solve(s.q), "leapfrog");
    s.grad_u = checked(grad_u(s.x), "leapfrog");
    s.q = checked(s.q - 0.5 * eps * s.grad_u, "leapfrog");
  }
  return s;
}

KernelOutcome hmc_kernel(TargetPoint& current, const DifferentiableTarget& target,
                         const MetricBundle& mass, const HmcConfig& cfg, Rng& rng) {
  const double eps = jittered_epsilon(cfg, rng);
  const Vector q0 = mass.sqrt_times(rng.normal_vector(current.x.size()));
  const double h0 = -current.log_density + 0.5 * mass.inverse_quadratic(q0);
  KernelOutcome out;
  double log_ratio = kNegInf;
  TargetPoint next;
  try {
    const PhasePoint end = leapfrog(
        current.x, q0, -current.grad, [&](const Vector& x) { return Vector(-target.gradient(x)); },
        mass, eps, cfg.n_leapfrog);
    next.x = end.x;
    next.log_density = target.log_density(end.x);
    next.grad = -end.grad_u;
    if (next.in_support()) {
      log_ratio = -(-next.log_density + 0.5 * mass.inverse_quadratic(end.q)) + h0;
    }
  } catch (const ModelError&) {
    out.failed = true;
  } catch (const NumericalError&) {
    out.failed = true;
  }
  out.accepted = metropolis_accept(log_ratio, rng);
  if (out.accepted) {
    current = std::move(next);
  }
  return out;
}

double manifold_hamiltonian(const TargetPoint& p, const Vector& q) {
  const MetricBundle& g = *p.metric;
  const double d = static_cast<double>(q.size());
  return -p.log_density + 0.5 * (d * kLog2Pi + g.log_det()) + 0.5 * g.inverse_quadratic(q);
}

std::pair<TargetPoint, Vector> generalized_leapfrog(const TargetPoint& start, const Vector& q0,
                                                    const DifferentiableTarget& target,
                                                    double eps, int n_leapfrog, int n_fixed_point,
                                                    FixedPointTrace* trace) {
  if (!start.metric || start.metric_detail != MetricDetail::derivative) {
    throw std::logic_error("generalized_leapfrog: start point needs a metric with derivative");
  }
  const bool constant = target.metric_is_constant();
  TargetPoint p = start;
  Vector q = q0;
  for (int step = 0; step < n_leapfrog; ++step) {
    std::vector<double> q_deltas;
    std::vector<double> x_deltas;

    // Implicit momentum half step.
    const Vector base = position_force(p);
    Vector q_half = q;
    double prev = 0.0;
    for (int k = 0; k < n_fixed_point; ++k) {
      Vector next = q - 0.5 * eps * momentum_force(p, base, q_half);
      const double delta = (next - q_half).norm();
      guard_divergence(delta, prev, "momentum");
      q_deltas.push_back(delta);
      prev = delta;
      q_half = std::move(next);
    }

    // Implicit position step with the velocity averaged over both endpoints.
    const Vector w0 = p.metric->solve(q_half);
    Vector x_new = p.x;
    prev = 0.0;
    for (int k = 0; k < n_fixed_point; ++k) {
      Vector w1 = w0;
      if (k > 0 && !constant) {
        w1 = target.metric(x_new, MetricDetail::factor).solve(q_half);
      }
      Vector next = p.x + 0.5 * eps * (w0 + w1);
      const double delta = (next - x_new).norm();
      guard_divergence(delta, prev, "position");
      x_deltas.push_back(delta);
      prev = delta;
      x_new = std::move(next);
    }

    TargetPoint np;
    if (constant) {
      np = evaluate_target(target, std::move(x_new));
      np.metric = p.metric;
      np.metric_detail = MetricDetail::derivative;
    } else {
      np = evaluate_target(target, std::move(x_new), MetricDetail::derivative);
    }
    if (!np.in_support()) {
      throw NumericalError("generalized_leapfrog: trajectory left the support");
    }
    // Explicit momentum half step at the new position.
    q = checked(q_half - 0.5 * eps * momentum_force(np, position_force(np), q_half),
                "generalized_leapfrog");
    p = std::move(np);
    if (trace) {
      trace->momentum.push_back(std::move(q_deltas));
      trace->position.push_back(std::move(x_deltas));
    }
  }
  return {std::move(p), std::move(q)};
}

KernelOutcome mhmc_kernel(TargetPoint& current, const DifferentiableTarget& target,
                          const HmcConfig& cfg, Rng& rng) {
  if (target.metric_is_constant()) {
    ensure_metric(current, target, MetricDetail::factor);
    const MetricBundle mass = *current.metric;
    const MetricDetail detail = current.metric_detail;
    KernelOutcome out = hmc_kernel(current, target, mass, cfg, rng);
    if (out.accepted) {
      current.metric = mass;
      current.metric_detail = detail;
    }
    return out;
  }
  ensure_metric(current, target, MetricDetail::derivative);
  const double eps = jittered_epsilon(cfg, rng);
  const Vector q0 = current.metric->sqrt_times(rng.normal_vector(current.x.size()));
  const double h0 = manifold_hamiltonian(current, q0);
  KernelOutcome out;
  double log_ratio = kNegInf;
  TargetPoint next;
  try {
    auto [end, q_end] =
        generalized_leapfrog(current, q0, target, eps, cfg.n_leapfrog, cfg.n_fixed_point);
    log_ratio = -manifold_hamiltonian(end, q_end) + h0;
    next = std::move(end);
  } catch (const ModelError&) {
    out.failed = true;
  } catch (const NumericalError&) {
    out.failed = true;
  }
  out.accepted = metropolis_accept(log_ratio, rng);
  if (out.accepted) {
    current = std::move(next);
  }
  return out;
}

}  // namespace smcmc
