#include "smcmc/move.hpp"

#include <stdexcept>

namespace smcmc {

std::string to_string(MoveKind kind) {
  switch (kind) {
    case MoveKind::mala:
      return "mala";
    case MoveKind::smmala:
      return "smmala";
    case MoveKind::simplified_smmala:
      return "simplified_smmala";
    case MoveKind::hmc:
      return "hmc";
    case MoveKind::mhmc:
      return "mhmc";
  }
  return "unknown";
}

MoveKind parse_move_kind(const std::string& name) {
  for (MoveKind k : {MoveKind::mala, MoveKind::smmala, MoveKind::simplified_smmala, MoveKind::hmc,
                     MoveKind::mhmc}) {
    if (to_string(k) == name) {
      return k;
    }
  }
  throw std::invalid_argument("unknown move kernel '" + name + "'");
}

bool is_hamiltonian(MoveKind kind) { return kind == MoveKind::hmc || kind == MoveKind::mhmc; }

AcceptanceBand MoveConfig::target_band() const {
  if (band) {
    return *band;
  }
  return is_hamiltonian(kind) ? AcceptanceBand::hamiltonian() : AcceptanceBand::langevin();
}

void MoveConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("MoveConfig: epsilon must be positive");
  }
  if (n_leapfrog < 1) {
    throw std::invalid_argument("MoveConfig: n_leapfrog must be at least 1");
  }
  if (n_fixed_point < 1) {
    throw std::invalid_argument("MoveConfig: n_fixed_point must be at least 1");
  }
  target_band().validate();
}

MoveConfig MoveConfig::defaults(MoveKind kind) {
  MoveConfig c;
  c.kind = kind;
  switch (kind) {
    case MoveKind::hmc:
      c.n_leapfrog = 20;
      c.epsilon = 0.05;
      break;
    case MoveKind::mhmc:
      c.n_leapfrog = 10;
      c.n_fixed_point = 2;
      c.epsilon = 0.2;
      break;
    default:
      c.epsilon = 0.3;
      break;
  }
  return c;
}

GradientMove::GradientMove(MoveConfig cfg, Index dimension)
    : cfg_(cfg),
      pre_(Preconditioner::identity(dimension)),
      mass_(MetricBundle::from_metric(Matrix::Identity(dimension, dimension), MetricDetail::factor)) {
  cfg_.validate();
}

MetricDetail GradientMove::metric_detail(const DifferentiableTarget& target) const {
  switch (cfg_.kind) {
    case MoveKind::mala:
    case MoveKind::hmc:
      return MetricDetail::factor;
    case MoveKind::simplified_smmala:
      return MetricDetail::factor;
    case MoveKind::smmala:
    case MoveKind::mhmc:
      return target.metric_is_constant() ? MetricDetail::factor : MetricDetail::derivative;
  }
  return MetricDetail::factor;
}

KernelOutcome GradientMove::apply(TargetPoint& current, const DifferentiableTarget& target,
                                  double eps, Rng& rng) const {
  switch (cfg_.kind) {
    case MoveKind::mala:
      return langevin_kernel(current, target, LangevinVariant::mala, &pre_, eps, rng);
    case MoveKind::smmala:
      return langevin_kernel(current, target, LangevinVariant::smmala, nullptr, eps, rng);
    case MoveKind::simplified_smmala:
      return langevin_kernel(current, target, LangevinVariant::simplified_smmala, nullptr, eps,
                             rng);
    case MoveKind::hmc:
    case MoveKind::mhmc: {
      HmcConfig h;
      h.epsilon = eps;
      h.n_leapfrog = cfg_.n_leapfrog;
      h.n_fixed_point = cfg_.n_fixed_point;
      h.jitter = cfg_.jitter;
      if (cfg_.kind == MoveKind::hmc) {
        return hmc_kernel(current, target, mass_, h, rng);
      }
      return mhmc_kernel(current, target, h, rng);
    }
  }
  throw std::logic_error("GradientMove: unhandled kind");
}

StepSizeController GradientMove::make_controller(int window) const {
  return StepSizeController(cfg_.epsilon, cfg_.target_band(), window);
}

}  // namespace smcmc
