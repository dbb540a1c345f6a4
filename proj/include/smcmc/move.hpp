#pragma once

#include "smcmc/kernels.hpp"
#include "smcmc/step_size.hpp"

#include <optional>
#include <string>

namespace smcmc {

enum class MoveKind { mala, smmala, simplified_smmala, hmc, mhmc };

std::string to_string(MoveKind kind);
/// Accepts the names printed by to_string; throws std::invalid_argument otherwise.
MoveKind parse_move_kind(const std::string& name);
bool is_hamiltonian(MoveKind kind);

struct MoveConfig {
  MoveKind kind = MoveKind::mhmc;
  double epsilon = 0.1;  ///< initial step size
  int n_leapfrog = 10;
  int n_fixed_point = 2;
  bool jitter = true;
  bool adapt = true;
  std::optional<AcceptanceBand> band;  ///< defaults to the family band when empty

  AcceptanceBand target_band() const;
  void validate() const;
  /// Leapfrog counts used in the experiments: 20 for hmc, 10 with 2 fixed-point
  /// iterations for mhmc.
  static MoveConfig defaults(MoveKind kind);
};

/// One gradient-based MH move on x_n. Plain MALA uses an identity pre-conditioner
/// and plain HMC an identity mass matrix.
class GradientMove {
 public:
  GradientMove(MoveConfig cfg, Index dimension);

  const MoveConfig& config() const { return cfg_; }
  /// Metric detail the move needs on its current point.
  MetricDetail metric_detail(const DifferentiableTarget& target) const;
  /// Applies the move with step size `eps`; `current` must belong to `target`.
  KernelOutcome apply(TargetPoint& current, const DifferentiableTarget& target, double eps,
                      Rng& rng) const;
  /// Fresh step-size controller for this move.
  StepSizeController make_controller(int window = 25) const;

 private:
  MoveConfig cfg_;
  Preconditioner pre_;
  MetricBundle mass_;
};

}  // namespace smcmc
