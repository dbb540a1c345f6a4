#pragma once

#include "smcmc/diagnostics.hpp"
#include "smcmc/model.hpp"
#include "smcmc/move.hpp"
#include "smcmc/rng.hpp"

#include <vector>

namespace smcmc {

/// Weighted particles at the current time; log weights are kept normalized.
struct ParticleSet {
  std::vector<StateVector> states;
  Vector log_weights;

  Index size() const { return static_cast<Index>(states.size()); }
  Vector weights() const { return log_weights.array().exp(); }
  /// Rescales so that sum(exp(log_weights)) = 1; throws NumericalError when every
  /// weight is zero.
  void normalize();
  Vector mean() const;
  void validate() const;

  static ParticleSet equally_weighted(std::vector<StateVector> states);
  /// N copies of the model's anchor state, so that the first step draws from mu(x1).
  static ParticleSet initial(const StateSpaceModel& model, Index n);
};

/// Normalized weights from log weights; throws NumericalError on total collapse.
Vector normalized_weights(const Vector& log_weights);
/// 1 / sum W_j^2 in [1, N].
double weight_ess(const Vector& log_weights);

/// Ancestor indices from systematic resampling of normalized `weights`.
std::vector<Index> systematic_resample_indices(const Vector& weights, Rng& rng);
ParticleSet systematic_resample(const ParticleSet& ps, Rng& rng);

/// Importance proposal q(x_n | x_{n-1}, y_n) for SIR. Without one, SIR proposes
/// from the transition and the incremental weight is the likelihood alone.
class ImportanceProposal {
 public:
  virtual ~ImportanceProposal() = default;
  virtual StateVector sample(const StateVector& x_prev, const Observation& y, Rng& rng) const = 0;
  virtual double log_density(const StateVector& x, const StateVector& x_prev,
                             const Observation& y) const = 0;
};

struct SirConfig {
  double threshold_fraction = 0.5;  ///< resample when weight ESS < fraction * N
  bool always_resample = false;
  const ImportanceProposal* proposal = nullptr;
};

/// What an SMC step reports besides the new particles.
struct SmcStepInfo {
  double ess_before_resampling = 0.0;
  bool resampled = false;
  Index unique_ancestors = 0;
  Vector estimate;  ///< weighted posterior mean before resampling
  double accept_rate = ChainDiagnostics::kNotApplicable;
  Index kernel_failures = 0;
};

/// Sequential importance resampling. Particle j propagates with its own stream
/// keyed by (step seed, j), and the step seed is one draw from `rng`.
ParticleSet sir_step(const ParticleSet& ps, const Observation& y, const StateSpaceModel& model,
                     const SirConfig& cfg, Rng& rng, SmcStepInfo* info = nullptr);

/// Contiguous index blocks of size `block_size`; the last one is shorter when
/// block_size does not divide d.
std::vector<std::vector<Index>> contiguous_blocks(Index d, Index block_size);

/// Block SIR: propagate from the prior, weight every block by its own likelihood
/// terms, resample each block independently and recombine. Always resamples, so a
/// single block reproduces sir_step with always_resample. Requires a separable
/// likelihood.
ParticleSet block_sir_step(const ParticleSet& ps, const Observation& y,
                           const StateSpaceModel& model, Index block_size, Rng& rng,
                           SmcStepInfo* info = nullptr);

/// Resample-Move: SIR with forced resampling followed by `k_moves` applications
/// of `move` to every particle, targeting g(y|x_n) f(x_n|parent). The step size
/// comes from `controller`, which keeps adapting across particles and steps.
ParticleSet resample_move_step(const ParticleSet& ps, const Observation& y,
                               const StateSpaceModel& model, const GradientMove& move,
                               StepSizeController& controller, int k_moves, Rng& rng,
                               SmcStepInfo* info = nullptr);

}  // namespace smcmc
