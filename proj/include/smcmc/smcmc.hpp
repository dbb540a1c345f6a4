#pragma once

#include "smcmc/diagnostics.hpp"
#include "smcmc/gaussian_model.hpp"
#include "smcmc/model.hpp"
#include "smcmc/move.hpp"
#include "smcmc/rng.hpp"
#include "smcmc/step_size.hpp"

#include <optional>
#include <string>
#include <vector>

namespace smcmc {

/// Retained chain states from time n-1 with optional ancestor proposal weights.
struct SampleBank {
  std::vector<StateVector> states;
  Vector beta;  ///< normalized; empty means uniform

  Index size() const { return static_cast<Index>(states.size()); }
  bool uniform() const { return beta.size() == 0; }
  double log_beta(Index j) const;
  Index draw_ancestor(Rng& rng) const;
  const StateVector& operator[](Index j) const { return states[static_cast<std::size_t>(j)]; }

  /// Single-entry bank holding the model's anchor state; at n = 1 every transition
  /// draw from it is a draw from mu(x1).
  static SampleBank anchor(const StateSpaceModel& model);
};

struct ChainSample {
  Index ancestor = 0;
  StateVector current;
};

enum class AncestorMode { uniform, predictive, perfect_gibbs };
enum class SmcmcKernelKind { optimal, prior_composite, gradient };
enum class BlockProposal { conditional_prior, random_walk };

std::string to_string(AncestorMode mode);
std::string to_string(SmcmcKernelKind kind);
std::string to_string(BlockProposal proposal);

struct SmcmcConfig {
  Index n_samples = 200;
  double burn_in_fraction = 0.1;
  SmcmcKernelKind kernel = SmcmcKernelKind::gradient;
  AncestorMode ancestor_mode = AncestorMode::uniform;
  MoveConfig move;  ///< gradient kernel only
  Index block_size = 4;
  BlockProposal block_proposal = BlockProposal::conditional_prior;
  double random_walk_scale = 0.5;
  AcceptanceBand random_walk_band{0.2, 0.4};

  Index burn_in() const;
  Index total_iterations() const { return burn_in() + n_samples; }
  void validate() const;
};

/// beta_j = 1/N (uniform) or proportional to g(y | E[X_n | X_{n-1} = bank_j]) (predictive).
/// Throws NumericalError when every weight is zero.
Vector ancestor_weights_precompute(const SampleBank& bank, const Observation* y,
                                   const StateSpaceModel& model, AncestorMode mode);

/// beta_j proportional to p(y | bank_j) for the linear-Gaussian model.
Vector optimal_ancestor_weights(const SampleBank& bank, const Observation& y,
                                const GaussianModel& model);

/// Independent MH move of the ancestor with proposal beta. Returns true on acceptance.
bool ancestor_move(ChainSample& chain, const SampleBank& bank, const StateSpaceModel& model,
                   Rng& rng);

/// Exact draw of the ancestor proportional to f(x_cur | bank_j). O(N) per call.
void perfect_ancestor_gibbs(ChainSample& chain, const SampleBank& bank,
                            const StateSpaceModel& model, Rng& rng);

/// log acceptance ratio of the joint prior draw: log g(y|x*) - log g(y|x) plus the
/// beta correction for a non-uniform bank.
double joint_draw_log_ratio(const StateSpaceModel& model, const Observation& y,
                            const SampleBank& bank, const ChainSample& current,
                            const ChainSample& proposed);

/// Propose a* ~ beta, x* ~ f(.|bank[a*]); accept by the likelihood ratio.
bool prior_independent_kernel(ChainSample& chain, const SampleBank& bank, const Observation& y,
                              const StateSpaceModel& model, Rng& rng);

/// a* ~ bank.beta (p(y|bank_j) when empty), x* ~ p(x|y, bank[a*]). Always accepted.
void optimal_independent_kernel(ChainSample& chain, const SampleBank& bank, const Observation& y,
                                const GaussianModel& model, Rng& rng);

/// log acceptance ratio of a block refinement proposal, using only the factors that
/// change. For the conditional prior this is the likelihood ratio over the block.
double block_log_ratio(const StateSpaceModel& model, const Observation& y,
                       const StateVector& x_prev, const StateVector& x, const StateVector& x_new,
                       const std::vector<Index>& block, BlockProposal proposal);

/// Random partition of {0..d-1} into blocks of `block_size` (last one shorter).
std::vector<std::vector<Index>> random_partition(Index d, Index block_size, Rng& rng);

struct CompositeStats {
  Index joint_accepted = 0;
  Index joint_proposed = 0;
  Index refine_accepted = 0;  ///< ancestor and block decisions together
  Index refine_proposed = 0;
};

/// Algorithm-3 composite kernel: joint prior draw, ancestor refinement, then
/// MH-within-Gibbs over a random partition of x_n.
void composite_kernel(ChainSample& chain, const SampleBank& bank, const Observation& y,
                      const StateSpaceModel& model, const SmcmcConfig& cfg, double rw_scale,
                      Rng& rng, CompositeStats& stats, StepSizeController* rw_controller = nullptr);

/// Adaptation state carried from one time step to the next.
struct SmcmcState {
  std::optional<StepSizeController> kernel_controller;
  std::optional<StepSizeController> random_walk_controller;
};

struct TimestepResult {
  SampleBank bank;
  std::vector<Index> ancestors;  ///< ancestor of every retained sample
  Vector estimate;               ///< bank mean
  ChainDiagnostics diagnostics;
};

/// One SMCMC time step: N_b + N iterations targeting g(y|x_n) (1/N) sum_j f(x_n|bank_j),
/// discarding the first N_b. Step sizes adapt during burn-in only.
TimestepResult smcmc_timestep(const SampleBank& bank, const Observation& y,
                              const StateSpaceModel& model, const SmcmcConfig& cfg, Rng& rng,
                              SmcmcState& state);

/// Runs smcmc_timestep over time with one stream per step keyed by (seed, n).
class SmcmcFilter {
 public:
  SmcmcFilter(const StateSpaceModel& model, SmcmcConfig cfg, std::uint64_t seed);

  TimestepResult step(const Observation& y);
  const SampleBank& bank() const { return bank_; }
  Index time() const { return n_; }

 private:
  const StateSpaceModel* model_;
  SmcmcConfig cfg_;
  std::uint64_t seed_;
  SampleBank bank_;
  SmcmcState state_;
  Index n_ = 0;
};

}  // namespace smcmc
