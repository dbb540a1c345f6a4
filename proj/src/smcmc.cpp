#include "smcmc/smcmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace smcmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Vector normalize_log(const Vector& lw, const char* what) {
  const double top = lw.maxCoeff();
  if (!std::isfinite(top)) {
    throw NumericalError(std::string(what) + ": every weight is zero");
  }
  Vector w = (lw.array() - top).exp();
  return w / w.sum();
}

Index draw_categorical(const Vector& w, Rng& rng) {
  const double u = rng.uniform() * w.sum();
  double acc = 0.0;
  for (Index j = 0; j < w.size(); ++j) {
    acc += w(j);
    if (u < acc) {
      return j;
    }
  }
  // Rounding can leave u just above the running sum; fall back to the last
  // index with positive mass.
  for (Index j = w.size() - 1; j >= 0; --j) {
    if (w(j) > 0.0) {
      return j;
    }
  }
  return w.size() - 1;
}

double log_likelihood_over(const StateSpaceModel& model, const Observation& y, const StateVector& x,
                           const std::vector<Index>& block) {
  if (model.likelihood_is_separable()) {
    return model.log_likelihood_block(y, x, block);
  }
  return model.log_likelihood(y, x);
}

// Burn-in is short (N_b = 0.1 N), so the window shrinks with it to leave at least
// two adaptation rounds per time step.
int adaptation_window(Index n_burn) {
  return static_cast<int>(std::clamp<Index>(n_burn / 2, 5, 25));
}

template <typename Error>
[[noreturn]] void rethrow_with_context(const Error& e, Index iteration) {
  throw Error("SMCMC iteration " + std::to_string(iteration) + ": " + e.what());
}

}  // namespace

double SampleBank::log_beta(Index j) const {
  if (uniform()) {
    return -std::log(static_cast<double>(size()));
  }
  return std::log(beta(j));
}

Index SampleBank::draw_ancestor(Rng& rng) const {
  if (uniform()) {
    return rng.uniform_index(size());
  }
  return draw_categorical(beta, rng);
}

SampleBank SampleBank::anchor(const StateSpaceModel& model) {
  SampleBank b;
  b.states.push_back(model.initial_anchor());
  return b;
}

std::string to_string(AncestorMode mode) {
  switch (mode) {
    case AncestorMode::uniform:
      return "uniform";
    case AncestorMode::predictive:
      return "predictive";
    case AncestorMode::perfect_gibbs:
      return "perfect_gibbs";
  }
  return "unknown";
}

std::string to_string(SmcmcKernelKind kind) {
  switch (kind) {
    case SmcmcKernelKind::optimal:
      return "optimal";
    case SmcmcKernelKind::prior_composite:
      return "prior_composite";
    case SmcmcKernelKind::gradient:
      return "gradient";
  }
  return "unknown";
}

std::string to_string(BlockProposal proposal) {
  return proposal == BlockProposal::conditional_prior ? "conditional_prior" : "random_walk";
}

Index SmcmcConfig::burn_in() const {
  return static_cast<Index>(std::floor(burn_in_fraction * static_cast<double>(n_samples) + 1e-9));
}

void SmcmcConfig::validate() const {
  if (n_samples < 10) {
    throw std::invalid_argument("SmcmcConfig: need at least 10 retained samples");
  }
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw std::invalid_argument("SmcmcConfig: burn_in_fraction must lie in [0, 1)");
  }
  if (block_size < 1) {
    throw std::invalid_argument("SmcmcConfig: block_size must be positive");
  }
  if (!(random_walk_scale > 0.0)) {
    throw std::invalid_argument("SmcmcConfig: random_walk_scale must be positive");
  }
  random_walk_band.validate();
  if (kernel == SmcmcKernelKind::gradient) {
    move.validate();
  }
}

Vector ancestor_weights_precompute(const SampleBank& bank, const Observation* y,
                                   const StateSpaceModel& model, AncestorMode mode) {
  const Index n = bank.size();
  switch (mode) {
    case AncestorMode::uniform:
      return Vector::Constant(n, 1.0 / static_cast<double>(n));
    case AncestorMode::predictive: {
      if (y == nullptr) {
        throw std::invalid_argument("ancestor_weights_precompute: predictive mode needs y");
      }
      Vector lw(n);
      for (Index j = 0; j < n; ++j) {
        lw(j) = model.log_likelihood(*y, model.transition_mean(bank[j]));
      }
      return normalize_log(lw, "predictive ancestor weights");
    }
    case AncestorMode::perfect_gibbs:
      throw std::invalid_argument(
          "ancestor_weights_precompute: perfect Gibbs weights depend on the chain state");
  }
  return Vector();
}

Vector optimal_ancestor_weights(const SampleBank& bank, const Observation& y,
                                const GaussianModel& model) {
  Vector lw(bank.size());
  for (Index j = 0; j < bank.size(); ++j) {
    lw(j) = model.log_predictive_likelihood(y, bank[j]);
  }
  return normalize_log(lw, "optimal ancestor weights");
}

bool ancestor_move(ChainSample& chain, const SampleBank& bank, const StateSpaceModel& model,
                   Rng& rng) {
  const Index proposed = bank.draw_ancestor(rng);
  double log_ratio = 0.0;
  if (proposed != chain.ancestor) {
    log_ratio = model.log_transition(chain.current, bank[proposed]) -
                model.log_transition(chain.current, bank[chain.ancestor]) +
                bank.log_beta(chain.ancestor) - bank.log_beta(proposed);
    if (std::isnan(log_ratio)) {
      log_ratio = kNegInf;
    }
  }
  const bool accepted = metropolis_accept(log_ratio, rng);
  if (accepted) {
    chain.ancestor = proposed;
  }
  return accepted;
}

void perfect_ancestor_gibbs(ChainSample& chain, const SampleBank& bank,
                            const StateSpaceModel& model, Rng& rng) {
  Vector lw(bank.size());
  for (Index j = 0; j < bank.size(); ++j) {
    lw(j) = model.log_transition(chain.current, bank[j]);
  }
  chain.ancestor = draw_categorical(normalize_log(lw, "perfect ancestor Gibbs"), rng);
}

double joint_draw_log_ratio(const StateSpaceModel& model, const Observation& y,
                            const SampleBank& bank, const ChainSample& current,
                            const ChainSample& proposed) {
  double r = model.log_likelihood(y, proposed.current) - model.log_likelihood(y, current.current);
  if (!bank.uniform()) {
    r += bank.log_beta(current.ancestor) - bank.log_beta(proposed.ancestor);
  }
  return std::isnan(r) ? kNegInf : r;
}

bool prior_independent_kernel(ChainSample& chain, const SampleBank& bank, const Observation& y,
                              const StateSpaceModel& model, Rng& rng) {
  ChainSample proposed;
  proposed.ancestor = bank.draw_ancestor(rng);
  proposed.current = model.sample_transition(bank[proposed.ancestor], rng);
  const double log_ratio = joint_draw_log_ratio(model, y, bank, chain, proposed);
  const bool accepted = metropolis_accept(log_ratio, rng);
  if (accepted) {
    chain = std::move(proposed);
  }
  return accepted;
}

void optimal_independent_kernel(ChainSample& chain, const SampleBank& bank, const Observation& y,
                                const GaussianModel& model, Rng& rng) {
  const Index a = bank.uniform() ? draw_categorical(optimal_ancestor_weights(bank, y, model), rng)
                                 : bank.draw_ancestor(rng);
  chain.ancestor = a;
  chain.current = model.sample_optimal_proposal(y, bank[a], rng);
}

double block_log_ratio(const StateSpaceModel& model, const Observation& y,
                       const StateVector& x_prev, const StateVector& x, const StateVector& x_new,
                       const std::vector<Index>& block, BlockProposal proposal) {
  double r = log_likelihood_over(model, y, x_new, block) - log_likelihood_over(model, y, x, block);
  if (proposal == BlockProposal::random_walk) {
    r += model.log_transition(x_new, x_prev) - model.log_transition(x, x_prev);
  }
  return std::isnan(r) ? kNegInf : r;
}

std::vector<std::vector<Index>> random_partition(Index d, Index block_size, Rng& rng) {
  std::vector<Index> perm(static_cast<std::size_t>(d));
  for (Index k = 0; k < d; ++k) {
    perm[static_cast<std::size_t>(k)] = k;
  }
  for (Index k = d - 1; k > 0; --k) {
    const Index j = rng.uniform_index(k + 1);
    std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(j)]);
  }
  std::vector<std::vector<Index>> blocks;
  for (Index start = 0; start < d; start += block_size) {
    std::vector<Index> b(perm.begin() + start, perm.begin() + std::min(d, start + block_size));
    std::sort(b.begin(), b.end());
    blocks.push_back(std::move(b));
  }
  return blocks;
}

void composite_kernel(ChainSample& chain, const SampleBank& bank, const Observation& y,
                      const StateSpaceModel& model, const SmcmcConfig& cfg, double rw_scale,
                      Rng& rng, CompositeStats& stats, StepSizeController* rw_controller) {
  if (cfg.block_proposal == BlockProposal::conditional_prior &&
      !model.has_conditional_transition()) {
    throw CapabilityError("conditional-prior block proposals need conditional transition draws; "
                          "model '" + model.name() + "' has none");
  }
  stats.joint_accepted += prior_independent_kernel(chain, bank, y, model, rng) ? 1 : 0;
  ++stats.joint_proposed;

  if (cfg.ancestor_mode == AncestorMode::perfect_gibbs) {
    perfect_ancestor_gibbs(chain, bank, model, rng);
    ++stats.refine_accepted;
  } else {
    stats.refine_accepted += ancestor_move(chain, bank, model, rng) ? 1 : 0;
  }
  ++stats.refine_proposed;

  const StateVector& prev = bank[chain.ancestor];
  const Index d = model.dimension();
  for (const auto& block : random_partition(d, cfg.block_size, rng)) {
    StateVector x_new = chain.current;
    if (cfg.block_proposal == BlockProposal::conditional_prior) {
      const Vector values = model.sample_conditional_transition(block, chain.current, prev, rng);
      for (std::size_t i = 0; i < block.size(); ++i) {
        x_new(block[i]) = values(static_cast<Index>(i));
      }
    } else {
      for (Index k : block) {
        x_new(k) += rw_scale * rng.normal();
      }
    }
    const double r = block_log_ratio(model, y, prev, chain.current, x_new, block,
                                     cfg.block_proposal);
    const bool accepted = metropolis_accept(r, rng);
    if (accepted) {
      chain.current = std::move(x_new);
    }
    stats.refine_accepted += accepted ? 1 : 0;
    ++stats.refine_proposed;
    if (rw_controller != nullptr && cfg.block_proposal == BlockProposal::random_walk) {
      rw_controller->record(accepted);
    }
  }
}

TimestepResult smcmc_timestep(const SampleBank& bank, const Observation& y,
                              const StateSpaceModel& model, const SmcmcConfig& cfg, Rng& rng,
                              SmcmcState& state) {
  cfg.validate();
  if (bank.size() < 1) {
    throw std::invalid_argument("smcmc_timestep: empty sample bank");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const Index d = model.dimension();
  const Index n_burn = cfg.burn_in();
  const Index total = cfg.total_iterations();

  SampleBank work;
  work.states = bank.states;
  const GaussianModel* gaussian = nullptr;
  if (cfg.kernel == SmcmcKernelKind::optimal) {
    gaussian = dynamic_cast<const GaussianModel*>(&model);
    if (gaussian == nullptr) {
      throw CapabilityError("the optimal independent kernel needs the linear-Gaussian model, got '" +
                            model.name() + "'");
    }
    work.beta = optimal_ancestor_weights(work, y, *gaussian);
  } else if (cfg.ancestor_mode == AncestorMode::predictive) {
    work.beta = ancestor_weights_precompute(work, &y, model, AncestorMode::predictive);
  }

  ChainSample chain;
  chain.ancestor = rng.uniform_index(work.size());
  chain.current = model.sample_transition(work[chain.ancestor], rng);

  TimestepResult out;
  out.bank.states.reserve(static_cast<std::size_t>(cfg.n_samples));
  out.ancestors.reserve(static_cast<std::size_t>(cfg.n_samples));
  ChainDiagnostics& diag = out.diagnostics;

  std::optional<GradientMove> move;
  std::unique_ptr<ConditionalTarget> target;
  TargetPoint point;
  StepSizeController* kernel_ctrl = nullptr;
  StepSizeController* rw_ctrl = nullptr;
  if (cfg.kernel == SmcmcKernelKind::gradient) {
    move.emplace(cfg.move, d);
    if (!state.kernel_controller) {
      state.kernel_controller = move->make_controller(adaptation_window(n_burn));
    }
    kernel_ctrl = &*state.kernel_controller;
    // Each time step has a new target, so its burn-in adapts from the previous eps
    // with a fresh gain schedule.
    if (cfg.move.adapt) {
      kernel_ctrl->restart();
    } else {
      kernel_ctrl->freeze();
    }
    target = std::make_unique<ConditionalTarget>(model, work[chain.ancestor], y);
    point = evaluate_target(*target, chain.current, move->metric_detail(*target));
  }
  if (cfg.kernel == SmcmcKernelKind::prior_composite &&
      cfg.block_proposal == BlockProposal::random_walk) {
    if (!state.random_walk_controller) {
      state.random_walk_controller.emplace(cfg.random_walk_scale, cfg.random_walk_band,
                                           adaptation_window(n_burn));
    }
    rw_ctrl = &*state.random_walk_controller;
    rw_ctrl->restart();
  }

  auto end_burn_in = [&]() {
    for (StepSizeController* c : {kernel_ctrl, rw_ctrl}) {
      if (c != nullptr && !c->frozen()) {
        std::string msg = c->finish_burn_in();
        if (!msg.empty()) {
          diag.warnings.push_back(std::move(msg));
        }
      }
    }
  };

  CompositeStats composite;
  Index kernel_accepted = 0;
  Index refine_accepted = 0;
  Index failures = 0;
  for (Index it = 0; it < total; ++it) {
    if (it == n_burn) {
      end_burn_in();
    }
    try {
      switch (cfg.kernel) {
        case SmcmcKernelKind::optimal:
          optimal_independent_kernel(chain, work, y, *gaussian, rng);
          ++composite.joint_accepted;
          ++composite.joint_proposed;
          break;
        case SmcmcKernelKind::prior_composite:
          composite_kernel(chain, work, y, model, cfg,
                           rw_ctrl != nullptr ? rw_ctrl->epsilon() : cfg.random_walk_scale, rng,
                           composite, rw_ctrl);
          break;
        case SmcmcKernelKind::gradient: {
          const Index before = chain.ancestor;
          if (cfg.ancestor_mode == AncestorMode::perfect_gibbs) {
            perfect_ancestor_gibbs(chain, work, model, rng);
            ++refine_accepted;
          } else {
            refine_accepted += ancestor_move(chain, work, model, rng) ? 1 : 0;
          }
          if (chain.ancestor != before) {
            target = std::make_unique<ConditionalTarget>(model, work[chain.ancestor], y);
            if (model.metric_depends_on_previous()) {
              point = evaluate_target(*target, chain.current, move->metric_detail(*target));
            } else {
              TargetPoint fresh = evaluate_target(*target, chain.current);
              fresh.metric = std::move(point.metric);
              fresh.metric_detail = point.metric_detail;
              point = std::move(fresh);
            }
          }
          const KernelOutcome o = move->apply(point, *target, kernel_ctrl->epsilon(), rng);
          kernel_accepted += o.accepted ? 1 : 0;
          failures += o.failed ? 1 : 0;
          kernel_ctrl->record(o.accepted);
          chain.current = point.x;
          break;
        }
      }
    } catch (const ModelError& e) {
      rethrow_with_context(e, it);
    } catch (const NumericalError& e) {
      rethrow_with_context(e, it);
    }
    if (it >= n_burn) {
      out.bank.states.push_back(chain.current);
      out.ancestors.push_back(chain.ancestor);
    }
  }
  if (n_burn >= total) {
    end_burn_in();
  }

  const double total_d = static_cast<double>(total);
  switch (cfg.kernel) {
    case SmcmcKernelKind::optimal:
      diag.accept_joint = static_cast<double>(composite.joint_accepted) / total_d;
      break;
    case SmcmcKernelKind::prior_composite:
      diag.accept_joint = static_cast<double>(composite.joint_accepted) /
                          static_cast<double>(composite.joint_proposed);
      diag.accept_refine = static_cast<double>(composite.refine_accepted) /
                           static_cast<double>(composite.refine_proposed);
      if (rw_ctrl != nullptr) {
        diag.step_size = rw_ctrl->epsilon();
      }
      break;
    case SmcmcKernelKind::gradient:
      diag.accept_refine = static_cast<double>(refine_accepted) / total_d;
      diag.accept_kernel = static_cast<double>(kernel_accepted) / total_d;
      diag.step_size = kernel_ctrl->epsilon();
      break;
  }
  diag.kernel_failures = failures;
  diag.unique_ancestors = count_unique(out.ancestors);
  diag.ess = ess_summary(out.bank.states);
  diag.has_chain_ess = true;
  out.estimate = posterior_summary(out.bank.states).mean;
  diag.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

SmcmcFilter::SmcmcFilter(const StateSpaceModel& model, SmcmcConfig cfg, std::uint64_t seed)
    : model_(&model), cfg_(std::move(cfg)), seed_(seed), bank_(SampleBank::anchor(model)) {
  cfg_.validate();
}

TimestepResult SmcmcFilter::step(const Observation& y) {
  ++n_;
  Rng rng(Rng::derive_seed({seed_, static_cast<std::uint64_t>(n_)}));
  TimestepResult r = smcmc_timestep(bank_, y, *model_, cfg_, rng, state_);
  bank_ = r.bank;
  return r;
}

}  // namespace smcmc
