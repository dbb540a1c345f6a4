#include "smcmc/smc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smcmc {

namespace {

struct Propagated {
  std::vector<StateVector> states;
  std::vector<Index> parents;  // index into the previous particle set
  Vector log_weights;          // previous weight plus incremental weight, unnormalized
};

Propagated propagate(const ParticleSet& ps, const Observation& y, const StateSpaceModel& model,
                     const ImportanceProposal* proposal, Rng& rng) {
  ps.validate();
  const Index n = ps.size();
  const std::uint64_t step_seed = rng.next_u64();
  Propagated out;
  out.states.resize(static_cast<std::size_t>(n));
  out.parents.resize(static_cast<std::size_t>(n));
  out.log_weights.resize(n);
  for (Index j = 0; j < n; ++j) {
    Rng local(Rng::derive_seed({step_seed, static_cast<std::uint64_t>(j)}));
    const StateVector& prev = ps.states[static_cast<std::size_t>(j)];
    StateVector x;
    double incr = 0.0;
    if (proposal == nullptr) {
      x = model.sample_transition(prev, local);
      incr = model.log_likelihood(y, x);
    } else {
      x = proposal->sample(prev, y, local);
      incr = model.log_likelihood(y, x) + model.log_transition(x, prev) -
             proposal->log_density(x, prev, y);
    }
    if (std::isnan(incr)) {
      throw ModelError("SIR: incremental weight is NaN for particle " + std::to_string(j));
    }
    out.log_weights(j) = ps.log_weights(j) + incr;
    out.states[static_cast<std::size_t>(j)] = std::move(x);
    out.parents[static_cast<std::size_t>(j)] = j;
  }
  return out;
}

}  // namespace

Vector normalized_weights(const Vector& log_weights) {
  if (log_weights.size() == 0) {
    throw std::invalid_argument("normalized_weights: empty weight vector");
  }
  const double top = log_weights.maxCoeff();
  if (!std::isfinite(top)) {
    throw NumericalError("total weight collapse: no particle has positive finite weight");
  }
  Vector w = (log_weights.array() - top).exp();
  return w / w.sum();
}

double weight_ess(const Vector& log_weights) {
  const Vector w = normalized_weights(log_weights);
  const double ess = 1.0 / w.squaredNorm();
  return std::clamp(ess, 1.0, static_cast<double>(w.size()));
}

void ParticleSet::normalize() {
  const double top = log_weights.maxCoeff();
  if (!std::isfinite(top)) {
    throw NumericalError("total weight collapse: no particle has positive finite weight");
  }
  const double lse = top + std::log((log_weights.array() - top).exp().sum());
  log_weights.array() -= lse;
}

Vector ParticleSet::mean() const { return weighted_mean(states, log_weights); }

void ParticleSet::validate() const {
  if (states.size() < 2) {
    throw std::invalid_argument("ParticleSet: need at least two particles");
  }
  if (log_weights.size() != size()) {
    throw std::invalid_argument("ParticleSet: weight count does not match particle count");
  }
}

ParticleSet ParticleSet::equally_weighted(std::vector<StateVector> states) {
  ParticleSet ps;
  const auto n = static_cast<Index>(states.size());
  ps.states = std::move(states);
  ps.log_weights = Vector::Constant(n, -std::log(static_cast<double>(n)));
  return ps;
}

ParticleSet ParticleSet::initial(const StateSpaceModel& model, Index n) {
  return equally_weighted(std::vector<StateVector>(static_cast<std::size_t>(n),
                                                   model.initial_anchor()));
}

std::vector<Index> systematic_resample_indices(const Vector& weights, Rng& rng) {
  const Index n = weights.size();
  std::vector<Index> idx(static_cast<std::size_t>(n));
  const double u0 = rng.uniform();
  const double step = 1.0 / static_cast<double>(n);
  double cumulative = weights(0);
  Index j = 0;
  for (Index i = 0; i < n; ++i) {
    const double u = (u0 + static_cast<double>(i)) * step;
    while (u >= cumulative && j < n - 1) {
      ++j;
      cumulative += weights(j);
    }
    idx[static_cast<std::size_t>(i)] = j;
  }
  return idx;
}

ParticleSet systematic_resample(const ParticleSet& ps, Rng& rng) {
  ps.validate();
  const std::vector<Index> idx = systematic_resample_indices(normalized_weights(ps.log_weights), rng);
  std::vector<StateVector> states;
  states.reserve(idx.size());
  for (Index i : idx) {
    states.push_back(ps.states[static_cast<std::size_t>(i)]);
  }
  return ParticleSet::equally_weighted(std::move(states));
}

ParticleSet sir_step(const ParticleSet& ps, const Observation& y, const StateSpaceModel& model,
                     const SirConfig& cfg, Rng& rng, SmcStepInfo* info) {
  Propagated prop = propagate(ps, y, model, cfg.proposal, rng);
  ParticleSet next;
  next.states = std::move(prop.states);
  next.log_weights = std::move(prop.log_weights);
  next.normalize();
  const double ess = weight_ess(next.log_weights);
  const Index n = next.size();
  if (info != nullptr) {
    info->ess_before_resampling = ess;
    info->estimate = next.mean();
    info->resampled = false;
    info->unique_ancestors = n;
  }
  if (cfg.always_resample || ess < cfg.threshold_fraction * static_cast<double>(n)) {
    const std::vector<Index> idx = systematic_resample_indices(next.weights(), rng);
    std::vector<StateVector> states;
    states.reserve(idx.size());
    for (Index i : idx) {
      states.push_back(next.states[static_cast<std::size_t>(i)]);
    }
    next = ParticleSet::equally_weighted(std::move(states));
    if (info != nullptr) {
      info->resampled = true;
      info->unique_ancestors = count_unique(idx);
    }
  }
  return next;
}

std::vector<std::vector<Index>> contiguous_blocks(Index d, Index block_size) {
  if (d < 1 || block_size < 1) {
    throw std::invalid_argument("contiguous_blocks: dimension and block size must be positive");
  }
  std::vector<std::vector<Index>> blocks;
  for (Index start = 0; start < d; start += block_size) {
    std::vector<Index> b;
    for (Index k = start; k < std::min(d, start + block_size); ++k) {
      b.push_back(k);
    }
    blocks.push_back(std::move(b));
  }
  return blocks;
}

ParticleSet block_sir_step(const ParticleSet& ps, const Observation& y,
                           const StateSpaceModel& model, Index block_size, Rng& rng,
                           SmcStepInfo* info) {
  if (!model.likelihood_is_separable()) {
    throw CapabilityError("block SIR needs a likelihood that factorizes over sensors; model '" +
                          model.name() + "' does not");
  }
  const Index d = model.dimension();
  const auto blocks = contiguous_blocks(d, block_size);
  if (blocks.size() == 1) {
    SirConfig cfg;
    cfg.always_resample = true;
    return sir_step(ps, y, model, cfg, rng, info);
  }
  Propagated prop = propagate(ps, y, model, nullptr, rng);
  const Index n = ps.size();
  std::vector<StateVector> out(static_cast<std::size_t>(n), StateVector(d));
  Vector estimate = Vector::Zero(d);
  double min_ess = static_cast<double>(n);
  std::vector<Index> all_ancestors;
  for (const auto& block : blocks) {
    Vector lw(n);
    for (Index j = 0; j < n; ++j) {
      lw(j) = ps.log_weights(j) +
              model.log_likelihood_block(y, prop.states[static_cast<std::size_t>(j)], block);
    }
    const Vector w = normalized_weights(lw);
    min_ess = std::min(min_ess, 1.0 / w.squaredNorm());
    for (Index j = 0; j < n; ++j) {
      for (Index k : block) {
        estimate(k) += w(j) * prop.states[static_cast<std::size_t>(j)](k);
      }
    }
    const std::vector<Index> idx = systematic_resample_indices(w, rng);
    for (Index i = 0; i < n; ++i) {
      const StateVector& src = prop.states[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
      for (Index k : block) {
        out[static_cast<std::size_t>(i)](k) = src(k);
      }
    }
    all_ancestors.insert(all_ancestors.end(), idx.begin(), idx.end());
  }
  if (info != nullptr) {
    info->ess_before_resampling = std::max(1.0, min_ess);
    info->resampled = true;
    info->estimate = estimate;
    info->unique_ancestors = count_unique(all_ancestors);
  }
  return ParticleSet::equally_weighted(std::move(out));
}

ParticleSet resample_move_step(const ParticleSet& ps, const Observation& y,
                               const StateSpaceModel& model, const GradientMove& move,
                               StepSizeController& controller, int k_moves, Rng& rng,
                               SmcStepInfo* info) {
  if (k_moves < 0) {
    throw std::invalid_argument("resample_move_step: negative move count");
  }
  Propagated prop = propagate(ps, y, model, nullptr, rng);
  ParticleSet weighted;
  weighted.states = std::move(prop.states);
  weighted.log_weights = std::move(prop.log_weights);
  weighted.normalize();
  const Index n = weighted.size();
  if (info != nullptr) {
    info->ess_before_resampling = weight_ess(weighted.log_weights);
    info->resampled = true;
  }
  const std::vector<Index> idx = systematic_resample_indices(weighted.weights(), rng);
  if (info != nullptr) {
    info->unique_ancestors = count_unique(idx);
  }
  std::vector<StateVector> states;
  states.reserve(static_cast<std::size_t>(n));
  for (Index i : idx) {
    states.push_back(weighted.states[static_cast<std::size_t>(i)]);
  }
  Index accepted = 0;
  Index failures = 0;
  if (k_moves > 0) {
    const std::uint64_t move_seed = rng.next_u64();
    for (Index i = 0; i < n; ++i) {
      const auto parent = static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]);
      const ConditionalTarget target(model, ps.states[parent], y);
      Rng local(Rng::derive_seed({move_seed, static_cast<std::uint64_t>(i)}));
      TargetPoint point = evaluate_target(target, states[static_cast<std::size_t>(i)],
                                          move.metric_detail(target));
      for (int k = 0; k < k_moves; ++k) {
        const KernelOutcome o = move.apply(point, target, controller.epsilon(), local);
        accepted += o.accepted ? 1 : 0;
        failures += o.failed ? 1 : 0;
        controller.record(o.accepted);
      }
      states[static_cast<std::size_t>(i)] = point.x;
    }
  }
  ParticleSet next = ParticleSet::equally_weighted(std::move(states));
  if (info != nullptr) {
    info->estimate = next.mean();
    if (k_moves > 0) {
      info->accept_rate = static_cast<double>(accepted) / static_cast<double>(n * k_moves);
    }
    info->kernel_failures = failures;
  }
  return next;
}

}  // namespace smcmc
