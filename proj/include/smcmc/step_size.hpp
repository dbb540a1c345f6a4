#pragma once

#include <string>

namespace smcmc {

/// Target acceptance band for step-size adaptation.
struct AcceptanceBand {
  double lo = 0.4;
  double hi = 0.7;

  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double rate) const { return rate >= lo && rate <= hi; }
  void validate() const;

  static AcceptanceBand langevin() { return {0.4, 0.7}; }
  static AcceptanceBand hamiltonian() { return {0.7, 0.9}; }
};

/// Windowed stochastic-approximation controller on log(eps).
///
/// Acceptances are counted in windows of `window` decisions. At the end of a
/// window, log eps moves by clamp((rate - mid)/half_width, -1, 1) * log(2) / sqrt(k),
/// where k counts completed windows, so early corrections double or halve eps and
/// later ones shrink. The gain never drops below `min_gain` * log(2), which lets
/// the controller keep tracking a target that drifts over time steps. Adaptation
/// only happens while unfrozen.
class StepSizeController {
 public:
  StepSizeController(double eps0, AcceptanceBand band, int window = 25, double min_gain = 0.1);

  double epsilon() const { return eps_; }
  const AcceptanceBand& band() const { return band_; }

  void record(bool accepted);
  void freeze() { frozen_ = true; }
  void unfreeze() { frozen_ = false; }
  /// Unfreezes and restarts the gain schedule from the current eps, so that the
  /// first windows of a new adaptation phase can again halve or double it.
  void restart();
  bool frozen() const { return frozen_; }

  /// Acceptance rate of the most recent completed window, or -1 before any.
  double last_window_rate() const { return last_rate_; }
  int completed_windows() const { return windows_; }
  /// True when the last completed window fell inside the band.
  bool in_band() const { return last_rate_ >= 0.0 && band_.contains(last_rate_); }

  /// Ends an adaptation phase: freezes eps and reports whether the band was reached.
  /// The message is empty on success.
  std::string finish_burn_in();

 private:
  double eps_;
  AcceptanceBand band_;
  int window_;
  double min_gain_;
  int in_window_ = 0;
  int accepted_in_window_ = 0;
  int windows_ = 0;
  double last_rate_ = -1.0;
  bool frozen_ = false;
};

}  // namespace smcmc
