#include "smcmc/step_size.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace smcmc {

void AcceptanceBand::validate() const {
  if (!(lo > 0.0) || !(hi < 1.0) || !(lo < hi)) {
    throw std::invalid_argument("AcceptanceBand: need 0 < lo < hi < 1");
  }
}

StepSizeController::StepSizeController(double eps0, AcceptanceBand band, int window,
                                       double min_gain)
    : eps_(eps0), band_(band), window_(window), min_gain_(min_gain) {
  band_.validate();
  if (!(eps0 > 0.0) || window < 1) {
    throw std::invalid_argument("StepSizeController: need eps0 > 0 and window >= 1");
  }
}

void StepSizeController::record(bool accepted) {
  if (frozen_) {
    return;
  }
  ++in_window_;
  if (accepted) {
    ++accepted_in_window_;
  }
  if (in_window_ < window_) {
    return;
  }
  last_rate_ = static_cast<double>(accepted_in_window_) / static_cast<double>(in_window_);
  in_window_ = 0;
  accepted_in_window_ = 0;
  ++windows_;
  const double half = 0.5 * (band_.hi - band_.lo);
  const double signal = std::clamp((last_rate_ - band_.mid()) / half, -1.0, 1.0);
  const double gain = std::max(1.0 / std::sqrt(static_cast<double>(windows_)), min_gain_);
  eps_ *= std::exp(signal * gain * M_LN2);
}

void StepSizeController::restart() {
  frozen_ = false;
  in_window_ = 0;
  accepted_in_window_ = 0;
  windows_ = 0;
}

std::string StepSizeController::finish_burn_in() {
  freeze();
  in_window_ = 0;
  accepted_in_window_ = 0;
  if (in_band()) {
    return {};
  }
  std::ostringstream msg;
  msg << "step size did not reach the acceptance band [" << band_.lo << ", " << band_.hi
      << "] during burn-in (last window rate " << last_rate_ << "); keeping eps = " << eps_;
  return msg.str();
}

}  // namespace smcmc
