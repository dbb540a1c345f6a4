#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace smcmc {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Latent field values at the d sensor sites.
using StateVector = Vector;
/// Sensor readings at one time step. Counts are stored as non-negative reals.
using Observation = Vector;

/// Raised on dimension mismatches and NaN propagation out of a model.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an algorithm is paired with a model that lacks a required capability.
class CapabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when a numerical routine cannot produce a usable result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_dimension(Index got, Index expected, const char* what) {
  if (got != expected) {
    throw ModelError(std::string(what) + ": dimension " + std::to_string(got) + " != expected " +
                     std::to_string(expected));
  }
}

}  // namespace smcmc
