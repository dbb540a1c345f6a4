#pragma once

#include "smcmc/linalg.hpp"
#include "smcmc/types.hpp"

#include <Eigen/Cholesky>

#include <string>

namespace smcmc {

/// Planar sensor locations, one row per sensor.
class SensorGrid {
 public:
  explicit SensorGrid(Matrix locations);

  /// sqrt(d) x sqrt(d) sensors at integer coordinates {1..sqrt(d)}^2, row-major.
  /// Throws std::invalid_argument when d is not a perfect square.
  static SensorGrid square(Index d);

  /// CSV with header `k,sx,sy`, one row per sensor, k = 0..d-1 in any order.
  static SensorGrid from_csv(const std::string& path);
  void write_csv(const std::string& path) const;

  Index size() const { return locations_.rows(); }
  const Matrix& locations() const { return locations_; }
  /// Squared Euclidean distances, symmetric with zero diagonal.
  Matrix squared_distances() const;

 private:
  Matrix locations_;
};

/// Spatial dispersion matrix with its Cholesky factor.
struct Dispersion {
  Matrix sigma;
  Eigen::LLT<Matrix> chol;
  double jitter = 0.0;
};

/// Sigma_ij = alpha0 * exp(-|S_i - S_j|^2 / beta) + alpha1 * delta_ij.
Dispersion build_dispersion(const SensorGrid& grid, double alpha0, double alpha1, double beta);

}  // namespace smcmc
