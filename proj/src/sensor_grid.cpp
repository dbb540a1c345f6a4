#include "smcmc/sensor_grid.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace smcmc {

SensorGrid::SensorGrid(Matrix locations) : locations_(std::move(locations)) {
  if (locations_.rows() < 1 || locations_.cols() != 2) {
    throw std::invalid_argument("SensorGrid: need at least one sensor with two coordinates");
  }
  if (!locations_.allFinite()) {
    throw std::invalid_argument("SensorGrid: non-finite sensor location");
  }
}

SensorGrid SensorGrid::square(Index d) {
  const auto side = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(d))));
  if (d < 1 || side * side != d) {
    throw std::invalid_argument("SensorGrid::square: d = " + std::to_string(d) +
                                " is not a perfect square; supply a location file");
  }
  Matrix loc(d, 2);
  for (Index r = 0; r < side; ++r) {
    for (Index c = 0; c < side; ++c) {
      loc(r * side + c, 0) = static_cast<double>(c + 1);
      loc(r * side + c, 1) = static_cast<double>(r + 1);
    }
  }
  return SensorGrid(std::move(loc));
}

SensorGrid SensorGrid::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("SensorGrid: cannot open " + path);
  }
  std::string line;
  std::getline(in, line);
  if (line.rfind("k,sx,sy", 0) != 0) {
    throw std::runtime_error("SensorGrid: " + path + " must start with header k,sx,sy");
  }
  std::vector<std::pair<long, std::pair<double, double>>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::stringstream ss(line);
    std::string k, sx, sy;
    if (!std::getline(ss, k, ',') || !std::getline(ss, sx, ',') || !std::getline(ss, sy, ',')) {
      throw std::runtime_error("SensorGrid: malformed row '" + line + "'");
    }
    rows.push_back({std::stol(k), {std::stod(sx), std::stod(sy)}});
  }
  Matrix loc(static_cast<Index>(rows.size()), 2);
  std::vector<bool> seen(rows.size(), false);
  for (const auto& [k, xy] : rows) {
    if (k < 0 || static_cast<std::size_t>(k) >= rows.size() || seen[static_cast<std::size_t>(k)]) {
      throw std::runtime_error("SensorGrid: sensor ids must be a permutation of 0..d-1");
    }
    seen[static_cast<std::size_t>(k)] = true;
    loc(k, 0) = xy.first;
    loc(k, 1) = xy.second;
  }
  return SensorGrid(std::move(loc));
}

void SensorGrid::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("SensorGrid: cannot write " + path);
  }
  out << "k,sx,sy\n" << std::setprecision(17);
  for (Index k = 0; k < size(); ++k) {
    out << k << ',' << locations_(k, 0) << ',' << locations_(k, 1) << '\n';
  }
}

Matrix SensorGrid::squared_distances() const {
  const Index d = size();
  Matrix dist(d, d);
  for (Index i = 0; i < d; ++i) {
    dist(i, i) = 0.0;
    for (Index j = i + 1; j < d; ++j) {
      const double v = (locations_.row(i) - locations_.row(j)).squaredNorm();
      dist(i, j) = v;
      dist(j, i) = v;
    }
  }
  return dist;
}

Dispersion build_dispersion(const SensorGrid& grid, double alpha0, double alpha1, double beta) {
  if (!(alpha0 > 0.0) || !(alpha1 > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("build_dispersion: alpha0, alpha1 and beta must be positive");
  }
  Matrix sigma = (-grid.squared_distances().array() / beta).exp() * alpha0;
  sigma.diagonal().array() += alpha1;
  JitteredCholesky jc = cholesky_with_jitter(sigma);
  if (jc.jitter > 0.0) {
    sigma.diagonal().array() += jc.jitter;
  }
  return Dispersion{std::move(sigma), std::move(jc.llt), jc.jitter};
}

}  // namespace smcmc
