#pragma once

#include "smcmc/types.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>

namespace smcmc {

/// Seeded random stream used by every sampler in the library.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the standard.
/// The variate transforms (uniform, normal, gamma) are implemented here rather than
/// taken from <random> because the standard distributions are implementation-defined,
/// and experiment outputs must be reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    double u = 0.0;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  /// Uniform integer in [0, n).
  Index uniform_index(Index n);

  double normal();
  Vector normal_vector(Index d);

  /// Gamma(shape, scale = 1) via Marsaglia-Tsang.
  double gamma(double shape);

  /// Poisson(mean): multiplication method below mean 30, PTRS above.
  std::int64_t poisson(double mean);

  /// Child stream keyed by `key`; consumes one draw from this stream.
  Rng split(std::uint64_t key) { return Rng(derive_seed({next_u64(), key})); }

  /// Counter-style seed derivation: hashes the key sequence with splitmix64 so
  /// that streams keyed by (master seed, run, step, index) are independent of
  /// the order in which they are created.
  static std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys);

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace smcmc
