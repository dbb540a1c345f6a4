#include "support.hpp"

#include "smcmc/diagnostics.hpp"
#include "smcmc/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace smcmc;

namespace {

std::vector<double> ar1(double rho, Index n, Rng& rng) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  double x = rng.normal() / std::sqrt(1.0 - rho * rho);
  for (Index t = 0; t < n; ++t) {
    x = rho * x + rng.normal();
    xs[static_cast<std::size_t>(t)] = x;
  }
  return xs;
}

}  // namespace

TEST_CASE("chain ESS of iid draws is close to N") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    std::vector<double> xs(10000);
    for (double& x : xs) {
      x = rng.normal();
    }
    const double ratio = chain_ess(xs).value / 10000.0;
    CHECK(ratio >= 0.9);
    CHECK(ratio <= 1.1);
  }
}

TEST_CASE("chain ESS of an AR(1) chain matches N(1 - rho)/(1 + rho)") {
  Rng rng(7);
  const Index n = 100000;
  const ChainEss e = chain_ess(ar1(0.5, n, rng));
  CHECK(e.value == doctest::Approx(n / 3.0).epsilon(0.10));
  CHECK_FALSE(e.degenerate);
}

TEST_CASE("constant chain is flagged degenerate") {
  const ChainEss e = chain_ess(std::vector<double>(50, 3.25));
  CHECK(e.degenerate);
  CHECK(e.value == 0.0);
  CHECK_THROWS(chain_ess(std::vector<double>(5, 1.0)));
}

TEST_CASE("chain ESS is invariant under affine maps") {
  Rng rng(11);
  const std::vector<double> xs = ar1(0.8, 5000, rng);
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ys[i] = -3.7 * xs[i] + 12.0;
  }
  CHECK(std::fabs(chain_ess(xs).value - chain_ess(ys).value) < 1e-10 * chain_ess(xs).value);
}

TEST_CASE("monotone rule ignores everything after the first non-positive pair") {
  std::vector<double> gamma = {1.0, 0.6, 0.5, 0.2, 0.1, -0.15, 0.3, 0.3};
  auto run = [&](const std::vector<double>& g) {
    return initial_monotone_sum([&](Index k) { return g[static_cast<std::size_t>(k)]; },
                                static_cast<Index>(g.size()) - 1);
  };
  const GeyerSum base = run(gamma);
  CHECK(base.pairs == 2);
  CHECK(base.sum == doctest::Approx(1.6 + 0.7));

  // A noisy tail past the truncation point changes nothing.
  Rng rng(3);
  std::vector<double> noisy = gamma;
  for (std::size_t k = 6; k < noisy.size(); ++k) {
    noisy[k] = rng.normal();
  }
  for (int i = 0; i < 20; ++i) {
    noisy.push_back(0.5 * rng.normal());
  }
  const GeyerSum tail = run(noisy);
  CHECK(tail.pairs == base.pairs);
  CHECK(tail.sum == base.sum);

  // Increasing pairs are clipped to the previous value.
  const GeyerSum clipped = run({1.0, 0.0, 0.2, 0.1, 0.5, 0.4, -1.0, 0.0});
  CHECK(clipped.pairs == 3);
  CHECK(clipped.sum == doctest::Approx(1.0 + 0.3 + 0.3));
}

TEST_CASE("strongly correlated chain keeps several pairs and a small ESS") {
  Rng rng(5);
  std::vector<double> head = ar1(0.9, 4000, rng);
  const ChainEss a = chain_ess(head);
  CHECK(a.pairs > 1);
  CHECK(a.value < 0.2 * 4000.0);
}

TEST_CASE("ESS summary across dimensions") {
  Rng rng(9);
  std::vector<StateVector> chain;
  const std::vector<double> slow = ar1(0.9, 2000, rng);
  for (double s : slow) {
    Vector x(2);
    x << s, rng.normal();
    chain.push_back(x);
  }
  const EssSummary s = ess_summary(chain);
  CHECK(s.min < 300.0);
  CHECK(s.max > 1700.0);
  CHECK(s.median == doctest::Approx(0.5 * (s.min + s.max)));
  CHECK(s.mean == doctest::Approx(s.median));
}

TEST_CASE("posterior summary") {
  SUBCASE("single repeated sample has zero variance") {
    const std::vector<StateVector> xs(30, Vector::Constant(3, 1.5));
    const PosteriorSummary s = posterior_summary(xs);
    CHECK(s.variance.norm() == 0.0);
    CHECK(s.mean(2) == 1.5);
  }
  SUBCASE("symmetric two-point bank") {
    const double a = 2.0;
    std::vector<StateVector> xs;
    for (int i = 0; i < 50; ++i) {
      xs.push_back(Vector::Constant(1, a));
      xs.push_back(Vector::Constant(1, -a));
    }
    const PosteriorSummary s = posterior_summary(xs);
    CHECK(s.mean(0) == doctest::Approx(0.0));
    CHECK(s.variance(0) == doctest::Approx(a * a * 100.0 / 99.0));
  }
  SUBCASE("exact Gaussian draws recover the mean") {
    Rng rng(21);
    Vector mean(2);
    mean << 0.7, -1.3;
    const Vector sd = Vector::Constant(2, 0.6);
    std::vector<StateVector> xs;
    for (int i = 0; i < 10000; ++i) {
      xs.push_back(mean + sd.cwiseProduct(rng.normal_vector(2)));
    }
    const PosteriorSummary s = posterior_summary(xs);
    for (Index k = 0; k < 2; ++k) {
      CHECK(std::fabs(s.mean(k) - mean(k)) < 3.0 * sd(k) / 100.0);
    }
  }
}

TEST_CASE("log relative MSE and per-sensor MSE") {
  const Vector m = Vector::LinSpaced(5, -1.0, 1.0);
  const Vector var = Vector::Ones(5);
  CHECK(log_relative_mse(m, m, var) == kLogRelMseFloor);
  CHECK(log_relative_mse(m + Vector::Ones(5), m, var) == doctest::Approx(0.0));
  CHECK(log_relative_mse(m + Vector::Constant(5, 2.0), m, Vector::Constant(5, 2.0)) ==
        doctest::Approx(std::log(2.0)));
  CHECK(mse_per_sensor(m, m) == 0.0);
  CHECK(mse_per_sensor(m + Vector::Ones(5), m) == doctest::Approx(1.0));
  CHECK_THROWS(log_relative_mse(m, Vector::Zero(4), var));
}

TEST_CASE("log MSE ratio against the simulated state") {
  const Vector truth = Vector::LinSpaced(4, 0.0, 3.0);
  const Vector kalman = truth + Vector::Constant(4, 0.5);
  CHECK(log_mse_ratio(kalman, kalman, truth) == doctest::Approx(0.0));
  CHECK(log_mse_ratio(truth + Vector::Constant(4, 1.0), kalman, truth) ==
        doctest::Approx(std::log(4.0)));
  CHECK(log_mse_ratio(truth, kalman, truth) == kLogRelMseFloor);
  CHECK_THROWS(log_mse_ratio(kalman, truth, truth));
}

TEST_CASE("unique counts") {
  CHECK(count_unique({3, 1, 3, 3, 0}) == 3);
  CHECK(count_unique({}) == 0);
}
