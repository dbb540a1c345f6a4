#include "smcmc/experiment.hpp"
#include "smcmc/sensor_grid.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace smcmc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("smcmc_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double lag1_autocorrelation(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double c0 = 0.0;
  double c1 = 0.0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    c0 += (xs[t] - mean) * (xs[t] - mean);
    if (t + 1 < xs.size()) c1 += (xs[t] - mean) * (xs[t + 1] - mean);
  }
  return c1 / c0;
}

ExperimentConfig small_gaussian(const std::string& algo, Index d, Index n, int runs) {
  ExperimentConfig cfg;
  cfg.model.d = d;
  cfg.algorithm.name = algo;
  cfg.algorithm.n = n;
  cfg.run.steps = 5;
  cfg.run.n_runs = runs;
  cfg.run.seed = 31;
  cfg.output.timing = false;
  return cfg;
}

}  // namespace

TEST_CASE("dataset generation is deterministic and round-trips exactly") {
  const fs::path dir = scratch("dataset");
  ModelSpec spec;
  spec.d = 9;
  const Dataset a = generate_dataset(spec, 6, 17);
  const Dataset b = generate_dataset(spec, 6, 17);
  write_dataset_csv(a, (dir / "a.csv").string());
  write_dataset_csv(b, (dir / "b.csv").string());
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a.csv").rfind("n,kind,k,value\n", 0) == 0);

  const Dataset back = read_dataset_csv((dir / "a.csv").string());
  REQUIRE(back.steps() == 6);
  for (int n = 0; n < 6; ++n) {
    CHECK(back.states[n] == a.states[n]);
    CHECK(back.ys[n] == a.ys[n]);
  }
  CHECK(back.seed == 17);
  CHECK(back.fingerprint == model_fingerprint(spec));

  const Dataset other = generate_dataset(spec, 6, 18);
  CHECK(other.ys[0] != a.ys[0]);
  spec.alpha = 0.8;
  CHECK(model_fingerprint(spec) != a.fingerprint);
}

TEST_CASE("simulated Gaussian field has the AR(1) lag-one correlation") {
  ModelSpec spec;
  spec.d = 4;
  const Dataset data = generate_dataset(spec, 1000, 5);
  // Stationary variance of each coordinate: Sigma_kk / (1 - alpha^2).
  const double var_x = (spec.alpha0 + spec.alpha1) / (1.0 - spec.alpha * spec.alpha);
  const double rho_y = spec.alpha * var_x / (var_x + spec.sigma_y2);
  for (Index k = 0; k < 4; ++k) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (int n = 0; n < data.steps(); ++n) {
      xs.push_back(data.states[n](k));
      ys.push_back(data.ys[n](k));
    }
    CHECK(lag1_autocorrelation(xs) == doctest::Approx(spec.alpha).epsilon(0.10));
    CHECK(lag1_autocorrelation(ys) == doctest::Approx(rho_y).epsilon(0.10));
  }
}

TEST_CASE("Poisson observations are non-negative integers") {
  ModelSpec spec;
  spec.type = "gh_poisson";
  spec.d = 4;
  const Dataset data = generate_dataset(spec, 200, 3);
  bool saw_positive = false;
  for (const Observation& y : data.ys) {
    for (Index k = 0; k < y.size(); ++k) {
      CHECK(y(k) >= 0.0);
      CHECK(y(k) == std::floor(y(k)));
      saw_positive = saw_positive || y(k) > 0.0;
    }
  }
  CHECK(saw_positive);
}

TEST_CASE("run seeds and filters are reproducible") {
  CHECK(run_seed(1, 1) != run_seed(1, 2));
  CHECK(run_seed(1, 1) != run_seed(2, 1));
  CHECK(run_seed(5, 3) == run_seed(5, 3));

  ModelSpec spec;
  spec.d = 4;
  const auto model = build_model(spec);
  const Dataset data = generate_dataset(spec, 3, 1);
  for (const AlgorithmInfo& info : algorithm_catalog()) {
    AlgorithmSpec a;
    a.name = info.name;
    a.n = 50;
    a.k_moves = 1;
    auto f1 = make_filter(a, *model, 11);
    auto f2 = make_filter(a, *model, 11);
    for (const Observation& y : data.ys) {
      CHECK_MESSAGE(f1->step(y).estimate == f2->step(y).estimate, std::string(info.name));
    }
  }
}

TEST_CASE("serial and concurrent execution write identical files") {
  const fs::path serial = scratch("serial");
  const fs::path pooled = scratch("pooled");
  ExperimentConfig cfg = small_gaussian("smhmc", 9, 60, 3);
  const Dataset data = generate_dataset(cfg.model, cfg.run.steps, cfg.run.seed);
  cfg.run.workers = 1;
  write_experiment(cfg, run_experiment(cfg, data), serial.string());
  cfg.run.workers = 3;
  write_experiment(cfg, run_experiment(cfg, data), pooled.string());
  for (const char* file : {"steps.csv", "summary.csv", "oracle.csv", "failures.csv"}) {
    CHECK_MESSAGE(slurp(serial / file) == slurp(pooled / file), file);
  }
  const std::string steps = slurp(serial / "steps.csv");
  CHECK(steps.rfind("run,n,algo,mse,log_rel_mse,ess_min,ess_med,ess_mean,ess_max,accept_joint,"
                    "accept_refine,accept_kernel,unique_ancestors,wall_ms,build\n",
                    0) == 0);
  CHECK(std::count(steps.begin(), steps.end(), '\n') == 1 + 3 * 5);
}

TEST_CASE("optimal SMCMC accepts every joint proposal") {
  const fs::path dir = scratch("optimal");
  Matrix loc(8, 2);
  for (Index k = 0; k < 8; ++k) {
    loc(k, 0) = static_cast<double>(k % 4 + 1);
    loc(k, 1) = static_cast<double>(k / 4 + 1);
  }
  SensorGrid(loc).write_csv((dir / "sensors.csv").string());
  ExperimentConfig cfg = small_gaussian("smcmc_optimal", 8, 100, 2);
  cfg.model.locations = (dir / "sensors.csv").string();
  const Dataset data = generate_dataset(cfg.model, cfg.run.steps, 4);
  const ExperimentResult result = run_experiment(cfg, data);
  const RunSummary s = summarize_runs(result);
  CHECK(s.accept_joint == 1.0);
  for (const RunOutcome& run : result.runs) {
    REQUIRE(run.ok);
    for (const StepRow& row : run.rows) CHECK(row.diagnostics.accept_joint == 1.0);
  }
}

TEST_CASE("SIR with many particles on a scalar model approaches the Kalman filter") {
  ExperimentConfig cfg = small_gaussian("sir", 1, 100000, 1);
  const Dataset data = generate_dataset(cfg.model, cfg.run.steps, 8);
  const RunSummary s = summarize_runs(run_experiment(cfg, data));
  // The Monte Carlo error of a weighted mean is about var / ESS, so the log
  // relative error sits near -log(ESS), roughly -11 here.
  CHECK(s.log_rel_mse < -8.0);
  CHECK(std::fabs(s.log_mse_ratio) < 0.01);
}

TEST_CASE("a failing run is recorded and does not stop the others") {
  const fs::path dir = scratch("failures");
  ExperimentConfig cfg = small_gaussian("sir", 4, 20, 2);
  Dataset data = generate_dataset(cfg.model, cfg.run.steps, 2);
  data.ys[2](1) = std::nan("");
  const ExperimentResult result = run_experiment(cfg, data);
  for (const RunOutcome& run : result.runs) {
    CHECK_FALSE(run.ok);
    CHECK_FALSE(run.error.empty());
  }
  write_experiment(cfg, result, dir.string());
  const std::string failures = slurp(dir / "failures.csv");
  CHECK(std::count(failures.begin(), failures.end(), '\n') == 3);

  // A failure confined to run 2 leaves runs 1 and 3 untouched.
  cfg.run.n_runs = 3;
  data = generate_dataset(cfg.model, cfg.run.steps, 2);
  const ExperimentResult clean = run_experiment(cfg, data);
  const ExperimentResult mixed =
      run_experiment(cfg, data, [&](const StateSpaceModel& model, std::uint64_t seed, int run) {
        if (run == 2) throw std::runtime_error("injected");
        return make_filter(cfg.algorithm, model, seed);
      });
  CHECK(mixed.runs[0].ok);
  CHECK_FALSE(mixed.runs[1].ok);
  CHECK(mixed.runs[1].error == "injected");
  CHECK(mixed.runs[2].ok);
  for (int r : {0, 2}) {
    for (std::size_t n = 0; n < clean.runs[r].rows.size(); ++n) {
      CHECK(mixed.runs[r].rows[n].mse == clean.runs[r].rows[n].mse);
    }
  }
}

TEST_CASE("summaries and CSV formatting") {
  CHECK(csv_number(std::nan("")).empty());
  CHECK(csv_number(0.1) == "0.1");
  CHECK(csv_number(1.0 / 3.0) == "0.3333333333");

  std::vector<StepRow> rows(2);
  rows[0].mse = 1.0;
  rows[1].mse = 3.0;
  rows[0].diagnostics.has_chain_ess = true;
  rows[0].diagnostics.ess.mean = 40.0;
  rows[1].diagnostics.accept_kernel = 0.5;
  const RunSummary s = summarize_rows(rows);
  CHECK(s.mse == 2.0);
  CHECK(s.ess_mean == 40.0);
  CHECK(s.accept_kernel == 0.5);
  CHECK(std::isnan(s.accept_joint));
  CHECK(std::isnan(s.log_rel_mse));
}
