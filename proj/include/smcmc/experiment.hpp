#pragma once

#include "smcmc/config.hpp"
#include "smcmc/diagnostics.hpp"
#include "smcmc/kalman.hpp"
#include "smcmc/model.hpp"
#include "smcmc/smcmc.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace smcmc {

struct ModelSpec {
  std::string type = "gaussian";  ///< gaussian | gh_poisson
  Index d = 16;
  double alpha = 0.9;
  double sigma_y2 = 2.0;
  double alpha0 = 3.0;
  double alpha1 = 0.01;
  double beta = 20.0;
  double nu = 7.0;
  double gamma = 0.3;
  double m1 = 1.0;
  double m2 = 1.0 / 3.0;
  std::string locations;  ///< optional sensor CSV; empty means the square grid

  void validate() const;
  bool is_gaussian() const { return type == "gaussian"; }
};

struct AlgorithmSpec {
  std::string name = "smhmc";
  Index n = 200;
  double burn_in_fraction = 0.1;
  std::optional<double> epsilon;
  std::optional<int> n_leapfrog;
  std::optional<int> n_fixed_point;
  bool adapt = true;
  bool jitter = true;
  int k_moves = 1;
  Index block_size = 4;
  double resample_threshold = 0.5;
  AncestorMode ancestor_mode = AncestorMode::uniform;
  BlockProposal block_proposal = BlockProposal::conditional_prior;
  double random_walk_scale = 0.5;

  void validate() const;
};

struct RunSpec {
  int steps = 10;
  int n_runs = 1;
  std::uint64_t seed = 1;
  int workers = 0;  ///< 0 picks the hardware concurrency
};

struct OutputSpec {
  std::string dir = "results";
  bool per_dimension = false;
  bool timing = true;  ///< false writes wall_ms = 0 so that outputs are byte-reproducible
};

struct ExperimentConfig {
  ModelSpec model;
  AlgorithmSpec algorithm;
  RunSpec run;
  OutputSpec output;

  /// Reads every recognised key and rejects unknown ones.
  static ExperimentConfig from_config(const KeyValueConfig& kv);
  /// Algorithm/model compatibility and value ranges.
  void validate() const;
  /// Canonical key = value text, including defaults.
  std::string to_text() const;
};

struct AlgorithmInfo {
  std::string name;
  std::string label;  ///< name used in the published tables
  std::string family;  ///< smc | smcmc
  bool gaussian_only = false;
  std::string summary;
};

const std::vector<AlgorithmInfo>& algorithm_catalog();
const AlgorithmInfo& algorithm_info(const std::string& name);

std::unique_ptr<StateSpaceModel> build_model(const ModelSpec& spec);
/// Hex FNV-1a digest of the canonical model description.
std::string model_fingerprint(const ModelSpec& spec);
/// `git describe`-style identifier of the build that produced an output.
std::string build_fingerprint();

struct Dataset {
  std::vector<StateVector> states;  ///< x_1..x_T
  std::vector<Observation> ys;      ///< y_1..y_T
  std::uint64_t seed = 0;
  std::string fingerprint;

  int steps() const { return static_cast<int>(ys.size()); }
};

/// Forward simulation from the model's own samplers with one stream keyed by `seed`.
Dataset generate_dataset(const ModelSpec& spec, int steps, std::uint64_t seed);
/// CSV with header `n,kind,k,value`, n from 1, kind x or y, k from 0. Values are
/// written with 17 significant digits so that reading back is exact.
void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

struct StepReport {
  Vector estimate;
  ChainDiagnostics diagnostics;
};

/// A filter driven one observation at a time.
class Filter {
 public:
  virtual ~Filter() = default;
  virtual StepReport step(const Observation& y) = 0;
};

/// Each step draws from Rng(derive_seed({seed, n})), so results depend only on
/// (spec, model, seed) and the observations.
std::unique_ptr<Filter> make_filter(const AlgorithmSpec& spec, const StateSpaceModel& model,
                                    std::uint64_t seed);

struct StepRow {
  int run = 0;
  int n = 0;
  double mse = 0.0;
  double log_rel_mse = ChainDiagnostics::kNotApplicable;
  double log_mse_ratio = ChainDiagnostics::kNotApplicable;
  ChainDiagnostics diagnostics;
};

struct RunOutcome {
  int run = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<StepRow> rows;
  std::vector<Vector> estimates;
};

struct ExperimentResult {
  std::vector<RunOutcome> runs;
  std::vector<GaussianBelief> kalman;  ///< empty unless the model is Gaussian
  std::vector<double> kalman_mse;      ///< Kalman mean against the simulated state, per step
};

/// Seed of run r (1-based) derived from the master seed.
std::uint64_t run_seed(std::uint64_t master, int run);

/// Runs cfg.run.n_runs independent replications over one dataset on a pool of
/// workers. A run that throws is recorded as failed; the others proceed.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data);

using FilterFactory = std::function<std::unique_ptr<Filter>(const StateSpaceModel& model,
                                                            std::uint64_t seed, int run)>;
/// Same, with filters built by `factory` instead of make_filter.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data,
                                const FilterFactory& factory);

/// Writes steps.csv, summary.csv, failures.csv, config.txt and, for Gaussian
/// models, oracle.csv into `dir`.
void write_experiment(const ExperimentConfig& cfg, const ExperimentResult& result,
                      const std::string& dir);

/// Averages of the step rows of one run, or across all successful runs.
struct RunSummary {
  int steps = 0;
  double mse = 0.0;
  double log_rel_mse = ChainDiagnostics::kNotApplicable;
  double log_mse_ratio = ChainDiagnostics::kNotApplicable;
  double ess_min = ChainDiagnostics::kNotApplicable;
  double ess_med = ChainDiagnostics::kNotApplicable;
  double ess_mean = ChainDiagnostics::kNotApplicable;
  double ess_max = ChainDiagnostics::kNotApplicable;
  double weight_ess = ChainDiagnostics::kNotApplicable;
  double accept_joint = ChainDiagnostics::kNotApplicable;
  double accept_refine = ChainDiagnostics::kNotApplicable;
  double accept_kernel = ChainDiagnostics::kNotApplicable;
  double unique_ancestors = 0.0;
  double wall_ms = 0.0;
};

RunSummary summarize_rows(const std::vector<StepRow>& rows);
/// Mean over successful runs of the per-run summaries, with the standard error of
/// each field across runs in `se`.
RunSummary summarize_runs(const ExperimentResult& result, RunSummary* se = nullptr);

/// Formats a value for CSV output: empty for NaN, otherwise %.10g.
std::string csv_number(double v);

}  // namespace smcmc
