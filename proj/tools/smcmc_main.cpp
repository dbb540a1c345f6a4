#include "smcmc/experiment.hpp"
#include "smcmc/tables.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

using namespace smcmc;
namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::string out;
  std::vector<std::string> overrides;
  std::optional<int> workers;
};

void add_common(CLI::App* app, CommonFlags& f, bool config_required) {
  auto* opt = app->add_option("--config", f.config, "key = value experiment file");
  if (config_required) opt->required();
  opt->check(CLI::ExistingFile);
  app->add_option("--seed", f.seed, "master seed (overrides run.seed)");
  app->add_option("--out", f.out, "output directory (overrides OUTPUT_DIR and output.dir)");
  app->add_option("--set", f.overrides, "extra key=value entry, repeatable");
  app->add_option("--workers", f.workers, "worker threads (0 = all cores)");
}

ExperimentConfig load_config(const CommonFlags& f) {
  KeyValueConfig kv = KeyValueConfig::load(f.config);
  for (const std::string& item : f.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got '" + item + "'");
    }
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(' '));
      s.erase(s.find_last_not_of(' ') + 1);
      return s;
    };
    kv.set(trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
  }
  ExperimentConfig cfg = ExperimentConfig::from_config(kv);
  if (f.seed) cfg.run.seed = *f.seed;
  if (f.runs) cfg.run.n_runs = *f.runs;
  if (f.workers) cfg.run.workers = *f.workers;
  if (const char* env = std::getenv("OUTPUT_DIR"); env != nullptr && *env != '\0') {
    cfg.output.dir = env;
  }
  if (!f.out.empty()) cfg.output.dir = f.out;
  cfg.validate();
  return cfg;
}

std::string dataset_path(const ExperimentConfig& cfg) {
  return (fs::path(cfg.output.dir) / "data.csv").string();
}

Dataset load_or_generate(const ExperimentConfig& cfg) {
  const std::string path = dataset_path(cfg);
  const std::string fp = model_fingerprint(cfg.model);
  if (fs::exists(path)) {
    Dataset data = read_dataset_csv(path);
    if (data.fingerprint == fp && data.seed == cfg.run.seed && data.steps() >= cfg.run.steps) {
      std::fprintf(stderr, "using dataset %s\n", path.c_str());
      return data;
    }
    std::fprintf(stderr, "dataset %s does not match the configuration; regenerating\n",
                 path.c_str());
  }
  Dataset data = generate_dataset(cfg.model, cfg.run.steps, cfg.run.seed);
  fs::create_directories(cfg.output.dir);
  write_dataset_csv(data, path);
  return data;
}

int cmd_generate(const CommonFlags& f) {
  const ExperimentConfig cfg = load_config(f);
  const Dataset data = generate_dataset(cfg.model, cfg.run.steps, cfg.run.seed);
  fs::create_directories(cfg.output.dir);
  write_dataset_csv(data, dataset_path(cfg));
  std::printf("wrote %s (d=%ld, T=%d, seed=%llu, model %s)\n", dataset_path(cfg).c_str(),
              static_cast<long>(cfg.model.d), data.steps(),
              static_cast<unsigned long long>(data.seed), data.fingerprint.c_str());
  return 0;
}

int cmd_run(const CommonFlags& f) {
  const ExperimentConfig cfg = load_config(f);
  const Dataset data = load_or_generate(cfg);
  const ExperimentResult result = run_experiment(cfg, data);
  write_experiment(cfg, result, cfg.output.dir);
  RunSummary se;
  const RunSummary s = summarize_runs(result, &se);
  int failed = 0;
  for (const RunOutcome& r : result.runs) failed += r.ok ? 0 : 1;
  std::printf("%s on %s d=%ld: %d runs (%d failed), T=%d\n", cfg.algorithm.name.c_str(),
              cfg.model.type.c_str(), static_cast<long>(cfg.model.d), cfg.run.n_runs, failed,
              s.steps);
  std::printf("  mse %s (se %s)\n", csv_number(s.mse).c_str(), csv_number(se.mse).c_str());
  if (!std::isnan(s.log_mse_ratio)) {
    std::printf("  log mse ratio vs Kalman %s (se %s)\n", csv_number(s.log_mse_ratio).c_str(),
                csv_number(se.log_mse_ratio).c_str());
  }
  if (!std::isnan(s.ess_mean)) {
    std::printf("  chain ESS min/med/mean/max %s %s %s %s\n", csv_number(s.ess_min).c_str(),
                csv_number(s.ess_med).c_str(), csv_number(s.ess_mean).c_str(),
                csv_number(s.ess_max).c_str());
  }
  std::printf("  outputs in %s\n", cfg.output.dir.c_str());
  return failed == cfg.run.n_runs ? 1 : 0;
}

int cmd_table(const std::string& id, const CommonFlags& f, double scale,
              const std::vector<Index>& dims, bool no_timing) {
  TableOptions opt;
  opt.scale = scale;
  opt.runs = f.runs;
  if (!dims.empty()) opt.dims = dims;
  if (f.seed) opt.seed = *f.seed;
  if (f.workers) opt.workers = *f.workers;
  opt.timing = !no_timing;
  std::string out = "results";
  if (const char* env = std::getenv("OUTPUT_DIR"); env != nullptr && *env != '\0') out = env;
  if (!f.out.empty()) out = f.out;
  opt.out_dir = out;
  const std::vector<TableCell> cells = reproduce_table(id, opt);
  const std::string path = (fs::path(out) / (id + ".csv")).string();
  write_table_csv(cells, path);
  std::printf("%-18s %5s %-22s %12s %10s %8s  %s\n", "method", "d", "column", "value", "se",
              "paper", "band");
  for (const TableCell& c : cells) {
    std::string band = std::isnan(c.band_lo) ? "" : "[" + csv_number(c.band_lo) + ", " +
                                                         csv_number(c.band_hi) + "]";
    std::printf("%-18s %5ld %-22s %12s %10s %8s  %s\n", c.method.c_str(),
                static_cast<long>(c.d), c.column.c_str(), csv_number(c.value).c_str(),
                csv_number(c.se).c_str(), csv_number(c.paper).c_str(), band.c_str());
  }
  std::printf("wrote %s (%d runs per cell)\n", path.c_str(), opt.resolved_runs());
  return 0;
}

int cmd_list_algos() {
  for (const AlgorithmInfo& a : algorithm_catalog()) {
    std::printf("%-18s %-18s %-6s %s%s\n", a.name.c_str(), a.label.c_str(), a.family.c_str(),
                a.summary.c_str(), a.gaussian_only ? " (gaussian model only)" : "");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential MCMC filtering experiments"};
  app.require_subcommand(1);

  CommonFlags gen_flags;
  auto* gen = app.add_subcommand("generate", "simulate a dataset from the model block");
  add_common(gen, gen_flags, true);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "run the configured algorithm over replicated runs");
  add_common(run, run_flags, true);
  run->add_option("--runs", run_flags.runs, "number of runs (overrides run.n_runs)")
      ->check(CLI::PositiveNumber);

  CommonFlags table_flags;
  std::string table_id;
  double scale = 0.25;
  std::vector<Index> dims;
  bool no_timing = false;
  auto* table = app.add_subcommand("table", "reproduce one of the published tables");
  table->add_option("id", table_id, "mse_gaussian | ess_gaussian | mse_poisson | ess_poisson")
      ->required()
      ->check(CLI::IsMember(table_ids()));
  table->add_option("--scale", scale, "fraction of the published 100 runs; 0 plans only")
      ->check(CLI::NonNegativeNumber);
  table->add_option("--runs", table_flags.runs, "runs per cell (overrides --scale)")
      ->check(CLI::NonNegativeNumber);
  table->add_option("--seed", table_flags.seed, "master seed");
  table->add_option("--out", table_flags.out, "output directory");
  table->add_option("--dims", dims, "state dimensions, e.g. --dims 144 400")->expected(1, -1);
  table->add_option("--workers", table_flags.workers, "worker threads (0 = all cores)");
  table->add_flag("--no-timing", no_timing, "write zero wall-clock times");

  auto* list = app.add_subcommand("list-algos", "print the algorithm catalog");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(gen_flags);
    if (run->parsed()) return cmd_run(run_flags);
    if (table->parsed()) return cmd_table(table_id, table_flags, scale, dims, no_timing);
    if (list->parsed()) return cmd_list_algos();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
