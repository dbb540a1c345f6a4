#include "smcmc/tables.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

namespace smcmc {

namespace {

constexpr double kNa = ChainDiagnostics::kNotApplicable;

struct RowSpec {
  std::string method;
  std::string algo;
  int k_moves = 0;
  /// Published values by dimension, in the order of TableSpec::columns.
  std::map<Index, std::vector<double>> paper;
};

struct TableSpec {
  std::string id;
  std::string model_type;
  Index n = 200;
  std::vector<std::string> columns;
  std::vector<RowSpec> rows;
};

const std::vector<TableSpec>& specs() {
  static const std::vector<TableSpec> all = [] {
    std::vector<TableSpec> t;
    t.push_back({"mse_gaussian",
                 "gaussian",
                 200,
                 {"time_s", "rel_mse_log", "rel_mse_log_kalman_var"},
                 {
                     {"SmHMC", "smhmc", 0, {{144, {1.54, 0.20, kNa}}, {400, {15.65, 0.21, kNa}}}},
                     {"SIR-RM1", "sir_rm", 1, {{144, {1.35, 0.71, kNa}}, {400, {14.10, 1.34, kNa}}}},
                     {"SIR-RM2", "sir_rm", 2, {{144, {2.60, 0.28, kNa}}, {400, {30.01, 0.62, kNa}}}},
                     {"SIR-RM3", "sir_rm", 3, {{144, {3.98, 0.25, kNa}}, {400, {42.09, 0.26, kNa}}}},
                 }});
    const std::vector<std::string> ess_cols = {"time_s",   "ess_min", "ess_med",
                                               "ess_mean", "ess_max", "ess_mean_per_s"};
    t.push_back({"ess_gaussian",
                 "gaussian",
                 500,
                 ess_cols,
                 {
                     {"SMCMC-Prior", "smcmc_prior", 0, {{144, {25.78, 3, 8, 9, 31, 0.35}}}},
                     {"SmMALA", "smmala", 0, {{144, {2.13, 15, 47, 48, 86, 22.54}}}},
                     {"SHMC", "shmc", 0, {{144, {2.83, 26, 80, 80, 141, 28.27}}}},
                     {"SmHMC", "smhmc", 0, {{144, {3.71, 42, 128, 130, 243, 35.04}}}},
                 }});
    auto mse = [](double a, double b, double c) {
      return std::map<Index, std::vector<double>>{{144, {a}}, {400, {b}}, {1024, {c}}};
    };
    t.push_back({"mse_poisson",
                 "gh_poisson",
                 200,
                 {"mse"},
                 {
                     {"SIR", "sir", 0, mse(4.95, 8.87, 12.17)},
                     {"SIR-RM1", "sir_rm", 1, mse(0.88, 1.13, 2.74)},
                     {"SIR-RM2", "sir_rm", 2, mse(0.66, 0.82, 1.62)},
                     {"SIR-RM3", "sir_rm", 3, mse(0.65, 0.68, 1.36)},
                     {"Block SIR", "block_sir", 0, mse(1.29, 1.48, 1.55)},
                     {"SMCMC-Prior", "smcmc_prior", 0, mse(1.68, 3.35, 5.23)},
                     {"Simplified SmMALA", "simplified_smmala", 0, mse(0.61, 0.79, 0.91)},
                     {"SmMALA", "smmala", 0, mse(0.60, 0.76, 0.88)},
                     {"SHMC", "shmc", 0, mse(0.63, 0.69, 0.77)},
                     {"SmHMC", "smhmc", 0, mse(0.55, 0.58, 0.65)},
                 }});
    t.push_back({"ess_poisson",
                 "gh_poisson",
                 200,
                 ess_cols,
                 {
                     {"SMCMC-Prior",
                      "smcmc_prior",
                      0,
                      {{144, {11.4, 3, 8, 9, 31, 0.79}}, {400, {194.5, 2, 5, 6, 27, 0.03}}}},
                     {"Simplified SmMALA",
                      "simplified_smmala",
                      0,
                      {{144, {1.4, 4, 13, 14, 32, 10}}, {400, {8.1, 4, 10, 11, 32, 1.35}}}},
                     {"SmMALA",
                      "smmala",
                      0,
                      {{144, {5.7, 5, 17, 18, 35, 3.16}}, {400, {26.2, 4, 11, 12, 34, 0.46}}}},
                     {"SHMC",
                      "shmc",
                      0,
                      {{144, {3.3, 7, 26, 33, 124, 10}}, {400, {14.4, 4, 19, 20, 110, 1.39}}}},
                     {"SmHMC",
                      "smhmc",
                      0,
                      {{144, {14.3, 30, 98, 97, 165, 6.78}}, {400, {59.6, 29, 93, 94, 160, 1.58}}}},
                 }});
    return t;
  }();
  return all;
}

const TableSpec& spec_for(const std::string& id) {
  for (const TableSpec& s : specs()) {
    if (s.id == id) return s;
  }
  throw std::invalid_argument("unknown table '" + id +
                              "' (mse_gaussian, ess_gaussian, mse_poisson, ess_poisson)");
}

const RowSpec& row_for(const TableSpec& spec, const std::string& method) {
  for (const RowSpec& r : spec.rows) {
    if (r.method == method) return r;
  }
  throw std::invalid_argument("table " + spec.id + " has no row '" + method + "'");
}

/// Tolerance band around a published value. Timing columns carry none.
std::pair<double, double> band_for(const std::string& table, const std::string& method, Index d,
                                   const std::string& column, double paper) {
  if (std::isnan(paper) || column == "time_s" || column == "ess_mean_per_s") {
    return {kNa, kNa};
  }
  if (column == "rel_mse_log") {
    if (method == "SmHMC" && d == 144) return {0.05, 0.45};
    return {paper - 0.25, paper + 0.25};
  }
  if (column == "mse") {
    if (table == "mse_poisson" && method == "SmHMC" && d == 144) return {0.35, 0.80};
    return {0.65 * paper, 1.45 * paper};
  }
  return {0.5 * paper, 2.0 * paper};
}

double cell_value(const std::string& column, const RunSummary& s) {
  if (column == "time_s") return s.wall_ms / 1000.0;
  if (column == "rel_mse_log") return s.log_mse_ratio;
  if (column == "rel_mse_log_kalman_var") return s.log_rel_mse;
  if (column == "mse") return s.mse;
  if (column == "ess_min") return s.ess_min;
  if (column == "ess_med") return s.ess_med;
  if (column == "ess_mean") return s.ess_mean;
  if (column == "ess_max") return s.ess_max;
  if (column == "ess_mean_per_s") return s.wall_ms > 0.0 ? s.ess_mean / (s.wall_ms / 1000.0) : kNa;
  throw std::logic_error("unknown table column " + column);
}

std::string directory_name(const RowSpec& row, Index d) {
  std::string name = row.algo;
  if (row.k_moves > 0) name += std::to_string(row.k_moves);
  return name + "_d" + std::to_string(d);
}

}  // namespace

int TableOptions::resolved_runs() const {
  if (runs) {
    if (*runs < 0) throw std::invalid_argument("runs must be non-negative");
    return *runs;
  }
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("scale must be a non-negative number");
  }
  return static_cast<int>(std::lround(100.0 * scale));
}

const std::vector<std::string>& table_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> out;
    for (const TableSpec& s : specs()) out.push_back(s.id);
    return out;
  }();
  return ids;
}

ExperimentConfig table_experiment(const std::string& id, const std::string& method, Index d,
                                  const TableOptions& options) {
  const TableSpec& spec = spec_for(id);
  const RowSpec& row = row_for(spec, method);
  ExperimentConfig cfg;
  cfg.model.type = spec.model_type;
  cfg.model.d = d;
  cfg.algorithm.name = row.algo;
  cfg.algorithm.n = spec.n;
  cfg.algorithm.k_moves = row.k_moves > 0 ? row.k_moves : cfg.algorithm.k_moves;
  cfg.run.steps = options.steps;
  cfg.run.n_runs = std::max(1, options.resolved_runs());
  cfg.run.seed = Rng::derive_seed({options.seed, static_cast<std::uint64_t>(d)});
  cfg.run.workers = options.workers;
  cfg.output.timing = options.timing;
  cfg.validate();
  return cfg;
}

std::vector<TableCell> plan_table(const std::string& id, const TableOptions& options) {
  const TableSpec& spec = spec_for(id);
  const int runs = options.resolved_runs();
  std::vector<TableCell> cells;
  for (Index d : options.dims) {
    for (const RowSpec& row : spec.rows) {
      const auto published = row.paper.find(d);
      for (std::size_t c = 0; c < spec.columns.size(); ++c) {
        TableCell cell;
        cell.table = id;
        cell.method = row.method;
        cell.algo = row.algo;
        cell.d = d;
        cell.n = spec.n;
        cell.runs = runs;
        cell.steps = options.steps;
        cell.column = spec.columns[c];
        if (published != row.paper.end()) cell.paper = published->second[c];
        std::tie(cell.band_lo, cell.band_hi) = band_for(id, row.method, d, cell.column, cell.paper);
        cells.push_back(cell);
      }
    }
  }
  return cells;
}

std::vector<TableCell> reproduce_table(const std::string& id, const TableOptions& options) {
  std::vector<TableCell> cells = plan_table(id, options);
  if (options.resolved_runs() == 0) {
    return cells;
  }
  const TableSpec& spec = spec_for(id);
  for (Index d : options.dims) {
    // Every row of a table at one dimension runs on the same simulated data.
    ModelSpec model;
    model.type = spec.model_type;
    model.d = d;
    const Dataset data = generate_dataset(
        model, options.steps, Rng::derive_seed({options.seed, static_cast<std::uint64_t>(d), 0}));
    for (const RowSpec& row : spec.rows) {
      const ExperimentConfig cfg = table_experiment(id, row.method, d, options);
      const ExperimentResult result = run_experiment(cfg, data);
      if (!options.out_dir.empty()) {
        namespace fs = std::filesystem;
        const fs::path dir = fs::path(options.out_dir) / id / directory_name(row, d);
        write_experiment(cfg, result, dir.string());
        if (row.method == spec.rows.front().method) {
          write_dataset_csv(data, (fs::path(options.out_dir) / id /
                                   ("data_d" + std::to_string(d) + ".csv"))
                                      .string());
        }
      }
      RunSummary se;
      const RunSummary mean = summarize_runs(result, &se);
      int failed = 0;
      for (const RunOutcome& r : result.runs) failed += r.ok ? 0 : 1;
      for (TableCell& cell : cells) {
        if (cell.d != d || cell.method != row.method) continue;
        cell.value = cell_value(cell.column, mean);
        cell.se = cell.column == "ess_mean_per_s" ? kNa : cell_value(cell.column, se);
        cell.failed_runs = failed;
      }
    }
  }
  return cells;
}

void write_table_csv(const std::vector<TableCell>& cells, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write '" + path + "'");
  }
  const std::string build = build_fingerprint();
  out << "table,method,algo,d,n,runs,steps,column,value,se,paper,band_lo,band_hi,in_band,"
         "failed_runs,build\n";
  for (const TableCell& c : cells) {
    std::string in_band;
    if (!std::isnan(c.value) && !std::isnan(c.band_lo)) {
      in_band = (c.value >= c.band_lo && c.value <= c.band_hi) ? "1" : "0";
    }
    out << c.table << ',' << c.method << ',' << c.algo << ',' << c.d << ',' << c.n << ','
        << c.runs << ',' << c.steps << ',' << c.column << ',' << csv_number(c.value) << ','
        << csv_number(c.se) << ',' << csv_number(c.paper) << ',' << csv_number(c.band_lo) << ','
        << csv_number(c.band_hi) << ',' << in_band << ',' << c.failed_runs << ',' << build
        << '\n';
  }
}

}  // namespace smcmc
