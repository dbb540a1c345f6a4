#pragma once

#include "smcmc/experiment.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace smcmc {

/// One cell of a published table: a method at a dimension, and one column.
struct TableCell {
  std::string table;
  std::string method;  ///< row label as printed in the paper
  std::string algo;    ///< catalog name
  Index d = 0;
  Index n = 0;         ///< particles / retained samples
  int runs = 0;
  int steps = 0;
  std::string column;  ///< time_s, rel_mse_log, mse, ess_min, ...
  double value = ChainDiagnostics::kNotApplicable;
  double se = ChainDiagnostics::kNotApplicable;
  double paper = ChainDiagnostics::kNotApplicable;
  double band_lo = ChainDiagnostics::kNotApplicable;
  double band_hi = ChainDiagnostics::kNotApplicable;
  int failed_runs = 0;
};

struct TableOptions {
  double scale = 0.25;        ///< runs = round(100 * scale) unless `runs` is set
  std::optional<int> runs;
  std::vector<Index> dims{144};
  std::uint64_t seed = 1;
  int workers = 0;
  int steps = 10;
  bool timing = true;
  std::string out_dir;        ///< per-experiment outputs go below it when non-empty

  int resolved_runs() const;
};

const std::vector<std::string>& table_ids();

/// Every cell the table would fill, with values left empty.
std::vector<TableCell> plan_table(const std::string& id, const TableOptions& options);

/// Runs the experiment grid behind a table. With zero runs this is plan_table.
std::vector<TableCell> reproduce_table(const std::string& id, const TableOptions& options);

/// Configuration of one row of a table at dimension d.
ExperimentConfig table_experiment(const std::string& id, const std::string& method, Index d,
                                  const TableOptions& options);

void write_table_csv(const std::vector<TableCell>& cells, const std::string& path);

}  // namespace smcmc
