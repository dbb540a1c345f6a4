#include "smcmc/config.hpp"
#include "smcmc/diagnostics.hpp"
#include "smcmc/experiment.hpp"
#include "smcmc/gaussian_model.hpp"
#include "smcmc/kalman.hpp"
#include "smcmc/smc.hpp"
#include "smcmc/tables.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace smcmc;

namespace {

Matrix stack(const std::vector<Vector>& rows) {
  if (rows.empty()) return Matrix(0, 0);
  Matrix out(static_cast<Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = rows[i];
  return out;
}

std::vector<Vector> unstack(const Matrix& m) {
  std::vector<Vector> out;
  for (Index i = 0; i < m.rows(); ++i) out.push_back(m.row(i).transpose());
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  return ExperimentConfig::from_config(KeyValueConfig::parse(text, "<python>"));
}

py::dict summary_dict(const RunSummary& s) {
  py::dict d;
  d["steps"] = s.steps;
  d["mse"] = s.mse;
  d["log_rel_mse"] = s.log_rel_mse;
  d["log_mse_ratio"] = s.log_mse_ratio;
  d["ess_min"] = s.ess_min;
  d["ess_med"] = s.ess_med;
  d["ess_mean"] = s.ess_mean;
  d["ess_max"] = s.ess_max;
  d["weight_ess"] = s.weight_ess;
  d["accept_joint"] = s.accept_joint;
  d["accept_refine"] = s.accept_refine;
  d["accept_kernel"] = s.accept_kernel;
  d["unique_ancestors"] = s.unique_ancestors;
  d["wall_ms"] = s.wall_ms;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sequential MCMC filtering: models, filters and diagnostics";

  m.def("build_fingerprint", &build_fingerprint);
  m.def("run_seed", &run_seed, py::arg("master"), py::arg("run"),
        "Seed of replication `run` (1-based) under a master seed.");

  m.def("list_algorithms", [] {
    py::list out;
    for (const AlgorithmInfo& a : algorithm_catalog()) {
      py::dict d;
      d["name"] = a.name;
      d["label"] = a.label;
      d["family"] = a.family;
      d["gaussian_only"] = a.gaussian_only;
      d["summary"] = a.summary;
      out.append(d);
    }
    return out;
  });

  m.def("normalize_config", [](const std::string& text) { return parse_config(text).to_text(); },
        py::arg("text"), "Parse key = value text and return the canonical form with defaults.");

  m.def(
      "generate_dataset",
      [](const std::string& text, std::uint64_t seed) {
        const ExperimentConfig cfg = parse_config(text);
        const Dataset data = generate_dataset(cfg.model, cfg.run.steps, seed);
        return py::make_tuple(stack(data.states), stack(data.ys));
      },
      py::arg("config"), py::arg("seed"),
      "Simulate (states, observations), each of shape (steps, d).");

  m.def(
      "kalman_filter",
      [](const std::string& text, const Matrix& ys) {
        const ExperimentConfig cfg = parse_config(text);
        if (!cfg.model.is_gaussian()) {
          throw std::invalid_argument("kalman_filter needs model.type = gaussian");
        }
        const auto model = build_model(cfg.model);
        const auto& gm = static_cast<const GaussianModel&>(*model);
        const auto beliefs = kalman_filter(unstack(ys), gm.params(), gm.sigma());
        std::vector<Vector> means;
        std::vector<Vector> vars;
        for (const GaussianBelief& b : beliefs) {
          means.push_back(b.mean);
          vars.push_back(b.cov.diagonal());
        }
        return py::make_tuple(stack(means), stack(vars));
      },
      py::arg("config"), py::arg("ys"), "Filtering means and marginal variances.");

  m.def(
      "run_filter",
      [](const std::string& text, const Matrix& ys, std::uint64_t seed) {
        const ExperimentConfig cfg = parse_config(text);
        const auto model = build_model(cfg.model);
        auto filter = make_filter(cfg.algorithm, *model, seed);
        std::vector<Vector> estimates;
        py::list diags;
        for (const Vector& y : unstack(ys)) {
          const StepReport rep = filter->step(y);
          estimates.push_back(rep.estimate);
          py::dict d;
          d["accept_joint"] = rep.diagnostics.accept_joint;
          d["accept_refine"] = rep.diagnostics.accept_refine;
          d["accept_kernel"] = rep.diagnostics.accept_kernel;
          d["weight_ess"] = rep.diagnostics.weight_ess;
          d["unique_ancestors"] = rep.diagnostics.unique_ancestors;
          d["kernel_failures"] = rep.diagnostics.kernel_failures;
          d["step_size"] = rep.diagnostics.step_size;
          d["warnings"] = rep.diagnostics.warnings;
          d["ess_mean"] = rep.diagnostics.has_chain_ess ? rep.diagnostics.ess.mean
                                                        : ChainDiagnostics::kNotApplicable;
          diags.append(d);
        }
        return py::make_tuple(stack(estimates), diags);
      },
      py::arg("config"), py::arg("ys"), py::arg("seed"),
      "Run the configured algorithm over observations of shape (steps, d).");

  m.def(
      "run_experiment",
      [](const std::string& text, const std::string& out_dir) {
        const ExperimentConfig cfg = parse_config(text);
        const Dataset data = generate_dataset(cfg.model, cfg.run.steps, cfg.run.seed);
        ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = run_experiment(cfg, data);
        }
        if (!out_dir.empty()) write_experiment(cfg, result, out_dir);
        RunSummary se;
        py::dict out = summary_dict(summarize_runs(result, &se));
        out["se"] = summary_dict(se);
        py::list failures;
        for (const RunOutcome& r : result.runs) {
          if (!r.ok) failures.append(py::make_tuple(r.run, r.error));
        }
        out["failures"] = failures;
        return out;
      },
      py::arg("config"), py::arg("out_dir") = "",
      "Replicated runs on a dataset simulated from run.seed; returns the run-averaged summary.");

  m.def(
      "plan_table",
      [](const std::string& id, std::vector<Index> dims) {
        TableOptions o;
        o.scale = 0.0;
        o.dims = std::move(dims);
        py::list out;
        for (const TableCell& c : plan_table(id, o)) {
          py::dict d;
          d["method"] = c.method;
          d["algo"] = c.algo;
          d["d"] = c.d;
          d["column"] = c.column;
          d["paper"] = c.paper;
          d["band"] = py::make_tuple(c.band_lo, c.band_hi);
          out.append(d);
        }
        return out;
      },
      py::arg("table"), py::arg("dims") = std::vector<Index>{144});

  m.def(
      "chain_ess",
      [](const std::vector<double>& xs) { return chain_ess(xs).value; }, py::arg("samples"),
      "Geyer initial-monotone effective sample size of a scalar chain.");
  m.def(
      "weight_ess", [](const Vector& log_w) { return weight_ess(log_w); }, py::arg("log_weights"));
  m.def("log_relative_mse", &log_relative_mse, py::arg("estimate"), py::arg("kalman_mean"),
        py::arg("kalman_variance"));
  m.def("log_mse_ratio", &log_mse_ratio, py::arg("estimate"), py::arg("kalman_mean"),
        py::arg("truth"));
}
