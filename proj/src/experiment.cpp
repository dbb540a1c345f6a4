#include "smcmc/experiment.hpp"

#include "smcmc/gaussian_model.hpp"
#include "smcmc/poisson_model.hpp"
#include "smcmc/sensor_grid.hpp"
#include "smcmc/smc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#ifndef SMCMC_BUILD_ID
#define SMCMC_BUILD_ID "unknown"
#endif

namespace smcmc {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

AncestorMode parse_ancestor_mode(const std::string& s) {
  if (s == "uniform") return AncestorMode::uniform;
  if (s == "predictive") return AncestorMode::predictive;
  if (s == "perfect_gibbs") return AncestorMode::perfect_gibbs;
  throw std::invalid_argument("algorithm.ancestor_mode: unknown value '" + s +
                              "' (uniform, predictive, perfect_gibbs)");
}

BlockProposal parse_block_proposal(const std::string& s) {
  if (s == "conditional_prior") return BlockProposal::conditional_prior;
  if (s == "random_walk") return BlockProposal::random_walk;
  throw std::invalid_argument("algorithm.block_proposal: unknown value '" + s +
                              "' (conditional_prior, random_walk)");
}

int to_int(std::int64_t v, const char* key) {
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw std::invalid_argument(std::string(key) + ": out of range");
  }
  return static_cast<int>(v);
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string model_text(const ModelSpec& m) {
  std::string out;
  out += "model.type = " + m.type + "\n";
  out += "model.d = " + std::to_string(m.d) + "\n";
  out += "model.alpha = " + fmt17(m.alpha) + "\n";
  out += "model.alpha0 = " + fmt17(m.alpha0) + "\n";
  out += "model.alpha1 = " + fmt17(m.alpha1) + "\n";
  out += "model.beta = " + fmt17(m.beta) + "\n";
  if (m.is_gaussian()) {
    out += "model.sigma_y2 = " + fmt17(m.sigma_y2) + "\n";
  } else {
    out += "model.nu = " + fmt17(m.nu) + "\n";
    out += "model.gamma = " + fmt17(m.gamma) + "\n";
    out += "model.m1 = " + fmt17(m.m1) + "\n";
    out += "model.m2 = " + fmt17(m.m2) + "\n";
  }
  if (!m.locations.empty()) {
    out += "model.locations = " + m.locations + "\n";
  }
  return out;
}

SensorGrid make_grid(const ModelSpec& spec) {
  if (spec.locations.empty()) {
    return SensorGrid::square(spec.d);
  }
  SensorGrid grid = SensorGrid::from_csv(spec.locations);
  if (grid.size() != spec.d) {
    throw std::invalid_argument("model.locations has " + std::to_string(grid.size()) +
                                " sensors but model.d = " + std::to_string(spec.d));
  }
  return grid;
}

MoveKind move_kind_for(const std::string& algo) {
  if (algo == "smala") return MoveKind::mala;
  if (algo == "smmala") return MoveKind::smmala;
  if (algo == "simplified_smmala") return MoveKind::simplified_smmala;
  if (algo == "shmc") return MoveKind::hmc;
  if (algo == "smhmc" || algo == "sir_rm") return MoveKind::mhmc;
  throw std::invalid_argument("algorithm '" + algo + "' has no gradient move");
}

MoveConfig move_config(const AlgorithmSpec& spec) {
  MoveConfig mc = MoveConfig::defaults(move_kind_for(spec.name));
  if (spec.epsilon) mc.epsilon = *spec.epsilon;
  if (spec.n_leapfrog) mc.n_leapfrog = *spec.n_leapfrog;
  if (spec.n_fixed_point) mc.n_fixed_point = *spec.n_fixed_point;
  mc.adapt = spec.adapt;
  mc.jitter = spec.jitter;
  mc.validate();
  return mc;
}

class SmcAdapter final : public Filter {
 public:
  SmcAdapter(const AlgorithmSpec& spec, const StateSpaceModel& model, std::uint64_t seed)
      : spec_(spec), model_(&model), seed_(seed),
        particles_(ParticleSet::initial(model, spec.n)) {
    if (spec.name == "sir_rm") {
      move_.emplace(move_config(spec), model.dimension());
      controller_.emplace(move_->make_controller());
    }
    if (spec.name == "block_sir" && !model.likelihood_is_separable()) {
      throw CapabilityError("block_sir requires a separable likelihood");
    }
  }

  StepReport step(const Observation& y) override {
    ++n_;
    Rng rng(Rng::derive_seed({seed_, static_cast<std::uint64_t>(n_)}));
    SmcStepInfo info;
    if (spec_.name == "sir") {
      SirConfig cfg;
      cfg.threshold_fraction = spec_.resample_threshold;
      particles_ = sir_step(particles_, y, *model_, cfg, rng, &info);
    } else if (spec_.name == "block_sir") {
      particles_ = block_sir_step(particles_, y, *model_, spec_.block_size, rng, &info);
    } else {
      particles_ = resample_move_step(particles_, y, *model_, *move_, *controller_,
                                      spec_.k_moves, rng, &info);
    }
    StepReport out;
    out.estimate = info.estimate;
    out.diagnostics.weight_ess = info.ess_before_resampling;
    out.diagnostics.unique_ancestors = info.unique_ancestors;
    out.diagnostics.accept_kernel = info.accept_rate;
    out.diagnostics.kernel_failures = info.kernel_failures;
    if (controller_) {
      out.diagnostics.step_size = controller_->epsilon();
    }
    return out;
  }

 private:
  AlgorithmSpec spec_;
  const StateSpaceModel* model_;
  std::uint64_t seed_;
  ParticleSet particles_;
  std::optional<GradientMove> move_;
  std::optional<StepSizeController> controller_;
  Index n_ = 0;
};

class SmcmcAdapter final : public Filter {
 public:
  SmcmcAdapter(const StateSpaceModel& model, SmcmcConfig cfg, std::uint64_t seed)
      : filter_(model, std::move(cfg), seed) {}

  StepReport step(const Observation& y) override {
    TimestepResult r = filter_.step(y);
    return {std::move(r.estimate), std::move(r.diagnostics)};
  }

 private:
  SmcmcFilter filter_;
};

SmcmcConfig smcmc_config(const AlgorithmSpec& spec) {
  SmcmcConfig cfg;
  cfg.n_samples = spec.n;
  cfg.burn_in_fraction = spec.burn_in_fraction;
  cfg.ancestor_mode = spec.ancestor_mode;
  cfg.block_size = spec.block_size;
  cfg.block_proposal = spec.block_proposal;
  cfg.random_walk_scale = spec.random_walk_scale;
  if (spec.name == "smcmc_optimal") {
    cfg.kernel = SmcmcKernelKind::optimal;
  } else if (spec.name == "smcmc_prior") {
    cfg.kernel = SmcmcKernelKind::prior_composite;
  } else {
    cfg.kernel = SmcmcKernelKind::gradient;
    cfg.move = move_config(spec);
  }
  cfg.validate();
  return cfg;
}

double mean_finite(const std::vector<double>& xs) {
  double sum = 0.0;
  int count = 0;
  for (double x : xs) {
    if (!std::isnan(x)) {
      sum += x;
      ++count;
    }
  }
  return count > 0 ? sum / count : ChainDiagnostics::kNotApplicable;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (char c : s) {
    out += c == '"' ? std::string("\"\"") : std::string(1, c == '\n' ? ' ' : c);
  }
  return out + "\"";
}

const char* kSummaryHeader =
    "run,n,algo,steps,mse,log_rel_mse,log_mse_ratio,ess_min,ess_med,ess_mean,ess_max,"
    "weight_ess,accept_joint,accept_refine,accept_kernel,unique_ancestors,wall_ms,build\n";

std::string summary_line(const std::string& run, const std::string& algo, const RunSummary& s,
                         const std::string& build) {
  std::string line = run + ",all," + algo + "," + std::to_string(s.steps);
  for (double v : {s.mse, s.log_rel_mse, s.log_mse_ratio, s.ess_min, s.ess_med, s.ess_mean,
                   s.ess_max, s.weight_ess, s.accept_joint, s.accept_refine, s.accept_kernel,
                   s.unique_ancestors, s.wall_ms}) {
    line += "," + csv_number(v);
  }
  return line + "," + build + "\n";
}

}  // namespace

void ModelSpec::validate() const {
  if (type != "gaussian" && type != "gh_poisson") {
    throw std::invalid_argument("model.type must be gaussian or gh_poisson, got '" + type + "'");
  }
  if (d < 1) {
    throw std::invalid_argument("model.d must be positive");
  }
  if (!std::isfinite(alpha) || !std::isfinite(alpha0) || !std::isfinite(alpha1) ||
      !std::isfinite(beta)) {
    throw std::invalid_argument("model parameters must be finite");
  }
  if (is_gaussian() && !(sigma_y2 > 0.0)) {
    throw std::invalid_argument("model.sigma_y2 must be positive");
  }
  if (!is_gaussian() && !(nu > 2.0)) {
    throw std::invalid_argument("model.nu must exceed 2 so that the covariance exists");
  }
}

void AlgorithmSpec::validate() const {
  algorithm_info(name);
  if (n < 1) {
    throw std::invalid_argument("algorithm.n must be positive");
  }
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 10.0)) {
    throw std::invalid_argument("algorithm.burn_in_fraction must be in [0, 10)");
  }
  if (epsilon && !(*epsilon > 0.0)) {
    throw std::invalid_argument("algorithm.epsilon must be positive");
  }
  if (n_leapfrog && *n_leapfrog < 1) {
    throw std::invalid_argument("algorithm.n_leapfrog must be at least 1");
  }
  if (n_fixed_point && *n_fixed_point < 1) {
    throw std::invalid_argument("algorithm.n_fixed_point must be at least 1");
  }
  if (k_moves < 0) {
    throw std::invalid_argument("algorithm.k_moves must be non-negative");
  }
  if (block_size < 1) {
    throw std::invalid_argument("algorithm.block_size must be at least 1");
  }
  if (!(resample_threshold >= 0.0 && resample_threshold <= 1.0)) {
    throw std::invalid_argument("algorithm.resample_threshold must be in [0, 1]");
  }
  if (!(random_walk_scale > 0.0)) {
    throw std::invalid_argument("algorithm.random_walk_scale must be positive");
  }
}

ExperimentConfig ExperimentConfig::from_config(const KeyValueConfig& kv) {
  ExperimentConfig c;
  ModelSpec& m = c.model;
  m.type = kv.get_string("model.type", m.type);
  m.d = kv.get_int("model.d", m.d);
  m.alpha = kv.get_double("model.alpha", m.alpha);
  m.sigma_y2 = kv.get_double("model.sigma_y2", m.sigma_y2);
  m.alpha0 = kv.get_double("model.alpha0", m.alpha0);
  m.alpha1 = kv.get_double("model.alpha1", m.alpha1);
  m.beta = kv.get_double("model.beta", m.beta);
  m.nu = kv.get_double("model.nu", m.nu);
  m.gamma = kv.get_double("model.gamma", m.gamma);
  m.m1 = kv.get_double("model.m1", m.m1);
  m.m2 = kv.get_double("model.m2", m.m2);
  m.locations = kv.get_string("model.locations", m.locations);

  AlgorithmSpec& a = c.algorithm;
  a.name = kv.get_string("algorithm.name", a.name);
  a.n = kv.get_int("algorithm.n", a.n);
  a.burn_in_fraction = kv.get_double("algorithm.burn_in_fraction", a.burn_in_fraction);
  if (kv.has("algorithm.epsilon")) a.epsilon = kv.get_double("algorithm.epsilon", 0.0);
  if (kv.has("algorithm.n_leapfrog")) {
    a.n_leapfrog = to_int(kv.get_int("algorithm.n_leapfrog", 0), "algorithm.n_leapfrog");
  }
  if (kv.has("algorithm.n_fixed_point")) {
    a.n_fixed_point = to_int(kv.get_int("algorithm.n_fixed_point", 0), "algorithm.n_fixed_point");
  }
  a.adapt = kv.get_bool("algorithm.adapt", a.adapt);
  a.jitter = kv.get_bool("algorithm.jitter", a.jitter);
  a.k_moves = to_int(kv.get_int("algorithm.k_moves", a.k_moves), "algorithm.k_moves");
  a.block_size = kv.get_int("algorithm.block_size", a.block_size);
  a.resample_threshold = kv.get_double("algorithm.resample_threshold", a.resample_threshold);
  a.ancestor_mode =
      parse_ancestor_mode(kv.get_string("algorithm.ancestor_mode", to_string(a.ancestor_mode)));
  a.block_proposal =
      parse_block_proposal(kv.get_string("algorithm.block_proposal", to_string(a.block_proposal)));
  a.random_walk_scale = kv.get_double("algorithm.random_walk_scale", a.random_walk_scale);

  RunSpec& r = c.run;
  r.steps = to_int(kv.get_int("run.steps", r.steps), "run.steps");
  r.n_runs = to_int(kv.get_int("run.n_runs", r.n_runs), "run.n_runs");
  r.seed = kv.get_u64("run.seed", r.seed);
  r.workers = to_int(kv.get_int("run.workers", r.workers), "run.workers");

  OutputSpec& o = c.output;
  o.dir = kv.get_string("output.dir", o.dir);
  o.per_dimension = kv.get_bool("output.per_dimension", o.per_dimension);
  o.timing = kv.get_bool("output.timing", o.timing);

  kv.require_all_read();
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  model.validate();
  algorithm.validate();
  if (algorithm_info(algorithm.name).gaussian_only && !model.is_gaussian()) {
    throw std::invalid_argument("algorithm '" + algorithm.name +
                                "' needs the linear-Gaussian model (model.type = gaussian)");
  }
  if (run.steps < 1) {
    throw std::invalid_argument("run.steps must be positive");
  }
  if (run.n_runs < 1) {
    throw std::invalid_argument("run.n_runs must be positive");
  }
  if (run.workers < 0) {
    throw std::invalid_argument("run.workers must be non-negative");
  }
}

std::string ExperimentConfig::to_text() const {
  std::string out = model_text(model);
  const AlgorithmSpec& a = algorithm;
  out += "algorithm.name = " + a.name + "\n";
  out += "algorithm.n = " + std::to_string(a.n) + "\n";
  out += "algorithm.burn_in_fraction = " + fmt17(a.burn_in_fraction) + "\n";
  if (a.epsilon) out += "algorithm.epsilon = " + fmt17(*a.epsilon) + "\n";
  if (a.n_leapfrog) out += "algorithm.n_leapfrog = " + std::to_string(*a.n_leapfrog) + "\n";
  if (a.n_fixed_point) {
    out += "algorithm.n_fixed_point = " + std::to_string(*a.n_fixed_point) + "\n";
  }
  out += std::string("algorithm.adapt = ") + (a.adapt ? "true" : "false") + "\n";
  out += std::string("algorithm.jitter = ") + (a.jitter ? "true" : "false") + "\n";
  out += "algorithm.k_moves = " + std::to_string(a.k_moves) + "\n";
  out += "algorithm.block_size = " + std::to_string(a.block_size) + "\n";
  out += "algorithm.resample_threshold = " + fmt17(a.resample_threshold) + "\n";
  out += "algorithm.ancestor_mode = " + to_string(a.ancestor_mode) + "\n";
  out += "algorithm.block_proposal = " + to_string(a.block_proposal) + "\n";
  out += "algorithm.random_walk_scale = " + fmt17(a.random_walk_scale) + "\n";
  out += "run.steps = " + std::to_string(run.steps) + "\n";
  out += "run.n_runs = " + std::to_string(run.n_runs) + "\n";
  out += "run.seed = " + std::to_string(run.seed) + "\n";
  out += "run.workers = " + std::to_string(run.workers) + "\n";
  out += "output.dir = " + output.dir + "\n";
  out += std::string("output.per_dimension = ") + (output.per_dimension ? "true" : "false") + "\n";
  out += std::string("output.timing = ") + (output.timing ? "true" : "false") + "\n";
  return out;
}

const std::vector<AlgorithmInfo>& algorithm_catalog() {
  static const std::vector<AlgorithmInfo> catalog = {
      {"sir", "SIR", "smc", false, "bootstrap particle filter, resampling on low weight ESS"},
      {"block_sir", "Block SIR", "smc", false,
       "particle filter weighting and resampling each block of sensors separately"},
      {"sir_rm", "SIR-RM", "smc", false,
       "SIR with K manifold HMC moves per particle after resampling"},
      {"smcmc_prior", "SMCMC-Prior", "smcmc", false,
       "joint prior draw, ancestor move, then blockwise MH over x_n"},
      {"smcmc_optimal", "SMCMC-Optimal", "smcmc", true,
       "independent draws from the optimal proposal, always accepted"},
      {"smala", "SMALA", "smcmc", false, "ancestor move then pre-conditioned MALA on x_n"},
      {"smmala", "SmMALA", "smcmc", false, "ancestor move then manifold MALA on x_n"},
      {"simplified_smmala", "Simplified SmMALA", "smcmc", false,
       "ancestor move then manifold MALA without the metric-derivative drift"},
      {"shmc", "SHMC", "smcmc", false, "ancestor move then HMC with identity mass"},
      {"smhmc", "SmHMC", "smcmc", false,
       "ancestor move then manifold HMC with the generalized leapfrog"},
  };
  return catalog;
}

const AlgorithmInfo& algorithm_info(const std::string& name) {
  for (const AlgorithmInfo& info : algorithm_catalog()) {
    if (info.name == name) {
      return info;
    }
  }
  std::string known;
  for (const AlgorithmInfo& info : algorithm_catalog()) {
    known += (known.empty() ? "" : ", ") + info.name;
  }
  throw std::invalid_argument("unknown algorithm '" + name + "' (known: " + known + ")");
}

std::unique_ptr<StateSpaceModel> build_model(const ModelSpec& spec) {
  spec.validate();
  const SensorGrid grid = make_grid(spec);
  if (spec.is_gaussian()) {
    GaussianModelParams p;
    p.alpha = spec.alpha;
    p.sigma_y2 = spec.sigma_y2;
    p.alpha0 = spec.alpha0;
    p.alpha1 = spec.alpha1;
    p.beta = spec.beta;
    return std::make_unique<GaussianModel>(p, grid);
  }
  GhParams gh = skewed_t_field(grid, spec.nu, spec.gamma, spec.alpha, spec.alpha0, spec.alpha1,
                               spec.beta);
  return std::make_unique<PoissonModel>(std::move(gh), PoissonObsParams{spec.m1, spec.m2});
}

std::string model_fingerprint(const ModelSpec& spec) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(model_text(spec))));
  return buf;
}

std::string build_fingerprint() { return SMCMC_BUILD_ID; }

Dataset generate_dataset(const ModelSpec& spec, int steps, std::uint64_t seed) {
  if (steps < 1) {
    throw std::invalid_argument("generate_dataset: steps must be positive");
  }
  const auto model = build_model(spec);
  Dataset data;
  data.seed = seed;
  data.fingerprint = model_fingerprint(spec);
  Rng rng(Rng::derive_seed({seed}));
  StateVector x = model->initial_anchor();
  for (int n = 0; n < steps; ++n) {
    x = model->sample_transition(x, rng);
    data.ys.push_back(model->sample_observation(x, rng));
    data.states.push_back(x);
  }
  return data;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "n,kind,k,value\n";
  for (int n = 0; n < data.steps(); ++n) {
    for (const auto& [kind, vec] : {std::pair<const char*, const Vector*>{"x", &data.states[n]},
                                    std::pair<const char*, const Vector*>{"y", &data.ys[n]}}) {
      for (Index k = 0; k < vec->size(); ++k) {
        out << (n + 1) << ',' << kind << ',' << k << ',' << fmt17((*vec)(k)) << '\n';
      }
    }
  }
  if (!out) {
    throw std::runtime_error("write failed for '" + path + "'");
  }
  std::ofstream meta = open_out(path + ".meta");
  meta << "data.seed = " << data.seed << "\ndata.fingerprint = " << data.fingerprint << "\n";
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open dataset '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line) || line != "n,kind,k,value") {
    throw std::runtime_error(path + ": expected header 'n,kind,k,value'");
  }
  std::vector<std::vector<double>> xs;
  std::vector<std::vector<double>> ys;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f_n;
    std::string f_kind;
    std::string f_k;
    std::string f_v;
    if (!std::getline(ss, f_n, ',') || !std::getline(ss, f_kind, ',') ||
        !std::getline(ss, f_k, ',') || !std::getline(ss, f_v)) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 4 fields");
    }
    int n = 0;
    long k = 0;
    double v = 0.0;
    try {
      n = std::stoi(f_n);
      k = std::stol(f_k);
      v = std::stod(f_v);
    } catch (const std::logic_error&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed number");
    }
    if (n < 1 || k < 0 || (f_kind != "x" && f_kind != "y")) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad n, kind or k");
    }
    auto& table = f_kind == "x" ? xs : ys;
    if (table.size() < static_cast<std::size_t>(n)) table.resize(n);
    auto& row = table[n - 1];
    if (row.size() <= static_cast<std::size_t>(k)) row.resize(k + 1, std::nan(""));
    row[k] = v;
  }
  if (ys.empty() || xs.size() != ys.size()) {
    throw std::runtime_error(path + ": states and observations cover different time ranges");
  }
  Dataset data;
  const std::size_t d = ys[0].size();
  for (std::size_t n = 0; n < ys.size(); ++n) {
    if (xs[n].size() != d || ys[n].size() != d) {
      throw std::runtime_error(path + ": ragged data at n = " + std::to_string(n + 1));
    }
    data.states.push_back(Eigen::Map<const Vector>(xs[n].data(), d));
    data.ys.push_back(Eigen::Map<const Vector>(ys[n].data(), d));
    if (data.states.back().hasNaN() || data.ys.back().hasNaN()) {
      throw std::runtime_error(path + ": missing entries at n = " + std::to_string(n + 1));
    }
  }
  if (std::filesystem::exists(path + ".meta")) {
    const KeyValueConfig meta = KeyValueConfig::load(path + ".meta");
    data.seed = meta.get_u64("data.seed", 0);
    data.fingerprint = meta.get_string("data.fingerprint", "");
  }
  return data;
}

std::unique_ptr<Filter> make_filter(const AlgorithmSpec& spec, const StateSpaceModel& model,
                                    std::uint64_t seed) {
  spec.validate();
  const AlgorithmInfo& info = algorithm_info(spec.name);
  if (info.family == "smc") {
    return std::make_unique<SmcAdapter>(spec, model, seed);
  }
  return std::make_unique<SmcmcAdapter>(model, smcmc_config(spec), seed);
}

std::uint64_t run_seed(std::uint64_t master, int run) {
  return Rng::derive_seed({master, static_cast<std::uint64_t>(run)});
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data) {
  return run_experiment(cfg, data, [&](const StateSpaceModel& model, std::uint64_t seed, int) {
    return make_filter(cfg.algorithm, model, seed);
  });
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data,
                                const FilterFactory& factory) {
  cfg.validate();
  const auto model = build_model(cfg.model);
  if (data.steps() < 1) {
    throw std::invalid_argument("run_experiment: empty dataset");
  }
  for (int n = 0; n < data.steps(); ++n) {
    require_dimension(data.ys[n].size(), model->dimension(), "dataset observation");
    require_dimension(data.states[n].size(), model->dimension(), "dataset state");
  }
  const int steps = std::min(cfg.run.steps, data.steps());

  ExperimentResult result;
  if (cfg.model.is_gaussian()) {
    const auto& gm = static_cast<const GaussianModel&>(*model);
    std::vector<Observation> ys(data.ys.begin(), data.ys.begin() + steps);
    result.kalman = kalman_filter(ys, gm.params(), gm.sigma());
    for (int n = 0; n < steps; ++n) {
      result.kalman_mse.push_back(mse_per_sensor(result.kalman[n].mean, data.states[n]));
    }
  }

  const int n_runs = cfg.run.n_runs;
  result.runs.resize(n_runs);
  auto execute = [&](int r) {
    RunOutcome& out = result.runs[r - 1];
    out.run = r;
    out.seed = run_seed(cfg.run.seed, r);
    try {
      auto filter = factory(*model, out.seed, r);
      for (int n = 0; n < steps; ++n) {
        const auto t0 = std::chrono::steady_clock::now();
        StepReport rep = filter->step(data.ys[n]);
        const auto t1 = std::chrono::steady_clock::now();
        StepRow row;
        row.run = r;
        row.n = n + 1;
        row.mse = mse_per_sensor(rep.estimate, data.states[n]);
        if (!result.kalman.empty()) {
          const GaussianBelief& kb = result.kalman[n];
          row.log_rel_mse = log_relative_mse(rep.estimate, kb.mean, kb.cov.diagonal());
          row.log_mse_ratio = log_mse_ratio(rep.estimate, kb.mean, data.states[n]);
        }
        row.diagnostics = std::move(rep.diagnostics);
        row.diagnostics.wall_ms =
            cfg.output.timing ? std::chrono::duration<double, std::milli>(t1 - t0).count() : 0.0;
        out.rows.push_back(std::move(row));
        if (cfg.output.per_dimension) {
          out.estimates.push_back(std::move(rep.estimate));
        }
      }
      out.ok = true;
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
    }
  };

  int workers = cfg.run.workers > 0 ? cfg.run.workers
                                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, n_runs);
  if (workers == 1) {
    for (int r = 1; r <= n_runs; ++r) execute(r);
    return result;
  }
  std::atomic<int> next{1};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int r = next++; r <= n_runs; r = next++) execute(r);
    });
  }
  for (auto& t : pool) t.join();
  return result;
}

std::string csv_number(double v) {
  if (std::isnan(v)) {
    return "";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

RunSummary summarize_rows(const std::vector<StepRow>& rows) {
  RunSummary s;
  s.steps = static_cast<int>(rows.size());
  if (rows.empty()) {
    s.mse = ChainDiagnostics::kNotApplicable;
    return s;
  }
  auto col = [&](auto get) {
    std::vector<double> xs;
    for (const StepRow& r : rows) xs.push_back(get(r));
    return mean_finite(xs);
  };
  const double na = ChainDiagnostics::kNotApplicable;
  s.mse = col([](const StepRow& r) { return r.mse; });
  s.log_rel_mse = col([](const StepRow& r) { return r.log_rel_mse; });
  s.log_mse_ratio = col([](const StepRow& r) { return r.log_mse_ratio; });
  s.ess_min = col([&](const StepRow& r) { return r.diagnostics.has_chain_ess ? r.diagnostics.ess.min : na; });
  s.ess_med = col([&](const StepRow& r) { return r.diagnostics.has_chain_ess ? r.diagnostics.ess.median : na; });
  s.ess_mean = col([&](const StepRow& r) { return r.diagnostics.has_chain_ess ? r.diagnostics.ess.mean : na; });
  s.ess_max = col([&](const StepRow& r) { return r.diagnostics.has_chain_ess ? r.diagnostics.ess.max : na; });
  s.weight_ess = col([](const StepRow& r) { return r.diagnostics.weight_ess; });
  s.accept_joint = col([](const StepRow& r) { return r.diagnostics.accept_joint; });
  s.accept_refine = col([](const StepRow& r) { return r.diagnostics.accept_refine; });
  s.accept_kernel = col([](const StepRow& r) { return r.diagnostics.accept_kernel; });
  s.unique_ancestors =
      col([](const StepRow& r) { return static_cast<double>(r.diagnostics.unique_ancestors); });
  s.wall_ms = col([](const StepRow& r) { return r.diagnostics.wall_ms; });
  return s;
}

RunSummary summarize_runs(const ExperimentResult& result, RunSummary* se) {
  std::vector<RunSummary> per_run;
  for (const RunOutcome& run : result.runs) {
    if (run.ok) per_run.push_back(summarize_rows(run.rows));
  }
  RunSummary mean;
  RunSummary err;
  const double na = ChainDiagnostics::kNotApplicable;
  auto field = [&](double RunSummary::*member) {
    std::vector<double> xs;
    for (const RunSummary& s : per_run) {
      if (!std::isnan(s.*member)) xs.push_back(s.*member);
    }
    const double m = mean_finite(xs);
    mean.*member = m;
    if (xs.size() < 2) {
      err.*member = na;
      return;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    err.*member = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  };
  for (double RunSummary::*member :
       {&RunSummary::mse, &RunSummary::log_rel_mse, &RunSummary::log_mse_ratio,
        &RunSummary::ess_min, &RunSummary::ess_med, &RunSummary::ess_mean, &RunSummary::ess_max,
        &RunSummary::weight_ess, &RunSummary::accept_joint, &RunSummary::accept_refine,
        &RunSummary::accept_kernel, &RunSummary::unique_ancestors, &RunSummary::wall_ms}) {
    field(member);
  }
  mean.steps = per_run.empty() ? 0 : per_run.front().steps;
  err.steps = mean.steps;
  if (se != nullptr) *se = err;
  return mean;
}

void write_experiment(const ExperimentConfig& cfg, const ExperimentResult& result,
                      const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  const std::string build = build_fingerprint();
  const std::string& algo = cfg.algorithm.name;

  {
    std::ofstream out = open_out(root / "config.txt");
    out << cfg.to_text();
  }
  {
    std::ofstream out = open_out(root / "steps.csv");
    out << "run,n,algo,mse,log_rel_mse,ess_min,ess_med,ess_mean,ess_max,accept_joint,"
           "accept_refine,accept_kernel,unique_ancestors,wall_ms,build\n";
    for (const RunOutcome& run : result.runs) {
      if (!run.ok) continue;
      for (const StepRow& row : run.rows) {
        const ChainDiagnostics& dg = row.diagnostics;
        const double na = ChainDiagnostics::kNotApplicable;
        out << row.run << ',' << row.n << ',' << algo << ',' << csv_number(row.mse) << ','
            << csv_number(row.log_rel_mse);
        for (double v : {dg.has_chain_ess ? dg.ess.min : na, dg.has_chain_ess ? dg.ess.median : na,
                         dg.has_chain_ess ? dg.ess.mean : na, dg.has_chain_ess ? dg.ess.max : na,
                         dg.accept_joint, dg.accept_refine, dg.accept_kernel}) {
          out << ',' << csv_number(v);
        }
        out << ',' << dg.unique_ancestors << ',' << csv_number(dg.wall_ms) << ',' << build << '\n';
      }
    }
  }
  {
    std::ofstream out = open_out(root / "summary.csv");
    out << kSummaryHeader;
    for (const RunOutcome& run : result.runs) {
      if (run.ok) out << summary_line(std::to_string(run.run), algo, summarize_rows(run.rows), build);
    }
    RunSummary se;
    const RunSummary all = summarize_runs(result, &se);
    out << summary_line("all", algo, all, build);
    out << summary_line("se", algo, se, build);
  }
  {
    std::ofstream out = open_out(root / "failures.csv");
    out << "run,seed,algo,error,build\n";
    for (const RunOutcome& run : result.runs) {
      if (!run.ok) {
        out << run.run << ',' << run.seed << ',' << algo << ',' << csv_escape(run.error) << ','
            << build << '\n';
      }
    }
  }
  if (!result.kalman.empty()) {
    std::ofstream out = open_out(root / "oracle.csv");
    out << "run,n,algo,k,kalman_mean,kalman_var,kalman_mse,build\n";
    for (std::size_t n = 0; n < result.kalman.size(); ++n) {
      const GaussianBelief& kb = result.kalman[n];
      for (Index k = 0; k < kb.mean.size(); ++k) {
        out << "oracle," << (n + 1) << ",kalman," << k << ',' << csv_number(kb.mean(k)) << ','
            << csv_number(kb.cov(k, k)) << ',' << csv_number(result.kalman_mse[n]) << ','
            << build << '\n';
      }
    }
  }
  if (cfg.output.per_dimension) {
    std::ofstream out = open_out(root / "estimates.csv");
    out << "run,n,algo,k,estimate,build\n";
    for (const RunOutcome& run : result.runs) {
      if (!run.ok) continue;
      for (std::size_t n = 0; n < run.estimates.size(); ++n) {
        for (Index k = 0; k < run.estimates[n].size(); ++k) {
          out << run.run << ',' << (n + 1) << ',' << algo << ',' << k << ','
              << csv_number(run.estimates[n](k)) << ',' << build << '\n';
        }
      }
    }
  }
}

}  // namespace smcmc
