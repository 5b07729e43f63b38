// Copyright 2026 The catchain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "catchain/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "catchain/errors.hpp"
#include "catchain/io.hpp"
#include "catchain/observables.hpp"

namespace catchain {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

constexpr double kConservationLimit = 1e-8;
constexpr double kWignerBoundaryLimit = 1e-4;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Config parsing

class Section {
 public:
  Section(const json& obj, std::string name, std::set<std::string> allowed)
      : obj_(obj), name_(std::move(name)) {
    if (!obj_.is_object()) throw ConfigError("config: '" + name_ + "' must be an object");
    for (const auto& [key, _] : obj_.items())
      if (!allowed.count(key)) throw ConfigError("config: unknown key '" + name_ + "." + key + "'");
  }

  template <typename T>
  void get(const char* key, T& out) const {
    if (!obj_.contains(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config: '" + name_ + "." + key + "' has the wrong type: " + e.what());
    }
  }

  template <typename T>
  void get(const char* key, std::optional<T>& out) const {
    if (!obj_.contains(key) || obj_.at(key).is_null()) return;
    T v{};
    get(key, v);
    out = v;
  }

  bool has(const char* key) const { return obj_.contains(key); }
  const json& at(const char* key) const { return obj_.at(key); }

 private:
  const json& obj_;
  std::string name_;
};

GuessSpec parse_guess(const json& j, std::size_t index) {
  const std::string name = "krotov.guess[" + std::to_string(index) + "]";
  Section s(j, name, {"kind", "value", "amplitude", "frequency", "phase"});
  std::string kind = "constant";
  s.get("kind", kind);
  GuessSpec g;
  if (kind == "constant") g.kind = GuessSpec::Kind::kConstant;
  else if (kind == "sinusoid") g.kind = GuessSpec::Kind::kSinusoid;
  else if (kind == "random") g.kind = GuessSpec::Kind::kRandom;
  else throw ConfigError("config: " + name + ".kind must be constant, sinusoid or random");
  s.get("value", g.value);
  s.get("amplitude", g.amplitude);
  s.get("frequency", g.frequency);
  s.get("phase", g.phase);
  return g;
}

ojson guess_to_json(const GuessSpec& g) {
  ojson j;
  switch (g.kind) {
    case GuessSpec::Kind::kConstant:
      j = {{"kind", "constant"}, {"value", g.value}};
      break;
    case GuessSpec::Kind::kSinusoid:
      j = {{"kind", "sinusoid"}, {"amplitude", g.amplitude}, {"phase", g.phase}};
      if (g.frequency) j["frequency"] = *g.frequency;
      break;
    case GuessSpec::Kind::kRandom:
      j = {{"kind", "random"}, {"amplitude", g.amplitude}};
      break;
  }
  return j;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what);
}

bool finite_all(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// ---------------------------------------------------------------------------

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void write_summary(const RunSummary& summary, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir / "summary.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (out_dir / "summary.json").string());
  out << summary.to_json().dump(2) << '\n';
}

void note(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

int step_for_time(const TimeGrid& grid, double t) {
  const double k_real = t / grid.dt();
  const long k = std::lround(k_real);
  if (k < 0 || k > grid.n_steps() || std::abs(k_real - static_cast<double>(k)) > 1e-6)
    throw ConfigError("config: time " + format_double(t) + " is not a point of the control grid");
  return static_cast<int>(k);
}

std::string tag(int mode, int step) {
  return "m" + std::to_string(mode + 1) + "_k" + std::to_string(step);
}

WignerOptions wigner_options(const WignerSection& w) {
  WignerOptions o;
  o.x_range = {w.x_min, w.x_max};
  o.p_range = {w.p_min, w.p_max};
  o.n_points = w.n_points;
  o.boundary_tolerance = -1.0;  // reported as a warning instead
  return o;
}

ojson wigner_record(const WignerGrid& g, const std::string& file) {
  Eigen::Index bi = 0, bj = 0;
  g.values.maxCoeff(&bi, &bj);
  return {{"file", file},
          {"mode", g.mode + 1},
          {"time", g.time},
          {"integral", g.integral()},
          {"peak_x", g.x_axis[static_cast<std::size_t>(bi)]},
          {"peak_p", g.p_axis[static_cast<std::size_t>(bj)]},
          {"peak_value", g.values(bi, bj)},
          {"boundary_ratio", g.boundary_ratio}};
}

void emit_wigner(const DensityMatrix& reduced, const WignerSection& section, int mode, double time,
                 const std::string& name, const std::filesystem::path& out_dir, RunSummary& summary,
                 ojson& records) {
  const WignerGrid g = wigner(reduced, wigner_options(section), mode, time);
  if (g.boundary_ratio > kWignerBoundaryLimit)
    summary.warnings.push_back(name + ": Wigner grid too small, boundary |W| is " +
                               format_double(g.boundary_ratio) + " of the peak");
  write_wigner(out_dir / (name + ".csv"), g, name);
  summary.manifest.push_back(name + ".csv");
  summary.manifest.push_back(name + ".json");
  records.push_back(wigner_record(g, name + ".csv"));
}

struct ClosedDiagnostics {
  double norm_drift = 0.0;
  double excitation_drift = 0.0;
  double max_leakage = 0.0;
};

ClosedDiagnostics check_closed(const Trajectory& traj) {
  const OperatorMatrix n_tot = total_number(traj.space);
  const CVector& psi0 = traj.states.front();
  const double n0 = psi0.dot(n_tot.apply(psi0)).real();
  ClosedDiagnostics d;
  for (const CVector& psi : traj.states) {
    d.norm_drift = std::max(d.norm_drift, std::abs(psi.norm() - 1.0));
    d.excitation_drift = std::max(d.excitation_drift, std::abs(psi.dot(n_tot.apply(psi)).real() - n0));
    d.max_leakage = std::max(d.max_leakage, leakage(StateVector::normalized(traj.space, psi), 2));
  }
  if (d.norm_drift > kConservationLimit || d.excitation_drift > kConservationLimit) {
    std::ostringstream msg;
    msg << "closed propagation: norm drift " << d.norm_drift << ", excitation drift "
        << d.excitation_drift << " (limit " << kConservationLimit << ")";
    throw InvariantViolation(msg.str());
  }
  return d;
}

OpenOptions open_options(const BathSection& bath) {
  OpenOptions o;
  o.substeps = bath.substeps;
  o.obar_micro_steps = bath.obar_micro_steps;
  return o;
}

}  // namespace

// ---------------------------------------------------------------------------

void ExperimentConfig::resolve() {
  if (krotov.guess.empty()) krotov.guess = default_guess(chain.n_sites);
  if (sweep) {
    if (sweep->lambda_grid.empty()) sweep->lambda_grid = linspace(0.0, 0.3, 13);
    if (sweep->gamma_grid.empty()) sweep->gamma_grid = linspace(0.2, 5.0, 13);
  }
  if (wigner.times.empty()) wigner.times = {0.0, 0.5 * scenario.t_final, scenario.t_final};
  if (wigner.modes.empty())
    for (int j = 1; j <= chain.n_sites; ++j) wigner.modes.push_back(j);
}

void ExperimentConfig::validate() const {
  const int n = chain.n_sites;
  require(n >= 1, "chain.n_sites must be >= 1");
  require(static_cast<int>(chain.omega0.size()) == n, "chain.omega0 needs n_sites entries");
  require(static_cast<int>(chain.k0.size()) == n - 1, "chain.k0 needs n_sites - 1 entries");
  require(finite_all(chain.omega0) && finite_all(chain.k0), "chain parameters must be finite");
  for (double w : chain.omega0) require(w > 0.0, "chain.omega0 entries must be positive");
  require(chain.cutoff >= 2, "chain.cutoff must be >= 2");
  if (chain.open_excitation_cap) require(*chain.open_excitation_cap >= 1, "chain.open_excitation_cap must be >= 1");

  require(std::isfinite(scenario.alpha), "scenario.alpha must be finite");
  require(std::isfinite(scenario.theta_target_degrees), "scenario.theta_target_degrees must be finite");
  require(scenario.t_final > 0.0 && std::isfinite(scenario.t_final), "scenario.T must be positive");
  require(scenario.n_steps >= 1, "scenario.n_steps must be >= 1");

  const std::size_t n_controls = static_cast<std::size_t>(2 * n - 1);
  require(krotov.lambda_a.size() == 1 || krotov.lambda_a.size() == n_controls,
          "krotov.lambda_a needs 1 or 2 n_sites - 1 entries");
  for (double l : krotov.lambda_a) require(l > 0.0 && std::isfinite(l), "krotov.lambda_a must be positive");
  require(krotov.ramp_fraction >= 0.0 && krotov.ramp_fraction <= 0.5, "krotov.ramp_fraction must be in [0, 0.5]");
  require(krotov.goal > 0.0 && krotov.goal <= 1.0, "krotov.goal must be in (0, 1]");
  require(krotov.max_iters >= 1, "krotov.max_iters must be >= 1");
  require(krotov.guess.empty() || krotov.guess.size() == n_controls,
          "krotov.guess needs one entry per control");
  for (const auto& g : krotov.guess)
    require(std::isfinite(g.value) && std::isfinite(g.amplitude) && std::isfinite(g.phase) &&
                (!g.frequency || std::isfinite(*g.frequency)),
            "krotov.guess values must be finite");

  if (bath) {
    require(bath->lambda >= 0.0 && std::isfinite(bath->lambda), "bath.lambda must be >= 0");
    require(bath->gamma > 0.0 && std::isfinite(bath->gamma), "bath.gamma must be > 0");
    require(bath->substeps >= 1 && bath->obar_micro_steps >= 1, "bath step counts must be >= 1");
  }
  if (sweep) {
    require(sweep->substeps >= 1, "sweep.substeps must be >= 1");
    require(std::isfinite(sweep->threshold), "sweep.threshold must be finite");
    for (double l : sweep->lambda_grid) require(l >= 0.0 && std::isfinite(l), "sweep.lambda_grid must be >= 0");
    for (double g : sweep->gamma_grid) require(g > 0.0 && std::isfinite(g), "sweep.gamma_grid must be > 0");
  }
  require(wigner.n_points >= 2, "wigner.n_points must be >= 2");
  require(wigner.x_max > wigner.x_min && wigner.p_max > wigner.p_min, "wigner ranges must be non-empty");
  for (int m : wigner.modes) require(m >= 1 && m <= n, "wigner.modes must be in 1..n_sites");
  for (double t : wigner.times)
    require(t >= 0.0 && t <= scenario.t_final * (1.0 + 1e-12), "wigner.times must be in [0, T]");
}

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig c;
  Section root(doc, "config", {"chain", "scenario", "krotov", "bath", "sweep", "outputs", "wigner", "seed"});
  if (root.has("chain")) {
    Section s(root.at("chain"), "chain", {"n_sites", "omega0", "k0", "cutoff", "open_excitation_cap"});
    s.get("n_sites", c.chain.n_sites);
    // Per-site vectors default to the uniform chain of the requested length.
    c.chain.omega0.assign(static_cast<std::size_t>(std::max(c.chain.n_sites, 0)), 1.0);
    c.chain.k0.assign(static_cast<std::size_t>(std::max(c.chain.n_sites - 1, 0)), 0.3);
    s.get("omega0", c.chain.omega0);
    s.get("k0", c.chain.k0);
    s.get("cutoff", c.chain.cutoff);
    s.get("open_excitation_cap", c.chain.open_excitation_cap);
  }
  if (root.has("scenario")) {
    Section s(root.at("scenario"), "scenario", {"alpha", "theta_target_degrees", "T", "n_steps"});
    s.get("alpha", c.scenario.alpha);
    s.get("theta_target_degrees", c.scenario.theta_target_degrees);
    s.get("T", c.scenario.t_final);
    s.get("n_steps", c.scenario.n_steps);
  }
  if (root.has("krotov")) {
    Section s(root.at("krotov"), "krotov", {"lambda_a", "ramp_fraction", "goal", "max_iters", "guess"});
    if (s.has("lambda_a") && s.at("lambda_a").is_number()) {
      double l = 0.0;
      s.get("lambda_a", l);
      c.krotov.lambda_a = {l};
    } else {
      s.get("lambda_a", c.krotov.lambda_a);
    }
    s.get("ramp_fraction", c.krotov.ramp_fraction);
    s.get("goal", c.krotov.goal);
    s.get("max_iters", c.krotov.max_iters);
    if (s.has("guess")) {
      const json& g = s.at("guess");
      if (g.is_string() && g.get<std::string>() == "default") {
        c.krotov.guess.clear();
      } else if (g.is_array()) {
        for (std::size_t i = 0; i < g.size(); ++i) c.krotov.guess.push_back(parse_guess(g[i], i));
      } else {
        throw ConfigError("config: krotov.guess must be \"default\" or a list");
      }
    }
  }
  if (root.has("bath") && !root.at("bath").is_null()) {
    Section s(root.at("bath"), "bath", {"lambda", "gamma", "substeps", "obar_micro_steps"});
    BathSection b;
    s.get("lambda", b.lambda);
    s.get("gamma", b.gamma);
    s.get("substeps", b.substeps);
    s.get("obar_micro_steps", b.obar_micro_steps);
    c.bath = b;
  }
  if (root.has("sweep") && !root.at("sweep").is_null()) {
    Section s(root.at("sweep"), "sweep", {"lambda_grid", "gamma_grid", "threshold", "substeps"});
    SweepConfig w;
    s.get("lambda_grid", w.lambda_grid);
    s.get("gamma_grid", w.gamma_grid);
    s.get("threshold", w.threshold);
    s.get("substeps", w.substeps);
    c.sweep = w;
  }
  if (root.has("outputs")) {
    Section s(root.at("outputs"), "outputs", {"directory", "populations", "wigner_snapshots"});
    s.get("directory", c.outputs.directory);
    s.get("populations", c.outputs.populations);
    s.get("wigner_snapshots", c.outputs.wigner_snapshots);
  }
  if (root.has("wigner")) {
    Section s(root.at("wigner"), "wigner",
              {"times", "modes", "x_range", "p_range", "n_points", "density_file"});
    s.get("times", c.wigner.times);
    s.get("modes", c.wigner.modes);
    std::vector<double> xr, pr;
    s.get("x_range", xr);
    s.get("p_range", pr);
    if (!xr.empty()) {
      require(xr.size() == 2, "wigner.x_range needs 2 entries");
      c.wigner.x_min = xr[0];
      c.wigner.x_max = xr[1];
    }
    if (!pr.empty()) {
      require(pr.size() == 2, "wigner.p_range needs 2 entries");
      c.wigner.p_min = pr[0];
      c.wigner.p_max = pr[1];
    }
    s.get("n_points", c.wigner.n_points);
    s.get("density_file", c.wigner.density_file);
  }
  root.get("seed", c.seed);
  c.resolve();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

ojson to_json(const ExperimentConfig& c) {
  ojson j;
  j["chain"] = {{"n_sites", c.chain.n_sites},
                {"omega0", c.chain.omega0},
                {"k0", c.chain.k0},
                {"cutoff", c.chain.cutoff},
                {"open_excitation_cap", c.chain.open_excitation_cap.value_or(c.chain.cutoff - 1)}};
  j["scenario"] = {{"alpha", c.scenario.alpha},
                   {"theta_target_degrees", c.scenario.theta_target_degrees},
                   {"T", c.scenario.t_final},
                   {"n_steps", c.scenario.n_steps}};
  ojson guess = ojson::array();
  for (const auto& g : c.krotov.guess) guess.push_back(guess_to_json(g));
  j["krotov"] = {{"lambda_a", c.krotov.lambda_a},
                 {"ramp_fraction", c.krotov.ramp_fraction},
                 {"goal", c.krotov.goal},
                 {"max_iters", c.krotov.max_iters},
                 {"guess", guess}};
  if (c.bath)
    j["bath"] = {{"lambda", c.bath->lambda},
                 {"gamma", c.bath->gamma},
                 {"substeps", c.bath->substeps},
                 {"obar_micro_steps", c.bath->obar_micro_steps}};
  else
    j["bath"] = nullptr;
  if (c.sweep)
    j["sweep"] = {{"lambda_grid", c.sweep->lambda_grid},
                  {"gamma_grid", c.sweep->gamma_grid},
                  {"threshold", c.sweep->threshold},
                  {"substeps", c.sweep->substeps}};
  else
    j["sweep"] = nullptr;
  j["outputs"] = {{"directory", c.outputs.directory},
                  {"populations", c.outputs.populations},
                  {"wigner_snapshots", c.outputs.wigner_snapshots}};
  j["wigner"] = {{"times", c.wigner.times},
                 {"modes", c.wigner.modes},
                 {"x_range", {c.wigner.x_min, c.wigner.x_max}},
                 {"p_range", {c.wigner.p_min, c.wigner.p_max}},
                 {"n_points", c.wigner.n_points},
                 {"density_file", c.wigner.density_file}};
  j["seed"] = c.seed;
  return j;
}

// ---------------------------------------------------------------------------

namespace {

ChainModel make_chain(const ExperimentConfig& c) {
  return ChainModel(c.chain.omega0, c.chain.k0, c.chain.cutoff);
}

}  // namespace

Scenario::Scenario(const ExperimentConfig& config)
    : chain(make_chain(config)),
      hamiltonian(chain),
      initial(scenario_states(chain, config.scenario.alpha,
                              config.scenario.theta_target_degrees * std::numbers::pi / 180.0).first),
      target(scenario_states(chain, config.scenario.alpha,
                             config.scenario.theta_target_degrees * std::numbers::pi / 180.0).second),
      grid(config.scenario.t_final, config.scenario.n_steps),
      labels(control_labels(config.chain.n_sites)),
      config_(config) {}

FockSpace Scenario::open_space() const {
  return catchain::open_space(chain.space(), config_.chain.open_excitation_cap);
}

KrotovConfig Scenario::krotov_config() const {
  KrotovConfig k;
  k.lambda_a = config_.krotov.lambda_a;
  k.shape.ramp_fraction = config_.krotov.ramp_fraction;
  k.goal = config_.krotov.goal;
  k.max_iters = config_.krotov.max_iters;
  return k;
}

ControlSet Scenario::guess() const {
  const auto spec = config_.krotov.guess.empty() ? default_guess(chain.n_sites()) : config_.krotov.guess;
  return make_guess(spec, grid, labels, config_.seed);
}

ojson RunSummary::to_json() const {
  ojson j;
  j["command"] = command;
  j["converged"] = converged;
  j["iterations"] = iterations;
  j["final_jt"] = final_jt ? ojson(*final_jt) : ojson(nullptr);
  j["closed_delta_f"] = closed_delta_f ? ojson(*closed_delta_f) : ojson(nullptr);
  j["open_delta_f"] = open_delta_f ? ojson(*open_delta_f) : ojson(nullptr);
  j["wall_time_s"] = wall_time_s;
  j["manifest"] = manifest;
  j["warnings"] = warnings;
  j["details"] = extra;
  j["config"] = config;
  return j;
}

// ---------------------------------------------------------------------------

namespace {

// Open-system final fidelity for one bath; the state and target are moved to the capped space.
OpenTrajectory open_run(const Scenario& sc, const ControlSet& controls, const BathSpec& bath,
                        OpenOptions options) {
  const FockSpace space = sc.open_space();
  options.target = restrict_to(sc.target, space);
  return propagate_open(sc.chain, controls, DensityMatrix::pure(restrict_to(sc.initial, space)), bath,
                        options);
}

ojson open_diagnostics(const OpenTrajectory& t) {
  return {{"dimension", t.space.dim()},
          {"max_trace_drift", t.max_trace_drift()},
          {"max_hermiticity_residue", t.max_hermiticity()},
          {"min_eigenvalue", t.min_eigenvalue}};
}

void warn_negativity(const OpenTrajectory& t, RunSummary& summary) {
  if (t.min_eigenvalue < -1e-6)
    summary.warnings.push_back("open state has eigenvalue " + format_double(t.min_eigenvalue));
}

}  // namespace

RunSummary run_optimize(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                        const Logger& log) {
  const auto t0 = Clock::now();
  const Scenario sc(config);
  RunSummary summary;
  summary.command = "optimize";
  summary.config = to_json(config);

  const OptimizeResult result = optimize(sc.hamiltonian, sc.guess(), sc.initial, sc.target,
                                         sc.krotov_config(), [&](const IterationRecord& r) {
                                           note(log, "iteration " + std::to_string(r.iteration) +
                                                         "  J_T = " + format_double(r.j_t));
                                         });
  summary.converged = result.converged;
  summary.iterations = result.history.back().iteration;
  summary.final_jt = result.history.back().j_t;

  const Trajectory traj = forward(sc.hamiltonian, result.controls, sc.initial);
  const ClosedDiagnostics diag = check_closed(traj);
  summary.closed_delta_f = 1.0 - fidelity_pure(traj.state(sc.grid.n_steps()), sc.target);
  summary.extra["norm_drift"] = diag.norm_drift;
  summary.extra["excitation_drift"] = diag.excitation_drift;
  summary.extra["max_leakage_top2"] = diag.max_leakage;

  write_controls_csv(out_dir / "controls.csv", result.controls);
  write_history_csv(out_dir / "history.csv", result.history);
  summary.manifest = {"controls.csv", "history.csv"};

  if (config.bath) {
    note(log, "open-system replay");
    const OpenTrajectory open = open_run(sc, result.controls, {config.bath->lambda, config.bath->gamma},
                                         open_options(*config.bath));
    summary.open_delta_f = 1.0 - open.fidelity.back();
    summary.extra["open"] = open_diagnostics(open);
    warn_negativity(open, summary);
  }
  if (!result.converged)
    summary.warnings.push_back("goal " + format_double(config.krotov.goal) + " not reached in " +
                               std::to_string(config.krotov.max_iters) + " iterations");
  summary.manifest.push_back("summary.json");
  summary.wall_time_s = seconds_since(t0);
  write_summary(summary, out_dir);
  return summary;
}

RunSummary run_propagate(const ExperimentConfig& config, const std::filesystem::path& controls_file,
                         const std::filesystem::path& out_dir, const Logger& log) {
  const auto t0 = Clock::now();
  const Scenario sc(config);
  RunSummary summary;
  summary.command = "propagate";
  summary.config = to_json(config);
  const ControlSet controls = read_controls_csv(controls_file, sc.grid, sc.labels);
  const int n = sc.chain.n_sites();
  const int nt = sc.grid.n_steps();

  std::vector<int> snapshot_steps;
  if (config.outputs.wigner_snapshots)
    for (double t : config.wigner.times) snapshot_steps.push_back(step_for_time(sc.grid, t));

  note(log, "closed propagation");
  const Trajectory traj = forward(sc.hamiltonian, controls, sc.initial);
  const ClosedDiagnostics diag = check_closed(traj);
  summary.closed_delta_f = 1.0 - fidelity_pure(traj.state(nt), sc.target);
  summary.final_jt = eval_JT(traj.states.back(), sc.target.amplitudes());
  summary.extra["norm_drift"] = diag.norm_drift;
  summary.extra["excitation_drift"] = diag.excitation_drift;
  summary.extra["max_leakage_top2"] = diag.max_leakage;

  std::vector<OperatorMatrix> numbers;
  for (int j = 0; j < n; ++j) numbers.push_back(number(sc.chain.space(), j));

  std::optional<OpenTrajectory> open;
  if (config.bath) {
    note(log, "open-system propagation");
    OpenOptions o = open_options(*config.bath);
    o.snapshot_steps = snapshot_steps;
    for (int j = 0; j < n; ++j) o.observables.push_back(number(sc.open_space(), j));
    open = open_run(sc, controls, {config.bath->lambda, config.bath->gamma}, o);
    summary.open_delta_f = 1.0 - open->fidelity.back();
    summary.extra["open"] = open_diagnostics(*open);
    warn_negativity(*open, summary);
  }

  CsvTable fid{{"t", "fidelity_closed"}, {}};
  if (open) fid.header.push_back("fidelity_open");
  for (int k = 0; k <= nt; ++k) {
    std::vector<double> row{sc.grid.time(k), fidelity_pure(traj.state(k), sc.target)};
    if (open) row.push_back(open->fidelity[static_cast<std::size_t>(k)]);
    fid.rows.push_back(std::move(row));
  }
  fid.write(out_dir / "fidelity.csv");
  summary.manifest.push_back("fidelity.csv");

  if (config.outputs.populations) {
    CsvTable pop{{"t"}, {}};
    for (int j = 1; j <= n; ++j) pop.header.push_back("n_" + std::to_string(j));
    pop.header.push_back("norm");
    if (open)
      for (int j = 1; j <= n; ++j) pop.header.push_back("open_n_" + std::to_string(j));
    for (int k = 0; k <= nt; ++k) {
      std::vector<double> row{sc.grid.time(k)};
      const CVector& psi = traj.states[static_cast<std::size_t>(k)];
      for (int j = 0; j < n; ++j) row.push_back(psi.dot(numbers[static_cast<std::size_t>(j)].apply(psi)).real());
      row.push_back(psi.norm());
      if (open)
        for (int j = 0; j < n; ++j)
          row.push_back(open->expectations[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]);
      pop.rows.push_back(std::move(row));
    }
    pop.write(out_dir / "populations.csv");
    summary.manifest.push_back("populations.csv");
  }

  ojson grids = ojson::array();
  for (int k : snapshot_steps) {
    for (int mode1 : config.wigner.modes) {
      const int mode = mode1 - 1;
      const double t = sc.grid.time(k);
      emit_wigner(partial_trace(traj.state(k), mode), config.wigner, mode, t,
                  "wigner_closed_" + tag(mode, k), out_dir, summary, grids);
      if (open)
        emit_wigner(partial_trace(open->snapshots.at(k), mode), config.wigner, mode, t,
                    "wigner_open_" + tag(mode, k), out_dir, summary, grids);
    }
  }
  summary.extra["wigner"] = grids;

  summary.manifest.push_back("summary.json");
  summary.wall_time_s = seconds_since(t0);
  write_summary(summary, out_dir);
  return summary;
}

std::vector<SweepPoint> sweep_fidelity(const Scenario& sc, const ControlSet& controls,
                                       const SweepConfig& sweep, int jobs,
                                       std::vector<std::string>* warnings) {
  std::vector<SweepPoint> points;
  for (double l : sweep.lambda_grid)
    for (double g : sweep.gamma_grid) points.push_back({l, g, kNaN});

  const FockSpace space = sc.open_space();
  const DensityMatrix rho0 = DensityMatrix::pure(restrict_to(sc.initial, space));
  OpenOptions options;
  options.substeps = sweep.substeps;
  options.target = restrict_to(sc.target, space);

  std::atomic<std::size_t> next{0};
  std::mutex warn_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      SweepPoint& p = points[i];
      try {
        const OpenTrajectory t = propagate_open(sc.chain, controls, rho0, {p.lambda, p.gamma}, options);
        p.final_fidelity = t.fidelity.back();
      } catch (const std::exception& e) {
        p.final_fidelity = kNaN;
        if (warnings) {
          const std::lock_guard<std::mutex> lock(warn_mutex);
          warnings->push_back("sweep point lambda = " + format_double(p.lambda) + ", gamma = " +
                              format_double(p.gamma) + " failed: " + e.what());
        }
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(points.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (warnings) std::sort(warnings->begin(), warnings->end());
  return points;
}

std::vector<ContourPoint> extract_contour(const std::vector<SweepPoint>& points, double threshold) {
  std::map<double, std::vector<std::pair<double, double>>> columns;  // gamma -> (lambda, F)
  for (const auto& p : points) columns[p.gamma].emplace_back(p.lambda, p.final_fidelity);
  std::vector<ContourPoint> out;
  for (auto& [gamma, col] : columns) {
    std::sort(col.begin(), col.end());
    ContourPoint c{gamma, kNaN, 0};
    for (std::size_t i = 0; i + 1 < col.size(); ++i) {
      const auto [l0, f0] = col[i];
      const auto [l1, f1] = col[i + 1];
      if (std::isnan(f0) || std::isnan(f1)) continue;
      if ((f0 >= threshold) == (f1 >= threshold)) continue;
      ++c.crossings;
      if (c.crossings == 1) c.lambda = l0 + (threshold - f0) * (l1 - l0) / (f1 - f0);
    }
    out.push_back(c);
  }
  return out;
}

RunSummary run_sweep(const ExperimentConfig& config,
                     const std::optional<std::filesystem::path>& controls_file,
                     const std::filesystem::path& out_dir, int jobs, const Logger& log) {
  const auto t0 = Clock::now();
  if (!config.sweep) throw ConfigError("config: the sweep subcommand needs a 'sweep' section");
  if (jobs < 1) throw ConfigError("--jobs must be >= 1");
  const Scenario sc(config);
  RunSummary summary;
  summary.command = "sweep";
  summary.config = to_json(config);

  std::optional<ControlSet> controls;
  if (controls_file) {
    controls = read_controls_csv(*controls_file, sc.grid, sc.labels);
  } else {
    note(log, "no controls file given; optimizing first");
    OptimizeResult r = optimize(sc.hamiltonian, sc.guess(), sc.initial, sc.target, sc.krotov_config());
    summary.iterations = r.history.back().iteration;
    summary.final_jt = r.history.back().j_t;
    summary.converged = r.converged;
    controls = std::move(r.controls);
    write_controls_csv(out_dir / "controls.csv", *controls);
    summary.manifest.push_back("controls.csv");
  }

  note(log, "sweeping " + std::to_string(config.sweep->lambda_grid.size() * config.sweep->gamma_grid.size()) +
                " points on " + std::to_string(jobs) + " worker(s)");
  std::vector<SweepPoint> points = sweep_fidelity(sc, *controls, *config.sweep, jobs, &summary.warnings);
  std::sort(points.begin(), points.end(), [](const SweepPoint& a, const SweepPoint& b) {
    return std::tie(a.lambda, a.gamma) < std::tie(b.lambda, b.gamma);
  });

  CsvTable grid{{"lambda", "gamma", "final_fidelity"}, {}};
  for (const auto& p : points) grid.rows.push_back({p.lambda, p.gamma, p.final_fidelity});
  grid.write(out_dir / "sweep.csv");

  const auto contour = extract_contour(points, config.sweep->threshold);
  CsvTable level{{"gamma", "lambda", "crossings"}, {}};
  bool single_valued = true;
  for (const auto& c : contour) {
    level.rows.push_back({c.gamma, c.lambda, static_cast<double>(c.crossings)});
    single_valued = single_valued && c.crossings <= 1;
  }
  level.write(out_dir / "contour.csv");
  summary.manifest.push_back("sweep.csv");
  summary.manifest.push_back("contour.csv");
  summary.extra["points"] = points.size();
  summary.extra["failed_points"] = std::count_if(points.begin(), points.end(),
                                                 [](const SweepPoint& p) { return std::isnan(p.final_fidelity); });
  summary.extra["contour_single_valued"] = single_valued;
  summary.extra["jobs"] = jobs;

  summary.manifest.push_back("summary.json");
  summary.wall_time_s = seconds_since(t0);
  write_summary(summary, out_dir);
  return summary;
}

RunSummary run_wigner(const ExperimentConfig& config,
                      const std::optional<std::filesystem::path>& controls_file,
                      const std::filesystem::path& out_dir, const Logger& log) {
  const auto t0 = Clock::now();
  RunSummary summary;
  summary.command = "wigner";
  summary.config = to_json(config);
  ojson grids = ojson::array();

  if (!config.wigner.density_file.empty()) {
    note(log, "Wigner grid of " + config.wigner.density_file);
    const DensityMatrix rho = read_density_csv(config.wigner.density_file);
    emit_wigner(rho, config.wigner, 0, 0.0, "wigner_density", out_dir, summary, grids);
  } else {
    const Scenario sc(config);
    std::vector<int> steps;
    for (double t : config.wigner.times) steps.push_back(step_for_time(sc.grid, t));
    std::optional<Trajectory> traj;
    if (controls_file) {
      traj = forward(sc.hamiltonian, read_controls_csv(*controls_file, sc.grid, sc.labels), sc.initial);
    } else if (std::any_of(steps.begin(), steps.end(), [](int k) { return k != 0; })) {
      throw ConfigError("wigner: times after 0 need --controls or wigner.density_file");
    }
    for (int k : steps) {
      const StateVector psi = traj ? traj->state(k) : sc.initial;
      for (int mode1 : config.wigner.modes) {
        const int mode = mode1 - 1;
        emit_wigner(partial_trace(psi, mode), config.wigner, mode, sc.grid.time(k),
                    "wigner_closed_" + tag(mode, k), out_dir, summary, grids);
      }
    }
  }
  summary.extra["wigner"] = grids;
  summary.manifest.push_back("summary.json");
  summary.wall_time_s = seconds_since(t0);
  write_summary(summary, out_dir);
  return summary;
}

}  // namespace catchain
