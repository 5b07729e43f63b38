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

// Config-driven runs behind the command-line tool. A single JSON document
// configures every subcommand; see README.md for the schema.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "catchain/krotov.hpp"
#include "catchain/model.hpp"
#include "catchain/open_system.hpp"
#include "catchain/propagate.hpp"

namespace catchain {

struct ChainConfig {
  int n_sites = 3;
  std::vector<double> omega0{1.0, 1.0, 1.0};
  std::vector<double> k0{0.3, 0.3};
  int cutoff = 10;
  // Total-excitation cap for density-matrix runs; nullopt means cutoff - 1.
  std::optional<int> open_excitation_cap;
};

struct ScenarioConfig {
  double alpha = 1.0;
  double theta_target_degrees = 90.0;
  double t_final = 5.0;
  int n_steps = 500;
};

struct KrotovSection {
  std::vector<double> lambda_a{KrotovConfig::kDefaultLambda};
  double ramp_fraction = 0.05;
  double goal = 1e-7;
  int max_iters = 200;
  std::vector<GuessSpec> guess;  // empty means default_guess(n_sites)
};

struct BathSection {
  double lambda = 0.1;
  double gamma = 1.8;
  int substeps = 4;
  int obar_micro_steps = 4;
};

struct SweepConfig {
  std::vector<double> lambda_grid;  // default: 13 points on [0, 0.3]
  std::vector<double> gamma_grid;   // default: 13 points on [0.2, 5]
  double threshold = 0.9;
  int substeps = 4;
};

struct OutputsConfig {
  std::string directory = "out";
  bool populations = true;
  bool wigner_snapshots = true;
};

struct WignerSection {
  std::vector<double> times;  // default: 0, T/2, T
  std::vector<int> modes;     // 1-based; default: all sites
  double x_min = -5.0, x_max = 5.0, p_min = -5.0, p_max = 5.0;
  int n_points = 201;
  std::string density_file;   // optional serialized single-mode state
};

struct ExperimentConfig {
  ChainConfig chain;
  ScenarioConfig scenario;
  KrotovSection krotov;
  std::optional<BathSection> bath;
  std::optional<SweepConfig> sweep;
  OutputsConfig outputs;
  WignerSection wigner;
  std::uint64_t seed = 0;

  // Fills defaults that depend on other fields (grids, times, modes, guess).
  void resolve();
  // Throws ConfigError.
  void validate() const;
};

// Unknown keys and wrong types raise ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const ExperimentConfig& config);

// Objects derived from a resolved config.
struct Scenario {
  ChainModel chain;
  ControlledHamiltonian hamiltonian;
  StateVector initial;
  StateVector target;
  TimeGrid grid;
  std::vector<std::string> labels;

  explicit Scenario(const ExperimentConfig& config);
  FockSpace open_space() const;
  KrotovConfig krotov_config() const;
  ControlSet guess() const;

 private:
  ExperimentConfig config_;
};

struct RunSummary {
  std::string command;
  nlohmann::ordered_json config;
  bool converged = true;
  int iterations = 0;
  std::optional<double> final_jt;
  std::optional<double> closed_delta_f;
  std::optional<double> open_delta_f;
  double wall_time_s = 0.0;
  std::vector<std::string> manifest;  // relative to the output directory
  std::vector<std::string> warnings;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  nlohmann::ordered_json to_json() const;
};

using Logger = std::function<void(const std::string&)>;

// Writes controls.csv, history.csv and summary.json. converged reports whether
// the goal was met.
RunSummary run_optimize(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                        const Logger& log = {});

// Replays a controls file: fidelity.csv (closed and, with a bath, open),
// populations.csv and Wigner snapshots at wigner.times.
RunSummary run_propagate(const ExperimentConfig& config, const std::filesystem::path& controls_file,
                         const std::filesystem::path& out_dir, const Logger& log = {});

// One open-system final fidelity per (lambda, gamma) point on `jobs` workers:
// sweep.csv and contour.csv. Without a controls file the controls are
// optimized first. Failed points are recorded as NaN with a warning.
RunSummary run_sweep(const ExperimentConfig& config,
                     const std::optional<std::filesystem::path>& controls_file,
                     const std::filesystem::path& out_dir, int jobs, const Logger& log = {});

// Wigner grids for wigner.modes at wigner.times (from controls, or the
// initial state when only t = 0 is requested), or for wigner.density_file.
RunSummary run_wigner(const ExperimentConfig& config,
                      const std::optional<std::filesystem::path>& controls_file,
                      const std::filesystem::path& out_dir, const Logger& log = {});

struct SweepPoint {
  double lambda = 0.0;
  double gamma = 0.0;
  double final_fidelity = 0.0;
};

// Final open-system fidelity at every grid point; NaN where a point failed.
std::vector<SweepPoint> sweep_fidelity(const Scenario& scenario, const ControlSet& controls,
                                       const SweepConfig& sweep, int jobs,
                                       std::vector<std::string>* warnings = nullptr);

struct ContourPoint {
  double gamma = 0.0;
  double lambda = 0.0;  // NaN when the column never crosses
  int crossings = 0;
};

// Level set F = threshold by linear interpolation in lambda along each gamma
// column. Points must cover the full lambda x gamma grid.
std::vector<ContourPoint> extract_contour(const std::vector<SweepPoint>& points, double threshold);

}  // namespace catchain
