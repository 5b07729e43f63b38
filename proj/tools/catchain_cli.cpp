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

// catchain optimize|propagate|sweep|wigner --config <path> [--controls <path>]
//          [--out <dir>] [--jobs <n>]
//
// Exit codes: 0 success, 1 other failure, 2 optimization goal not met,
// 3 invariant violation, 4 configuration error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "catchain/errors.hpp"
#include "catchain/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kNotConverged = 2, kInvariant = 3, kConfig = 4 };

void print_summary(const catchain::RunSummary& s) {
  std::cout << s.command << ": wrote " << s.manifest.size() << " file(s)";
  if (s.final_jt) std::cout << ", J_T = " << *s.final_jt;
  if (s.closed_delta_f) std::cout << ", closed dF = " << *s.closed_delta_f;
  if (s.open_delta_f) std::cout << ", open dF = " << *s.open_delta_f;
  std::cout << " (" << s.wall_time_s << " s)\n";
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal cat-state transfer along a bosonic chain"};
  app.require_subcommand(1);

  std::string config_path;
  std::string controls_path;
  std::string out_dir;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  bool quiet = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (default: outputs.directory)");
    sub->add_flag("--quiet", quiet, "Suppress progress messages");
  };
  CLI::App* optimize = app.add_subcommand("optimize", "Krotov optimization of the transfer controls");
  add_common(optimize);
  CLI::App* propagate = app.add_subcommand("propagate", "Replay controls, closed and open system");
  add_common(propagate);
  propagate->add_option("--controls", controls_path, "Controls CSV")->required()->check(CLI::ExistingFile);
  CLI::App* sweep = app.add_subcommand("sweep", "Open-system fidelity over a (lambda, gamma) grid");
  add_common(sweep);
  sweep->add_option("--controls", controls_path, "Controls CSV (optimized first when absent)")
      ->check(CLI::ExistingFile);
  sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  CLI::App* wigner = app.add_subcommand("wigner", "Single-mode Wigner grids");
  add_common(wigner);
  wigner->add_option("--controls", controls_path, "Controls CSV")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  const catchain::Logger log = [&](const std::string& msg) {
    if (!quiet) std::cerr << msg << '\n';
  };
  const std::optional<std::filesystem::path> controls =
      controls_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(controls_path);

  try {
    const catchain::ExperimentConfig config = catchain::load_config(config_path);
    const std::filesystem::path out = out_dir.empty() ? config.outputs.directory : out_dir;
    catchain::RunSummary summary;
    if (*optimize) summary = catchain::run_optimize(config, out, log);
    else if (*propagate) summary = catchain::run_propagate(config, *controls, out, log);
    else if (*sweep) summary = catchain::run_sweep(config, controls, out, jobs, log);
    else summary = catchain::run_wigner(config, controls, out, log);
    print_summary(summary);
    return summary.converged ? kOk : kNotConverged;
  } catch (const catchain::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const catchain::SizingError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const catchain::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  } catch (const catchain::DegenerateStart& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
