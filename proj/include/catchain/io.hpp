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

// CSV and JSON artifact writers. Every CSV has a header row and prints
// doubles with 17 significant digits.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "catchain/krotov.hpp"
#include "catchain/observables.hpp"
#include "catchain/propagate.hpp"

namespace catchain {

std::string format_double(double v);

// Minimal CSV table: named columns of doubles, written row by row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void write(const std::filesystem::path& path) const;
};

// Header `t,<label>...`, one row per interval (t is its left endpoint).
void write_controls_csv(const std::filesystem::path& path, const ControlSet& controls);

// Validates the header against `labels` and the row count against grid.n_steps();
// throws ConfigError naming the expected and found values.
ControlSet read_controls_csv(const std::filesystem::path& path, const TimeGrid& grid,
                             const std::vector<std::string>& labels);

// `iteration,J_T,running_cost`
void write_history_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& history);

// `x,p,W` rows (x outer) plus a JSON sidecar next to it.
void write_wigner(const std::filesystem::path& csv_path, const WignerGrid& grid,
                  const std::string& source);

// Single-mode density matrix as `m,n,re,im` rows.
void write_density_csv(const std::filesystem::path& path, const DensityMatrix& rho);
// Reads a single-mode density matrix written by write_density_csv.
DensityMatrix read_density_csv(const std::filesystem::path& path);

}  // namespace catchain
