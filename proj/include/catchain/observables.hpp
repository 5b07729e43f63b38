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

#pragma once

#include <utility>
#include <vector>

#include "catchain/fock.hpp"

namespace catchain {

// Eigenvalues below this are treated as round-off and clipped before square roots.
inline constexpr double kNegativityClip = -1e-3;

// Uhlmann fidelity [tr sqrt(sqrt(rho) sigma sqrt(rho))]^2, computed as the
// squared nuclear norm of sqrt(rho) sqrt(sigma). Eigenvalues in
// [kNegativityClip, 0) are clipped and each state renormalized; anything more
// negative throws InvariantViolation.
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

// <psi|rho|psi>, the Uhlmann fidelity when one argument is pure.
double fidelity(const DensityMatrix& rho, const StateVector& psi);

// |<psi|phi>|^2
double fidelity_pure(const StateVector& psi, const StateVector& phi);

// Phase-space convention: x = (a + a^dagger)/sqrt(2), p = (a - a^dagger)/(i sqrt(2)),
// normalized to unit integral. values(i, j) = W(x_axis[i], p_axis[j]).
struct WignerGrid {
  std::vector<double> x_axis;
  std::vector<double> p_axis;
  Eigen::MatrixXd values;
  int mode = 0;
  double time = 0.0;
  double max_imaginary = 0.0;   // largest imaginary residue before it was dropped
  double boundary_ratio = 0.0;  // max |W| on the grid edge over max |W|

  // Trapezoid rule over the grid.
  double integral() const;
  // Trapezoid integral over p at every x.
  std::vector<double> x_marginal() const;
};

struct WignerOptions {
  std::pair<double, double> x_range{-5.0, 5.0};
  std::pair<double, double> p_range{-5.0, 5.0};
  int n_points = 201;
  // Throw std::range_error if boundary_ratio exceeds this (negative disables).
  double boundary_tolerance = 1e-4;
};

// rho must be a single-mode density matrix.
WignerGrid wigner(const DensityMatrix& rho, const WignerOptions& options = {}, int mode = 0,
                  double time = 0.0);

// Single point, same convention.
double wigner_at(const DensityMatrix& rho, double x, double p);

// Population in basis states where some mode sits in one of its top
// `top_levels` Fock levels.
double leakage(const StateVector& psi, int top_levels);
double leakage(const DensityMatrix& rho, int top_levels);

}  // namespace catchain
