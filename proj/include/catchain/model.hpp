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

// Controlled harmonic-oscillator chain in the rotating-wave form
//
//     H(t) = sum_j (omega_j0 + eps_j(t)) n_j
//          + sum_j (k_j0 + eps_{N+j}(t)) (a_j^dagger a_{j+1} + h.c.)
//
// written as H0 + sum_l eps_l H_l. Control values are deviations from the
// static frequencies and couplings.

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "catchain/fock.hpp"

namespace catchain {

class ChainModel {
 public:
  ChainModel(std::vector<double> omega0, std::vector<double> k0, FockSpace space);
  // Full tensor-product space with the given per-mode cutoff.
  ChainModel(std::vector<double> omega0, std::vector<double> k0, int cutoff);

  int n_sites() const noexcept { return static_cast<int>(omega0_.size()); }
  const std::vector<double>& omega0() const noexcept { return omega0_; }
  const std::vector<double>& k0() const noexcept { return k0_; }
  const FockSpace& space() const noexcept { return space_; }

  // Same chain parameters on another space over the same modes.
  ChainModel on_space(FockSpace space) const;

 private:
  std::vector<double> omega0_;
  std::vector<double> k0_;
  FockSpace space_;
};

struct ControlLayout {
  std::vector<std::string> labels;      // omega_1..omega_N, k_1..k_{N-1}
  std::vector<OperatorMatrix> operators;

  std::size_t size() const noexcept { return operators.size(); }
};

OperatorMatrix build_static(const ChainModel& chain);
ControlLayout build_controls(const ChainModel& chain);
std::vector<std::string> control_labels(int n_sites);

// H0 + sum_l eps_l H_l.
OperatorMatrix assemble(const OperatorMatrix& h0, const ControlLayout& layout,
                        std::span<const double> eps);

// Initial cat on site 1 and target cat(alpha e^{i theta}) on site N, vacuum elsewhere.
std::pair<StateVector, StateVector> scenario_states(const ChainModel& chain, cplx alpha,
                                                    double theta_target);

// N x N single-particle matrix h with H = sum_ij h_ij a_i^dagger a_j for the given controls.
Eigen::MatrixXd single_particle_matrix(const ChainModel& chain, std::span<const double> eps);

// H0 and the H_l merged onto one sparsity pattern so H(eps) can be formed or
// applied without sparse additions. Immutable after construction.
class ControlledHamiltonian {
 public:
  ControlledHamiltonian(const OperatorMatrix& h0, const ControlLayout& layout);
  explicit ControlledHamiltonian(const ChainModel& chain);

  std::size_t n_controls() const noexcept { return term_values_.size(); }
  const FockSpace& space() const noexcept { return space_; }
  const SparseOp& control_operator(std::size_t l) const { return controls_[l]; }

  // H(eps) on the merged pattern.
  SparseOp assemble(std::span<const double> eps) const;

 private:
  FockSpace space_;
  SparseOp pattern_;
  std::vector<cplx> static_values_;
  std::vector<std::vector<cplx>> term_values_;
  std::vector<SparseOp> controls_;
};

}  // namespace catchain
