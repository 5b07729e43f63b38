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

#include <span>
#include <string>
#include <vector>

#include "catchain/fock.hpp"
#include "catchain/model.hpp"

namespace catchain {

// Uniform grid t_k = k dt, k = 0..n_steps. Controls live on [t_k, t_{k+1}).
class TimeGrid {
 public:
  TimeGrid(double t_final, int n_steps);

  double t_final() const noexcept { return t_final_; }
  int n_steps() const noexcept { return n_steps_; }
  double dt() const noexcept { return t_final_ / n_steps_; }
  double time(int k) const noexcept { return k * dt(); }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double t_final_;
  int n_steps_;
};

// Piecewise-constant control values, one column per interval. Values are
// deviations from the static chain parameters.
class ControlSet {
 public:
  ControlSet(TimeGrid grid, std::vector<std::string> labels, Eigen::MatrixXd values);
  static ControlSet zeros(TimeGrid grid, std::vector<std::string> labels);

  const TimeGrid& grid() const noexcept { return grid_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  std::size_t n_controls() const noexcept { return labels_.size(); }

  // All control values on interval k.
  std::span<const double> interval(int k) const;
  double value(std::size_t l, int k) const { return values_(static_cast<Eigen::Index>(l), k); }
  void set_value(std::size_t l, int k, double v);

 private:
  TimeGrid grid_;
  std::vector<std::string> labels_;
  Eigen::MatrixXd values_;
};

// States at the n_steps + 1 grid points.
struct Trajectory {
  TimeGrid grid;
  FockSpace space;
  std::vector<CVector> states;

  StateVector state(int k) const { return StateVector::normalized(space, states[static_cast<std::size_t>(k)]); }
};

// exp(-i H dt) psi by a scaled Taylor series, truncated at machine precision.
// H must be Hermitian; dt may be negative.
CVector expmv(const SparseOp& h, double dt, const CVector& psi);

// Throws std::invalid_argument if H is not tagged Hermitian.
StateVector step(const OperatorMatrix& h, double dt, const StateVector& psi);

Trajectory forward(const ControlledHamiltonian& ham, const ControlSet& controls,
                   const StateVector& psi0);
Trajectory forward(const OperatorMatrix& h0, const ControlLayout& layout,
                   const ControlSet& controls, const StateVector& psi0);

// chi_T need not be normalized; its norm is carried through unchanged.
Trajectory backward(const ControlledHamiltonian& ham, const ControlSet& controls,
                    const CVector& chi_T);
Trajectory backward(const OperatorMatrix& h0, const ControlLayout& layout,
                    const ControlSet& controls, const CVector& chi_T);

// Only the final state, without storing the trajectory.
CVector propagate_final(const ControlledHamiltonian& ham, const ControlSet& controls,
                        const CVector& psi0);

}  // namespace catchain
