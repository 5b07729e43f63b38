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

#include "catchain/propagate.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace catchain {

TimeGrid::TimeGrid(double t_final, int n_steps) : t_final_(t_final), n_steps_(n_steps) {
  if (!(t_final > 0.0) || !std::isfinite(t_final))
    throw std::invalid_argument("TimeGrid: t_final must be positive");
  if (n_steps < 1) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
}

ControlSet::ControlSet(TimeGrid grid, std::vector<std::string> labels, Eigen::MatrixXd values)
    : grid_(grid), labels_(std::move(labels)), values_(std::move(values)) {
  if (values_.rows() != static_cast<Eigen::Index>(labels_.size()) ||
      values_.cols() != grid_.n_steps())
    throw std::invalid_argument("ControlSet: values must be n_controls x n_steps");
  if (!values_.allFinite()) throw std::invalid_argument("ControlSet: non-finite control value");
}

ControlSet ControlSet::zeros(TimeGrid grid, std::vector<std::string> labels) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), grid.n_steps());
  return ControlSet(grid, std::move(labels), std::move(v));
}

std::span<const double> ControlSet::interval(int k) const {
  if (k < 0 || k >= grid_.n_steps()) throw std::out_of_range("ControlSet: interval out of range");
  return {values_.col(k).data(), labels_.size()};
}

void ControlSet::set_value(std::size_t l, int k, double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("ControlSet: non-finite control value");
  values_(static_cast<Eigen::Index>(l), k) = v;
}

// ---------------------------------------------------------------------------

namespace {

double row_abs_sum_max(const SparseOp& h) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < h.outerSize(); ++r) {
    double s = 0.0;
    for (SparseOp::InnerIterator it(h, r); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

void check_layout(const ControlledHamiltonian& ham, const ControlSet& controls,
                  Eigen::Index state_size) {
  if (controls.n_controls() != ham.n_controls())
    throw std::invalid_argument("propagation: control count does not match the Hamiltonian");
  if (state_size != static_cast<Eigen::Index>(ham.space().dim()))
    throw std::invalid_argument("propagation: state dimension does not match the Hamiltonian");
}

}  // namespace

CVector expmv(const SparseOp& h, double dt, const CVector& psi) {
  if (dt == 0.0) return psi;
  const double bound = row_abs_sum_max(h) * std::abs(dt);
  const int substeps = std::max(1, static_cast<int>(std::ceil(bound)));
  const cplx factor(0.0, -dt / substeps);
  constexpr double eps = std::numeric_limits<double>::epsilon();

  CVector result = psi;
  CVector term(psi.size());
  for (int s = 0; s < substeps; ++s) {
    term = result;
    const double scale = result.norm();
    for (int k = 1; k < 80; ++k) {
      term = (factor / static_cast<double>(k)) * (h * term);
      result += term;
      if (term.norm() <= 0.5 * eps * scale) break;
    }
  }
  return result;
}

StateVector step(const OperatorMatrix& h, double dt, const StateVector& psi) {
  if (!h.hermitian()) throw std::invalid_argument("step: Hamiltonian must be Hermitian");
  if (!(h.space() == psi.space())) throw std::invalid_argument("step: space mismatch");
  return StateVector::normalized(psi.space(), expmv(h.entries(), dt, psi.amplitudes()));
}

Trajectory forward(const ControlledHamiltonian& ham, const ControlSet& controls,
                   const StateVector& psi0) {
  check_layout(ham, controls, psi0.amplitudes().size());
  const TimeGrid& grid = controls.grid();
  Trajectory traj{grid, psi0.space(), {}};
  traj.states.reserve(static_cast<std::size_t>(grid.n_steps()) + 1);
  traj.states.push_back(psi0.amplitudes());
  for (int k = 0; k < grid.n_steps(); ++k) {
    const SparseOp h = ham.assemble(controls.interval(k));
    traj.states.push_back(expmv(h, grid.dt(), traj.states.back()));
  }
  return traj;
}

Trajectory forward(const OperatorMatrix& h0, const ControlLayout& layout,
                   const ControlSet& controls, const StateVector& psi0) {
  return forward(ControlledHamiltonian(h0, layout), controls, psi0);
}

Trajectory backward(const ControlledHamiltonian& ham, const ControlSet& controls,
                    const CVector& chi_T) {
  check_layout(ham, controls, chi_T.size());
  const TimeGrid& grid = controls.grid();
  const auto n = static_cast<std::size_t>(grid.n_steps());
  Trajectory traj{grid, ham.space(), std::vector<CVector>(n + 1)};
  traj.states[n] = chi_T;
  for (int k = grid.n_steps() - 1; k >= 0; --k) {
    const SparseOp h = ham.assemble(controls.interval(k));
    traj.states[static_cast<std::size_t>(k)] =
        expmv(h, -grid.dt(), traj.states[static_cast<std::size_t>(k) + 1]);
  }
  return traj;
}

Trajectory backward(const OperatorMatrix& h0, const ControlLayout& layout,
                    const ControlSet& controls, const CVector& chi_T) {
  return backward(ControlledHamiltonian(h0, layout), controls, chi_T);
}

CVector propagate_final(const ControlledHamiltonian& ham, const ControlSet& controls,
                        const CVector& psi0) {
  check_layout(ham, controls, psi0.size());
  CVector psi = psi0;
  for (int k = 0; k < controls.grid().n_steps(); ++k)
    psi = expmv(ham.assemble(controls.interval(k)), controls.grid().dt(), psi);
  return psi;
}

}  // namespace catchain
