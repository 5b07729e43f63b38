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

#include "catchain/model.hpp"

#include <cmath>
#include <stdexcept>

namespace catchain {

ChainModel::ChainModel(std::vector<double> omega0, std::vector<double> k0, FockSpace space)
    : omega0_(std::move(omega0)), k0_(std::move(k0)), space_(std::move(space)) {
  if (omega0_.empty()) throw std::invalid_argument("ChainModel: need at least one site");
  if (k0_.size() + 1 != omega0_.size())
    throw std::invalid_argument("ChainModel: k0 must have n_sites - 1 entries");
  for (double w : omega0_)
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::invalid_argument("ChainModel: omega0 entries must be positive");
  for (double k : k0_)
    if (!std::isfinite(k)) throw std::invalid_argument("ChainModel: k0 entries must be finite");
  if (space_.n_modes() != n_sites())
    throw std::invalid_argument("ChainModel: space mode count differs from n_sites");
}

ChainModel::ChainModel(std::vector<double> omega0, std::vector<double> k0, int cutoff)
    : ChainModel(omega0, std::move(k0), make_space(static_cast<int>(omega0.size()), cutoff)) {}

ChainModel ChainModel::on_space(FockSpace space) const { return {omega0_, k0_, std::move(space)}; }

namespace {

OperatorMatrix hop(const FockSpace& space, int j) {
  // a_j^dagger a_{j+1} + h.c.
  OperatorMatrix forward = creation(space, j) * annihilation(space, j + 1);
  SparseOp sym = forward.entries() + SparseOp(forward.entries().adjoint());
  return OperatorMatrix(space, std::move(sym), true);
}

}  // namespace

std::vector<std::string> control_labels(int n_sites) {
  std::vector<std::string> labels;
  for (int j = 1; j <= n_sites; ++j) labels.push_back("omega_" + std::to_string(j));
  for (int j = 1; j < n_sites; ++j) labels.push_back("k_" + std::to_string(j));
  return labels;
}

OperatorMatrix build_static(const ChainModel& chain) {
  const FockSpace& space = chain.space();
  OperatorMatrix h0 = OperatorMatrix::zero(space);
  for (int j = 0; j < chain.n_sites(); ++j) h0 += chain.omega0()[j] * number(space, j);
  for (int j = 0; j + 1 < chain.n_sites(); ++j) h0 += chain.k0()[j] * hop(space, j);
  return h0;
}

ControlLayout build_controls(const ChainModel& chain) {
  ControlLayout layout;
  layout.labels = control_labels(chain.n_sites());
  for (int j = 0; j < chain.n_sites(); ++j) layout.operators.push_back(number(chain.space(), j));
  for (int j = 0; j + 1 < chain.n_sites(); ++j) layout.operators.push_back(hop(chain.space(), j));
  return layout;
}

OperatorMatrix assemble(const OperatorMatrix& h0, const ControlLayout& layout,
                        std::span<const double> eps) {
  if (eps.size() != layout.size())
    throw std::invalid_argument("assemble: eps length does not match the control layout");
  OperatorMatrix h = h0;
  for (std::size_t l = 0; l < eps.size(); ++l) h += eps[l] * layout.operators[l];
  return h;
}

std::pair<StateVector, StateVector> scenario_states(const ChainModel& chain, cplx alpha,
                                                    double theta_target) {
  const int c = chain.space().cutoff();
  const int n = chain.n_sites();
  std::vector<CVector> initial(static_cast<std::size_t>(n), vacuum_amplitudes(c));
  std::vector<CVector> target(static_cast<std::size_t>(n), vacuum_amplitudes(c));
  initial.front() = cat_amplitudes(alpha, c).amplitudes;
  const cplx rotated = alpha * std::polar(1.0, theta_target);
  target.back() = cat_amplitudes(rotated, c).amplitudes;
  return {product_state(chain.space(), initial), product_state(chain.space(), target)};
}

Eigen::MatrixXd single_particle_matrix(const ChainModel& chain, std::span<const double> eps) {
  const int n = chain.n_sites();
  if (static_cast<int>(eps.size()) != 2 * n - 1)
    throw std::invalid_argument("single_particle_matrix: need 2N-1 control values");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) h(j, j) = chain.omega0()[j] + eps[j];
  for (int j = 0; j + 1 < n; ++j) {
    const double k = chain.k0()[j] + eps[n + j];
    h(j, j + 1) = k;
    h(j + 1, j) = k;
  }
  return h;
}

// ---------------------------------------------------------------------------

ControlledHamiltonian::ControlledHamiltonian(const OperatorMatrix& h0, const ControlLayout& layout)
    : space_(h0.space()) {
  // Union pattern with explicit zeros so every term can be scattered into it.
  SparseOp pattern = h0.entries();
  for (const auto& op : layout.operators) {
    SparseOp abs_sum = pattern.cwiseAbs().cast<cplx>() + op.entries().cwiseAbs().cast<cplx>();
    pattern = abs_sum;
  }
  pattern.makeCompressed();
  pattern_ = pattern;

  auto scatter = [&](const SparseOp& term) {
    std::vector<cplx> values(static_cast<std::size_t>(pattern_.nonZeros()), 0.0);
    const auto* outer = pattern_.outerIndexPtr();
    const auto* inner = pattern_.innerIndexPtr();
    for (Eigen::Index r = 0; r < term.outerSize(); ++r) {
      auto p = outer[r];
      for (SparseOp::InnerIterator it(term, r); it; ++it) {
        while (inner[p] < it.col()) ++p;
        values[static_cast<std::size_t>(p)] += it.value();
      }
    }
    return values;
  };
  static_values_ = scatter(h0.entries());
  for (const auto& op : layout.operators) {
    term_values_.push_back(scatter(op.entries()));
    controls_.push_back(op.entries());
  }
}

ControlledHamiltonian::ControlledHamiltonian(const ChainModel& chain)
    : ControlledHamiltonian(build_static(chain), build_controls(chain)) {}

SparseOp ControlledHamiltonian::assemble(std::span<const double> eps) const {
  if (eps.size() != term_values_.size())
    throw std::invalid_argument("ControlledHamiltonian: eps length does not match the layout");
  SparseOp h = pattern_;
  cplx* out = h.valuePtr();
  const std::size_t nnz = static_cast<std::size_t>(h.nonZeros());
  for (std::size_t k = 0; k < nnz; ++k) out[k] = static_values_[k];
  for (std::size_t l = 0; l < eps.size(); ++l) {
    if (eps[l] == 0.0) continue;
    const auto& v = term_values_[l];
    for (std::size_t k = 0; k < nnz; ++k) out[k] += eps[l] * v[k];
  }
  return h;
}

}  // namespace catchain
