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

// Open-chain dynamics under an Ornstein-Uhlenbeck bath at leading
// (noise-free) order:
//
//     d rho/dt = -i[H, rho] + [L, rho Obar^dagger] - [L^dagger, Obar rho]
//     Obar(t)  = int_0^t ds alpha(t, s) O(t, s),   O(s, s) = L
//     d_t O    = [-i H - L^dagger Obar, O]
//     alpha(t, s) = gamma/2 exp(-gamma |t - s|)
//
// For the exponential kernel Obar obeys the local equation
//
//     d Obar/dt = gamma/2 L - gamma Obar + [-i H - L^dagger Obar, Obar].
//
// With H quadratic and excitation-conserving and L linear in a_j, a_j^dagger,
// both O(t, s) and Obar stay linear in the ladder operators, and the
// nonlinear commutator reduces to a c-number times Obar. The production path
// therefore evolves the 2N ladder coefficients of Obar; evolve_obar_step is
// the same equation on explicit matrices, usable for any H and L.

#pragma once

#include <map>
#include <optional>
#include <vector>

#include "catchain/fock.hpp"
#include "catchain/model.hpp"
#include "catchain/propagate.hpp"

namespace catchain {

struct BathSpec {
  double lambda = 0.1;
  double gamma = 1.8;

  void validate() const;
};

// gamma/2 exp(-gamma |t - s|)
double ou_correlation(const BathSpec& bath, double t, double s);

// sum_j lower_j a_j + raise_j a_j^dagger
struct LadderLinear {
  CVector lower;
  CVector raise;

  static LadderLinear zero(int n_modes);
  int n_modes() const { return static_cast<int>(lower.size()); }
  LadderLinear adjoint() const;
  OperatorMatrix to_matrix(const FockSpace& space) const;
  double max_coeff() const;

  LadderLinear& operator+=(const LadderLinear& o);
  friend LadderLinear operator+(LadderLinear a, const LadderLinear& b) { return a += b; }
  friend LadderLinear operator-(LadderLinear a, const LadderLinear& b);
  friend LadderLinear operator*(cplx s, LadderLinear a);
};

// c-number [A, B] for ladder-linear A and B.
cplx ladder_commutator(const LadderLinear& a, const LadderLinear& b);

// L = lambda sum_j q_j with q_j = (a_j + a_j^dagger) / sqrt(2 omega_j0).
LadderLinear coupling_coefficients(const ChainModel& chain, double lambda);
OperatorMatrix build_L(const ChainModel& chain, double lambda);

// Right-hand side of the local Obar equation in ladder coefficients, for
// H = sum_ij h_ij a_i^dagger a_j.
LadderLinear obar_rhs(const Eigen::MatrixXd& h, const LadderLinear& obar, const LadderLinear& L,
                      double gamma);

// One RK4 step of the local Obar equation on explicit matrices. Throws
// InvariantViolation when |Obar| exceeds the divergence guard.
OperatorMatrix evolve_obar_step(const OperatorMatrix& h, const OperatorMatrix& obar,
                                const OperatorMatrix& L, const BathSpec& bath, double dt);

// Obar sampled every dt / samples_per_interval along the control grid.
class ObarHistory {
 public:
  ObarHistory(TimeGrid grid, int samples_per_interval, std::vector<LadderLinear> samples);

  const TimeGrid& grid() const noexcept { return grid_; }
  int samples_per_interval() const noexcept { return per_interval_; }
  const LadderLinear& sample(std::size_t j) const { return samples_.at(j); }
  const LadderLinear& at_grid(int k) const {
    return samples_.at(static_cast<std::size_t>(k) * static_cast<std::size_t>(per_interval_));
  }

 private:
  TimeGrid grid_;
  int per_interval_;
  std::vector<LadderLinear> samples_;
};

// Integrates the local Obar equation from Obar(0) = 0 with `micro_steps`
// RK4 steps between consecutive samples.
ObarHistory integrate_obar(const ChainModel& chain, const ControlSet& controls,
                           const BathSpec& bath, int samples_per_interval, int micro_steps = 4);

// Validation-only route: propagates O(t, s) from O(s, s) = L for every
// quadrature node s on a grid of dt / nodes_per_interval and integrates
// against alpha(t, s) with the trapezoid rule. t must be a control-grid point.
LadderLinear obar_quadrature_oracle(const ChainModel& chain, const ControlSet& controls,
                                    const BathSpec& bath, double t, int nodes_per_interval = 8);

struct OpenOptions {
  int substeps = 4;                         // RK4 steps per control interval
  int obar_micro_steps = 4;                 // Obar RK4 steps per half substep
  std::optional<StateVector> target;        // on the rho0 space; fills `fidelity`
  std::vector<int> snapshot_steps;          // grid indices to keep rho at
  std::vector<OperatorMatrix> observables;  // tr(O rho) recorded at every grid point
  double positivity_floor = -1e-3;          // abort below this min eigenvalue
  bool check_positivity = true;
};

struct OpenTrajectory {
  TimeGrid grid;
  FockSpace space;
  std::vector<LadderLinear> obar;           // at grid points; empty for Lindblad runs
  std::vector<double> trace_drift;          // |tr rho(t_k) - 1|
  std::vector<double> hermiticity;          // max |rho - rho^dagger|
  std::vector<double> fidelity;             // <target|rho(t_k)|target>
  std::vector<std::vector<double>> expectations;  // [observable][k], real part
  std::map<int, DensityMatrix> snapshots;
  CMatrix final_rho;
  double min_eigenvalue = 0.0;              // of final_rho (0 when not checked)

  DensityMatrix final_state() const { return DensityMatrix(space, final_rho); }
  double max_trace_drift() const;
  double max_hermiticity() const;
};

// The chain supplies H(t) and L; operators are built on rho0.space().
OpenTrajectory propagate_open(const ChainModel& chain, const ControlSet& controls,
                              const DensityMatrix& rho0, const BathSpec& bath,
                              const OpenOptions& options = {});

// Markov-limit reference: d rho/dt = -i[H, rho] + L rho L^dagger - 1/2 {L^dagger L, rho}.
OpenTrajectory lindblad_reference(const ChainModel& chain, const ControlSet& controls,
                                  const DensityMatrix& rho0, const OperatorMatrix& L,
                                  const OpenOptions& options = {});

// Space used for density-matrix propagation: the chain's modes and cutoff
// with total excitation capped at `cap` (cutoff - 1 when not given).
FockSpace open_space(const FockSpace& full, std::optional<int> cap = std::nullopt);

}  // namespace catchain
