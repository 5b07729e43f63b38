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

// First-order Krotov optimization of state-to-state transfer.
//
// Each iteration back-propagates the costate chi under the previous controls
// from chi(T) = <phi_f|phi(T)> phi_f, then sweeps forward updating interval k
// with
//
//     d_eps_l = S_l / lambda_l * Im <chi(t_k)| H_l |phi_new(t_k)>
//
// before advancing phi_new across the interval under the updated value.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "catchain/model.hpp"
#include "catchain/propagate.hpp"

namespace catchain {

struct ControlShape {
  double ramp_fraction = 0.05;
  bool frozen = false;  // S == 0 everywhere
};

// Flat-top update shape with sin^2 ramps over ramp_fraction * T at each end.
struct ShapeSpec {
  double ramp_fraction = 0.05;
  std::vector<std::optional<ControlShape>> overrides;  // indexed by control

  ControlShape for_control(std::size_t l) const;
};

double shape_function(double ramp_fraction, double t, double t_final);
double shape_function(const ShapeSpec& spec, double t, double t_final);
// Value used for interval k: the smaller of S at its two endpoints, so the
// first and last intervals are frozen whenever ramp_fraction > 0.
double interval_shape(const ShapeSpec& spec, std::size_t l, const TimeGrid& grid, int k);

struct GuessSpec {
  enum class Kind { kConstant, kSinusoid, kRandom };
  Kind kind = Kind::kConstant;
  double value = 0.0;      // constant
  double amplitude = 0.0;  // sinusoid / random
  // Angular frequency of amplitude * sin(frequency t + phase); nullopt means pi / T.
  std::optional<double> frequency;
  double phase = 0.0;
};

// Frequencies start at 0, couplings at 0.1 sin(pi t / T).
std::vector<GuessSpec> default_guess(int n_sites);
// Values sampled at interval left endpoints. Random guesses draw uniform
// values in [-amplitude, amplitude] under a sin(pi t / T) envelope.
ControlSet make_guess(const std::vector<GuessSpec>& spec, const TimeGrid& grid,
                      std::vector<std::string> labels, std::uint64_t seed = 0);

struct KrotovConfig {
  static constexpr double kDefaultLambda = 5.0;

  std::vector<double> lambda_a;  // one per control; empty means kDefaultLambda
  ShapeSpec shape;
  double goal = 1e-7;
  int max_iters = 200;

  double lambda_for(std::size_t l) const;
  void validate(std::size_t n_controls) const;
};

struct IterationRecord {
  int iteration = 0;
  double j_t = 1.0;
  double running_cost = 0.0;  // sum_l int (lambda_l / S_l) d_eps_l^2 dt
  std::shared_ptr<const ControlSet> controls;
};

// 1 - |<phi_f|phi_T>|^2
double eval_JT(const StateVector& phi_T, const StateVector& phi_f);
double eval_JT(const CVector& phi_T, const CVector& phi_f);

// chi(T) = <phi_f|phi(T)> phi_f (not normalized).
CVector boundary_costate(const CVector& phi_T, const StateVector& phi_f);

struct IterationResult {
  ControlSet controls;
  Trajectory trajectory;  // forward states under the new controls
  IterationRecord record;
};

IterationResult krotov_iterate(const ControlledHamiltonian& ham, const ControlSet& prev,
                               const StateVector& psi0, const StateVector& phi_f,
                               const KrotovConfig& config, int iteration = 1);

struct OptimizeResult {
  ControlSet controls;
  std::vector<IterationRecord> history;  // history[0] is the guess
  bool converged = false;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

OptimizeResult optimize(const ControlledHamiltonian& ham, const ControlSet& guess,
                        const StateVector& psi0, const StateVector& phi_f,
                        const KrotovConfig& config, const IterationCallback& on_iteration = {});

// -2 dt Im <chi(t_k)|H_l|phi(t_k)> for every (l, k), with phi forward and chi
// backward under the same controls and chi(T) from boundary_costate. This is
// the first-order derivative of J_T with respect to eps_l on interval k.
Eigen::MatrixXd gradient_bracket(const ControlledHamiltonian& ham, const ControlSet& controls,
                                 const StateVector& psi0, const StateVector& phi_f);

// Same bracket with H_l replaced by its average over the interval in the
// interaction picture of H(t_k), i.e. the exact derivative of the
// piecewise-constant propagator. Evaluated by 4-point Gauss-Legendre.
Eigen::MatrixXd gradient_exact(const ControlledHamiltonian& ham, const ControlSet& controls,
                               const StateVector& psi0, const StateVector& phi_f);

}  // namespace catchain
