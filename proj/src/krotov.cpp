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

#include "catchain/krotov.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "catchain/errors.hpp"

namespace catchain {

ControlShape ShapeSpec::for_control(std::size_t l) const {
  if (l < overrides.size() && overrides[l]) return *overrides[l];
  return ControlShape{ramp_fraction, false};
}

double shape_function(double ramp_fraction, double t, double t_final) {
  if (t <= 0.0 || t >= t_final) return 0.0;
  if (ramp_fraction <= 0.0) return 1.0;
  const double ramp = ramp_fraction * t_final;
  const double edge = std::min(t, t_final - t);
  if (edge >= ramp) return 1.0;
  const double s = std::sin(0.5 * std::numbers::pi * edge / ramp);
  return s * s;
}

double shape_function(const ShapeSpec& spec, double t, double t_final) {
  return shape_function(spec.ramp_fraction, t, t_final);
}

double interval_shape(const ShapeSpec& spec, std::size_t l, const TimeGrid& grid, int k) {
  const ControlShape shape = spec.for_control(l);
  if (shape.frozen) return 0.0;
  const double a = shape_function(shape.ramp_fraction, grid.time(k), grid.t_final());
  const double b = shape_function(shape.ramp_fraction, grid.time(k + 1), grid.t_final());
  return std::min(a, b);
}

std::vector<GuessSpec> default_guess(int n_sites) {
  std::vector<GuessSpec> spec(static_cast<std::size_t>(2 * n_sites - 1));
  for (int j = n_sites; j < 2 * n_sites - 1; ++j) {
    auto& g = spec[static_cast<std::size_t>(j)];
    g.kind = GuessSpec::Kind::kSinusoid;
    g.amplitude = 0.1;
  }
  return spec;
}

ControlSet make_guess(const std::vector<GuessSpec>& spec, const TimeGrid& grid,
                      std::vector<std::string> labels, std::uint64_t seed) {
  if (spec.size() != labels.size())
    throw std::invalid_argument("make_guess: need one guess per control");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::MatrixXd values(static_cast<Eigen::Index>(spec.size()), grid.n_steps());
  const double t_final = grid.t_final();
  for (std::size_t l = 0; l < spec.size(); ++l) {
    const GuessSpec& g = spec[l];
    const double freq = g.frequency.value_or(std::numbers::pi / t_final);
    for (int k = 0; k < grid.n_steps(); ++k) {
      const double t = grid.time(k);
      double v = 0.0;
      switch (g.kind) {
        case GuessSpec::Kind::kConstant:
          v = g.value;
          break;
        case GuessSpec::Kind::kSinusoid:
          v = g.amplitude * std::sin(freq * t + g.phase);
          break;
        case GuessSpec::Kind::kRandom:
          v = g.amplitude * unit(rng) * std::sin(std::numbers::pi * t / t_final);
          break;
      }
      values(static_cast<Eigen::Index>(l), k) = v;
    }
  }
  return ControlSet(grid, std::move(labels), std::move(values));
}

double KrotovConfig::lambda_for(std::size_t l) const {
  if (lambda_a.empty()) return kDefaultLambda;
  if (lambda_a.size() == 1) return lambda_a.front();
  return lambda_a.at(l);
}

void KrotovConfig::validate(std::size_t n_controls) const {
  if (!lambda_a.empty() && lambda_a.size() != 1 && lambda_a.size() != n_controls)
    throw std::invalid_argument("KrotovConfig: lambda_a needs 1 or n_controls entries");
  for (double l : lambda_a)
    if (!(l > 0.0) || !std::isfinite(l))
      throw std::invalid_argument("KrotovConfig: lambda_a must be positive");
  if (!(goal > 0.0 && goal <= 1.0)) throw std::invalid_argument("KrotovConfig: goal must be in (0, 1]");
  if (max_iters < 1) throw std::invalid_argument("KrotovConfig: max_iters must be >= 1");
  if (shape.ramp_fraction < 0.0 || shape.ramp_fraction > 0.5)
    throw std::invalid_argument("KrotovConfig: ramp_fraction must be in [0, 0.5]");
}

// ---------------------------------------------------------------------------

double eval_JT(const CVector& phi_T, const CVector& phi_f) {
  const double f = std::norm(phi_f.dot(phi_T));
  return std::clamp(1.0 - f, 0.0, 1.0);
}

double eval_JT(const StateVector& phi_T, const StateVector& phi_f) {
  return eval_JT(phi_T.amplitudes(), phi_f.amplitudes());
}

CVector boundary_costate(const CVector& phi_T, const StateVector& phi_f) {
  const cplx tau = phi_f.amplitudes().dot(phi_T);
  return tau * phi_f.amplitudes();
}

namespace {

Trajectory costate_trajectory(const ControlledHamiltonian& ham, const ControlSet& controls,
                              const StateVector& psi0, const StateVector& phi_f) {
  const CVector phi_T = propagate_final(ham, controls, psi0.amplitudes());
  const CVector chi_T = boundary_costate(phi_T, phi_f);
  if (chi_T.norm() < 1e-14)
    throw DegenerateStart("Krotov: final state is orthogonal to the target; chi(T) vanishes");
  return backward(ham, controls, chi_T);
}

}  // namespace

IterationResult krotov_iterate(const ControlledHamiltonian& ham, const ControlSet& prev,
                               const StateVector& psi0, const StateVector& phi_f,
                               const KrotovConfig& config, int iteration) {
  config.validate(prev.n_controls());
  if (prev.n_controls() != ham.n_controls())
    throw std::invalid_argument("krotov_iterate: control count does not match the Hamiltonian");

  const Trajectory chi = costate_trajectory(ham, prev, psi0, phi_f);
  const TimeGrid& grid = prev.grid();
  const double dt = grid.dt();
  const std::size_t n_controls = prev.n_controls();

  // Shape and step size per (control, interval) are iteration-invariant but cheap.
  ControlSet next = prev;
  Trajectory phi{grid, psi0.space(), {}};
  phi.states.reserve(static_cast<std::size_t>(grid.n_steps()) + 1);
  phi.states.push_back(psi0.amplitudes());

  double running_cost = 0.0;
  CVector h_phi;
  for (int k = 0; k < grid.n_steps(); ++k) {
    const CVector& phi_k = phi.states.back();
    const CVector& chi_k = chi.states[static_cast<std::size_t>(k)];
    for (std::size_t l = 0; l < n_controls; ++l) {
      const double s = interval_shape(config.shape, l, grid, k);
      if (s == 0.0) continue;
      const double lambda = config.lambda_for(l);
      h_phi = ham.control_operator(l) * phi_k;
      const double delta = s / lambda * chi_k.dot(h_phi).imag();
      if (!std::isfinite(delta)) {
        std::ostringstream msg;
        msg << "Krotov: non-finite update for control " << l << " on interval " << k;
        throw InvariantViolation(msg.str());
      }
      next.set_value(l, k, prev.value(l, k) + delta);
      running_cost += lambda / s * delta * delta * dt;
    }
    phi.states.push_back(expmv(ham.assemble(next.interval(k)), dt, phi_k));
  }

  IterationRecord record;
  record.iteration = iteration;
  record.j_t = eval_JT(phi.states.back(), phi_f.amplitudes());
  record.running_cost = running_cost;
  record.controls = std::make_shared<const ControlSet>(next);
  return {std::move(next), std::move(phi), std::move(record)};
}

OptimizeResult optimize(const ControlledHamiltonian& ham, const ControlSet& guess,
                        const StateVector& psi0, const StateVector& phi_f,
                        const KrotovConfig& config, const IterationCallback& on_iteration) {
  config.validate(guess.n_controls());
  OptimizeResult result{guess, {}, false};

  IterationRecord start;
  start.iteration = 0;
  start.j_t = eval_JT(propagate_final(ham, guess, psi0.amplitudes()), phi_f.amplitudes());
  start.controls = std::make_shared<const ControlSet>(guess);
  result.history.push_back(start);
  if (on_iteration) on_iteration(start);

  double j_t = start.j_t;
  for (int it = 1; j_t > config.goal && it <= config.max_iters; ++it) {
    IterationResult step = krotov_iterate(ham, result.controls, psi0, phi_f, config, it);
    j_t = step.record.j_t;
    result.controls = std::move(step.controls);
    result.history.push_back(step.record);
    if (on_iteration) on_iteration(result.history.back());
  }
  result.converged = j_t <= config.goal;
  return result;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd gradient_bracket(const ControlledHamiltonian& ham, const ControlSet& controls,
                                 const StateVector& psi0, const StateVector& phi_f) {
  const Trajectory phi = forward(ham, controls, psi0);
  const CVector chi_T = boundary_costate(phi.states.back(), phi_f);
  const Trajectory chi = backward(ham, controls, chi_T);
  const double dt = controls.grid().dt();
  Eigen::MatrixXd grad(static_cast<Eigen::Index>(controls.n_controls()), controls.grid().n_steps());
  for (int k = 0; k < controls.grid().n_steps(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    for (std::size_t l = 0; l < controls.n_controls(); ++l) {
      const cplx b = chi.states[ks].dot(ham.control_operator(l) * phi.states[ks]);
      grad(static_cast<Eigen::Index>(l), k) = -2.0 * dt * b.imag();
    }
  }
  return grad;
}

Eigen::MatrixXd gradient_exact(const ControlledHamiltonian& ham, const ControlSet& controls,
                               const StateVector& psi0, const StateVector& phi_f) {
  const Trajectory phi = forward(ham, controls, psi0);
  const CVector chi_T = boundary_costate(phi.states.back(), phi_f);
  const Trajectory chi = backward(ham, controls, chi_T);
  const double dt = controls.grid().dt();

  // Gauss-Legendre nodes and weights on [-1, 1].
  const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
  const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
  const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
  const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
  const std::array<double, 4> nodes{-b, -a, a, b};
  const std::array<double, 4> weights{wb, wa, wa, wb};

  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(controls.n_controls()),
                                               controls.grid().n_steps());
  for (int k = 0; k < controls.grid().n_steps(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const SparseOp h = ham.assemble(controls.interval(k));
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const double s = 0.5 * dt * (nodes[q] + 1.0);
      const CVector phi_s = expmv(h, s, phi.states[ks]);
      const CVector chi_s = expmv(h, s, chi.states[ks]);
      for (std::size_t l = 0; l < controls.n_controls(); ++l) {
        const cplx br = chi_s.dot(ham.control_operator(l) * phi_s);
        grad(static_cast<Eigen::Index>(l), k) += -2.0 * 0.5 * dt * weights[q] * br.imag();
      }
    }
  }
  return grad;
}

}  // namespace catchain
