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

#include "catchain/open_system.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "catchain/errors.hpp"

namespace catchain {

namespace {

// |Obar| may not exceed this multiple of |L| (steady state is about |L| / 2).
constexpr double kObarGuardFactor = 100.0;
constexpr double kObarGuardAbsolute = 1e6;

constexpr double kTraceLimit = DensityMatrix::kTraceTolerance;
constexpr double kHermiticityLimit = DensityMatrix::kHermiticityTolerance;

const cplx kI(0.0, 1.0);

}  // namespace

void BathSpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("BathSpec: lambda must be finite and >= 0");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("BathSpec: gamma must be finite and > 0");
}

double ou_correlation(const BathSpec& bath, double t, double s) {
  return 0.5 * bath.gamma * std::exp(-bath.gamma * std::abs(t - s));
}

// ---------------------------------------------------------------------------

LadderLinear LadderLinear::zero(int n_modes) {
  return {CVector::Zero(n_modes), CVector::Zero(n_modes)};
}

LadderLinear LadderLinear::adjoint() const { return {raise.conjugate(), lower.conjugate()}; }

OperatorMatrix LadderLinear::to_matrix(const FockSpace& space) const {
  if (space.n_modes() != n_modes())
    throw std::invalid_argument("LadderLinear: space mode count mismatch");
  OperatorMatrix out = OperatorMatrix::zero(space);
  for (int j = 0; j < n_modes(); ++j) {
    if (lower[j] != cplx(0.0)) out += lower[j] * annihilation(space, j);
    if (raise[j] != cplx(0.0)) out += raise[j] * creation(space, j);
  }
  return out;
}

double LadderLinear::max_coeff() const {
  if (n_modes() == 0) return 0.0;
  return std::max(lower.cwiseAbs().maxCoeff(), raise.cwiseAbs().maxCoeff());
}

LadderLinear& LadderLinear::operator+=(const LadderLinear& o) {
  lower += o.lower;
  raise += o.raise;
  return *this;
}

LadderLinear operator-(LadderLinear a, const LadderLinear& b) {
  a.lower -= b.lower;
  a.raise -= b.raise;
  return a;
}

LadderLinear operator*(cplx s, LadderLinear a) {
  a.lower *= s;
  a.raise *= s;
  return a;
}

cplx ladder_commutator(const LadderLinear& a, const LadderLinear& b) {
  // [a_i, a_j^dagger] = delta_ij
  return (a.lower.array() * b.raise.array() - a.raise.array() * b.lower.array()).sum();
}

LadderLinear coupling_coefficients(const ChainModel& chain, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("coupling_coefficients: lambda must be finite and >= 0");
  const int n = chain.n_sites();
  LadderLinear L = LadderLinear::zero(n);
  for (int j = 0; j < n; ++j) {
    const double c = lambda / std::sqrt(2.0 * chain.omega0()[static_cast<std::size_t>(j)]);
    L.lower[j] = c;
    L.raise[j] = c;
  }
  return L;
}

OperatorMatrix build_L(const ChainModel& chain, double lambda) {
  const OperatorMatrix m = coupling_coefficients(chain, lambda).to_matrix(chain.space());
  return OperatorMatrix(m.space(), m.entries(), true);
}

LadderLinear obar_rhs(const Eigen::MatrixXd& h, const LadderLinear& obar, const LadderLinear& L,
                      double gamma) {
  // -i[H, sum u a + v a^dagger] = sum (i h^T u) a + (-i h v) a^dagger
  // [-L^dagger Obar, Obar] = -[L^dagger, Obar] Obar
  const cplx s = ladder_commutator(L.adjoint(), obar);
  LadderLinear out;
  out.lower = 0.5 * gamma * L.lower - gamma * obar.lower +
              kI * (h.transpose().cast<cplx>() * obar.lower) - s * obar.lower;
  out.raise = 0.5 * gamma * L.raise - gamma * obar.raise - kI * (h.cast<cplx>() * obar.raise) -
              s * obar.raise;
  return out;
}

namespace {

void guard_obar(double obar_norm, double l_norm, const char* where) {
  const double limit = l_norm > 0.0 ? kObarGuardFactor * l_norm : kObarGuardAbsolute;
  if (!std::isfinite(obar_norm) || obar_norm > limit) {
    std::ostringstream msg;
    msg << where << ": Obar diverged (|Obar| = " << obar_norm << ", limit " << limit
        << "); coupling is outside the weak-coupling regime";
    throw InvariantViolation(msg.str());
  }
}

}  // namespace

OperatorMatrix evolve_obar_step(const OperatorMatrix& h, const OperatorMatrix& obar,
                                const OperatorMatrix& L, const BathSpec& bath, double dt) {
  bath.validate();
  if (!(h.space() == obar.space()) || !(h.space() == L.space()))
    throw std::invalid_argument("evolve_obar_step: space mismatch");
  const CMatrix hd = h.dense();
  const CMatrix ld = L.dense();
  const CMatrix ldag = ld.adjoint();
  if (!obar.dense().allFinite()) throw InvariantViolation("evolve_obar_step: Obar is not finite");

  auto rhs = [&](const CMatrix& o) -> CMatrix {
    const CMatrix gen = -kI * hd - ldag * o;
    return 0.5 * bath.gamma * ld - bath.gamma * o + gen * o - o * gen;
  };
  const CMatrix y = obar.dense();
  const CMatrix k1 = rhs(y);
  const CMatrix k2 = rhs(y + 0.5 * dt * k1);
  const CMatrix k3 = rhs(y + 0.5 * dt * k2);
  const CMatrix k4 = rhs(y + dt * k3);
  const CMatrix next = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

  guard_obar(next.cwiseAbs().maxCoeff(), ld.cwiseAbs().maxCoeff(), "evolve_obar_step");
  SparseOp sparse = next.sparseView(0.0, 0.0);
  return OperatorMatrix(h.space(), std::move(sparse));
}

// ---------------------------------------------------------------------------

ObarHistory::ObarHistory(TimeGrid grid, int samples_per_interval, std::vector<LadderLinear> samples)
    : grid_(grid), per_interval_(samples_per_interval), samples_(std::move(samples)) {
  if (per_interval_ < 1) throw std::invalid_argument("ObarHistory: samples_per_interval must be >= 1");
  const auto expected =
      static_cast<std::size_t>(grid_.n_steps()) * static_cast<std::size_t>(per_interval_) + 1;
  if (samples_.size() != expected) throw std::invalid_argument("ObarHistory: wrong sample count");
}

namespace {

void check_controls(const ChainModel& chain, const ControlSet& controls) {
  if (static_cast<int>(controls.n_controls()) != 2 * chain.n_sites() - 1)
    throw std::invalid_argument("open system: control count does not match the chain");
}

}  // namespace

ObarHistory integrate_obar(const ChainModel& chain, const ControlSet& controls,
                           const BathSpec& bath, int samples_per_interval, int micro_steps) {
  bath.validate();
  check_controls(chain, controls);
  if (samples_per_interval < 1 || micro_steps < 1)
    throw std::invalid_argument("integrate_obar: sample and micro-step counts must be >= 1");
  const TimeGrid& grid = controls.grid();
  const LadderLinear L = coupling_coefficients(chain, bath.lambda);
  const double l_norm = L.max_coeff();
  const double h = grid.dt() / (samples_per_interval * micro_steps);

  std::vector<LadderLinear> samples;
  samples.reserve(static_cast<std::size_t>(grid.n_steps()) * samples_per_interval + 1);
  LadderLinear y = LadderLinear::zero(chain.n_sites());
  samples.push_back(y);
  for (int k = 0; k < grid.n_steps(); ++k) {
    const Eigen::MatrixXd hk = single_particle_matrix(chain, controls.interval(k));
    auto f = [&](const LadderLinear& o) { return obar_rhs(hk, o, L, bath.gamma); };
    for (int s = 0; s < samples_per_interval; ++s) {
      for (int m = 0; m < micro_steps; ++m) {
        const LadderLinear k1 = f(y);
        const LadderLinear k2 = f(y + cplx(0.5 * h) * k1);
        const LadderLinear k3 = f(y + cplx(0.5 * h) * k2);
        const LadderLinear k4 = f(y + cplx(h) * k3);
        y += cplx(h / 6.0) * (k1 + cplx(2.0) * k2 + cplx(2.0) * k3 + k4);
      }
      guard_obar(y.max_coeff(), l_norm, "integrate_obar");
      samples.push_back(y);
    }
  }
  return ObarHistory(grid, samples_per_interval, std::move(samples));
}

LadderLinear obar_quadrature_oracle(const ChainModel& chain, const ControlSet& controls,
                                    const BathSpec& bath, double t, int nodes_per_interval) {
  bath.validate();
  check_controls(chain, controls);
  if (nodes_per_interval < 1)
    throw std::invalid_argument("obar_quadrature_oracle: nodes_per_interval must be >= 1");
  const TimeGrid& grid = controls.grid();
  const double k_real = t / grid.dt();
  const int k_end = static_cast<int>(std::lround(k_real));
  if (k_end < 0 || k_end > grid.n_steps() || std::abs(k_real - k_end) > 1e-9)
    throw std::invalid_argument("obar_quadrature_oracle: t must be a grid point");

  const int n = chain.n_sites();
  const LadderLinear L = coupling_coefficients(chain, bath.lambda);
  const LadderLinear Ldag = L.adjoint();
  const double hq = grid.dt() / nodes_per_interval;
  const double gamma = bath.gamma;

  // nodes[j] holds O(tau, s_j) with s_j = j hq.
  std::vector<LadderLinear> nodes{L};
  if (k_end == 0) return LadderLinear::zero(n);

  // Obar(tau) from node values at tau; the last node sits at s_last <= tau.
  auto obar_at = [&](const std::vector<LadderLinear>& x, double tau) {
    const std::size_t last = x.size() - 1;
    LadderLinear acc = LadderLinear::zero(n);
    if (last > 0) {
      for (std::size_t j = 0; j <= last; ++j) {
        const double w = (j == 0 || j == last) ? 0.5 * hq : hq;
        acc += cplx(w * ou_correlation(bath, tau, static_cast<double>(j) * hq)) * x[j];
      }
    }
    const double s_last = static_cast<double>(last) * hq;
    const double panel = tau - s_last;
    if (panel > 0.0) {
      acc += cplx(0.5 * panel * ou_correlation(bath, tau, s_last)) * x[last];
      acc += cplx(0.5 * panel * 0.5 * gamma) * L;
    }
    return acc;
  };

  // d_t O = -i[H, O] - [Obar, O] L^dagger - [L^dagger, O] Obar
  auto derivative = [&](const Eigen::MatrixXcd& hT, const Eigen::MatrixXcd& hc,
                        const std::vector<LadderLinear>& x, double tau) {
    const LadderLinear ob = obar_at(x, tau);
    std::vector<LadderLinear> dx(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      const cplx c1 = ladder_commutator(ob, x[j]);
      const cplx c2 = ladder_commutator(Ldag, x[j]);
      LadderLinear d;
      d.lower = kI * (hT * x[j].lower) - c1 * Ldag.lower - c2 * ob.lower;
      d.raise = -kI * (hc * x[j].raise) - c1 * Ldag.raise - c2 * ob.raise;
      dx[j] = std::move(d);
    }
    return dx;
  };

  auto axpy = [](const std::vector<LadderLinear>& x, double a, const std::vector<LadderLinear>& d) {
    std::vector<LadderLinear> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = x[j] + cplx(a) * d[j];
    return out;
  };

  for (int k = 0; k < k_end; ++k) {
    const Eigen::MatrixXd hk = single_particle_matrix(chain, controls.interval(k));
    const Eigen::MatrixXcd hT = hk.transpose().cast<cplx>();
    const Eigen::MatrixXcd hc = hk.cast<cplx>();
    for (int m = 0; m < nodes_per_interval; ++m) {
      const double tau = (static_cast<double>(k) * nodes_per_interval + m) * hq;
      const auto k1 = derivative(hT, hc, nodes, tau);
      const auto k2 = derivative(hT, hc, axpy(nodes, 0.5 * hq, k1), tau + 0.5 * hq);
      const auto k3 = derivative(hT, hc, axpy(nodes, 0.5 * hq, k2), tau + 0.5 * hq);
      const auto k4 = derivative(hT, hc, axpy(nodes, hq, k3), tau + hq);
      for (std::size_t j = 0; j < nodes.size(); ++j)
        nodes[j] += cplx(hq / 6.0) * (k1[j] + cplx(2.0) * k2[j] + cplx(2.0) * k3[j] + k4[j]);
      nodes.push_back(L);
    }
  }
  return obar_at(nodes, static_cast<double>(nodes.size() - 1) * hq);
}

// ---------------------------------------------------------------------------

double OpenTrajectory::max_trace_drift() const {
  return trace_drift.empty() ? 0.0 : *std::max_element(trace_drift.begin(), trace_drift.end());
}

double OpenTrajectory::max_hermiticity() const {
  return hermiticity.empty() ? 0.0 : *std::max_element(hermiticity.begin(), hermiticity.end());
}

FockSpace open_space(const FockSpace& full, std::optional<int> cap) {
  const int c = cap.value_or(full.cutoff() - 1);
  if (c < 0) throw std::invalid_argument("open_space: excitation cap must be >= 0");
  return FockSpace(full.n_modes(), full.cutoff(), c);
}

namespace {

struct StepPlan {
  const ControlSet& controls;
  const DensityMatrix& rho0;
  const OpenOptions& options;
};

// Shared fixed-step RK4 driver. `rhs(k, stage_index, rho, out)` evaluates the
// generator on interval k at sub-step stage time index (in half sub-steps).
using Generator = std::function<void(int k, int half_index, const CMatrix& rho, CMatrix& out)>;

void record(OpenTrajectory& traj, const CMatrix& rho, int k, const OpenOptions& options,
            const std::set<int>& snapshots) {
  const double drift = std::abs(rho.trace() - cplx(1.0));
  const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  traj.trace_drift.push_back(drift);
  traj.hermiticity.push_back(herm);
  if (!rho.allFinite() || drift > kTraceLimit || herm > kHermiticityLimit) {
    std::ostringstream msg;
    msg << "open propagation: invariant violated at step " << k << " (t = " << traj.grid.time(k)
        << "): trace drift " << drift << ", hermiticity residue " << herm;
    throw InvariantViolation(msg.str());
  }
  if (options.target) {
    const CVector& psi = options.target->amplitudes();
    traj.fidelity.push_back(std::clamp(psi.dot(rho * psi).real(), 0.0, 1.0));
  }
  for (std::size_t i = 0; i < options.observables.size(); ++i) {
    const SparseOp& op = options.observables[i].entries();
    cplx acc = 0.0;
    for (Eigen::Index r = 0; r < op.outerSize(); ++r)
      for (SparseOp::InnerIterator it(op, r); it; ++it) acc += it.value() * rho(it.col(), r);
    traj.expectations[i].push_back(acc.real());
  }
  if (snapshots.count(k)) traj.snapshots.emplace(k, DensityMatrix(traj.space, rho));
}

OpenTrajectory run_rk4(const StepPlan& plan, const Generator& gen) {
  const TimeGrid& grid = plan.controls.grid();
  const OpenOptions& options = plan.options;
  if (options.substeps < 1) throw std::invalid_argument("open propagation: substeps must be >= 1");
  if (options.target && !(options.target->space() == plan.rho0.space()))
    throw std::invalid_argument("open propagation: target must live on the rho0 space");
  for (int k : options.snapshot_steps)
    if (k < 0 || k > grid.n_steps())
      throw std::invalid_argument("open propagation: snapshot step out of range");
  const std::set<int> snapshots(options.snapshot_steps.begin(), options.snapshot_steps.end());

  for (const auto& op : options.observables)
    if (!(op.space() == plan.rho0.space()))
      throw std::invalid_argument("open propagation: observables must live on the rho0 space");

  OpenTrajectory traj{grid, plan.rho0.space(), {}, {}, {}, {}, {}, {}, {}, 0.0};
  traj.expectations.resize(options.observables.size());
  traj.trace_drift.reserve(static_cast<std::size_t>(grid.n_steps()) + 1);
  traj.hermiticity.reserve(static_cast<std::size_t>(grid.n_steps()) + 1);

  CMatrix rho = plan.rho0.entries();
  record(traj, rho, 0, options, snapshots);

  const Eigen::Index d = rho.rows();
  CMatrix k1(d, d), k2(d, d), k3(d, d), k4(d, d), tmp(d, d);
  const int ns = options.substeps;
  const double h = grid.dt() / ns;
  for (int k = 0; k < grid.n_steps(); ++k) {
    for (int s = 0; s < ns; ++s) {
      const int half = 2 * s;
      gen(k, half, rho, k1);
      tmp = rho + (0.5 * h) * k1;
      gen(k, half + 1, tmp, k2);
      tmp = rho + (0.5 * h) * k2;
      gen(k, half + 1, tmp, k3);
      tmp = rho + h * k3;
      gen(k, half + 2, tmp, k4);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    // Remove the round-off anti-Hermitian part accumulated by the stages.
    tmp = 0.5 * (rho + rho.adjoint());
    rho = tmp;
    record(traj, rho, k + 1, options, snapshots);
  }

  if (options.check_positivity) {
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(rho, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success)
      throw InvariantViolation("open propagation: eigen-decomposition of the final state failed");
    traj.min_eigenvalue = eig.eigenvalues().minCoeff();
    if (traj.min_eigenvalue < options.positivity_floor) {
      std::ostringstream msg;
      msg << "open propagation: final state has eigenvalue " << traj.min_eigenvalue
          << " below the positivity floor " << options.positivity_floor;
      throw InvariantViolation(msg.str());
    }
  }
  traj.final_rho = std::move(rho);
  return traj;
}

// Column-compressed operators: every product below is dense * sparse, which
// walks the dense factor column by column.
using ColOp = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;

// out = d * s
void right_multiply(const CMatrix& d, const ColOp& s, CMatrix& out) {
  out.setZero(d.rows(), s.cols());
  for (Eigen::Index c = 0; c < s.outerSize(); ++c) {
    auto col = out.col(c);
    for (ColOp::InnerIterator it(s, c); it; ++it) col += it.value() * d.col(it.row());
  }
}

std::vector<ColOp> interval_hamiltonians(const ChainModel& chain, const ControlSet& controls) {
  check_controls(chain, controls);
  const ControlledHamiltonian ham(chain);
  std::vector<ColOp> out;
  out.reserve(static_cast<std::size_t>(controls.grid().n_steps()));
  for (int k = 0; k < controls.grid().n_steps(); ++k) out.emplace_back(ham.assemble(controls.interval(k)));
  return out;
}

// a_j and a_j^dagger on one shared pattern, so any ladder-linear operator can
// be written into it by a weighted sum of value arrays.
class LadderBasis {
 public:
  explicit LadderBasis(const FockSpace& space) {
    std::vector<ColOp> terms;
    for (int j = 0; j < space.n_modes(); ++j) {
      terms.emplace_back(annihilation(space, j).entries());
      terms.emplace_back(creation(space, j).entries());
    }
    ColOp pattern(static_cast<Eigen::Index>(space.dim()), static_cast<Eigen::Index>(space.dim()));
    for (const ColOp& t : terms) {
      ColOp sum = pattern.cwiseAbs().cast<cplx>() + t.cwiseAbs().cast<cplx>();
      pattern = sum;
    }
    pattern.makeCompressed();
    pattern_ = pattern;
    for (const ColOp& t : terms) {
      std::vector<cplx> values(static_cast<std::size_t>(pattern_.nonZeros()), 0.0);
      for (Eigen::Index c = 0; c < t.outerSize(); ++c) {
        Eigen::Index pos = pattern_.outerIndexPtr()[c];
        for (ColOp::InnerIterator it(t, c); it; ++it) {
          while (pattern_.innerIndexPtr()[pos] != it.row()) ++pos;
          values[static_cast<std::size_t>(pos)] = it.value();
        }
      }
      values_.push_back(std::move(values));
    }
  }

  // Writes op into `out`, which must be a copy of pattern().
  void assemble(const LadderLinear& op, ColOp& out) const {
    cplx* v = out.valuePtr();
    std::fill(v, v + out.nonZeros(), cplx(0.0));
    for (int j = 0; j < op.n_modes(); ++j) {
      const std::array<cplx, 2> w{op.lower[j], op.raise[j]};
      for (std::size_t q = 0; q < 2; ++q) {
        if (w[q] == cplx(0.0)) continue;
        const auto& src = values_[2 * static_cast<std::size_t>(j) + q];
        for (std::size_t i = 0; i < src.size(); ++i) v[i] += w[q] * src[i];
      }
    }
  }

  const ColOp& pattern() const noexcept { return pattern_; }

 private:
  ColOp pattern_;
  std::vector<std::vector<cplx>> values_;
};

// out = -i[H, rho] = i (W - W^dagger) with W = rho H
void add_unitary(const ColOp& h, const CMatrix& rho, CMatrix& out, CMatrix& work) {
  right_multiply(rho, h, work);
  out.noalias() = kI * work;
  out.noalias() -= kI * work.adjoint();
}

}  // namespace

OpenTrajectory propagate_open(const ChainModel& chain, const ControlSet& controls,
                              const DensityMatrix& rho0, const BathSpec& bath,
                              const OpenOptions& options) {
  bath.validate();
  const ChainModel local = chain.on_space(rho0.space());
  const auto hams = interval_hamiltonians(local, controls);
  const LadderLinear Lc = coupling_coefficients(local, bath.lambda);
  const LadderBasis basis(rho0.space());
  ColOp L = basis.pattern();
  ColOp Ldag = basis.pattern();
  basis.assemble(Lc, L);
  basis.assemble(Lc.adjoint(), Ldag);
  ColOp obar_adj = basis.pattern();

  const ObarHistory obar =
      integrate_obar(local, controls, bath, 2 * options.substeps, options.obar_micro_steps);

  const Eigen::Index d = static_cast<Eigen::Index>(rho0.space().dim());
  CMatrix work(d, d), b(d, d), bt(d, d), z(d, d), v(d, d);
  Generator gen = [&](int k, int half, const CMatrix& rho, CMatrix& out) {
    add_unitary(hams[static_cast<std::size_t>(k)], rho, out, work);
    if (bath.lambda == 0.0) return;
    // With A = Obar rho the dissipator is Y + Y^dagger, Y^dagger = A L^dagger - A^dagger L.
    // B = rho Obar^dagger = A^dagger.
    const std::size_t idx = static_cast<std::size_t>(k) * 2 * options.substeps + half;
    basis.assemble(obar.sample(idx).adjoint(), obar_adj);
    right_multiply(rho, obar_adj, b);
    bt = b.adjoint();
    right_multiply(bt, Ldag, z);
    right_multiply(b, L, v);
    z -= v;
    out += z;
    out += z.adjoint();
  };

  OpenTrajectory traj = run_rk4({controls, rho0, options}, gen);
  traj.obar.reserve(static_cast<std::size_t>(controls.grid().n_steps()) + 1);
  for (int k = 0; k <= controls.grid().n_steps(); ++k) traj.obar.push_back(obar.at_grid(k));
  return traj;
}

OpenTrajectory lindblad_reference(const ChainModel& chain, const ControlSet& controls,
                                  const DensityMatrix& rho0, const OperatorMatrix& L,
                                  const OpenOptions& options) {
  if (!(L.space() == rho0.space()))
    throw std::invalid_argument("lindblad_reference: L must live on the rho0 space");
  const ChainModel local = chain.on_space(rho0.space());
  const auto hams = interval_hamiltonians(local, controls);
  const ColOp l(L.entries());
  const ColOp ldag(L.entries().adjoint());

  const Eigen::Index d = static_cast<Eigen::Index>(rho0.space().dim());
  CMatrix work(d, d), c(d, d), ct(d, d), z(d, d), v(d, d);
  Generator gen = [&](int k, int, const CMatrix& rho, CMatrix& out) {
    add_unitary(hams[static_cast<std::size_t>(k)], rho, out, work);
    // C = rho L^dagger; L rho L^dagger = C^dagger L^dagger; rho L^dagger L = C L.
    right_multiply(rho, ldag, c);
    ct = c.adjoint();
    right_multiply(ct, ldag, z);
    right_multiply(c, l, v);
    out += 0.5 * (z + z.adjoint());
    out -= 0.5 * (v + v.adjoint());
  };
  return run_rk4({controls, rho0, options}, gen);
}

}  // namespace catchain
