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


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "catchain/errors.hpp"
#include "catchain/open_system.hpp"
#include "test_support.hpp"

namespace catchain {
namespace {

ControlSet random_controls(const TimeGrid& grid, int n_sites, unsigned seed, double scale = 0.2) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  const auto labels = control_labels(n_sites);
  Eigen::MatrixXd v(static_cast<Eigen::Index>(labels.size()), grid.n_steps());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(rng);
  return ControlSet(grid, labels, v);
}

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

TEST(Bath, Correlation) {
  const BathSpec bath;
  EXPECT_DOUBLE_EQ(ou_correlation(bath, 0.0, 0.0), 0.9);
  EXPECT_DOUBLE_EQ(ou_correlation(bath, 1.0, 0.3), ou_correlation(bath, 0.3, 1.0));
  EXPECT_NEAR(ou_correlation(bath, 2.0, 1.0), 0.9 * std::exp(-1.8), 1e-15);
  // int_0^inf alpha(t, t - u) du = 1/2 (Simpson on a long interval).
  const int n = 20000;
  const double h = 20.0 / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w * ou_correlation(bath, 30.0, 30.0 - i * h);
  }
  EXPECT_NEAR(sum * h / 3.0, 0.5, 1e-10);
  EXPECT_THROW(BathSpec({0.1, 0.0}).validate(), std::invalid_argument);
  EXPECT_THROW(BathSpec({-0.1, 1.0}).validate(), std::invalid_argument);
}

TEST(Coupling, OperatorElements) {
  const ChainModel chain({1.0, 2.0}, {0.3}, 4);
  const FockSpace& s = chain.space();
  EXPECT_EQ(build_L(chain, 0.0).max_abs(), 0.0);
  const OperatorMatrix L = build_L(chain, 0.1);
  EXPECT_TRUE(L.hermitian());
  const std::vector<int> vac{0, 0}, one0{1, 0}, one1{0, 1};
  EXPECT_NEAR(L.element(*s.index_of(vac), *s.index_of(one0)).real(), 0.1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(L.element(*s.index_of(vac), *s.index_of(one1)).real(), 0.1 / 2.0, 1e-15);
  const LadderLinear c = coupling_coefficients(chain, 0.1);
  EXPECT_LT(max_abs(c.to_matrix(s).dense() - L.dense()), 1e-15);
}

TEST(Coupling, LadderAlgebra) {
  LadderLinear a = LadderLinear::zero(2);
  a.lower[0] = 1.0;  // a_0
  LadderLinear ad = a.adjoint();  // a_0^dagger
  EXPECT_EQ(ad.raise[0], cplx(1.0));
  EXPECT_EQ(ladder_commutator(a, ad), cplx(1.0));
  EXPECT_EQ(ladder_commutator(ad, a), cplx(-1.0));
  EXPECT_EQ(ladder_commutator(a, a), cplx(0.0));
  // Truncated matrices reproduce the c-number away from the top level.
  const FockSpace s(2, 5);
  LadderLinear x = LadderLinear::zero(2), y = LadderLinear::zero(2);
  x.lower << cplx(0.3, 0.1), cplx(-0.2, 0.4);
  x.raise << cplx(0.5, 0.0), cplx(0.1, -0.3);
  y.lower << cplx(0.2, -0.6), cplx(0.7, 0.2);
  y.raise << cplx(-0.4, 0.3), cplx(0.25, 0.0);
  const CMatrix comm = commutator(x.to_matrix(s), y.to_matrix(s)).dense();
  const std::vector<int> low{1, 2};
  const auto i = static_cast<Eigen::Index>(*s.index_of(low));
  EXPECT_NEAR(std::abs(comm(i, i) - ladder_commutator(x, y)), 0.0, 1e-14);
  EXPECT_LT((2.0 * x - x - x).max_coeff(), 1e-15);
}

TEST(ObarMatrix, ZeroCouplingStaysZero) {
  const ChainModel chain({1.0, 1.0}, {0.3}, 4);
  const OperatorMatrix h = build_static(chain);
  const OperatorMatrix L = build_L(chain, 0.0);
  OperatorMatrix obar = OperatorMatrix::zero(chain.space());
  for (int i = 0; i < 10; ++i) obar = evolve_obar_step(h, obar, L, BathSpec{}, 0.05);
  EXPECT_EQ(obar.max_abs(), 0.0);
}

TEST(ObarMatrix, FreeRelaxationClosedForm) {
  // H = 0 and Obar proportional to Hermitian L: the commutator vanishes and
  // Obar(t) = (L / 2)(1 - exp(-gamma t)).
  const ChainModel chain({1.0}, {}, 6);
  const OperatorMatrix h = OperatorMatrix::zero(chain.space());
  const OperatorMatrix L = build_L(chain, 0.1);
  const BathSpec bath{0.1, 1.8};
  OperatorMatrix obar = OperatorMatrix::zero(chain.space());
  const double dt = 0.01;
  for (int i = 0; i < 200; ++i) obar = evolve_obar_step(h, obar, L, bath, dt);
  const CMatrix expect = 0.5 * (1.0 - std::exp(-1.8 * 2.0)) * L.dense();
  EXPECT_LT(max_abs(obar.dense() - expect), 1e-11);
}

TEST(ObarMatrix, DivergenceGuard) {
  const ChainModel chain({1.0}, {}, 4);
  const OperatorMatrix L = build_L(chain, 0.1);
  OperatorMatrix big = L;
  big *= 500.0;
  EXPECT_THROW(evolve_obar_step(OperatorMatrix::zero(chain.space()), big, L, BathSpec{}, 0.001),
               InvariantViolation);
}

TEST(Obar, CoefficientFormMatchesMatrixForm) {
  // Same RK4 steps on explicit matrices. Truncation error starts in the top
  // sectors and creeps down one level per step, hence the generous cutoff.
  const ChainModel chain({1.0, 1.1}, {0.3}, 12);
  const FockSpace& s = chain.space();
  const TimeGrid grid(1.0, 20);
  const ControlSet controls = random_controls(grid, 2, 41);
  const BathSpec bath{0.3, 1.8};
  const ObarHistory hist = integrate_obar(chain, controls, bath, 1, 4);
  const OperatorMatrix h0 = build_static(chain);
  const ControlLayout layout = build_controls(chain);
  const OperatorMatrix L = build_L(chain, bath.lambda);
  OperatorMatrix obar = OperatorMatrix::zero(s);
  const double dt = grid.dt() / 4;
  std::vector<Eigen::Index> low;
  for (std::size_t i = 0; i < s.dim(); ++i)
    if (s.total_excitation(i) <= 2) low.push_back(static_cast<Eigen::Index>(i));
  for (int k = 0; k < grid.n_steps(); ++k) {
    const OperatorMatrix h = assemble(h0, layout, controls.interval(k));
    for (int m = 0; m < 4; ++m) obar = evolve_obar_step(h, obar, L, bath, dt);
    const CMatrix coeff = hist.at_grid(k + 1).to_matrix(s).dense();
    const CMatrix dense = obar.dense();
    double worst = 0.0;
    for (Eigen::Index r : low)
      for (Eigen::Index c : low) worst = std::max(worst, std::abs(coeff(r, c) - dense(r, c)));
    EXPECT_LT(worst, 1e-13) << "k = " << k;
  }
  EXPECT_GT(hist.at_grid(grid.n_steps()).max_coeff(), 0.01);
}

TEST(Obar, QuadratureOracleAgrees) {
  const ChainModel chain({1.0, 1.0, 1.0}, {0.3, 0.3}, 4);
  const TimeGrid grid(1.0, 50);
  const ControlSet controls = random_controls(grid, 3, 42);
  const BathSpec bath{0.1, 1.8};
  const ObarHistory hist = integrate_obar(chain, controls, bath, 2, 4);
  for (int k : {25, 50}) {
    const LadderLinear oracle = obar_quadrature_oracle(chain, controls, bath, grid.time(k), 8);
    EXPECT_LT((oracle - hist.at_grid(k)).max_coeff(), 1e-6) << "k = " << k;
  }
  EXPECT_EQ(obar_quadrature_oracle(chain, controls, bath, 0.0).max_coeff(), 0.0);
  EXPECT_EQ(obar_quadrature_oracle(chain, controls, BathSpec{0.0, 1.8}, 1.0).max_coeff(), 0.0);
  EXPECT_EQ(hist.at_grid(0).max_coeff(), 0.0);
}

TEST(Obar, StationaryValueWithoutDynamics) {
  // Single mode, no controls: coefficients relax towards a fixed point; with a
  // strong bath this is close to L / 2.
  const ChainModel chain({1.0}, {}, 4);
  const TimeGrid grid(5.0, 100);
  const ControlSet zero = ControlSet::zeros(grid, control_labels(1));
  const BathSpec bath{0.1, 200.0};
  const ObarHistory hist = integrate_obar(chain, zero, bath, 4, 32);
  const LadderLinear half = cplx(0.5) * coupling_coefficients(chain, 0.1);
  EXPECT_LT((hist.at_grid(100) - half).max_coeff(), 0.01 * half.max_coeff());
}

struct SmallOpen {
  ChainModel chain{{1.0, 1.0}, {0.3}, 5};
  FockSpace space = open_space(chain.space());
  TimeGrid grid{2.0, 100};
  ControlSet controls = random_controls(grid, 2, 43, 0.1);
  StateVector psi0 = restrict_to(
      product_state(chain.space(), {cat_amplitudes(0.6, 5).amplitudes, vacuum_amplitudes(5)}), space, 1e-3);
};

TEST(OpenSystem, CappedSpace) {
  const FockSpace s = open_space(FockSpace(3, 10));
  EXPECT_EQ(s.dim(), 220u);
  EXPECT_EQ(open_space(FockSpace(3, 10), 5).dim(), 56u);
}

TEST(OpenSystem, ZeroCouplingReproducesClosedDynamics) {
  const SmallOpen p;
  const ChainModel capped = p.chain.on_space(p.space);
  const Trajectory closed = forward(ControlledHamiltonian(capped), p.controls, p.psi0);
  OpenOptions opt;
  opt.target = closed.state(p.grid.n_steps());
  const OpenTrajectory open =
      propagate_open(p.chain, p.controls, DensityMatrix::pure(p.psi0), BathSpec{0.0, 1.8}, opt);
  EXPECT_GE(open.fidelity.back(), 1.0 - 1e-8);
  const CVector& psi_t = closed.states.back();
  EXPECT_LT(max_abs(open.final_rho - psi_t * psi_t.adjoint()), 1e-8);
  for (const auto& o : open.obar) EXPECT_EQ(o.max_coeff(), 0.0);
}

TEST(OpenSystem, InvariantsAndSnapshots) {
  const SmallOpen p;
  OpenOptions opt;
  opt.snapshot_steps = {0, 50, 100};
  opt.observables = {number(p.space, 0), number(p.space, 1)};
  const OpenTrajectory t =
      propagate_open(p.chain, p.controls, DensityMatrix::pure(p.psi0), BathSpec{0.2, 1.8}, opt);
  ASSERT_EQ(t.trace_drift.size(), 101u);
  EXPECT_LT(t.max_trace_drift(), 1e-12);
  EXPECT_LT(t.max_hermiticity(), 1e-12);
  EXPECT_GT(t.min_eigenvalue, -1e-8);
  EXPECT_EQ(t.snapshots.size(), 3u);
  EXPECT_LT(max_abs(t.snapshots.at(100).entries() - t.final_rho), 1e-15);
  ASSERT_EQ(t.expectations.size(), 2u);
  EXPECT_NEAR(t.expectations[0][100], t.final_state().expectation(number(p.space, 0)).real(), 1e-13);
  // The bath mixes the state.
  EXPECT_LT(t.final_state().purity(), 1.0 - 1e-4);
  EXPECT_EQ(t.obar.size(), 101u);
}

TEST(OpenSystem, CappedAgreesWithFullSpace) {
  const SmallOpen p;
  const StateVector full_psi = product_state(p.chain.space(), {cat_amplitudes(0.6, 5).amplitudes, vacuum_amplitudes(5)});
  const BathSpec bath{0.1, 1.8};
  const OpenTrajectory full = propagate_open(p.chain, p.controls, DensityMatrix::pure(full_psi), bath);
  const OpenTrajectory capped = propagate_open(p.chain, p.controls, DensityMatrix::pure(p.psi0), bath);
  const DensityMatrix a = partial_trace(full.final_state(), 1);
  const DensityMatrix b = partial_trace(capped.final_state(), 1);
  EXPECT_LT(max_abs(a.entries() - b.entries()), 1e-3);
}

TEST(OpenSystem, LindbladDecayOfNumber) {
  const ChainModel chain({1.0}, {}, 8);
  const FockSpace& s = chain.space();
  const TimeGrid grid(2.0, 40);
  const ControlSet zero = ControlSet::zeros(grid, control_labels(1));
  const double kappa = 0.5;
  OperatorMatrix L = annihilation(s, 0);
  L *= std::sqrt(kappa);
  OpenOptions opt;
  opt.observables = {number(s, 0)};
  const OpenTrajectory t = lindblad_reference(chain, zero, DensityMatrix::pure(StateVector::basis(s, 3)), L, opt);
  for (int k = 0; k <= 40; k += 5)
    EXPECT_NEAR(t.expectations[0][static_cast<std::size_t>(k)], 3.0 * std::exp(-kappa * grid.time(k)), 1e-8);
  EXPECT_LT(t.max_trace_drift(), 1e-12);
  EXPECT_TRUE(t.obar.empty());
}

TEST(OpenSystem, StrongDampingApproachesLindblad) {
  const SmallOpen p;
  const BathSpec bath{0.2, 200.0};
  OpenOptions opt;
  opt.obar_micro_steps = 8;
  const DensityMatrix rho0 = DensityMatrix::pure(p.psi0);
  const OpenTrajectory open = propagate_open(p.chain, p.controls, rho0, bath, opt);
  const OpenTrajectory markov =
      lindblad_reference(p.chain, p.controls, rho0, build_L(p.chain.on_space(p.space), bath.lambda), opt);
  EXPECT_LT(max_abs(open.final_rho - markov.final_rho), 2e-3);
  EXPECT_GT(max_abs(markov.final_rho - rho0.entries()), 0.05);
}

TEST(OpenSystem, RejectsMismatchedInput) {
  const SmallOpen p;
  const ControlSet wrong = ControlSet::zeros(p.grid, control_labels(3));
  EXPECT_THROW(propagate_open(p.chain, wrong, DensityMatrix::pure(p.psi0), BathSpec{}), std::invalid_argument);
  OpenOptions opt;
  opt.substeps = 0;
  EXPECT_THROW(propagate_open(p.chain, p.controls, DensityMatrix::pure(p.psi0), BathSpec{}, opt),
               std::invalid_argument);
}

}  // namespace
}  // namespace catchain
