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
#include <numbers>
#include <random>

#include "catchain/fock.hpp"
#include "catchain/model.hpp"

namespace catchain {
namespace {

ChainModel small_chain(int cutoff = 4) {
  return ChainModel({1.0, 1.1, 0.9}, {0.3, 0.25}, cutoff);
}

std::vector<double> random_controls(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<double> eps(n);
  for (auto& e : eps) e = u(rng);
  return eps;
}

TEST(ChainModel, RejectsBadParameters) {
  EXPECT_THROW(ChainModel({1.0, 1.0}, {0.3, 0.3}, 4), std::invalid_argument);
  EXPECT_THROW(ChainModel({1.0, -1.0}, {0.3}, 4), std::invalid_argument);
  EXPECT_THROW(ChainModel({}, {}, 4), std::invalid_argument);
  EXPECT_THROW(ChainModel({1.0, 1.0}, {0.3}, FockSpace(3, 4)), std::invalid_argument);
}

TEST(ChainModel, Labels) {
  const std::vector<std::string> expected{"omega_1", "omega_2", "omega_3", "k_1", "k_2"};
  EXPECT_EQ(control_labels(3), expected);
  EXPECT_EQ(build_controls(small_chain()).labels, expected);
}

TEST(ChainModel, HamiltonianIsHermitianAndConservesExcitations) {
  std::mt19937_64 rng(11);
  const ChainModel chain = small_chain();
  const OperatorMatrix h0 = build_static(chain);
  const ControlLayout layout = build_controls(chain);
  const auto eps = random_controls(layout.size(), rng);
  const OperatorMatrix h = assemble(h0, layout, eps);
  EXPECT_TRUE(h.hermitian());
  const CMatrix d = h.dense();
  EXPECT_LT((d - d.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
  const CMatrix n = total_number(chain.space()).dense();
  EXPECT_LT((d * n - n * d).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(ChainModel, SingleParticleMatrixMatchesOneExcitationBlock) {
  std::mt19937_64 rng(12);
  const ChainModel chain = small_chain();
  const FockSpace& s = chain.space();
  const ControlLayout layout = build_controls(chain);
  const auto eps = random_controls(layout.size(), rng);
  const OperatorMatrix h = assemble(build_static(chain), layout, eps);
  const Eigen::MatrixXd sp = single_particle_matrix(chain, eps);
  ASSERT_EQ(sp.rows(), 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      std::vector<int> oi(3, 0), oj(3, 0);
      oi[static_cast<std::size_t>(i)] = 1;
      oj[static_cast<std::size_t>(j)] = 1;
      const cplx e = h.element(*s.index_of(oi), *s.index_of(oj));
      EXPECT_NEAR(e.real(), sp(i, j), 1e-14);
      EXPECT_NEAR(e.imag(), 0.0, 1e-14);
    }
  // Diagonal: omega_j0 + eps_j; off-diagonal: k_j0 + eps_{N+j}.
  EXPECT_NEAR(sp(1, 1), 1.1 + eps[1], 1e-15);
  EXPECT_NEAR(sp(1, 2), 0.25 + eps[4], 1e-15);
  EXPECT_NEAR(sp(0, 2), 0.0, 1e-15);
}

TEST(ChainModel, MergedPatternMatchesDirectAssembly) {
  std::mt19937_64 rng(13);
  const ChainModel chain = small_chain();
  const ControlledHamiltonian ham(chain);
  const auto eps = random_controls(ham.n_controls(), rng);
  const OperatorMatrix direct = assemble(build_static(chain), build_controls(chain), eps);
  const CMatrix merged(ham.assemble(eps));
  EXPECT_LT((merged - direct.dense()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(ham.assemble(std::vector<double>(2, 0.0)), std::invalid_argument);
}

TEST(ChainModel, ScenarioStates) {
  const ChainModel chain({1.0, 1.0, 1.0}, {0.3, 0.3}, 10);
  const double theta = std::numbers::pi / 2;
  const auto [initial, target] = scenario_states(chain, 1.0, theta);
  EXPECT_NEAR(initial.norm(), 1.0, 1e-14);
  EXPECT_NEAR(target.norm(), 1.0, 1e-14);
  const CVector cat0 = cat_amplitudes(1.0, 10).amplitudes;
  const CVector cat1 = cat_amplitudes(std::polar(1.0, theta), 10).amplitudes;
  EXPECT_LT((partial_trace(initial, 0).entries() - cat0 * cat0.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(partial_trace(initial, 2).entries()(0, 0).real(), 1.0, 1e-14);
  EXPECT_LT((partial_trace(target, 2).entries() - cat1 * cat1.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(partial_trace(target, 0).entries()(0, 0).real(), 1.0, 1e-14);
  // Both states carry the same mean excitation.
  const OperatorMatrix n = total_number(chain.space());
  EXPECT_NEAR(DensityMatrix::pure(initial).expectation(n).real(),
              DensityMatrix::pure(target).expectation(n).real(), 1e-12);
}

TEST(ChainModel, OnSpaceKeepsParameters) {
  const ChainModel chain = small_chain(5);
  const ChainModel capped = chain.on_space(chain.space().with_excitation_cap(4));
  EXPECT_EQ(capped.space().dim(), 35u);
  EXPECT_EQ(capped.omega0(), chain.omega0());
  EXPECT_TRUE(build_static(capped).hermitian());
}

}  // namespace
}  // namespace catchain
