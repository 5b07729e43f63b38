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

#include "catchain/errors.hpp"
#include "catchain/krotov.hpp"
#include "test_support.hpp"

namespace catchain {
namespace {

// Single excitation hopping from site 1 to site 2 of a two-site chain.
struct HopProblem {
  ChainModel chain{{1.0, 1.0}, {0.3}, 3};
  ControlledHamiltonian ham{chain};
  StateVector from = basis({1, 0});
  StateVector to = basis({0, 1});

  StateVector basis(std::vector<int> occ) const {
    return StateVector::basis(chain.space(), *chain.space().index_of(occ));
  }
};

TEST(Shape, RampValues) {
  EXPECT_EQ(shape_function(0.05, 0.0, 5.0), 0.0);
  EXPECT_EQ(shape_function(0.05, 5.0, 5.0), 0.0);
  EXPECT_NEAR(shape_function(0.05, 0.125, 5.0), 0.5, 1e-15);
  EXPECT_NEAR(shape_function(0.05, 4.875, 5.0), 0.5, 1e-15);
  EXPECT_EQ(shape_function(0.05, 2.5, 5.0), 1.0);
  EXPECT_EQ(shape_function(0.0, 0.01, 5.0), 1.0);

  const TimeGrid grid(5.0, 500);
  ShapeSpec spec;
  EXPECT_EQ(interval_shape(spec, 0, grid, 0), 0.0);
  EXPECT_EQ(interval_shape(spec, 0, grid, 499), 0.0);
  EXPECT_EQ(interval_shape(spec, 0, grid, 250), 1.0);
  // Min of the two endpoint values on a ramp interval.
  EXPECT_NEAR(interval_shape(spec, 0, grid, 10), shape_function(0.05, 0.10, 5.0), 1e-15);
  EXPECT_NEAR(interval_shape(spec, 0, grid, 489), shape_function(0.05, 4.90, 5.0), 1e-15);
  spec.overrides = {std::nullopt, ControlShape{0.05, true}};
  EXPECT_EQ(interval_shape(spec, 1, grid, 250), 0.0);
  EXPECT_EQ(interval_shape(spec, 0, grid, 250), 1.0);
}

TEST(Guess, DefaultGuess) {
  const TimeGrid grid(5.0, 100);
  const ControlSet g = make_guess(default_guess(3), grid, control_labels(3));
  EXPECT_EQ(g.n_controls(), 5u);
  EXPECT_EQ(g.value(0, 50), 0.0);
  EXPECT_NEAR(g.value(3, 50), 0.1 * std::sin(std::numbers::pi * grid.time(50) / 5.0), 1e-15);
  EXPECT_THROW(make_guess(default_guess(2), grid, control_labels(3)), std::invalid_argument);
}

TEST(Guess, RandomGuessIsSeeded) {
  const TimeGrid grid(1.0, 20);
  GuessSpec r;
  r.kind = GuessSpec::Kind::kRandom;
  r.amplitude = 0.2;
  const ControlSet a = make_guess({r}, grid, {"x"}, 5);
  const ControlSet b = make_guess({r}, grid, {"x"}, 5);
  const ControlSet c = make_guess({r}, grid, {"x"}, 6);
  EXPECT_EQ(a.values(), b.values());
  EXPECT_NE(a.values(), c.values());
  EXPECT_LE(a.values().cwiseAbs().maxCoeff(), 0.2);
}

TEST(KrotovConfig, Validation) {
  KrotovConfig c;
  EXPECT_NO_THROW(c.validate(3));
  c.lambda_a = {1.0, 2.0};
  EXPECT_THROW(c.validate(3), std::invalid_argument);
  c.lambda_a = {-1.0};
  EXPECT_THROW(c.validate(3), std::invalid_argument);
  c = KrotovConfig{};
  c.goal = 0.0;
  EXPECT_THROW(c.validate(3), std::invalid_argument);
  c = KrotovConfig{};
  c.shape.ramp_fraction = 0.7;
  EXPECT_THROW(c.validate(3), std::invalid_argument);
  c = KrotovConfig{};
  EXPECT_EQ(c.lambda_for(2), KrotovConfig::kDefaultLambda);
}

TEST(Krotov, FunctionalValues) {
  const HopProblem p;
  EXPECT_NEAR(eval_JT(p.from, p.from), 0.0, 1e-15);
  EXPECT_NEAR(eval_JT(p.from, p.to), 1.0, 1e-15);
  const CVector mix = (p.from.amplitudes() + p.to.amplitudes()) / std::sqrt(2.0);
  EXPECT_NEAR(eval_JT(mix, p.to.amplitudes()), 0.5, 1e-15);
  const CVector chi = boundary_costate(mix, p.to);
  EXPECT_LT((chi - p.to.amplitudes() / std::sqrt(2.0)).norm(), 1e-15);
}

TEST(Krotov, MonotonicConvergence) {
  const HopProblem p;
  const TimeGrid grid(2.0, 100);
  const ControlSet guess = ControlSet::zeros(grid, control_labels(2));
  // sin^2(0.6) of the population arrives without control.
  EXPECT_NEAR(eval_JT(propagate_final(p.ham, guess, p.from.amplitudes()), p.to.amplitudes()),
              1.0 - std::pow(std::sin(0.6), 2), 1e-12);
  KrotovConfig cfg;
  cfg.lambda_a = {2.0};
  cfg.goal = 1e-6;
  cfg.max_iters = 60;
  int calls = 0;
  const OptimizeResult r = optimize(p.ham, guess, p.from, p.to, cfg, [&](const IterationRecord&) { ++calls; });
  ASSERT_GE(r.history.size(), 2u);
  EXPECT_EQ(r.history.front().iteration, 0);
  for (std::size_t i = 1; i < r.history.size(); ++i)
    EXPECT_LE(r.history[i].j_t, r.history[i - 1].j_t + 1e-14) << "iteration " << i;
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.history.back().j_t, 1e-6);
  EXPECT_GE(calls, static_cast<int>(r.history.size()) - 1);
  // Reported J_T agrees with an independent replay.
  EXPECT_NEAR(eval_JT(propagate_final(p.ham, r.controls, p.from.amplitudes()), p.to.amplitudes()),
              r.history.back().j_t, 1e-12);
  // Frozen endpoints never move.
  for (std::size_t l = 0; l < 3; ++l) {
    EXPECT_EQ(r.controls.value(l, 0), 0.0);
    EXPECT_EQ(r.controls.value(l, 99), 0.0);
  }
}

TEST(Krotov, LooseGoalStopsEarly) {
  const HopProblem p;
  const TimeGrid grid(2.0, 100);
  const ControlSet guess = ControlSet::zeros(grid, control_labels(2));
  KrotovConfig cfg;
  cfg.goal = 0.5;
  ASSERT_GT(eval_JT(propagate_final(p.ham, guess, p.from.amplitudes()), p.to.amplitudes()), 0.5);
  const OptimizeResult r = optimize(p.ham, guess, p.from, p.to, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.history.size(), 3u);
  EXPECT_LE(r.history.back().j_t, 0.5);
}

TEST(Krotov, DegenerateStartDetected) {
  const HopProblem p;
  const TimeGrid grid(1.0, 10);
  const ControlSet guess = ControlSet::zeros(grid, control_labels(2));
  // Excitation number is conserved, so |1,0> never reaches the vacuum.
  EXPECT_THROW(optimize(p.ham, guess, p.from, p.basis({0, 0}), KrotovConfig{}), DegenerateStart);
}

struct GradientProblem {
  ChainModel chain{{1.0, 1.1, 0.9}, {0.3, 0.35}, 3};
  ControlledHamiltonian ham{chain};
  TimeGrid grid{2.0, 20};
  std::mt19937_64 rng{31};
  StateVector psi0{chain.space(), testing::random_vector(27, rng)};
  StateVector target{chain.space(), testing::random_vector(27, rng)};
  ControlSet controls{grid, control_labels(3), Eigen::MatrixXd::Random(5, 20) * 0.3};

  double jt(const ControlSet& c) const {
    return eval_JT(propagate_final(ham, c, psi0.amplitudes()), target.amplitudes());
  }
  double central_difference(std::size_t l, int k, double h) const {
    ControlSet plus = controls, minus = controls;
    plus.set_value(l, k, controls.value(l, k) + h);
    minus.set_value(l, k, controls.value(l, k) - h);
    return (jt(plus) - jt(minus)) / (2 * h);
  }
};

TEST(Gradient, ExactBracketMatchesFiniteDifferences) {
  const GradientProblem g;
  const Eigen::MatrixXd grad = gradient_exact(g.ham, g.controls, g.psi0, g.target);
  ASSERT_EQ(grad.rows(), 5);
  ASSERT_EQ(grad.cols(), 20);
  for (std::size_t l = 0; l < 5; ++l)
    for (int k : {0, 7, 19}) {
      const double fd = g.central_difference(l, k, 1e-5);
      EXPECT_NEAR(grad(static_cast<Eigen::Index>(l), k), fd, 1e-4 * std::abs(fd) + 1e-8)
          << "l = " << l << ", k = " << k;
    }
}

TEST(Gradient, LeftEndpointBracketIsFirstOrderInDt) {
  GradientProblem coarse;
  GradientProblem fine;
  fine.grid = TimeGrid(2.0, 40);
  Eigen::MatrixXd doubled(5, 40);
  for (int k = 0; k < 40; ++k) doubled.col(k) = coarse.controls.values().col(k / 2);
  fine.controls = ControlSet(fine.grid, control_labels(3), doubled);
  auto mismatch = [](const GradientProblem& g) {
    const Eigen::MatrixXd e = gradient_exact(g.ham, g.controls, g.psi0, g.target);
    const Eigen::MatrixXd b = gradient_bracket(g.ham, g.controls, g.psi0, g.target);
    return (e - b).cwiseAbs().maxCoeff() / e.cwiseAbs().maxCoeff();
  };
  const double r_coarse = mismatch(coarse);
  const double r_fine = mismatch(fine);
  EXPECT_GT(r_coarse, 0.0);
  EXPECT_NEAR(r_coarse / r_fine, 2.0, 0.3);
}

}  // namespace
}  // namespace catchain
