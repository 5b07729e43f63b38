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

#include "catchain/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "catchain/errors.hpp"

namespace catchain {

namespace {

// Square root of a density matrix after clipping and renormalization.
CMatrix clipped_sqrt(const CMatrix& m, const char* which) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (m + m.adjoint()));
  if (eig.info() != Eigen::Success)
    throw InvariantViolation(std::string("fidelity: eigen-decomposition of ") + which + " failed");
  Eigen::VectorXd w = eig.eigenvalues();
  if (w.minCoeff() < kNegativityClip) {
    std::ostringstream msg;
    msg << "fidelity: " << which << " has eigenvalue " << w.minCoeff() << " below the clip threshold "
        << kNegativityClip;
    throw InvariantViolation(msg.str());
  }
  // Values at round-off level carry no information; their square roots would.
  const double floor =
      static_cast<double>(m.rows()) * std::numeric_limits<double>::epsilon() * w.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w[i] < floor) w[i] = 0.0;
  const double total = w.sum();
  if (!(total > 0.0)) throw InvariantViolation(std::string("fidelity: ") + which + " has no support");
  w /= total;
  return eig.eigenvectors() * w.cwiseSqrt().asDiagonal() * eig.eigenvectors().adjoint();
}

}  // namespace

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (!(rho.space() == sigma.space())) throw std::invalid_argument("fidelity: space mismatch");
  const CMatrix product = clipped_sqrt(rho.entries(), "rho") * clipped_sqrt(sigma.entries(), "sigma");
  Eigen::JacobiSVD<CMatrix> svd(product);
  const double nuclear = svd.singularValues().sum();
  return std::clamp(nuclear * nuclear, 0.0, 1.0);
}

double fidelity(const DensityMatrix& rho, const StateVector& psi) {
  if (!(rho.space() == psi.space())) throw std::invalid_argument("fidelity: space mismatch");
  const CVector& v = psi.amplitudes();
  return std::clamp(v.dot(rho.entries() * v).real(), 0.0, 1.0);
}

double fidelity_pure(const StateVector& psi, const StateVector& phi) {
  if (!(psi.space() == phi.space())) throw std::invalid_argument("fidelity_pure: space mismatch");
  return std::clamp(std::norm(psi.overlap(phi)), 0.0, 1.0);
}

// ---------------------------------------------------------------------------

namespace {

double trapezoid(const std::vector<double>& axis, const auto& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < axis.size(); ++i)
    acc += 0.5 * (axis[i + 1] - axis[i]) * (f(i) + f(i + 1));
  return acc;
}

std::vector<double> linspace(std::pair<double, double> range, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] =
        n == 1 ? range.first : range.first + (range.second - range.first) * i / (n - 1);
  return out;
}

// (1/pi) e^{-r^2} sum_{m<=n} rho_mn (-1)^m (2A)^{n-m} sqrt(m!/n!) L_m^{(n-m)}(B) (plus the
// mirrored n<m terms) with A = (x + ip)/sqrt(2), B = 2 r^2.
cplx wigner_point(const CMatrix& rho, double x, double p) {
  const int c = static_cast<int>(rho.rows());
  const cplx a(x / std::numbers::sqrt2, p / std::numbers::sqrt2);
  const double r2 = x * x + p * p;
  const double b = 2.0 * r2;
  cplx acc = 0.0;
  cplx two_a_pow = 1.0;  // (2A)^k
  for (int k = 0; k < c; ++k) {
    // Upward recurrence in m for L_m^{(k)}(b); ratio sqrt(m!/(m+k)!) built incrementally.
    double l_prev = 0.0;
    double l_curr = 1.0;
    double ratio = 1.0;
    for (int j = 1; j <= k; ++j) ratio /= std::sqrt(static_cast<double>(j));
    for (int m = 0; m + k < c; ++m) {
      if (m == 1) {
        l_prev = 1.0;
        l_curr = 1.0 + k - b;
      } else if (m > 1) {
        const double next = ((2.0 * (m - 1) + 1.0 + k - b) * l_curr - (m - 1 + k) * l_prev) / m;
        l_prev = l_curr;
        l_curr = next;
      }
      if (m > 0) ratio *= std::sqrt(static_cast<double>(m) / (m + k));
      const double sign = (m % 2 == 0) ? 1.0 : -1.0;
      const cplx t = sign * two_a_pow * ratio * l_curr;
      acc += rho(m, m + k) * t;
      if (k > 0) acc += rho(m + k, m) * std::conj(t);
    }
    two_a_pow *= 2.0 * a;
  }
  // The imaginary part vanishes for Hermitian rho; it is kept as a residue check.
  return std::exp(-r2) / std::numbers::pi * acc;
}

}  // namespace

double WignerGrid::integral() const {
  return trapezoid(x_axis, [&](std::size_t i) {
    return trapezoid(p_axis, [&](std::size_t j) {
      return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    });
  });
}

std::vector<double> WignerGrid::x_marginal() const {
  std::vector<double> out(x_axis.size());
  for (std::size_t i = 0; i < x_axis.size(); ++i)
    out[i] = trapezoid(p_axis, [&](std::size_t j) {
      return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    });
  return out;
}

double wigner_at(const DensityMatrix& rho, double x, double p) {
  if (rho.space().n_modes() != 1) throw std::invalid_argument("wigner: need a single-mode state");
  return wigner_point(rho.entries(), x, p).real();
}

WignerGrid wigner(const DensityMatrix& rho, const WignerOptions& options, int mode, double time) {
  if (rho.space().n_modes() != 1) throw std::invalid_argument("wigner: need a single-mode state");
  if (options.n_points < 2) throw std::invalid_argument("wigner: need at least 2 points per axis");
  if (!(options.x_range.second > options.x_range.first) ||
      !(options.p_range.second > options.p_range.first))
    throw std::invalid_argument("wigner: empty axis range");

  WignerGrid grid;
  grid.x_axis = linspace(options.x_range, options.n_points);
  grid.p_axis = linspace(options.p_range, options.n_points);
  grid.mode = mode;
  grid.time = time;
  const auto n = static_cast<Eigen::Index>(options.n_points);
  grid.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const cplx w = wigner_point(rho.entries(), grid.x_axis[static_cast<std::size_t>(i)],
                                  grid.p_axis[static_cast<std::size_t>(j)]);
      grid.values(i, j) = w.real();
      grid.max_imaginary = std::max(grid.max_imaginary, std::abs(w.imag()));
    }

  const double peak = grid.values.cwiseAbs().maxCoeff();
  double edge = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    edge = std::max({edge, std::abs(grid.values(i, 0)), std::abs(grid.values(i, n - 1)),
                     std::abs(grid.values(0, i)), std::abs(grid.values(n - 1, i))});
  grid.boundary_ratio = peak > 0.0 ? edge / peak : 0.0;
  if (options.boundary_tolerance >= 0.0 && grid.boundary_ratio > options.boundary_tolerance) {
    std::ostringstream msg;
    msg << "wigner: grid too small, boundary |W| is " << grid.boundary_ratio
        << " of the peak (limit " << options.boundary_tolerance << ")";
    throw std::range_error(msg.str());
  }
  return grid;
}

// ---------------------------------------------------------------------------

namespace {

bool in_top_levels(const FockSpace& space, std::size_t index, int top_levels) {
  const int threshold = space.cutoff() - top_levels;
  for (int occ : space.occupations(index))
    if (occ >= threshold) return true;
  return false;
}

void check_levels(int top_levels) {
  if (top_levels < 1) throw std::invalid_argument("leakage: top_levels must be >= 1");
}

}  // namespace

double leakage(const StateVector& psi, int top_levels) {
  check_levels(top_levels);
  double acc = 0.0;
  for (std::size_t i = 0; i < psi.space().dim(); ++i)
    if (in_top_levels(psi.space(), i, top_levels))
      acc += std::norm(psi.amplitudes()[static_cast<Eigen::Index>(i)]);
  return acc;
}

double leakage(const DensityMatrix& rho, int top_levels) {
  check_levels(top_levels);
  double acc = 0.0;
  for (std::size_t i = 0; i < rho.space().dim(); ++i)
    if (in_top_levels(rho.space(), i, top_levels))
      acc += rho.entries()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  return acc;
}

}  // namespace catchain
