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

#include "catchain/fock.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "catchain/errors.hpp"

namespace catchain {

struct FockSpace::Table {
  int n_modes = 0;
  int cutoff = 0;
  std::optional<int> cap;
  // Flat dim x n_modes occupation table.
  std::vector<int> occ;
  // Big-endian full-space index of every kept state, ascending.
  std::vector<std::uint64_t> full_index;
  std::size_t dim = 0;
};

namespace {

std::uint64_t full_index_of(std::span<const int> occ, int cutoff) {
  std::uint64_t idx = 0;
  for (int n : occ) idx = idx * static_cast<std::uint64_t>(cutoff) + static_cast<std::uint64_t>(n);
  return idx;
}

void enumerate(int mode, int remaining, std::vector<int>& current, int cutoff,
               std::vector<int>& out) {
  const int n_modes = static_cast<int>(current.size());
  if (mode == n_modes) {
    out.insert(out.end(), current.begin(), current.end());
    return;
  }
  const int top = std::min(cutoff - 1, remaining);
  for (int n = 0; n <= top; ++n) {
    current[mode] = n;
    enumerate(mode + 1, remaining - n, current, cutoff, out);
  }
}

}  // namespace

FockSpace::FockSpace(int n_modes, int cutoff, std::optional<int> excitation_cap,
                     std::size_t budget) {
  if (n_modes < 1) throw std::invalid_argument("FockSpace: n_modes must be >= 1");
  if (cutoff < 2) throw std::invalid_argument("FockSpace: cutoff must be >= 2");
  if (excitation_cap && *excitation_cap < 0)
    throw std::invalid_argument("FockSpace: excitation cap must be >= 0");

  if (!excitation_cap) {
    double product = std::pow(static_cast<double>(cutoff), n_modes);
    if (product > static_cast<double>(budget)) {
      std::ostringstream msg;
      msg << "FockSpace: cutoff^n_modes = " << cutoff << "^" << n_modes << " = " << product
          << " exceeds the dimension budget " << budget;
      throw SizingError(msg.str());
    }
  }

  auto table = std::make_shared<Table>();
  table->n_modes = n_modes;
  table->cutoff = cutoff;
  table->cap = excitation_cap;

  const int remaining = excitation_cap ? *excitation_cap : n_modes * (cutoff - 1);
  if (excitation_cap) {
    // Count before enumerating so an oversized capped space fails fast.
    std::vector<double> ways(static_cast<std::size_t>(remaining) + 1, 0.0);
    ways[0] = 1.0;
    for (int m = 0; m < n_modes; ++m) {
      std::vector<double> next(ways.size(), 0.0);
      for (std::size_t s = 0; s < ways.size(); ++s)
        for (int n = 0; n < cutoff && s + static_cast<std::size_t>(n) < ways.size(); ++n)
          next[s + static_cast<std::size_t>(n)] += ways[s];
      ways = std::move(next);
    }
    double count = 0.0;
    for (double w : ways) count += w;
    if (count > static_cast<double>(budget)) {
      std::ostringstream msg;
      msg << "FockSpace: " << n_modes << " modes with cutoff " << cutoff << " and excitation cap "
          << *excitation_cap << " give dimension " << count << ", exceeding the budget " << budget;
      throw SizingError(msg.str());
    }
  }

  std::vector<int> current(static_cast<std::size_t>(n_modes), 0);
  enumerate(0, remaining, current, cutoff, table->occ);
  table->dim = table->occ.size() / static_cast<std::size_t>(n_modes);
  table->full_index.reserve(table->dim);
  for (std::size_t i = 0; i < table->dim; ++i) {
    std::span<const int> o(table->occ.data() + i * static_cast<std::size_t>(n_modes),
                           static_cast<std::size_t>(n_modes));
    table->full_index.push_back(full_index_of(o, cutoff));
  }
  table_ = std::move(table);
}

int FockSpace::n_modes() const noexcept { return table_->n_modes; }
int FockSpace::cutoff() const noexcept { return table_->cutoff; }
std::size_t FockSpace::dim() const noexcept { return table_->dim; }
std::optional<int> FockSpace::excitation_cap() const noexcept { return table_->cap; }

std::span<const int> FockSpace::occupations(std::size_t index) const {
  if (index >= dim()) throw std::out_of_range("FockSpace: basis index out of range");
  const auto m = static_cast<std::size_t>(n_modes());
  return {table_->occ.data() + index * m, m};
}

int FockSpace::occupation(std::size_t index, int mode) const {
  if (mode < 0 || mode >= n_modes()) throw std::out_of_range("FockSpace: mode out of range");
  return occupations(index)[static_cast<std::size_t>(mode)];
}

int FockSpace::total_excitation(std::size_t index) const {
  int total = 0;
  for (int n : occupations(index)) total += n;
  return total;
}

std::optional<std::size_t> FockSpace::index_of(std::span<const int> occ) const {
  if (static_cast<int>(occ.size()) != n_modes()) return std::nullopt;
  int total = 0;
  for (int n : occ) {
    if (n < 0 || n >= cutoff()) return std::nullopt;
    total += n;
  }
  if (table_->cap && total > *table_->cap) return std::nullopt;
  const auto key = full_index_of(occ, cutoff());
  if (!table_->cap) return static_cast<std::size_t>(key);
  const auto& keys = table_->full_index;
  auto it = std::lower_bound(keys.begin(), keys.end(), key);
  if (it == keys.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - keys.begin());
}

FockSpace FockSpace::with_excitation_cap(int cap) const {
  return FockSpace(n_modes(), cutoff(), cap);
}

bool operator==(const FockSpace& a, const FockSpace& b) {
  if (a.table_ == b.table_) return true;
  return a.n_modes() == b.n_modes() && a.cutoff() == b.cutoff() &&
         a.excitation_cap() == b.excitation_cap();
}

FockSpace make_space(int n_modes, int cutoff, std::size_t budget) {
  return FockSpace(n_modes, cutoff, std::nullopt, budget);
}

// ---------------------------------------------------------------------------

OperatorMatrix::OperatorMatrix(FockSpace space, SparseOp entries, bool hermitian)
    : space_(std::move(space)), entries_(std::move(entries)), hermitian_(hermitian) {
  const auto n = static_cast<Eigen::Index>(space_.dim());
  if (entries_.rows() != n || entries_.cols() != n)
    throw std::invalid_argument("OperatorMatrix: shape does not match the space dimension");
  entries_.makeCompressed();
  if (hermitian_) {
    const double scale = max_abs();
    if (hermiticity_residue() > 1e-12 * scale)
      throw std::invalid_argument("OperatorMatrix: tagged Hermitian but A != A^dagger");
  }
}

OperatorMatrix OperatorMatrix::zero(const FockSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.dim());
  return OperatorMatrix(space, SparseOp(n, n), true);
}

OperatorMatrix OperatorMatrix::identity(const FockSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.dim());
  SparseOp id(n, n);
  id.setIdentity();
  return OperatorMatrix(space, std::move(id), true);
}

OperatorMatrix OperatorMatrix::adjoint() const {
  return OperatorMatrix(space_, SparseOp(entries_.adjoint()), hermitian_);
}

double OperatorMatrix::hermiticity_residue() const {
  SparseOp diff = entries_ - SparseOp(entries_.adjoint());
  double r = 0.0;
  for (Eigen::Index k = 0; k < diff.outerSize(); ++k)
    for (SparseOp::InnerIterator it(diff, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

double OperatorMatrix::max_abs() const {
  double r = 0.0;
  for (Eigen::Index k = 0; k < entries_.nonZeros(); ++k)
    r = std::max(r, std::abs(entries_.valuePtr()[k]));
  return r;
}

cplx OperatorMatrix::element(std::size_t row, std::size_t col) const {
  return entries_.coeff(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
}

OperatorMatrix& OperatorMatrix::operator+=(const OperatorMatrix& other) {
  if (!(space_ == other.space_)) throw std::invalid_argument("OperatorMatrix: space mismatch");
  entries_ = entries_ + other.entries_;
  hermitian_ = hermitian_ && other.hermitian_;
  return *this;
}

OperatorMatrix& OperatorMatrix::operator-=(const OperatorMatrix& other) {
  if (!(space_ == other.space_)) throw std::invalid_argument("OperatorMatrix: space mismatch");
  entries_ = entries_ - other.entries_;
  hermitian_ = hermitian_ && other.hermitian_;
  return *this;
}

OperatorMatrix& OperatorMatrix::operator*=(double scale) {
  entries_ *= cplx(scale, 0.0);
  return *this;
}

OperatorMatrix operator*(cplx s, const OperatorMatrix& a) {
  const bool stays_hermitian = a.hermitian_ && s.imag() == 0.0;
  return OperatorMatrix(a.space_, SparseOp(a.entries_ * s), stays_hermitian);
}

OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
  if (!(a.space_ == b.space_)) throw std::invalid_argument("OperatorMatrix: space mismatch");
  return OperatorMatrix(a.space_, SparseOp(a.entries_ * b.entries_), false);
}

OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b) {
  return a * b - b * a;
}

// ---------------------------------------------------------------------------

StateVector::StateVector(FockSpace space, CVector amplitudes)
    : space_(std::move(space)), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() != static_cast<Eigen::Index>(space_.dim()))
    throw std::invalid_argument("StateVector: amplitude count does not match the space dimension");
  if (std::abs(amplitudes_.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("StateVector: amplitudes are not unit norm");
}

StateVector StateVector::normalized(FockSpace space, CVector amplitudes) {
  const double n = amplitudes.norm();
  if (n == 0.0 || !std::isfinite(n)) throw std::invalid_argument("StateVector: cannot normalize");
  amplitudes /= n;
  return StateVector(std::move(space), std::move(amplitudes));
}

StateVector StateVector::basis(FockSpace space, std::size_t index) {
  CVector v = CVector::Zero(static_cast<Eigen::Index>(space.dim()));
  if (index >= space.dim()) throw std::out_of_range("StateVector: basis index out of range");
  v[static_cast<Eigen::Index>(index)] = 1.0;
  return StateVector(std::move(space), std::move(v));
}

cplx StateVector::overlap(const StateVector& other) const {
  if (!(space_ == other.space_)) throw std::invalid_argument("StateVector: space mismatch");
  return amplitudes_.dot(other.amplitudes_);  // conjugates the left operand
}

// ---------------------------------------------------------------------------

DensityMatrix::DensityMatrix(FockSpace space, CMatrix entries)
    : space_(std::move(space)), entries_(std::move(entries)) {
  const auto n = static_cast<Eigen::Index>(space_.dim());
  if (entries_.rows() != n || entries_.cols() != n)
    throw std::invalid_argument("DensityMatrix: shape does not match the space dimension");
  if (hermiticity_residue() > kHermiticityTolerance)
    throw std::invalid_argument("DensityMatrix: not Hermitian");
  if (trace_deviation() > kTraceTolerance)
    throw std::invalid_argument("DensityMatrix: trace is not 1");
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
  const CVector& v = psi.amplitudes();
  return DensityMatrix(psi.space(), v * v.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(const FockSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.dim());
  return DensityMatrix(space, CMatrix::Identity(n, n) / static_cast<double>(n));
}

double DensityMatrix::trace_deviation() const { return std::abs(entries_.trace() - 1.0); }

double DensityMatrix::hermiticity_residue() const {
  return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(entries_, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("DensityMatrix: eigen-decomposition failed");
  return solver.eigenvalues().minCoeff();
}

double DensityMatrix::purity() const {
  // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
  return entries_.squaredNorm();
}

cplx DensityMatrix::expectation(const OperatorMatrix& op) const {
  if (!(space_ == op.space())) throw std::invalid_argument("DensityMatrix: space mismatch");
  // tr(rho A) = sum_ij rho_ji A_ij
  cplx acc = 0.0;
  const SparseOp& a = op.entries();
  for (Eigen::Index i = 0; i < a.outerSize(); ++i)
    for (SparseOp::InnerIterator it(a, i); it; ++it) acc += entries_(it.col(), i) * it.value();
  return acc;
}

// ---------------------------------------------------------------------------

OperatorMatrix embed(const FockSpace& space, int mode, const CMatrix& single_mode,
                     bool hermitian) {
  if (mode < 0 || mode >= space.n_modes()) throw std::out_of_range("embed: mode out of range");
  const int c = space.cutoff();
  if (single_mode.rows() != c || single_mode.cols() != c)
    throw std::invalid_argument("embed: single-mode matrix must be cutoff x cutoff");

  std::vector<Eigen::Triplet<cplx>> triplets;
  std::vector<int> target(static_cast<std::size_t>(space.n_modes()));
  for (std::size_t col = 0; col < space.dim(); ++col) {
    auto occ = space.occupations(col);
    std::copy(occ.begin(), occ.end(), target.begin());
    const int n = occ[static_cast<std::size_t>(mode)];
    for (int m = 0; m < c; ++m) {
      const cplx v = single_mode(m, n);
      if (v == cplx(0.0)) continue;
      target[static_cast<std::size_t>(mode)] = m;
      if (auto row = space.index_of(target))
        triplets.emplace_back(static_cast<int>(*row), static_cast<int>(col), v);
    }
  }
  const auto d = static_cast<Eigen::Index>(space.dim());
  SparseOp op(d, d);
  op.setFromTriplets(triplets.begin(), triplets.end());
  return OperatorMatrix(space, std::move(op), hermitian);
}

namespace {

CMatrix single_lowering(int cutoff) {
  CMatrix a = CMatrix::Zero(cutoff, cutoff);
  for (int n = 1; n < cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

void check_mode(const FockSpace& space, int mode) {
  if (mode < 0 || mode >= space.n_modes()) {
    std::ostringstream msg;
    msg << "mode " << mode << " out of range for a " << space.n_modes() << "-mode space";
    throw std::out_of_range(msg.str());
  }
}

}  // namespace

OperatorMatrix annihilation(const FockSpace& space, int mode) {
  check_mode(space, mode);
  return embed(space, mode, single_lowering(space.cutoff()));
}

OperatorMatrix creation(const FockSpace& space, int mode) {
  check_mode(space, mode);
  return embed(space, mode, single_lowering(space.cutoff()).adjoint());
}

OperatorMatrix number(const FockSpace& space, int mode) {
  check_mode(space, mode);
  const int c = space.cutoff();
  CMatrix n = CMatrix::Zero(c, c);
  for (int k = 0; k < c; ++k) n(k, k) = static_cast<double>(k);
  return embed(space, mode, n, true);
}

OperatorMatrix total_number(const FockSpace& space) {
  const auto d = static_cast<Eigen::Index>(space.dim());
  SparseOp op(d, d);
  op.reserve(Eigen::VectorXi::Constant(d, 1));
  for (std::size_t i = 0; i < space.dim(); ++i)
    op.insert(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
        static_cast<double>(space.total_excitation(i));
  return OperatorMatrix(space, std::move(op), true);
}

OperatorMatrix position(const FockSpace& space, int mode, double omega) {
  check_mode(space, mode);
  if (!(omega > 0.0)) throw std::invalid_argument("position: omega must be positive");
  const CMatrix a = single_lowering(space.cutoff());
  const CMatrix q = (a + a.adjoint()) / std::sqrt(2.0 * omega);
  return embed(space, mode, q, true);
}

// ---------------------------------------------------------------------------

namespace {

CVector raw_coherent(cplx alpha, int cutoff) {
  CVector c(cutoff);
  const double prefactor = std::exp(-0.5 * std::norm(alpha));
  cplx term = prefactor;  // alpha^n / sqrt(n!) built incrementally
  for (int n = 0; n < cutoff; ++n) {
    if (n > 0) term *= alpha / std::sqrt(static_cast<double>(n));
    c[n] = term;
  }
  return c;
}

}  // namespace

ModeAmplitudes coherent_amplitudes(cplx alpha, int cutoff) {
  if (cutoff < 2) throw std::invalid_argument("coherent_amplitudes: cutoff must be >= 2");
  CVector c = raw_coherent(alpha, cutoff);
  const double scale = 1.0 / c.norm();
  return {c * scale, scale};
}

ModeAmplitudes cat_amplitudes(cplx alpha, int cutoff) {
  if (cutoff < 2) throw std::invalid_argument("cat_amplitudes: cutoff must be >= 2");
  CVector sum = raw_coherent(alpha, cutoff) + raw_coherent(-alpha, cutoff);
  // Odd terms cancel analytically; zero them so parity is exact.
  for (int n = 1; n < cutoff; n += 2) sum[n] = 0.0;
  const double scale = 1.0 / sum.norm();
  return {sum * scale, scale};
}

CVector vacuum_amplitudes(int cutoff) {
  CVector v = CVector::Zero(cutoff);
  v[0] = 1.0;
  return v;
}

StateVector product_state(const FockSpace& space, const std::vector<CVector>& per_mode) {
  if (static_cast<int>(per_mode.size()) != space.n_modes())
    throw std::invalid_argument("product_state: need one amplitude list per mode");
  for (const auto& m : per_mode)
    if (m.size() != space.cutoff())
      throw std::invalid_argument("product_state: amplitude list length must equal the cutoff");

  CVector amps(static_cast<Eigen::Index>(space.dim()));
  for (std::size_t i = 0; i < space.dim(); ++i) {
    auto occ = space.occupations(i);
    cplx v = 1.0;
    for (std::size_t j = 0; j < per_mode.size(); ++j) v *= per_mode[j][occ[j]];
    amps[static_cast<Eigen::Index>(i)] = v;
  }
  double full_norm2 = 1.0;
  for (const auto& m : per_mode) full_norm2 *= m.squaredNorm();
  const double lost = full_norm2 - amps.squaredNorm();
  if (lost > 1e-9)
    throw std::invalid_argument("product_state: state does not fit inside the excitation cap");
  return StateVector::normalized(space, std::move(amps));
}

StateVector restrict_to(const StateVector& psi, const FockSpace& target, double tolerance) {
  const FockSpace& src = psi.space();
  if (src.n_modes() != target.n_modes() || src.cutoff() != target.cutoff())
    throw std::invalid_argument("restrict_to: spaces differ in modes or cutoff");
  CVector out = CVector::Zero(static_cast<Eigen::Index>(target.dim()));
  double kept = 0.0;
  for (std::size_t i = 0; i < src.dim(); ++i) {
    if (auto j = target.index_of(src.occupations(i))) {
      const cplx v = psi.amplitudes()[static_cast<Eigen::Index>(i)];
      out[static_cast<Eigen::Index>(*j)] = v;
      kept += std::norm(v);
    }
  }
  if (1.0 - kept > tolerance)
    throw std::invalid_argument("restrict_to: state has weight outside the target space");
  return StateVector::normalized(target, std::move(out));
}

namespace {

// Groups basis indices by the occupations of every mode except `keep_mode`.
std::vector<std::vector<std::pair<std::size_t, int>>> group_by_rest(const FockSpace& space,
                                                                    int keep_mode) {
  std::map<std::vector<int>, std::vector<std::pair<std::size_t, int>>> groups;
  for (std::size_t i = 0; i < space.dim(); ++i) {
    auto occ = space.occupations(i);
    std::vector<int> rest(occ.begin(), occ.end());
    const int n = rest[static_cast<std::size_t>(keep_mode)];
    rest[static_cast<std::size_t>(keep_mode)] = -1;
    groups[rest].emplace_back(i, n);
  }
  std::vector<std::vector<std::pair<std::size_t, int>>> out;
  out.reserve(groups.size());
  for (auto& [key, members] : groups) out.push_back(std::move(members));
  return out;
}

}  // namespace

DensityMatrix partial_trace(const DensityMatrix& rho, int keep_mode) {
  check_mode(rho.space(), keep_mode);
  const int c = rho.space().cutoff();
  CMatrix red = CMatrix::Zero(c, c);
  const CMatrix& e = rho.entries();
  for (const auto& group : group_by_rest(rho.space(), keep_mode))
    for (const auto& [i, m] : group)
      for (const auto& [j, n] : group)
        red(m, n) += e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return DensityMatrix(rho.space().single_mode(), std::move(red));
}

DensityMatrix partial_trace(const StateVector& psi, int keep_mode) {
  check_mode(psi.space(), keep_mode);
  const int c = psi.space().cutoff();
  CMatrix red = CMatrix::Zero(c, c);
  const CVector& v = psi.amplitudes();
  for (const auto& group : group_by_rest(psi.space(), keep_mode))
    for (const auto& [i, m] : group)
      for (const auto& [j, n] : group)
        red(m, n) += v[static_cast<Eigen::Index>(i)] * std::conj(v[static_cast<Eigen::Index>(j)]);
  return DensityMatrix(psi.space().single_mode(), std::move(red));
}

}  // namespace catchain
