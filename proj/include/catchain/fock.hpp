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

// Truncated multi-mode bosonic Fock spaces and the objects that live on them.
//
// Basis ordering is big-endian in the mode index: for occupations
// (n_0, ..., n_{M-1}) the full-space index is
//
//     sum_j n_j * cutoff^(M-1-j)
//
// so mode 0 is the most significant digit. A space may additionally carry a
// total-excitation cap K, in which case only basis states with
// sum_j n_j <= K are kept, in the same relative order.
//
// Modes are 0-based throughout the C++ interface.

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace catchain {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using SparseOp = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

class FockSpace {
 public:
  static constexpr std::size_t kDefaultDimensionBudget = 20000;

  // Throws SizingError when the resulting dimension exceeds `budget`.
  FockSpace(int n_modes, int cutoff, std::optional<int> excitation_cap = std::nullopt,
            std::size_t budget = kDefaultDimensionBudget);

  int n_modes() const noexcept;
  int cutoff() const noexcept;
  std::size_t dim() const noexcept;
  std::optional<int> excitation_cap() const noexcept;
  bool is_full() const noexcept { return !excitation_cap().has_value(); }

  std::span<const int> occupations(std::size_t index) const;
  int occupation(std::size_t index, int mode) const;
  int total_excitation(std::size_t index) const;

  // Position of a basis state, or nullopt when it is outside this space.
  std::optional<std::size_t> index_of(std::span<const int> occupations) const;

  // Same modes and cutoff restricted to total excitation <= cap.
  FockSpace with_excitation_cap(int cap) const;
  FockSpace single_mode() const { return FockSpace(1, cutoff()); }

  friend bool operator==(const FockSpace& a, const FockSpace& b);

 private:
  struct Table;
  std::shared_ptr<const Table> table_;
};

FockSpace make_space(int n_modes, int cutoff,
                     std::size_t budget = FockSpace::kDefaultDimensionBudget);

// Sparse complex operator on a FockSpace. The hermitian tag is verified on
// construction: max|A - A^dagger| <= 1e-12 max|A|.
class OperatorMatrix {
 public:
  OperatorMatrix(FockSpace space, SparseOp entries, bool hermitian = false);

  static OperatorMatrix zero(const FockSpace& space);
  static OperatorMatrix identity(const FockSpace& space);

  const FockSpace& space() const noexcept { return space_; }
  const SparseOp& entries() const noexcept { return entries_; }
  bool hermitian() const noexcept { return hermitian_; }

  CMatrix dense() const { return CMatrix(entries_); }
  OperatorMatrix adjoint() const;
  double hermiticity_residue() const;
  double max_abs() const;
  cplx element(std::size_t row, std::size_t col) const;

  CVector apply(const CVector& v) const { return entries_ * v; }

  OperatorMatrix& operator+=(const OperatorMatrix& other);
  OperatorMatrix& operator-=(const OperatorMatrix& other);
  OperatorMatrix& operator*=(double scale);

  friend OperatorMatrix operator+(OperatorMatrix a, const OperatorMatrix& b) { return a += b; }
  friend OperatorMatrix operator-(OperatorMatrix a, const OperatorMatrix& b) { return a -= b; }
  friend OperatorMatrix operator*(double s, OperatorMatrix a) { return a *= s; }
  friend OperatorMatrix operator*(cplx s, const OperatorMatrix& a);
  // Matrix product; the result is not tagged Hermitian.
  friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b);

 private:
  FockSpace space_;
  SparseOp entries_;
  bool hermitian_;
};

OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b);

// Pure state with unit norm (checked to 1e-9 on construction).
class StateVector {
 public:
  StateVector(FockSpace space, CVector amplitudes);

  static StateVector normalized(FockSpace space, CVector amplitudes);
  static StateVector basis(FockSpace space, std::size_t index);

  const FockSpace& space() const noexcept { return space_; }
  const CVector& amplitudes() const noexcept { return amplitudes_; }
  double norm() const { return amplitudes_.norm(); }
  // <this|other>
  cplx overlap(const StateVector& other) const;

 private:
  FockSpace space_;
  CVector amplitudes_;
};

class DensityMatrix {
 public:
  static constexpr double kHermiticityTolerance = 1e-10;
  static constexpr double kTraceTolerance = 1e-8;

  // Checks hermiticity and unit trace; positivity is checked on demand.
  DensityMatrix(FockSpace space, CMatrix entries);

  static DensityMatrix pure(const StateVector& psi);
  static DensityMatrix maximally_mixed(const FockSpace& space);

  const FockSpace& space() const noexcept { return space_; }
  const CMatrix& entries() const noexcept { return entries_; }

  double trace_deviation() const;
  double hermiticity_residue() const;
  double min_eigenvalue() const;
  double purity() const;
  cplx expectation(const OperatorMatrix& op) const;

 private:
  FockSpace space_;
  CMatrix entries_;
};

// Single-mode amplitudes together with the scale factor that made them unit norm.
struct ModeAmplitudes {
  CVector amplitudes;
  double normalization = 1.0;
};

// Lowering operator on `mode`: <n-1|a|n> = sqrt(n), tensored with identities.
OperatorMatrix annihilation(const FockSpace& space, int mode);
OperatorMatrix creation(const FockSpace& space, int mode);
OperatorMatrix number(const FockSpace& space, int mode);
OperatorMatrix total_number(const FockSpace& space);
// q = (a + a^dagger) / sqrt(2 omega)
OperatorMatrix position(const FockSpace& space, int mode, double omega);

// Embeds a cutoff x cutoff single-mode matrix on `mode`. Entries that would
// leave a capped space are dropped.
OperatorMatrix embed(const FockSpace& space, int mode, const CMatrix& single_mode,
                     bool hermitian = false);

// c_n = exp(-|alpha|^2/2) alpha^n / sqrt(n!), n < cutoff, rescaled to unit norm.
// `normalization` is the rescale factor applied to the truncated series.
ModeAmplitudes coherent_amplitudes(cplx alpha, int cutoff);

// N_alpha (|alpha> + |-alpha>) in the truncated basis. `normalization` is
// N_alpha computed from the truncated coherent series.
ModeAmplitudes cat_amplitudes(cplx alpha, int cutoff);

CVector vacuum_amplitudes(int cutoff);

// Tensor product of per-mode amplitude lists in basis order. On a capped space
// the product must lie inside the cap (lost weight <= 1e-9).
StateVector product_state(const FockSpace& space, const std::vector<CVector>& per_mode);

// Re-expresses a state on another space over the same modes and cutoff.
// Throws if more than `tolerance` of the weight falls outside the target.
StateVector restrict_to(const StateVector& psi, const FockSpace& target, double tolerance = 1e-9);

DensityMatrix partial_trace(const DensityMatrix& rho, int keep_mode);
DensityMatrix partial_trace(const StateVector& psi, int keep_mode);

}  // namespace catchain
