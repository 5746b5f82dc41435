// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hgrf/types.hpp"

#include <Eigen/SparseCholesky>

#include <memory>

namespace hgrf {

enum class SolveMethod { Direct, Cg };

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  SolveMethod method = SolveMethod::Direct;
};

struct SolveOptions {
  double tolerance = 1e-10;
  int max_iterations = 10000;
};

/// Reusable factorization of a sparse SPD matrix.
///
/// The factorization is immutable once built; solve() only touches the
/// caller's vectors so one instance may be shared across threads.
/// If the Cholesky factorization breaks down, the instance falls back to
/// diagonally preconditioned CG on the stored matrix.
class SpdFactor {
public:
  explicit SpdFactor(SparseMatrix A, SolveOptions options = {});

  Index size() const { return A_.rows(); }
  const SparseMatrix& matrix() const { return A_; }
  bool is_direct() const { return direct_ != nullptr; }

  /// Solves A x = b. Throws NumericalError if the residual target is missed.
  Vector solve(const Vector& b, SolveReport* report = nullptr) const;

  /// Column-wise solve for a dense right-hand side.
  DenseMatrix solve(const DenseMatrix& B) const;

private:
  SparseMatrix A_;
  SolveOptions options_;
  std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> direct_;
};

/// One-shot solve of A x = b with ||A x - b|| <= tol ||b||.
Vector spd_solve(const SparseMatrix& A, const Vector& b, double tol = 1e-10,
                 SolveReport* report = nullptr);

/// Lower-triangular F with F F^T = M (natural ordering, so F is genuinely
/// lower triangular in the mesh numbering).
SparseMatrix mass_factor(const SparseMatrix& M);

struct SymEig {
  Vector values;       // non-increasing
  DenseMatrix vectors; // orthonormal columns, matching `values`
};

/// Dense symmetric eigendecomposition, eigenvalues sorted non-increasing.
/// Ties keep the solver's original relative order.
SymEig sym_eig(const DenseMatrix& H);

/// max |a_ij|
double max_abs(const DenseMatrix& A);
double max_abs(const SparseMatrix& A);

} // namespace hgrf
