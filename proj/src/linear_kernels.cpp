// SPDX-License-Identifier: Apache-2.0
#include "hgrf/linear_kernels.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace hgrf {
namespace {

double relative_residual(const SparseMatrix& A, const Vector& x, const Vector& b) {
  const double bn = b.norm();
  const double rn = (A * x - b).norm();
  const double rel = bn > 0.0 ? rn / bn : rn;
  // a breakdown yields NaN; report it as an unbounded residual
  return std::isnan(rel) ? std::numeric_limits<double>::infinity() : rel;
}

} // namespace

SpdFactor::SpdFactor(SparseMatrix A, SolveOptions options)
    : A_(std::move(A)), options_(options) {
  if (A_.rows() != A_.cols())
    throw InvalidArgument("SpdFactor: matrix is not square");
  A_.makeCompressed();
  auto ldlt = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>();
  ldlt->compute(A_);
  if (ldlt->info() == Eigen::Success && (ldlt->vectorD().array() > 0.0).all())
    direct_ = std::move(ldlt);
}

Vector SpdFactor::solve(const Vector& b, SolveReport* report) const {
  if (b.size() != A_.rows())
    throw InvalidArgument("SpdFactor::solve: right-hand side has length " +
                          std::to_string(b.size()) + ", expected " +
                          std::to_string(A_.rows()));
  SolveReport local;
  Vector x;
  if (direct_) {
    x = direct_->solve(b);
    local.method = SolveMethod::Direct;
    local.iterations = 1;
    local.relative_residual = relative_residual(A_, x, b);
  }
  if (!direct_ || !(local.relative_residual <= options_.tolerance)) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(options_.tolerance);
    cg.setMaxIterations(options_.max_iterations);
    cg.compute(A_);
    if (direct_)
      x = cg.solveWithGuess(b, x);
    else
      x = cg.solve(b);
    local.method = SolveMethod::Cg;
    local.iterations = static_cast<int>(cg.iterations());
    local.relative_residual = relative_residual(A_, x, b);
  }
  if (report) *report = local;
  if (!(local.relative_residual <= options_.tolerance))
    throw NumericalError("SPD solve did not converge: relative residual " +
                             std::to_string(local.relative_residual),
                         local.relative_residual);
  return x;
}

DenseMatrix SpdFactor::solve(const DenseMatrix& B) const {
  DenseMatrix X(B.rows(), B.cols());
  for (Index j = 0; j < B.cols(); ++j) X.col(j) = solve(Vector(B.col(j)));
  return X;
}

Vector spd_solve(const SparseMatrix& A, const Vector& b, double tol,
                 SolveReport* report) {
  if (!(tol > 0.0 && tol < 1.0))
    throw InvalidArgument("spd_solve: tolerance must lie in (0, 1)");
  SolveOptions opts;
  opts.tolerance = tol;
  return SpdFactor(A, opts).solve(b, report);
}

SparseMatrix mass_factor(const SparseMatrix& M) {
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::NaturalOrdering<int>> llt;
  llt.compute(M);
  if (llt.info() != Eigen::Success)
    throw NumericalError("mass_factor: Cholesky factorization failed (matrix not SPD)");
  SparseMatrix F = llt.matrixL();
  F.makeCompressed();
  const double scale = max_abs(M);
  const SparseMatrix R = SparseMatrix(F * F.transpose()) - M;
  const double res = max_abs(R);
  if (res > 1e-12 * scale)
    throw NumericalError("mass_factor: residual ||F F^T - M||_max too large", res);
  return F;
}

SymEig sym_eig(const DenseMatrix& H) {
  if (H.rows() != H.cols()) throw InvalidArgument("sym_eig: matrix is not square");
  const double scale = std::max(max_abs(H), 1.0e-300);
  if (max_abs(DenseMatrix(H - H.transpose())) > 1e-12 * scale)
    throw InvalidArgument("sym_eig: matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(H);
  if (es.info() != Eigen::Success)
    throw NumericalError("sym_eig: eigensolver did not converge");

  const Index n = H.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  const Vector& ev = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return ev[a] > ev[b]; });

  SymEig out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    out.values[k] = ev[order[static_cast<std::size_t>(k)]];
    out.vectors.col(k) = es.eigenvectors().col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

double max_abs(const DenseMatrix& A) {
  return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff();
}

double max_abs(const SparseMatrix& A) {
  double m = 0.0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it)
      m = std::max(m, std::abs(it.value()));
  return m;
}

} // namespace hgrf
