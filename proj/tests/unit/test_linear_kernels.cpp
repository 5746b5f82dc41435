// SPDX-License-Identifier: Apache-2.0
#include "hgrf/fem_operators.hpp"
#include "hgrf/linear_kernels.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

using namespace hgrf;

namespace {

SparseMatrix laplacian_1d(int n) {
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, 2.0);
    if (i > 0) t.emplace_back(i, i - 1, -1.0);
    if (i + 1 < n) t.emplace_back(i, i + 1, -1.0);
  }
  SparseMatrix A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

} // namespace

TEST(SpdFactor, DirectSolveMeetsTolerance) {
  const SparseMatrix A = laplacian_1d(50);
  const SpdFactor f(A);
  EXPECT_TRUE(f.is_direct());
  EXPECT_EQ(f.size(), 50);
  const Vector b = Vector::LinSpaced(50, 1.0, 2.0);
  SolveReport rep;
  const Vector x = f.solve(b, &rep);
  EXPECT_EQ(rep.method, SolveMethod::Direct);
  EXPECT_LE((A * x - b).norm() / b.norm(), 1e-10);
  EXPECT_LE(rep.relative_residual, 1e-10);
  // dense oracle
  const Vector xd = DenseMatrix(A).llt().solve(b);
  EXPECT_LE((x - xd).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SpdFactor, FallsBackToCgWhenDirectMissesTarget) {
  const SparseMatrix A = laplacian_1d(30);
  SolveOptions opt;
  opt.tolerance = 1e-17; // unreachable by the direct solve in double precision
  opt.max_iterations = 5;
  const SpdFactor f(A, opt);
  SolveReport rep;
  EXPECT_THROW(f.solve(Vector(Vector::Ones(30)), &rep), NumericalError);
}

TEST(SpdFactor, IndefiniteMatrixIsReported) {
  SparseMatrix A(2, 2);
  A.insert(0, 0) = 1.0;
  A.insert(1, 1) = -1.0;
  const SpdFactor f(A);
  EXPECT_FALSE(f.is_direct());
  try {
    f.solve(Vector(Vector::Ones(2)));
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_GT(e.residual(), 1e-10);
  }
}

TEST(SpdFactor, DimensionMismatchRejected) {
  const SpdFactor f(laplacian_1d(4));
  EXPECT_THROW(f.solve(Vector(Vector::Ones(3))), InvalidArgument);
  SparseMatrix R(2, 3);
  EXPECT_THROW(SpdFactor{R}, InvalidArgument);
}

TEST(SpdSolve, ToleranceRange) {
  const SparseMatrix A = laplacian_1d(5);
  EXPECT_THROW(spd_solve(A, Vector::Ones(5), 0.0), InvalidArgument);
  EXPECT_THROW(spd_solve(A, Vector::Ones(5), 1.0), InvalidArgument);
  const Vector x = spd_solve(A, Vector::Ones(5), 1e-12);
  EXPECT_LE((A * x - Vector::Ones(5)).norm(), 1e-11);
}

TEST(MassFactor, LowerTriangularAndExact) {
  const MeshLevel m = make_unit_square(4, 0);
  const SparseMatrix M = assemble_mass(m);
  const SparseMatrix F = mass_factor(M);
  const DenseMatrix Fd = DenseMatrix(F);
  EXPECT_LE((Fd * Fd.transpose() - DenseMatrix(M)).cwiseAbs().maxCoeff(), 1e-15);
  for (Index i = 0; i < Fd.rows(); ++i)
    for (Index j = i + 1; j < Fd.cols(); ++j) EXPECT_EQ(Fd(i, j), 0.0);
}

TEST(SymEig, SortedDescendingWithResidual) {
  DenseMatrix H(3, 3);
  H << 2, 1, 0, 1, 3, 1, 0, 1, 4;
  const SymEig e = sym_eig(H);
  EXPECT_GE(e.values[0], e.values[1]);
  EXPECT_GE(e.values[1], e.values[2]);
  EXPECT_LE((H * e.vectors - e.vectors * e.values.asDiagonal()).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LE((e.vectors.transpose() * e.vectors - DenseMatrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-14);
  // trace oracle
  EXPECT_NEAR(e.values.sum(), 9.0, 1e-13);
}

TEST(SymEig, RejectsAsymmetricInput) {
  DenseMatrix H(2, 2);
  H << 1, 2, 0, 1;
  EXPECT_THROW(sym_eig(H), InvalidArgument);
}

TEST(MaxAbs, DenseAndSparse) {
  DenseMatrix D(2, 2);
  D << 1, -7, 3, 2;
  EXPECT_EQ(max_abs(D), 7.0);
  EXPECT_EQ(max_abs(laplacian_1d(3)), 2.0);
}
