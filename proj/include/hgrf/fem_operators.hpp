// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hgrf/linear_kernels.hpp"
#include "hgrf/mesh_hierarchy.hpp"

#include <array>
#include <iosfwd>
#include <memory>

namespace hgrf {

using ElementMatrix = std::array<std::array<double, 4>, 4>;

/// Bilinear element matrices on a square of side h, integrated with 2x2
/// Gauss quadrature. Local node order is counter-clockwise from lower-left.
ElementMatrix element_mass(double h);
ElementMatrix element_stiffness(double h);

enum class MassKind { Consistent, Lumped };

/// Consistent bilinear mass matrix. `Lumped` (row-sum diagonal) exists only
/// to demonstrate that the transfer identities need consistent mass.
SparseMatrix assemble_mass(const MeshLevel& mesh, MassKind kind = MassKind::Consistent);

/// Stiffness with natural (zero-flux) boundary; constants are its nullspace.
SparseMatrix assemble_stiffness(const MeshLevel& mesh);

/// Matern normalization g = (4 pi)^{d/4} kappa^nu sqrt(Gamma(nu + d/2) / Gamma(nu)).
double matern_normalization(int dim, double nu, double kappa);

/// Per-level operators of the SPDE (kappa^2 - Laplacian) theta = g W.
struct SpdeOperators {
  int level = 0;
  double h = 0.0;
  double kappa = 0.0;
  double nu = 1.0;
  double g = 0.0;
  double sigma = 1.0;
  SparseMatrix M;
  SparseMatrix S;
  SparseMatrix A; // S + kappa^2 M
  SparseMatrix F; // lower triangular, F F^T = M
  std::shared_ptr<const SpdFactor> A_solver;
  std::shared_ptr<const SpdFactor> M_solver;

  Index size() const { return M.rows(); }
};

/// Assembles A = S + kappa^2 M, its factorization, the mass factor and g.
/// Only the integer-order case d = 2, nu = 1 is supported.
SpdeOperators assemble_spde_operator(const MeshLevel& mesh, double kappa, double nu,
                                     double sigma, MassKind mass = MassKind::Consistent);

/// Operators for every level of a hierarchy.
std::vector<SpdeOperators> assemble_spde_hierarchy(const Hierarchy& hier, double kappa,
                                                   double nu, double sigma,
                                                   MassKind mass = MassKind::Consistent);

/// Coordinate text dump: one `i j value` line per stored entry.
void write_matrix_coordinates(std::ostream& out, const SparseMatrix& A);

} // namespace hgrf
