// SPDX-License-Identifier: Apache-2.0
#include "hgrf/fem_operators.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

namespace hgrf {
namespace {

// Bilinear shape functions on the reference square [0,1]^2, CCW from (0,0).
constexpr std::array<double, 4> kNodeX{0.0, 1.0, 1.0, 0.0};
constexpr std::array<double, 4> kNodeY{0.0, 0.0, 1.0, 1.0};

double shape(int a, double s, double t) {
  const double fs = kNodeX[a] > 0.5 ? s : 1.0 - s;
  const double ft = kNodeY[a] > 0.5 ? t : 1.0 - t;
  return fs * ft;
}

std::array<double, 2> shape_grad(int a, double s, double t) {
  const double fs = kNodeX[a] > 0.5 ? s : 1.0 - s;
  const double ft = kNodeY[a] > 0.5 ? t : 1.0 - t;
  const double ds = kNodeX[a] > 0.5 ? 1.0 : -1.0;
  const double dt = kNodeY[a] > 0.5 ? 1.0 : -1.0;
  return {ds * ft, fs * dt};
}

template <class Integrand>
ElementMatrix integrate(Integrand&& f) {
  const double g = 0.5 / std::sqrt(3.0);
  const std::array<double, 2> pts{0.5 - g, 0.5 + g};
  ElementMatrix K{};
  for (double s : pts)
    for (double t : pts)
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) K[a][b] += 0.25 * f(a, b, s, t);
  return K;
}

SparseMatrix assemble(const MeshLevel& mesh, const ElementMatrix& Ke) {
  std::vector<Triplet> trips;
  trips.reserve(mesh.elements.size() * 16);
  for (const auto& el : mesh.elements)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) trips.emplace_back(el[a], el[b], Ke[a][b]);
  SparseMatrix K(mesh.num_nodes(), mesh.num_nodes());
  K.setFromTriplets(trips.begin(), trips.end());
  K.makeCompressed();
  return K;
}

} // namespace

ElementMatrix element_mass(double h) {
  const double area = h * h;
  return integrate([&](int a, int b, double s, double t) {
    return area * shape(a, s, t) * shape(b, s, t);
  });
}

ElementMatrix element_stiffness(double /*h*/) {
  // Jacobian is diag(h, h): grad scales by 1/h, area by h^2, so the result
  // is independent of h in 2D.
  return integrate([](int a, int b, double s, double t) {
    const auto ga = shape_grad(a, s, t);
    const auto gb = shape_grad(b, s, t);
    return ga[0] * gb[0] + ga[1] * gb[1];
  });
}

SparseMatrix assemble_mass(const MeshLevel& mesh, MassKind kind) {
  SparseMatrix M = assemble(mesh, element_mass(mesh.h));
  if (kind == MassKind::Consistent) return M;
  std::vector<Triplet> diag;
  diag.reserve(static_cast<std::size_t>(M.rows()));
  const Vector rows = M * Vector::Ones(M.cols());
  for (Index i = 0; i < M.rows(); ++i)
    diag.emplace_back(static_cast<int>(i), static_cast<int>(i), rows[i]);
  SparseMatrix L(M.rows(), M.cols());
  L.setFromTriplets(diag.begin(), diag.end());
  return L;
}

SparseMatrix assemble_stiffness(const MeshLevel& mesh) {
  return assemble(mesh, element_stiffness(mesh.h));
}

double matern_normalization(int dim, double nu, double kappa) {
  if (dim < 1 || !(nu > 0.0) || !(kappa > 0.0))
    throw InvalidArgument("matern_normalization: need dim >= 1, nu > 0 and kappa > 0");
  const double d = static_cast<double>(dim);
  return std::pow(4.0 * std::numbers::pi, d / 4.0) * std::pow(kappa, nu) *
         std::sqrt(std::tgamma(nu + d / 2.0) / std::tgamma(nu));
}

SpdeOperators assemble_spde_operator(const MeshLevel& mesh, double kappa, double nu,
                                     double sigma, MassKind mass) {
  if (!(kappa > 0.0)) throw InvalidArgument("assemble_spde_operator: kappa must be > 0");
  if (nu != 1.0)
    throw InvalidArgument("assemble_spde_operator: only nu = 1 (integer order in 2D) is supported, got nu = " +
                          std::to_string(nu));
  if (!(sigma >= 0.0)) throw InvalidArgument("assemble_spde_operator: sigma must be >= 0");

  SpdeOperators ops;
  ops.level = mesh.level;
  ops.h = mesh.h;
  ops.kappa = kappa;
  ops.nu = nu;
  ops.sigma = sigma;
  ops.g = matern_normalization(2, nu, kappa);
  ops.M = assemble_mass(mesh, mass);
  ops.S = assemble_stiffness(mesh);
  ops.A = ops.S + (kappa * kappa) * ops.M;
  ops.A.makeCompressed();
  ops.F = mass_factor(ops.M);
  ops.A_solver = std::make_shared<const SpdFactor>(ops.A);
  ops.M_solver = std::make_shared<const SpdFactor>(ops.M);
  return ops;
}

std::vector<SpdeOperators> assemble_spde_hierarchy(const Hierarchy& hier, double kappa,
                                                   double nu, double sigma, MassKind mass) {
  std::vector<SpdeOperators> out;
  out.reserve(hier.levels.size());
  for (const auto& mesh : hier.levels)
    out.push_back(assemble_spde_operator(mesh, kappa, nu, sigma, mass));
  return out;
}

void write_matrix_coordinates(std::ostream& out, const SparseMatrix& A) {
  out.precision(17);
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

} // namespace hgrf
