// SPDX-License-Identifier: Apache-2.0
#include "hgrf/app.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace hgrf {
namespace {

struct Report {
  nlohmann::json checks = nlohmann::json::array();
  bool all = true;

  void add(const std::string& name, double residual, double tol) {
    const bool pass = std::isfinite(residual) && residual <= tol;
    all = all && pass;
    checks.push_back({{"name", name}, {"residual", residual}, {"tolerance", tol}, {"pass", pass}});
  }
};

DenseMatrix dense(const SparseMatrix& A) { return DenseMatrix(A); }

double max_abs_diff(const DenseMatrix& A, const DenseMatrix& B) {
  return (A - B).cwiseAbs().maxCoeff();
}

// Columns: images of unit noise vectors; cov = T T^T.
template <class F>
DenseMatrix transfer_matrix(Index n_in, Index n_out, F&& apply) {
  DenseMatrix T(n_out, n_in);
  for (Index k = 0; k < n_in; ++k) T.col(k) = apply(Vector::Unit(n_in, k));
  return T;
}

void identity_suite(Report& r, double h0, MassKind mass) {
  const std::string tag = "h0=" + std::to_string(h0).substr(0, 4);
  const Hierarchy hier = build_hierarchy(h0, 1);
  const auto ops = assemble_spde_hierarchy(hier, 1.0 / 0.3, 1.0, 1.0, mass);
  const auto& c = ops[0];
  const auto& f = ops[1];
  const DenseMatrix P = dense(hier.transfers[0].P);
  const DenseMatrix Mc = dense(c.M);
  const DenseMatrix Mf = dense(f.M);
  const Index nc = c.size();
  const Index nf = f.size();

  const DenseMatrix Pi = Mc.ldlt().solve(P.transpose() * Mf);
  r.add("restriction_prolongation_identity " + tag,
        max_abs_diff(Pi * P, DenseMatrix::Identity(nc, nc)), 1e-10);
  r.add("galerkin_mass " + tag, max_abs_diff(P.transpose() * Mf * P, Mc), 1e-10);
  const DenseMatrix PPi = P * Pi;
  r.add("PPi_idempotent " + tag, max_abs_diff(PPi * PPi, PPi), 1e-10);

  const DenseMatrix T_mg = transfer_matrix(nc + nf, nf, [&](const Vector& e) {
    const Vector zc = c.F * e.head(nc);
    return mg_decompose(zc, e.tail(nf), c, f, hier.transfers[0]);
  });
  r.add("covariance_multigrid " + tag, max_abs_diff(T_mg * T_mg.transpose(), Mf), 1e-10);

  for (Index m : {Index{1}, Index{3}, nc}) {
    const KlBasis basis = compute_kl_basis(c, m);
    const KlCoupling cp = make_kl_coupling(basis, f, hier.transfers[0]);
    const DenseMatrix T_kl = transfer_matrix(m + nf, nf, [&](const Vector& e) {
      return kl_spde_decompose(e.head(m), e.tail(nf), cp, f);
    });
    r.add("covariance_kl_m=" + std::to_string(m) + " " + tag,
          max_abs_diff(T_kl * T_kl.transpose(), Mf), 1e-10);
    const DenseMatrix Q = basis.Psi * basis.Psi.transpose() * Mc;
    const DenseMatrix PQPi = P * Q * Pi;
    r.add("PQPi_idempotent_m=" + std::to_string(m) + " " + tag,
          max_abs_diff(PQPi * PQPi, PQPi), 1e-10);
    if (m == nc) {
      const DenseMatrix I = DenseMatrix::Identity(m, m);
      r.add("kl_phi_orthonormal " + tag,
            max_abs_diff(basis.Phi.transpose() * Mc * basis.Phi, I), 1e-10);
      r.add("kl_psi_orthonormal " + tag,
            max_abs_diff(basis.Psi.transpose() * Mc * basis.Psi, I), 1e-10);
    }
  }
}

void darcy_suite(Report& r) {
  const MeshLevel mesh = make_unit_square(10, 0);
  const DarcySolution sol = solve_darcy(mesh, Vector::Ones(mesh.num_elements()));
  r.add("darcy_constant_k_flux", std::abs(compute_qoi(sol, mesh) - 1.0), 1e-8);
  double perr = 0.0;
  for (Index e = 0; e < mesh.num_elements(); ++e)
    perr = std::max(perr, std::abs(sol.p[e] - (mesh.centroid(static_cast<int>(e)).x - 1.0)));
  r.add("darcy_constant_k_affine_pressure", perr, 1e-10);

  Engine eng = make_engine({1, 0, 0, 0, StreamPurpose::Test});
  const Vector k = standard_normal(mesh.num_elements(), eng).array().exp();
  const DarcySolution rs = solve_darcy(mesh, k);
  r.add("darcy_mass_conservation", element_net_flux(mesh, rs).cwiseAbs().maxCoeff(), 1e-8);
}

} // namespace

nlohmann::json validate(const ValidateOptions& o) {
  Report r;
  const MassKind mass = o.lumped_mass ? MassKind::Lumped : MassKind::Consistent;
  for (double h0 : {0.5, 0.25}) {
    try {
      identity_suite(r, h0, mass);
    } catch (const std::exception& e) {
      r.add(std::string("identity_suite h0=") + std::to_string(h0) + " (" + e.what() + ")",
            std::numeric_limits<double>::infinity(), 0.0);
    }
  }
  try {
    darcy_suite(r);
  } catch (const std::exception& e) {
    r.add(std::string("darcy_suite (") + e.what() + ")", std::numeric_limits<double>::infinity(), 0.0);
  }
  return {{"mass", o.lumped_mass ? "lumped" : "consistent"}, {"checks", r.checks}, {"all_pass", r.all}};
}

} // namespace hgrf
