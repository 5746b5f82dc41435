// SPDX-License-Identifier: Apache-2.0
#include "hgrf/grf_samplers.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace hgrf {
namespace {

void check_size(const Vector& v, Index n, const char* what) {
  if (v.size() != n)
    throw InvalidArgument(std::string(what) + ": expected length " + std::to_string(n) +
                          ", got " + std::to_string(v.size()));
}

} // namespace

WhiteNoise sample_white_noise(int level, Index n, Engine& engine) {
  return {level, standard_normal(n, engine)};
}

FieldRealization spde_from_forcing(const SpdeOperators& ops, const Vector& zeta) {
  check_size(zeta, ops.size(), "spde_from_forcing");
  Vector theta = ops.A_solver->solve(zeta);
  theta *= ops.sigma * ops.g;
  return {ops.level, std::move(theta)};
}

FieldRealization spde_sample(const SpdeOperators& ops, const Vector& xi) {
  check_size(xi, ops.size(), "spde_sample");
  return spde_from_forcing(ops, ops.F * xi);
}

KlBasis compute_kl_basis(const SpdeOperators& ops0, Index m) {
  const Index n = ops0.size();
  if (m < 1 || m > n)
    throw InvalidArgument("compute_kl_basis: truncation m = " + std::to_string(m) +
                          " must lie in [1, " + std::to_string(n) + "]");

  // C = g^2 A^{-1} M A^{-1}, formed column by column.
  const DenseMatrix Md = DenseMatrix(ops0.M);
  const DenseMatrix AinvM = ops0.A_solver->solve(Md);
  DenseMatrix C = ops0.A_solver->solve(DenseMatrix(AinvM.transpose()));
  C *= ops0.g * ops0.g;
  C = 0.5 * (C + C.transpose()).eval();

  // H = F^T C F is symmetric and similar to C M.
  const DenseMatrix Fd = DenseMatrix(ops0.F);
  DenseMatrix H = Fd.transpose() * C * Fd;
  H = 0.5 * (H + H.transpose()).eval();
  const SymEig eig = sym_eig(H);

  KlBasis basis;
  basis.level = ops0.level;
  basis.m = m;
  basis.g = ops0.g;
  basis.sigma = ops0.sigma;
  basis.lambdas = eig.values.head(m).cwiseMax(0.0);

  // phi = F^{-T} y
  const auto Ft = Fd.transpose().triangularView<Eigen::Upper>();
  basis.Phi = Ft.solve(eig.vectors.leftCols(m));

  // psi_i = sqrt(lambda_i)/g M^{-1} A phi_i
  const DenseMatrix APhi = ops0.A * basis.Phi;
  basis.Psi = ops0.M_solver->solve(APhi);
  for (Index i = 0; i < m; ++i) basis.Psi.col(i) *= std::sqrt(basis.lambdas[i]) / ops0.g;
  return basis;
}

FieldRealization kl_sample(const KlBasis& basis, const Vector& xi_hat) {
  check_size(xi_hat, basis.m, "kl_sample");
  const Vector coeff = basis.lambdas.cwiseSqrt().cwiseProduct(xi_hat);
  Vector theta = basis.Phi * coeff;
  theta *= basis.sigma;
  return {basis.level, std::move(theta)};
}

Vector mg_decompose(const Vector& zeta_coarse, const Vector& xi_fine,
                    const SpdeOperators& coarse, const SpdeOperators& fine,
                    const TransferOperator& transfer) {
  if (transfer.coarse_level != coarse.level || fine.level != coarse.level + 1)
    throw InvalidArgument("mg_decompose: operators and transfer refer to different levels");
  check_size(zeta_coarse, coarse.size(), "mg_decompose (coarse forcing)");
  check_size(xi_fine, fine.size(), "mg_decompose (fine noise)");

  const SparseMatrix& P = transfer.P;
  Vector out = fine.F * xi_fine;                                  // zeta_L
  const Vector r = zeta_coarse - P.transpose() * out;             // zeta_c - P^T zeta_L
  const Vector s = coarse.M_solver->solve(r);
  out += fine.M * (P * s);                                        // + Pi^T (zeta_c - P^T zeta_L)
  return out;
}

KlCoupling make_kl_coupling(const KlBasis& basis, const SpdeOperators& fine,
                            const TransferOperator& transfer) {
  if (transfer.coarse_level != basis.level || fine.level != basis.level + 1)
    throw InvalidArgument("make_kl_coupling: basis, operators and transfer refer to different levels");
  if (transfer.P.cols() != basis.Psi.rows() || transfer.P.rows() != fine.size())
    throw InvalidArgument("make_kl_coupling: dimension mismatch");
  KlCoupling c;
  c.lifted = transfer.P * basis.Psi;
  c.mass_lifted = fine.M * c.lifted;
  return c;
}

Vector kl_spde_decompose(const Vector& xi_hat, const Vector& xi_fine,
                         const KlCoupling& coupling, const SpdeOperators& fine) {
  check_size(xi_hat, coupling.lifted.cols(), "kl_spde_decompose (coefficients)");
  check_size(xi_fine, fine.size(), "kl_spde_decompose (fine noise)");
  Vector out = fine.F * xi_fine;                                   // zeta_L
  const Vector c = xi_hat - coupling.lifted.transpose() * out;     // xi_hat - Psi^T P^T zeta_L
  out.noalias() += coupling.mass_lifted * c;
  return out;
}

Vector kl_spde_decompose(const Vector& xi_hat, const Vector& xi_fine, const KlBasis& basis,
                         const SpdeOperators& fine, const TransferOperator& transfer) {
  return kl_spde_decompose(xi_hat, xi_fine, make_kl_coupling(basis, fine, transfer), fine);
}

std::string_view to_string(CoarsestSampler s) {
  return s == CoarsestSampler::Kl ? "kl" : "spde";
}

CoarsestSampler parse_coarsest_sampler(std::string_view s) {
  if (s == "spde") return CoarsestSampler::Spde;
  if (s == "kl") return CoarsestSampler::Kl;
  throw InvalidArgument("unknown coarsest sampler '" + std::string(s) + "' (expected spde or kl)");
}

MultilevelSampler::MultilevelSampler(const Hierarchy& hier,
                                     const std::vector<SpdeOperators>& ops,
                                     CoarsestSampler coarsest, Index kl_modes)
    : hier_(&hier), ops_(&ops), coarsest_(coarsest) {
  if (ops.empty() || ops.size() != hier.levels.size())
    throw InvalidArgument("MultilevelSampler: need one operator set per hierarchy level");
  if (coarsest == CoarsestSampler::Kl) {
    basis_ = compute_kl_basis(ops.front(), kl_modes);
    if (ops.size() > 1) coupling_ = make_kl_coupling(*basis_, ops[1], hier.transfers.front());
  }
}

Index MultilevelSampler::noise_size(int level) const {
  if (level < 0 || level > finest())
    throw InvalidArgument("noise_size: level out of range");
  if (level == 0 && basis_) return basis_->m;
  return ops(level).size();
}

Vector MultilevelSampler::coarsest_forcing(const Vector& xi0) const {
  if (basis_) {
    check_size(xi0, basis_->m, "coarsest_forcing");
    return ops(0).M * (basis_->Psi * xi0);
  }
  check_size(xi0, ops(0).size(), "coarsest_forcing");
  return ops(0).F * xi0;
}

Vector MultilevelSampler::lift(int level, const Vector& coarse_forcing,
                               std::span<const Vector> noise) const {
  if (level < 1 || level > finest() || static_cast<int>(noise.size()) <= level)
    throw InvalidArgument("lift: inconsistent level/noise state");
  const auto l = static_cast<std::size_t>(level);
  if (level == 1 && basis_) return kl_spde_decompose(noise[0], noise[1], *coupling_, ops(1));
  return mg_decompose(coarse_forcing, noise[l], ops(level - 1), ops(level),
                      hier_->transfers[l - 1]);
}

Vector MultilevelSampler::forcing(int level, std::span<const Vector> noise) const {
  if (level < 0 || level > finest() || static_cast<int>(noise.size()) <= level)
    throw InvalidArgument("forcing: need noise for levels 0.." + std::to_string(level));
  Vector zeta = coarsest_forcing(noise[0]);
  for (int l = 1; l <= level; ++l) zeta = lift(l, zeta, noise);
  return zeta;
}

FieldRealization MultilevelSampler::field_from_forcing(int level, const Vector& forcing) const {
  return spde_from_forcing(ops(level), forcing);
}

FieldRealization MultilevelSampler::field(int level, std::span<const Vector> noise) const {
  if (level == 0 && basis_) {
    if (noise.empty()) throw InvalidArgument("field: empty noise state");
    return kl_sample(*basis_, noise[0]);
  }
  return field_from_forcing(level, forcing(level, noise));
}

std::pair<FieldRealization, FieldRealization>
MultilevelSampler::split(int level, std::span<const Vector> noise) const {
  if (level < 1) throw InvalidArgument("split: needs a level >= 1");
  std::vector<Vector> coarse_only(noise.begin(), noise.begin() + level + 1);
  coarse_only[static_cast<std::size_t>(level)].setZero();
  FieldRealization lifted = field(level, coarse_only);
  FieldRealization full = field(level, noise);
  FieldRealization complement{level, full.theta - lifted.theta};
  return {std::move(lifted), std::move(complement)};
}

std::vector<Vector> MultilevelSampler::sample_noise(int level, Engine& engine) const {
  std::vector<Vector> out;
  for (int l = 0; l <= level; ++l) out.push_back(standard_normal(noise_size(l), engine));
  return out;
}

void write_field_csv(std::ostream& out, const MeshLevel& mesh, const Vector& theta,
                     std::string_view extra) {
  if (theta.size() != mesh.num_nodes())
    throw InvalidArgument("write_field_csv: field length does not match the mesh");
  out.precision(17);
  out << "# level=" << mesh.level << " h=" << mesh.h;
  if (!extra.empty()) out << ' ' << extra;
  out << "\nx,y,theta\n";
  for (Index k = 0; k < mesh.num_nodes(); ++k) {
    const auto& p = mesh.nodes[static_cast<std::size_t>(k)];
    out << p.x << ',' << p.y << ',' << theta[k] << '\n';
  }
}

} // namespace hgrf
