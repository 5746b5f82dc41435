// SPDX-License-Identifier: Apache-2.0
#pragma once

// Gaussian random field samplers and the hierarchical noise decompositions.
//
// Notation used in comments: for level l, M_l is the consistent mass matrix,
// F_l its lower Cholesky factor, A_l = S_l + kappa^2 M_l, P the prolongation
// from l to l+1 and Pi = M_l^{-1} P^T M_{l+1} the mass-weighted restriction.
// A forcing vector zeta lives in the dual space: zeta = M W, and a field is
// theta = sigma g A^{-1} zeta.

#include "hgrf/fem_operators.hpp"
#include "hgrf/mesh_hierarchy.hpp"
#include "hgrf/random.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace hgrf {

struct WhiteNoise {
  int level = 0;
  Vector xi;
};

struct FieldRealization {
  int level = 0;
  Vector theta;
};

WhiteNoise sample_white_noise(int level, Index n, Engine& engine);

/// theta = sigma g A^{-1} F xi.
FieldRealization spde_sample(const SpdeOperators& ops, const Vector& xi);

/// theta = sigma g A^{-1} zeta for an already formed forcing vector.
FieldRealization spde_from_forcing(const SpdeOperators& ops, const Vector& zeta);

/// Truncated discrete Karhunen-Loeve basis of the coarse SPDE covariance
/// C = g^2 A^{-1} M A^{-1} (unit marginal variance scale; sigma is applied
/// at sampling time).
///
/// Phi holds M-orthonormal field modes with C M phi_i = lambda_i phi_i.
/// Psi holds the matching white-noise modes psi_i = sqrt(lambda_i)/g
/// M^{-1} A phi_i, which are also M-orthonormal and satisfy
/// g A^{-1} M psi_i = sqrt(lambda_i) phi_i.
struct KlBasis {
  int level = 0;
  Index m = 0;
  double g = 0.0;
  double sigma = 1.0;
  Vector lambdas;  // length m, non-increasing
  DenseMatrix Phi; // n x m
  DenseMatrix Psi; // n x m
};

KlBasis compute_kl_basis(const SpdeOperators& ops0, Index m);

/// theta = sigma sum_i sqrt(lambda_i) xi_hat_i phi_i.
FieldRealization kl_sample(const KlBasis& basis, const Vector& xi_hat);

/// zeta~_L = Pi^T zeta_c + (I - Pi^T P^T) F_L xi_L.
/// With zeta_c ~ N(0, M_c) the result has covariance M_L exactly.
Vector mg_decompose(const Vector& zeta_coarse, const Vector& xi_fine,
                    const SpdeOperators& coarse, const SpdeOperators& fine,
                    const TransferOperator& transfer);

/// Precomputed lifts of the coarse KL white-noise modes to a finer level.
struct KlCoupling {
  DenseMatrix lifted;      // P Psi
  DenseMatrix mass_lifted; // M_L P Psi
};

KlCoupling make_kl_coupling(const KlBasis& basis, const SpdeOperators& fine,
                            const TransferOperator& transfer);

/// zeta~_L = M_L P Psi xi_hat + (I - M_L P Psi Psi^T P^T) F_L xi_L.
///
/// Uses the M-orthogonal projector Psi Psi^T M_c onto span(Psi), so the
/// covariance of M_L^{-1} zeta~_L is M_L^{-1} exactly for any truncation m.
Vector kl_spde_decompose(const Vector& xi_hat, const Vector& xi_fine,
                         const KlCoupling& coupling, const SpdeOperators& fine);

Vector kl_spde_decompose(const Vector& xi_hat, const Vector& xi_fine, const KlBasis& basis,
                         const SpdeOperators& fine, const TransferOperator& transfer);

enum class CoarsestSampler { Spde, Kl };

std::string_view to_string(CoarsestSampler s);
CoarsestSampler parse_coarsest_sampler(std::string_view s);

/// Composes multilevel fields from per-level noise.
///
/// The noise state for level l is {xi_0, xi_1, ..., xi_l}: xi_0 is the full
/// coarse noise (length n_0 for SPDE, m for KL) and xi_k, k >= 1, is the
/// complement noise on level k (length n_k). Immutable after construction;
/// `hier` and `ops` are referenced, not copied, and must outlive it.
class MultilevelSampler {
public:
  MultilevelSampler(const Hierarchy& hier, const std::vector<SpdeOperators>& ops,
                    CoarsestSampler coarsest, Index kl_modes = 0);

  int finest() const { return static_cast<int>(ops_->size()) - 1; }
  CoarsestSampler coarsest() const { return coarsest_; }
  Index noise_size(int level) const;
  const std::optional<KlBasis>& kl_basis() const { return basis_; }
  const SpdeOperators& ops(int level) const { return (*ops_)[static_cast<std::size_t>(level)]; }
  const Hierarchy& hierarchy() const { return *hier_; }

  /// Forcing zeta~ on `level` from noise[0..level].
  Vector forcing(int level, std::span<const Vector> noise) const;

  /// One decomposition step: forcing on `level` (>= 1) from the forcing on
  /// level - 1 and the complement noise on `level`. For a KL coarsest
  /// level, level 1 uses the coarse coefficients instead of a forcing.
  Vector lift(int level, const Vector& coarse_forcing, std::span<const Vector> noise) const;

  /// Forcing on level 0 from xi_0 (F_0 xi_0, or M_0 Psi xi_hat for KL).
  Vector coarsest_forcing(const Vector& xi0) const;

  FieldRealization field(int level, std::span<const Vector> noise) const;
  FieldRealization field_from_forcing(int level, const Vector& forcing) const;

  /// The two parts of a multilevel field on `level` >= 1: the lifted coarse
  /// term and the complement term. Their sum is field(level, noise).
  std::pair<FieldRealization, FieldRealization> split(int level,
                                                      std::span<const Vector> noise) const;

  /// Draws a full noise state up to `level`.
  std::vector<Vector> sample_noise(int level, Engine& engine) const;

private:
  const Hierarchy* hier_;
  const std::vector<SpdeOperators>* ops_;
  CoarsestSampler coarsest_;
  std::optional<KlBasis> basis_;
  std::optional<KlCoupling> coupling_;
};

/// Writes a header line `# level=<l> h=<h>` (plus `extra`, if given) followed by
/// `x,y,theta` rows.
void write_field_csv(std::ostream& out, const MeshLevel& mesh, const Vector& theta,
                     std::string_view extra = {});

} // namespace hgrf
