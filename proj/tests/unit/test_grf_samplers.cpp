// SPDX-License-Identifier: Apache-2.0
#include "hgrf/grf_samplers.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

using namespace hgrf;

namespace {

constexpr double kKappa = 1.0 / 0.3;

template <class F>
DenseMatrix columns(Index n_in, Index n_out, F&& apply) {
  DenseMatrix T(n_out, n_in);
  for (Index k = 0; k < n_in; ++k) T.col(k) = apply(Vector::Unit(n_in, k));
  return T;
}

// Dense covariance of the SPDE field, g^2 sigma^2 A^-1 M A^-1, formed
// without the sparse solvers.
DenseMatrix dense_spde_cov(const SpdeOperators& ops) {
  const DenseMatrix Ainv = DenseMatrix(ops.A).inverse();
  return ops.g * ops.g * ops.sigma * ops.sigma * Ainv * DenseMatrix(ops.M) * Ainv;
}

struct Fixture {
  Hierarchy hier = build_hierarchy(0.25, 2);
  std::vector<SpdeOperators> ops = assemble_spde_hierarchy(hier, kKappa, 1.0, 0.5);
};

} // namespace

TEST(Spde, SampleCovarianceMatchesDenseOracle) {
  const MeshLevel m = make_unit_square(4, 0);
  const SpdeOperators ops = assemble_spde_operator(m, kKappa, 1.0, 0.7);
  const DenseMatrix T = columns(ops.size(), ops.size(), [&](const Vector& e) {
    return spde_sample(ops, e).theta;
  });
  EXPECT_LE((T * T.transpose() - dense_spde_cov(ops)).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(Spde, ForcingRouteAgreesWithNoiseRoute) {
  const MeshLevel m = make_unit_square(4, 0);
  const SpdeOperators ops = assemble_spde_operator(m, kKappa, 1.0, 1.0);
  Engine eng = make_engine({3, 0, 0, 0, StreamPurpose::Test});
  const Vector xi = standard_normal(ops.size(), eng);
  const Vector a = spde_sample(ops, xi).theta;
  const Vector b = spde_from_forcing(ops, ops.F * xi).theta;
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_THROW(spde_sample(ops, Vector::Zero(3)), InvalidArgument);
}

TEST(WhiteNoise, LengthAndLevel) {
  Engine eng = make_engine({1, 0, 0, 0, StreamPurpose::Test});
  const WhiteNoise w = sample_white_noise(2, 17, eng);
  EXPECT_EQ(w.level, 2);
  EXPECT_EQ(w.xi.size(), 17);
}

TEST(KlBasis, OrthonormalEigenpairs) {
  const MeshLevel m = make_unit_square(4, 0);
  const SpdeOperators ops = assemble_spde_operator(m, kKappa, 1.0, 1.0);
  const KlBasis b = compute_kl_basis(ops, 6);
  const DenseMatrix M = DenseMatrix(ops.M);
  const DenseMatrix C = dense_spde_cov(ops);
  EXPECT_LE((b.Phi.transpose() * M * b.Phi - DenseMatrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((b.Psi.transpose() * M * b.Psi - DenseMatrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-10);
  for (Index i = 0; i < 6; ++i) {
    const Vector r = C * M * b.Phi.col(i) - b.lambdas[i] * b.Phi.col(i);
    EXPECT_LE(r.norm(), 1e-10 * b.lambdas[0]) << i;
    if (i > 0) EXPECT_LE(b.lambdas[i], b.lambdas[i - 1]);
    // g A^-1 M psi_i = sqrt(lambda_i) phi_i
    const Vector lhs = ops.g * DenseMatrix(ops.A).ldlt().solve(M * b.Psi.col(i));
    EXPECT_LE((lhs - std::sqrt(b.lambdas[i]) * b.Phi.col(i)).norm(), 1e-9);
  }
  EXPECT_THROW(compute_kl_basis(ops, 0), InvalidArgument);
  EXPECT_THROW(compute_kl_basis(ops, ops.size() + 1), InvalidArgument);
}

// With every mode kept, the KL field has the SPDE covariance.
TEST(KlBasis, FullBasisReproducesSpdeCovariance) {
  const MeshLevel m = make_unit_square(4, 0);
  const SpdeOperators ops = assemble_spde_operator(m, kKappa, 1.0, 0.4);
  const KlBasis b = compute_kl_basis(ops, ops.size());
  const DenseMatrix T = columns(ops.size(), ops.size(), [&](const Vector& e) {
    return kl_sample(b, e).theta;
  });
  const DenseMatrix C = dense_spde_cov(ops);
  EXPECT_LE((T * T.transpose() - C).cwiseAbs().maxCoeff(), 1e-10 * C.cwiseAbs().maxCoeff());
}

TEST(Decomposition, MultigridCovarianceIsFineMass) {
  Fixture f;
  for (int l = 0; l < 2; ++l) {
    const auto& c = f.ops[static_cast<std::size_t>(l)];
    const auto& fi = f.ops[static_cast<std::size_t>(l) + 1];
    const Index nc = c.size(), nf = fi.size();
    const DenseMatrix T = columns(nc + nf, nf, [&](const Vector& e) {
      return mg_decompose(c.F * e.head(nc), e.tail(nf), c, fi, f.hier.transfers[static_cast<std::size_t>(l)]);
    });
    EXPECT_LE((T * T.transpose() - DenseMatrix(fi.M)).cwiseAbs().maxCoeff(), 1e-12) << l;
  }
}

TEST(Decomposition, KlCovarianceIsFineMassForAnyTruncation) {
  Fixture f;
  const auto& c = f.ops[0];
  const auto& fi = f.ops[1];
  const Index nf = fi.size();
  for (Index m : {Index{1}, Index{4}, c.size()}) {
    const KlBasis b = compute_kl_basis(c, m);
    const DenseMatrix T = columns(m + nf, nf, [&](const Vector& e) {
      return kl_spde_decompose(e.head(m), e.tail(nf), b, fi, f.hier.transfers[0]);
    });
    EXPECT_LE((T * T.transpose() - DenseMatrix(fi.M)).cwiseAbs().maxCoeff(), 1e-12) << m;
  }
}

TEST(Decomposition, CoarsePartIsPreserved) {
  // Restricting the decomposed forcing recovers the coarse forcing: Pi^T
  // parts pass through, the complement is annihilated by P^T.
  Fixture f;
  const auto& c = f.ops[0];
  const auto& fi = f.ops[1];
  Engine eng = make_engine({5, 0, 0, 0, StreamPurpose::Test});
  const Vector zc = c.F * standard_normal(c.size(), eng);
  const Vector xf = standard_normal(fi.size(), eng);
  const Vector z = mg_decompose(zc, xf, c, fi, f.hier.transfers[0]);
  const Vector back = f.hier.transfers[0].P.transpose() * z;
  EXPECT_LE((back - zc).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MultilevelSampler, NoiseSizes) {
  Fixture f;
  const MultilevelSampler spde(f.hier, f.ops, CoarsestSampler::Spde);
  const MultilevelSampler kl(f.hier, f.ops, CoarsestSampler::Kl, 7);
  EXPECT_EQ(spde.noise_size(0), 25);
  EXPECT_EQ(kl.noise_size(0), 7);
  EXPECT_EQ(spde.noise_size(1), 81);
  EXPECT_EQ(kl.noise_size(2), 289);
  EXPECT_EQ(spde.finest(), 2);
  EXPECT_FALSE(spde.kl_basis().has_value());
  ASSERT_TRUE(kl.kl_basis().has_value());
  EXPECT_EQ(kl.kl_basis()->m, 7);
  EXPECT_THROW(MultilevelSampler(f.hier, f.ops, CoarsestSampler::Kl, 0), InvalidArgument);
}

TEST(MultilevelSampler, SplitSumsToField) {
  Fixture f;
  for (auto kind : {CoarsestSampler::Spde, CoarsestSampler::Kl}) {
    const MultilevelSampler s(f.hier, f.ops, kind, 5);
    Engine eng = make_engine({9, 0, 0, 0, StreamPurpose::Test});
    const auto noise = s.sample_noise(2, eng);
    ASSERT_EQ(noise.size(), 3u);
    for (int l = 1; l <= 2; ++l) {
      const auto [a, b] = s.split(l, std::span(noise).first(static_cast<std::size_t>(l) + 1));
      const Vector full = s.field(l, std::span(noise).first(static_cast<std::size_t>(l) + 1)).theta;
      EXPECT_LE((a.theta + b.theta - full).cwiseAbs().maxCoeff(), 1e-12);
    }
    // recursive lift equals the direct forcing
    const Vector z1 = s.lift(1, s.coarsest_forcing(noise[0]), std::span(noise).first(2));
    const Vector z2 = s.lift(2, z1, std::span(noise));
    EXPECT_LE((z2 - s.forcing(2, noise)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MultilevelSampler, KlLevelZeroMatchesKlSample) {
  Fixture f;
  const MultilevelSampler s(f.hier, f.ops, CoarsestSampler::Kl, 6);
  Engine eng = make_engine({2, 0, 0, 0, StreamPurpose::Test});
  const auto noise = s.sample_noise(0, eng);
  const Vector a = s.field(0, noise).theta;
  const Vector b = kl_sample(*s.kl_basis(), noise[0]).theta;
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MultilevelSampler, RejectsBadNoise) {
  Fixture f;
  const MultilevelSampler s(f.hier, f.ops, CoarsestSampler::Spde);
  std::vector<Vector> noise{Vector::Zero(25)};
  EXPECT_THROW(s.field(1, noise), InvalidArgument);
  noise.push_back(Vector::Zero(3));
  EXPECT_THROW(s.field(1, noise), InvalidArgument);
  EXPECT_THROW(s.noise_size(3), InvalidArgument);
}

TEST(Sampler, ParseNames) {
  EXPECT_EQ(parse_coarsest_sampler("kl"), CoarsestSampler::Kl);
  EXPECT_EQ(parse_coarsest_sampler("spde"), CoarsestSampler::Spde);
  EXPECT_THROW(parse_coarsest_sampler("pce"), InvalidArgument);
  EXPECT_EQ(to_string(CoarsestSampler::Kl), "kl");
}

TEST(FieldCsv, HeaderAndRows) {
  const MeshLevel m = make_unit_square(1, 0);
  std::ostringstream os;
  write_field_csv(os, m, Vector::Constant(4, 2.0), "seed=1");
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("# level=0 h=1", 0), 0u);
  EXPECT_NE(s.find("seed=1"), std::string::npos);
  EXPECT_NE(s.find("x,y,theta"), std::string::npos);
  EXPECT_NE(s.find("1,1,2"), std::string::npos);
}
