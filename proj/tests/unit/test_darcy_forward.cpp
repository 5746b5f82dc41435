// SPDX-License-Identifier: Apache-2.0
#include "hgrf/darcy_forward.hpp"
#include "hgrf/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace hgrf;

namespace {

Vector random_k(const MeshLevel& m, unsigned seed, double scale = 1.0) {
  Engine eng = make_engine({seed, 0, 0, 0, StreamPurpose::Test});
  return (scale * standard_normal(m.num_elements(), eng)).array().exp();
}

// Layered permeability k(x): the flux through every vertical line equals
// the harmonic-mean conductance 1 / (h sum_i 1/k_i).
double layered_flux(const MeshLevel& m, const Vector& k) {
  const int n = static_cast<int>(std::lround(1.0 / m.h));
  double r = 0.0;
  for (int i = 0; i < n; ++i) r += m.h / k[m.element_id(i, 0)];
  return 1.0 / r;
}

} // namespace

TEST(Darcy, UnitPermeabilityGivesUnitFluxAndAffinePressure) {
  const MeshLevel m = make_unit_square(10, 0);
  const DarcySolution s = solve_darcy(m, Vector::Ones(m.num_elements()));
  EXPECT_NEAR(compute_qoi(s, m), 1.0, 1e-10);
  for (Index e = 0; e < m.num_elements(); ++e)
    EXPECT_NEAR(s.p[e], m.centroid(static_cast<int>(e)).x - 1.0, 1e-10);
  for (Index e = 0; e < m.num_edges(); ++e) {
    const double expect = m.is_vertical(static_cast<int>(e)) ? -1.0 : 0.0;
    EXPECT_NEAR(s.u[e], expect, 1e-10);
  }
}

TEST(Darcy, ObservedPressureAtSampleLocation) {
  const MeshLevel m = make_unit_square(10, 0);
  const DarcySolution s = solve_darcy(m, Vector::Ones(m.num_elements()));
  const Vector y = observe(s, m, {{0.55, 0.5}});
  EXPECT_NEAR(y[0], -0.45, 1e-10);
}

TEST(Darcy, ConstantPermeabilityScalesFlux) {
  const MeshLevel m = make_unit_square(8, 0);
  for (double c : {0.1, 2.5, 40.0}) {
    const DarcySolution s = solve_darcy(m, Vector::Constant(m.num_elements(), c));
    EXPECT_NEAR(compute_qoi(s, m), c, 1e-9 * c);
  }
}

TEST(Darcy, DoublingPermeabilityDoublesVelocity) {
  const MeshLevel m = make_unit_square(8, 0);
  const Vector k = random_k(m, 11);
  const DarcySolution a = solve_darcy(m, k);
  const DarcySolution b = solve_darcy(m, 2.0 * k);
  EXPECT_LE((b.u - 2.0 * a.u).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((b.p - a.p).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Darcy, SwappedBoundaryValuesNegateFlux) {
  const MeshLevel m = make_unit_square(8, 0);
  const Vector k = random_k(m, 12);
  const double q = compute_qoi(solve_darcy(m, k), m);
  const double qs = compute_qoi(solve_darcy(m, k, {0.0, -1.0}), m);
  EXPECT_NEAR(qs, -q, 1e-9);
  EXPECT_GT(q, 0.0);
}

TEST(Darcy, LayeredPermeabilityMatchesHarmonicMean) {
  const MeshLevel m = make_unit_square(16, 0);
  Vector k(m.num_elements());
  for (Index e = 0; e < m.num_elements(); ++e) k[e] = std::exp(std::sin(6.0 * m.centroid(static_cast<int>(e)).x));
  EXPECT_NEAR(compute_qoi(solve_darcy(m, k), m), layered_flux(m, k), 1e-9);
}

TEST(Darcy, MassConservationForRoughPermeability) {
  const MeshLevel m = make_unit_square(20, 0);
  const DarcySolution s = solve_darcy(m, random_k(m, 13, 2.0));
  EXPECT_LE(element_net_flux(m, s).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE(s.divergence_residual, 1e-8);
  // top and bottom are closed
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(s.u[m.horizontal_edge(i, 0)], 0.0);
    EXPECT_EQ(s.u[m.horizontal_edge(i, 20)], 0.0);
  }
}

TEST(Darcy, FluxIsContinuousInPermeability) {
  const MeshLevel m = make_unit_square(10, 0);
  const Vector k = random_k(m, 14);
  const double q0 = compute_qoi(solve_darcy(m, k), m);
  double prev = 1.0;
  for (double d : {1e-2, 1e-3, 1e-4}) {
    const double diff = std::abs(compute_qoi(solve_darcy(m, k * (1.0 + d)), m) - q0);
    EXPECT_NEAR(diff, d * q0, 1e-8);
    EXPECT_LT(diff, prev);
    prev = diff;
  }
}

// k = exp(x): the continuum flux is 1 / (1 - e^-1). Centroid sampling of k
// gives a midpoint-rule error, so the observed order must be at least one.
TEST(Darcy, RefinementConverges) {
  const double exact = 1.0 / (1.0 - std::exp(-1.0));
  double prev = 0.0;
  for (int n : {4, 8, 16, 32}) {
    const MeshLevel m = make_unit_square(n, 0);
    Vector theta(m.num_nodes());
    for (Index v = 0; v < m.num_nodes(); ++v) theta[v] = m.nodes[static_cast<std::size_t>(v)].x;
    const double err = std::abs(compute_qoi(solve_darcy(m, project_permeability(m, theta)), m) - exact);
    if (prev > 0.0) EXPECT_LE(err, 0.55 * prev) << n;
    prev = err;
  }
  EXPECT_LE(prev, 1e-3);
}

TEST(Darcy, PermeabilityProjectionUsesCentroidMean) {
  const MeshLevel m = make_unit_square(2, 0);
  Vector theta = Vector::Zero(9);
  theta[m.node_id(1, 1)] = 4.0;
  const Vector k = project_permeability(m, theta);
  for (Index e = 0; e < 4; ++e) EXPECT_NEAR(k[e], std::exp(1.0), 1e-14);
  EXPECT_THROW(project_permeability(m, Vector::Zero(4)), InvalidArgument);
}

TEST(Darcy, SolverReusedAcrossPermeabilities) {
  const MeshLevel m = make_unit_square(8, 0);
  DarcySolver solver(m);
  for (unsigned s = 0; s < 3; ++s) {
    const Vector k = random_k(m, 20 + s);
    const DarcySolution a = solver.solve(k);
    const DarcySolution b = solve_darcy(m, k);
    EXPECT_LE((a.p - b.p).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Darcy, InvalidPermeability) {
  const MeshLevel m = make_unit_square(4, 0);
  DarcySolver solver(m);
  EXPECT_THROW(solver.solve(Vector::Ones(3)), InvalidArgument);
  Vector k = Vector::Ones(16);
  k[5] = 0.0;
  EXPECT_THROW(solver.solve(k), NumericalError);
  k[5] = std::nan("");
  EXPECT_THROW(solver.solve(k), NumericalError);
}

TEST(Likelihood, GaussianMisfit) {
  ObservationSet obs;
  obs.points = {{0.1, 0.1}, {0.2, 0.2}};
  obs.values = Vector(2);
  obs.values << 1.0, 0.0;
  obs.sigma_eta = 0.5;
  Vector y(2);
  y << 1.0, 2.0;
  EXPECT_NEAR(log_likelihood(y, obs), -8.0, 1e-14);
  EXPECT_EQ(log_likelihood(obs.values, obs), 0.0);
  EXPECT_THROW(log_likelihood(Vector::Zero(3), obs), InvalidArgument);
  obs.sigma_eta = 0.0;
  EXPECT_THROW(log_likelihood(y, obs), InvalidArgument);
}

TEST(Observation, LatticeLayout) {
  const auto pts = observation_lattice();
  ASSERT_EQ(pts.size(), 100u);
  EXPECT_DOUBLE_EQ(pts.front().x, 0.05);
  EXPECT_DOUBLE_EQ(pts.front().y, 0.05);
  EXPECT_DOUBLE_EQ(pts.back().x, 0.95);
  EXPECT_DOUBLE_EQ(pts.back().y, 0.95);
  for (const auto& p : pts) {
    EXPECT_GT(p.x, 0.0);
    EXPECT_LT(p.y, 1.0);
  }
}

TEST(Observation, PressureCsv) {
  const MeshLevel m = make_unit_square(2, 0);
  std::ostringstream os;
  write_pressure_csv(os, m, Vector::Constant(4, -0.5), "level=0");
  EXPECT_EQ(os.str().rfind("# level=0\nx_centroid,y_centroid,p\n", 0), 0u);
  EXPECT_NE(os.str().find("0.25,0.25,-0.5"), std::string::npos);
  EXPECT_THROW(write_pressure_csv(os, m, Vector::Zero(3)), InvalidArgument);
}
