// SPDX-License-Identifier: Apache-2.0
#pragma once

// Mixed RT0 x P0 Darcy solver on the structured unit-square mesh.
//
//   k^{-1} u + grad p = 0,  div u = 0,
//   p = p_left on x = 0, p = p_right on x = 1, u.n = 0 on y = 0 and y = 1.
//
// Flux unknowns are the normal velocity on each edge, measured along the
// edge's global normal (+x for vertical edges, +y for horizontal ones).

#include "hgrf/mesh_hierarchy.hpp"

#include <Eigen/SparseLU>

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string_view>
#include <vector>

namespace hgrf {

struct DarcyBoundary {
  double p_left = -1.0;
  double p_right = 0.0;
};

struct DarcySolution {
  Vector u; // per edge
  Vector p; // per element
  double divergence_residual = 0.0;
};

/// k_e = exp(theta at the element centroid), the centroid value of the
/// bilinear field being the mean of its four nodal values.
Vector project_permeability(const MeshLevel& mesh, const Vector& theta);

/// Assembles and factorizes the saddle-point system for one mesh. The
/// sparsity pattern is analysed once; each solve refactorizes numerically.
/// Not thread-safe: use one instance per chain.
class DarcySolver {
public:
  explicit DarcySolver(const MeshLevel& mesh, DarcyBoundary bc = {});
  ~DarcySolver();
  DarcySolver(DarcySolver&&) noexcept;
  DarcySolver& operator=(DarcySolver&&) noexcept;

  const MeshLevel& mesh() const { return *mesh_; }

  /// Throws NumericalError if the factorization fails or mass conservation
  /// is violated by more than 1e-8.
  DarcySolution solve(const Vector& permeability);

private:
  struct Impl;
  const MeshLevel* mesh_;
  std::unique_ptr<Impl> impl_;
};

/// Convenience one-shot solve.
DarcySolution solve_darcy(const MeshLevel& mesh, const Vector& permeability,
                          DarcyBoundary bc = {});

/// Net outward flux per element, u_right - u_left + u_top - u_bottom, times h.
Vector element_net_flux(const MeshLevel& mesh, const DarcySolution& sol);

/// Mean outward normal flux over the left boundary.
double compute_qoi(const DarcySolution& sol, const MeshLevel& mesh);

/// P0 pressure of the element containing each point.
Vector observe(const DarcySolution& sol, const MeshLevel& mesh, const std::vector<Point>& points);

/// The fixed 10 x 10 observation lattice ((i + 0.5)/10, (j + 0.5)/10).
std::vector<Point> observation_lattice(int per_side = 10);

struct ObservationSet {
  std::vector<Point> points;
  Vector values;
  double sigma_eta = 0.1;
  double reference_h = 0.0;
  std::uint64_t seed = 0;
};

/// -||y_model - y_obs||^2 / (2 sigma_eta^2); the normalization is dropped.
double log_likelihood(const Vector& y_model, const ObservationSet& obs);

/// Writes `x_centroid,y_centroid,p` rows after an optional `# ...` line.
void write_pressure_csv(std::ostream& out, const MeshLevel& mesh, const Vector& p,
                        std::string_view header = {});

} // namespace hgrf
