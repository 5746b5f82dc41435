// SPDX-License-Identifier: Apache-2.0
#include "hgrf/mesh_hierarchy.hpp"

#include "hgrf/linear_kernels.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace hgrf {

std::string_view to_string(BoundaryTag tag) {
  switch (tag) {
  case BoundaryTag::Interior:
    return "interior";
  case BoundaryTag::Left:
    return "left";
  case BoundaryTag::Right:
    return "right";
  case BoundaryTag::Bottom:
    return "bottom";
  case BoundaryTag::Top:
    return "top";
  }
  return "unknown";
}

Point MeshLevel::centroid(int element) const {
  const int i = element % cells;
  const int j = element / cells;
  return {(i + 0.5) * h, (j + 0.5) * h};
}

namespace {

// Cell index along one axis; coordinates on a grid line go to the lower cell.
int cell_index(double t, int cells) {
  const double s = t * cells;
  const double r = std::round(s);
  int k = std::abs(s - r) < 1e-9 ? static_cast<int>(r) - 1 : static_cast<int>(std::floor(s));
  if (k < 0) k = 0;
  if (k > cells - 1) k = cells - 1;
  return k;
}

} // namespace

int MeshLevel::locate(Point p) const {
  constexpr double tol = 1e-12;
  if (!(p.x >= -tol && p.x <= 1.0 + tol && p.y >= -tol && p.y <= 1.0 + tol))
    throw InvalidArgument("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                          ") lies outside the unit square");
  return element_id(cell_index(p.x, cells), cell_index(p.y, cells));
}

MeshLevel make_unit_square(int cells, int level) {
  if (cells < 1) throw InvalidArgument("mesh needs at least one cell per side");
  MeshLevel m;
  m.level = level;
  m.cells = cells;
  m.h = 1.0 / cells;
  const int np = cells + 1;

  m.nodes.reserve(static_cast<std::size_t>(np) * np);
  m.node_tags.reserve(m.nodes.capacity());
  for (int j = 0; j < np; ++j) {
    for (int i = 0; i < np; ++i) {
      m.nodes.push_back({i * m.h, j * m.h});
      BoundaryTag tag = BoundaryTag::Interior;
      if (j == 0) tag = BoundaryTag::Bottom;
      if (j == cells) tag = BoundaryTag::Top;
      if (i == 0) tag = BoundaryTag::Left;
      if (i == cells) tag = BoundaryTag::Right;
      m.node_tags.push_back(tag);
    }
  }
  // Exact coordinates at the far boundary.
  for (int k = 0; k < np; ++k) {
    m.nodes[static_cast<std::size_t>(m.node_id(cells, k))].x = 1.0;
    m.nodes[static_cast<std::size_t>(m.node_id(k, cells))].y = 1.0;
  }

  m.elements.reserve(static_cast<std::size_t>(cells) * cells);
  for (int j = 0; j < cells; ++j)
    for (int i = 0; i < cells; ++i)
      m.elements.push_back({m.node_id(i, j), m.node_id(i + 1, j), m.node_id(i + 1, j + 1),
                            m.node_id(i, j + 1)});

  const std::size_t n_edges = 2u * static_cast<std::size_t>(cells) * np;
  m.edges.reserve(n_edges);
  m.edge_tags.reserve(n_edges);
  for (int j = 0; j < np; ++j) {
    for (int i = 0; i < cells; ++i) {
      m.edges.push_back({m.node_id(i, j), m.node_id(i + 1, j)});
      m.edge_tags.push_back(j == 0       ? BoundaryTag::Bottom
                            : j == cells ? BoundaryTag::Top
                                         : BoundaryTag::Interior);
    }
  }
  for (int j = 0; j < cells; ++j) {
    for (int i = 0; i < np; ++i) {
      m.edges.push_back({m.node_id(i, j), m.node_id(i, j + 1)});
      m.edge_tags.push_back(i == 0       ? BoundaryTag::Left
                            : i == cells ? BoundaryTag::Right
                                         : BoundaryTag::Interior);
    }
  }
  return m;
}

TransferOperator build_prolongation(const MeshLevel& coarse, const MeshLevel& fine) {
  if (fine.cells != 2 * coarse.cells)
    throw InvalidArgument("build_prolongation: meshes are not related by one uniform refinement");
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(fine.num_nodes()) * 4);
  const int nf = fine.cells + 1;
  for (int J = 0; J < nf; ++J) {
    for (int I = 0; I < nf; ++I) {
      const int row = fine.node_id(I, J);
      const int i0 = I / 2;
      const int j0 = J / 2;
      const bool xi = (I % 2) == 1;
      const bool yi = (J % 2) == 1;
      if (!xi && !yi) {
        trips.emplace_back(row, coarse.node_id(i0, j0), 1.0);
      } else if (xi && !yi) {
        trips.emplace_back(row, coarse.node_id(i0, j0), 0.5);
        trips.emplace_back(row, coarse.node_id(i0 + 1, j0), 0.5);
      } else if (!xi && yi) {
        trips.emplace_back(row, coarse.node_id(i0, j0), 0.5);
        trips.emplace_back(row, coarse.node_id(i0, j0 + 1), 0.5);
      } else {
        trips.emplace_back(row, coarse.node_id(i0, j0), 0.25);
        trips.emplace_back(row, coarse.node_id(i0 + 1, j0), 0.25);
        trips.emplace_back(row, coarse.node_id(i0, j0 + 1), 0.25);
        trips.emplace_back(row, coarse.node_id(i0 + 1, j0 + 1), 0.25);
      }
    }
  }
  TransferOperator t;
  t.coarse_level = coarse.level;
  t.P.resize(fine.num_nodes(), coarse.num_nodes());
  t.P.setFromTriplets(trips.begin(), trips.end());
  t.P.makeCompressed();
  return t;
}

Hierarchy build_hierarchy(double h0, int finest_level) {
  if (!(h0 > 0.0) || !(h0 <= 1.0))
    throw InvalidArgument("build_hierarchy: h0 must lie in (0, 1]");
  if (finest_level < 0) throw InvalidArgument("build_hierarchy: finest level must be >= 0");
  const double inv = 1.0 / h0;
  const double rounded = std::round(inv);
  if (std::abs(inv - rounded) > 1e-9 * rounded)
    throw InvalidArgument("build_hierarchy: 1/h0 = " + std::to_string(inv) +
                          " is not an integer, so h0 does not divide the unit square");
  if (finest_level > 12) throw InvalidArgument("build_hierarchy: finest level too large");

  Hierarchy hier;
  int cells = static_cast<int>(rounded);
  for (int l = 0; l <= finest_level; ++l) {
    hier.levels.push_back(make_unit_square(cells, l));
    cells *= 2;
  }
  for (int l = 0; l < finest_level; ++l)
    hier.transfers.push_back(build_prolongation(hier.levels[static_cast<std::size_t>(l)],
                                                hier.levels[static_cast<std::size_t>(l) + 1]));
  return hier;
}

const TransferOperator& prolongation(const Hierarchy& hier, int level) {
  if (level < 0 || level >= hier.finest())
    throw InvalidArgument("prolongation: level " + std::to_string(level) +
                          " has no finer level (finest is " + std::to_string(hier.finest()) + ")");
  return hier.transfers[static_cast<std::size_t>(level)];
}

Vector restriction_apply(const SparseMatrix& P, const SpdFactor& mass_coarse,
                         const SparseMatrix& mass_fine, const Vector& v_fine) {
  if (v_fine.size() != P.rows() || mass_fine.rows() != P.rows() ||
      mass_coarse.size() != P.cols())
    throw InvalidArgument("restriction_apply: dimension mismatch");
  const Vector rhs = P.transpose() * (mass_fine * v_fine);
  return mass_coarse.solve(rhs);
}

void write_mesh_csv(std::ostream& out, const MeshLevel& mesh) {
  out << "node_id,x,y,boundary_tag\n";
  out.precision(17);
  for (Index k = 0; k < mesh.num_nodes(); ++k) {
    const auto& p = mesh.nodes[static_cast<std::size_t>(k)];
    out << k << ',' << p.x << ',' << p.y << ','
        << to_string(mesh.node_tags[static_cast<std::size_t>(k)]) << '\n';
  }
}

} // namespace hgrf
