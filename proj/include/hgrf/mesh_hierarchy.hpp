// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hgrf/types.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace hgrf {

class SpdFactor;

enum class BoundaryTag : std::uint8_t { Interior, Left, Right, Bottom, Top };

std::string_view to_string(BoundaryTag tag);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Uniform quadrilateral mesh of the unit square with `cells` cells per side.
///
/// Numbering is row-major in (y, x):
///   node (i, j)      -> j * (cells + 1) + i
///   element (i, j)   -> j * cells + i, corners counter-clockwise from the
///                       lower-left node
///   horizontal edge  -> j * cells + i,                  j in [0, cells]
///   vertical edge    -> cells * (cells + 1) + j * (cells + 1) + i
///
/// Edge normals are globally oriented: +y for horizontal edges, +x for
/// vertical edges. Corner nodes carry the Left/Right tag.
struct MeshLevel {
  int level = 0;
  int cells = 0;
  double h = 0.0;
  std::vector<Point> nodes;
  std::vector<std::array<int, 4>> elements;
  std::vector<std::array<int, 2>> edges;
  std::vector<BoundaryTag> node_tags;
  std::vector<BoundaryTag> edge_tags;

  Index num_nodes() const { return static_cast<Index>(nodes.size()); }
  Index num_elements() const { return static_cast<Index>(elements.size()); }
  Index num_edges() const { return static_cast<Index>(edges.size()); }

  int node_id(int i, int j) const { return j * (cells + 1) + i; }
  int element_id(int i, int j) const { return j * cells + i; }
  int horizontal_edge(int i, int j) const { return j * cells + i; }
  int vertical_edge(int i, int j) const {
    return cells * (cells + 1) + j * (cells + 1) + i;
  }
  bool is_vertical(int edge) const { return edge >= cells * (cells + 1); }

  Point centroid(int element) const;

  /// Element containing `p`. Points on a grid line go to the lower/left
  /// neighbour. Throws InvalidArgument outside the closed unit square.
  int locate(Point p) const;
};

/// Builds a single mesh with `cells` cells per side.
MeshLevel make_unit_square(int cells, int level = 0);

/// Bilinear interpolation from one level to the next (fine nodes x coarse
/// nodes).
struct TransferOperator {
  int coarse_level = 0;
  SparseMatrix P;
};

struct Hierarchy {
  std::vector<MeshLevel> levels;
  std::vector<TransferOperator> transfers; // transfers[l] maps l -> l + 1

  int finest() const { return static_cast<int>(levels.size()) - 1; }
};

/// Meshes with h = h0 * 0.5^l for l = 0..finest_level.
Hierarchy build_hierarchy(double h0, int finest_level);

/// Transfer from `level` to `level + 1`.
const TransferOperator& prolongation(const Hierarchy& hier, int level);

/// Builds the bilinear prolongation between two nested meshes.
TransferOperator build_prolongation(const MeshLevel& coarse, const MeshLevel& fine);

/// v_coarse = M_c^{-1} P^T M_f v_fine.
Vector restriction_apply(const SparseMatrix& P, const SpdFactor& mass_coarse,
                         const SparseMatrix& mass_fine, const Vector& v_fine);

/// Writes `node_id,x,y,boundary_tag`.
void write_mesh_csv(std::ostream& out, const MeshLevel& mesh);

} // namespace hgrf
