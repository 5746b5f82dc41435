// SPDX-License-Identifier: Apache-2.0
#include "hgrf/darcy_forward.hpp"

#include "hgrf/simd/kernels.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <ostream>
#include <string>

namespace hgrf {

Vector project_permeability(const MeshLevel& mesh, const Vector& theta) {
  if (theta.size() != mesh.num_nodes())
    throw InvalidArgument("project_permeability: field length " + std::to_string(theta.size()) +
                          " does not match node count " + std::to_string(mesh.num_nodes()));
  Vector k(mesh.num_elements());
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.elements[static_cast<std::size_t>(e)];
    const double centre = 0.25 * (theta[el[0]] + theta[el[1]] + theta[el[2]] + theta[el[3]]);
    k[e] = std::exp(centre);
  }
  return k;
}

struct DarcySolver::Impl {
  DarcyBoundary bc;
  Index n_edges = 0;
  Index n_cells = 0;
  std::vector<Triplet> triplets;
  SparseMatrix K;     // the saddle-point matrix
  SparseMatrix K_reg; // K with -delta on the pressure diagonal
  Vector rhs;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  bool ldlt_analysed = false;
  bool lu_analysed = false;

  bool solve_refined(Vector& x) {
    ldlt.factorize(K_reg);
    if (ldlt.info() != Eigen::Success) return false;
    const double bnorm = rhs.norm();
    x = ldlt.solve(rhs);
    for (int it = 0; it < 8; ++it) {
      const Vector r = rhs - K * x;
      if (!r.allFinite()) return false;
      if (r.norm() <= 1e-13 * bnorm) return true;
      x += ldlt.solve(r);
    }
    return (rhs - K * x).norm() <= 1e-13 * bnorm;
  }

  bool solve_lu(Vector& x) {
    if (!lu_analysed) {
      lu.analyzePattern(K);
      lu_analysed = true;
    }
    lu.factorize(K);
    if (lu.info() != Eigen::Success) return false;
    x = lu.solve(rhs);
    return lu.info() == Eigen::Success && x.allFinite();
  }
};

namespace {

struct CellEdges {
  int left, right, bottom, top;
};

CellEdges cell_edges(const MeshLevel& m, int i, int j) {
  return {m.vertical_edge(i, j), m.vertical_edge(i + 1, j), m.horizontal_edge(i, j),
          m.horizontal_edge(i, j + 1)};
}

bool is_no_flux(const MeshLevel& m, int edge) {
  const auto tag = m.edge_tags[static_cast<std::size_t>(edge)];
  return tag == BoundaryTag::Top || tag == BoundaryTag::Bottom;
}

} // namespace

DarcySolver::DarcySolver(const MeshLevel& mesh, DarcyBoundary bc)
    : mesh_(&mesh), impl_(std::make_unique<Impl>()) {
  impl_->bc = bc;
  impl_->n_edges = mesh.num_edges();
  impl_->n_cells = mesh.num_elements();
  const Index n = impl_->n_edges + impl_->n_cells;
  impl_->K.resize(n, n);
  impl_->rhs = Vector::Zero(n);
  const double h = mesh.h;
  for (int j = 0; j < mesh.cells; ++j) {
    impl_->rhs[mesh.vertical_edge(0, j)] = bc.p_left * h;
    impl_->rhs[mesh.vertical_edge(mesh.cells, j)] = -bc.p_right * h;
  }
}

DarcySolver::~DarcySolver() = default;
DarcySolver::DarcySolver(DarcySolver&&) noexcept = default;
DarcySolver& DarcySolver::operator=(DarcySolver&&) noexcept = default;

DarcySolution DarcySolver::solve(const Vector& permeability) {
  const MeshLevel& m = *mesh_;
  Impl& s = *impl_;
  if (permeability.size() != s.n_cells)
    throw InvalidArgument("DarcySolver::solve: permeability has length " +
                          std::to_string(permeability.size()) + ", expected " +
                          std::to_string(s.n_cells));
  const double h = m.h;
  const double diag = h * h / 3.0;
  const double off = h * h / 6.0;

  auto& trips = s.triplets;
  trips.clear();
  trips.reserve(static_cast<std::size_t>(s.n_cells) * 16 + static_cast<std::size_t>(s.n_edges));
  for (int e = 0; e < s.n_edges; ++e)
    if (is_no_flux(m, e)) trips.emplace_back(e, e, 1.0);

  for (int j = 0; j < m.cells; ++j) {
    for (int i = 0; i < m.cells; ++i) {
      const int cell = m.element_id(i, j);
      const double k = permeability[cell];
      if (!(k > 0.0) || !std::isfinite(k))
        throw NumericalError("DarcySolver::solve: non-positive or non-finite permeability");
      const double kinv = 1.0 / k;
      const CellEdges ce = cell_edges(m, i, j);
      const int pairs[2][2] = {{ce.left, ce.right}, {ce.bottom, ce.top}};
      for (const auto& pr : pairs) {
        for (int a = 0; a < 2; ++a) {
          if (is_no_flux(m, pr[a])) continue;
          for (int b = 0; b < 2; ++b) {
            if (is_no_flux(m, pr[b])) continue;
            trips.emplace_back(pr[a], pr[b], kinv * (a == b ? diag : off));
          }
        }
      }
      const int pcol = static_cast<int>(s.n_edges) + cell;
      const int dof[4] = {ce.left, ce.right, ce.bottom, ce.top};
      const double sgn[4] = {-1.0, 1.0, -1.0, 1.0};
      for (int a = 0; a < 4; ++a) {
        if (is_no_flux(m, dof[a])) continue;
        const double v = -sgn[a] * h;
        trips.emplace_back(dof[a], pcol, v);
        trips.emplace_back(pcol, dof[a], v);
      }
    }
  }
  s.K.setFromTriplets(trips.begin(), trips.end());
  s.K.makeCompressed();

  // The zero pressure block has no LDL^T without pivoting; a tiny negative
  // shift makes it quasi-definite and refinement against K removes the shift.
  const double delta = 1e-8 * h * h;
  for (Index c = 0; c < s.n_cells; ++c)
    trips.emplace_back(static_cast<int>(s.n_edges + c), static_cast<int>(s.n_edges + c), -delta);
  s.K_reg.resize(s.K.rows(), s.K.cols());
  s.K_reg.setFromTriplets(trips.begin(), trips.end());
  s.K_reg.makeCompressed();
  if (!s.ldlt_analysed) {
    s.ldlt.analyzePattern(s.K_reg);
    s.ldlt_analysed = true;
  }
  Vector x;
  if (!s.solve_refined(x) && !s.solve_lu(x))
    throw NumericalError("DarcySolver::solve: saddle-point solve failed");

  DarcySolution sol;
  sol.u = x.head(s.n_edges);
  sol.p = x.tail(s.n_cells);
  sol.divergence_residual = element_net_flux(m, sol).cwiseAbs().maxCoeff();
  if (!(sol.divergence_residual <= 1e-8))
    throw NumericalError("DarcySolver::solve: discrete mass conservation violated",
                         sol.divergence_residual);
  return sol;
}

DarcySolution solve_darcy(const MeshLevel& mesh, const Vector& permeability, DarcyBoundary bc) {
  DarcySolver solver(mesh, bc);
  return solver.solve(permeability);
}

Vector element_net_flux(const MeshLevel& mesh, const DarcySolution& sol) {
  Vector net(mesh.num_elements());
  for (int j = 0; j < mesh.cells; ++j) {
    for (int i = 0; i < mesh.cells; ++i) {
      const CellEdges ce = cell_edges(mesh, i, j);
      net[mesh.element_id(i, j)] =
          mesh.h * (sol.u[ce.right] - sol.u[ce.left] + sol.u[ce.top] - sol.u[ce.bottom]);
    }
  }
  return net;
}

double compute_qoi(const DarcySolution& sol, const MeshLevel& mesh) {
  // Outward normal on the left boundary is -x.
  double flux = 0.0;
  for (int j = 0; j < mesh.cells; ++j) flux += -sol.u[mesh.vertical_edge(0, j)] * mesh.h;
  return flux / 1.0;
}

Vector observe(const DarcySolution& sol, const MeshLevel& mesh, const std::vector<Point>& points) {
  Vector out(static_cast<Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i)
    out[static_cast<Index>(i)] = sol.p[mesh.locate(points[i])];
  return out;
}

std::vector<Point> observation_lattice(int per_side) {
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(per_side) * per_side);
  for (int j = 0; j < per_side; ++j)
    for (int i = 0; i < per_side; ++i)
      pts.push_back({(i + 0.5) / per_side, (j + 0.5) / per_side});
  return pts;
}

double log_likelihood(const Vector& y_model, const ObservationSet& obs) {
  if (y_model.size() != obs.values.size())
    throw InvalidArgument("log_likelihood: model output has length " +
                          std::to_string(y_model.size()) + ", observations have " +
                          std::to_string(obs.values.size()));
  if (!(obs.sigma_eta > 0.0)) throw InvalidArgument("log_likelihood: sigma_eta must be > 0");
  const double sq = simd::squared_distance({y_model.data(), static_cast<std::size_t>(y_model.size())},
                                           {obs.values.data(), static_cast<std::size_t>(obs.values.size())});
  return -sq / (2.0 * obs.sigma_eta * obs.sigma_eta);
}

void write_pressure_csv(std::ostream& out, const MeshLevel& mesh, const Vector& p,
                        std::string_view header) {
  if (p.size() != mesh.num_elements())
    throw InvalidArgument("write_pressure_csv: pressure length does not match the mesh");
  out.precision(17);
  if (!header.empty()) out << "# " << header << '\n';
  out << "x_centroid,y_centroid,p\n";
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    const Point c = mesh.centroid(static_cast<int>(e));
    out << c.x << ',' << c.y << ',' << p[e] << '\n';
  }
}

} // namespace hgrf
