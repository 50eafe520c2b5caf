#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "graphnls/graph.hpp"

namespace graphnls {

/// Uniform grid on one edge. Node 0 sits on `from`, node `nodes - 1` on `to`.
struct EdgeGrid {
  std::size_t nodes = 2;
  double spacing = 0.0;
  std::size_t first_interior_dof = 0;
};

/// Per-edge uniform P1 grids with one shared degree of freedom per vertex.
/// DOFs 0..|V|-1 are the vertices; interior nodes follow edge by edge.
class Mesh {
 public:
  Mesh(MetricGraph graph, std::vector<std::size_t> nodes_per_edge);

  const MetricGraph& graph() const { return graph_; }
  const EdgeGrid& grid(std::size_t edge) const { return grids_[edge]; }
  std::size_t dof_count() const { return dofs_; }

  /// Global DOF of local node k on edge e.
  std::size_t dof(std::size_t edge, std::size_t node) const;
  double coordinate(std::size_t edge, std::size_t node) const;

  /// Trapezoid (lumped mass) weight of every DOF.
  const Eigen::VectorXd& lumped_mass() const { return lumped_mass_; }
  /// Stiffness matrix of the Dirichlet form of the P1 interpolant.
  const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }

  double max_spacing() const;
  double min_spacing() const;

 private:
  MetricGraph graph_;
  std::vector<EdgeGrid> grids_;
  std::size_t dofs_ = 0;
  Eigen::VectorXd lumped_mass_;
  Eigen::SparseMatrix<double> stiffness_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// n_e = max(2, ceil(l_e / h_target) + 1) on every edge.
MeshPtr build_mesh(const MetricGraph& graph, double h_target);
/// Default resolution min(l_e)/16.
double default_mesh_size(const MetricGraph& graph);

/// Real-valued P1 function on a mesh; vertex values are single-valued.
class GraphFunction {
 public:
  GraphFunction() = default;
  explicit GraphFunction(MeshPtr mesh);
  GraphFunction(MeshPtr mesh, Eigen::VectorXd values);

  const Mesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  double at(std::size_t edge, std::size_t node) const { return values_[mesh_->dof(edge, node)]; }
  /// Samples of the restriction to one edge, ordered from x = 0 to x = l_e.
  std::vector<double> edge_values(std::size_t edge) const;

  /// Build by sampling f(edge, x) at every node. Vertex values take the mean
  /// of the samples from all incident edge ends.
  template <typename F>
  static GraphFunction sample(MeshPtr mesh, F&& f);

 private:
  MeshPtr mesh_;
  Eigen::VectorXd values_;
};

template <typename F>
GraphFunction GraphFunction::sample(MeshPtr mesh, F&& f) {
  GraphFunction u(mesh);
  const auto& g = mesh->graph();
  std::vector<int> hits(g.vertex_count(), 0);
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const auto& grid = mesh->grid(e);
    for (std::size_t k = 0; k < grid.nodes; ++k) {
      const std::size_t d = mesh->dof(e, k);
      const double value = f(e, mesh->coordinate(e, k));
      if (d < g.vertex_count()) {
        u.values_[d] += value;
        ++hits[d];
      } else {
        u.values_[d] = value;
      }
    }
  }
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    if (hits[v] > 0) u.values_[v] /= hits[v];
  }
  return u;
}

/// Trapezoid quadrature of the squared L2 norm.
double mass(const GraphFunction& u);
/// Trapezoid quadrature of the integral of |u|^p, p >= 1.
double lp_norm_p(const GraphFunction& u, double p);
/// Exact Dirichlet energy of the P1 interpolant, ||u'||_2^2.
double dirichlet_energy(const GraphFunction& u);

/// Exact integral of |u|^p for the P1 interpolant (no lumping).
double exact_lp_norm_p(const GraphFunction& u, double p);
/// Exact integral of |f|^p for f linear on a cell of length h from a to b.
double exact_cell_lp(double a, double b, double h, double p);

/// CSV rows "edge_id,x,value", one per edge node, 17 significant digits.
void write_csv(std::ostream& out, const GraphFunction& u);
/// Inverse of write_csv on the same mesh. Vertex values must agree.
GraphFunction read_csv(std::istream& in, MeshPtr mesh);

}  // namespace graphnls
