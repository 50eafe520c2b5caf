#include "graphnls/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "graphnls/error.hpp"

namespace graphnls {

Mesh::Mesh(MetricGraph graph, std::vector<std::size_t> nodes_per_edge) : graph_(std::move(graph)) {
  if (nodes_per_edge.size() != graph_.edge_count())
    throw DomainError("mesh needs one node count per edge");
  dofs_ = graph_.vertex_count();
  grids_.reserve(nodes_per_edge.size());
  for (std::size_t e = 0; e < nodes_per_edge.size(); ++e) {
    const auto n = nodes_per_edge[e];
    if (n < 2) throw DomainError("edge '" + graph_.edges()[e].id + "' needs at least 2 nodes");
    EdgeGrid grid;
    grid.nodes = n;
    grid.spacing = graph_.edges()[e].length / static_cast<double>(n - 1);
    grid.first_interior_dof = dofs_;
    dofs_ += n - 2;
    grids_.push_back(grid);
  }

  lumped_mass_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs_));
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t e = 0; e < grids_.size(); ++e) {
    const auto& grid = grids_[e];
    const double h = grid.spacing;
    for (std::size_t k = 0; k + 1 < grid.nodes; ++k) {
      const auto a = static_cast<Eigen::Index>(dof(e, k));
      const auto b = static_cast<Eigen::Index>(dof(e, k + 1));
      lumped_mass_[a] += 0.5 * h;
      lumped_mass_[b] += 0.5 * h;
      triplets.emplace_back(a, a, 1.0 / h);
      triplets.emplace_back(b, b, 1.0 / h);
      triplets.emplace_back(a, b, -1.0 / h);
      triplets.emplace_back(b, a, -1.0 / h);
    }
  }
  stiffness_.resize(static_cast<Eigen::Index>(dofs_), static_cast<Eigen::Index>(dofs_));
  stiffness_.setFromTriplets(triplets.begin(), triplets.end());
}

std::size_t Mesh::dof(std::size_t edge, std::size_t node) const {
  const auto& grid = grids_[edge];
  if (node == 0) return graph_.edges()[edge].from;
  if (node + 1 == grid.nodes) return graph_.edges()[edge].to;
  return grid.first_interior_dof + node - 1;
}

double Mesh::coordinate(std::size_t edge, std::size_t node) const {
  if (node + 1 == grids_[edge].nodes) return graph_.edges()[edge].length;
  return static_cast<double>(node) * grids_[edge].spacing;
}

double Mesh::max_spacing() const {
  double h = 0.0;
  for (const auto& g : grids_) h = std::max(h, g.spacing);
  return h;
}

double Mesh::min_spacing() const {
  double h = grids_.front().spacing;
  for (const auto& g : grids_) h = std::min(h, g.spacing);
  return h;
}

MeshPtr build_mesh(const MetricGraph& graph, double h_target) {
  if (!(h_target > 0.0) || !std::isfinite(h_target))
    throw DomainError("mesh size must be positive and finite");
  std::vector<std::size_t> nodes;
  nodes.reserve(graph.edge_count());
  for (const auto& e : graph.edges()) {
    // guard against l/h landing a rounding error above an integer
    const double cells = std::ceil(e.length / h_target * (1.0 - 1e-12));
    nodes.push_back(std::max<std::size_t>(2, static_cast<std::size_t>(cells) + 1));
  }
  return std::make_shared<const Mesh>(graph, std::move(nodes));
}

double default_mesh_size(const MetricGraph& graph) { return graph.min_edge_length() / 16.0; }

GraphFunction::GraphFunction(MeshPtr mesh)
    : mesh_(std::move(mesh)), values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh_->dof_count()))) {}

GraphFunction::GraphFunction(MeshPtr mesh, Eigen::VectorXd values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.size()) != mesh_->dof_count())
    throw DomainError("value vector does not match the mesh DOF count");
}

std::vector<double> GraphFunction::edge_values(std::size_t edge) const {
  const auto n = mesh_->grid(edge).nodes;
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = at(edge, k);
  return out;
}

double mass(const GraphFunction& u) {
  return u.mesh().lumped_mass().dot(u.values().cwiseAbs2());
}

double lp_norm_p(const GraphFunction& u, double p) {
  if (!(p >= 1.0)) throw DomainError("Lp exponent must be >= 1");
  return u.mesh().lumped_mass().dot(u.values().cwiseAbs().array().pow(p).matrix());
}

double dirichlet_energy(const GraphFunction& u) {
  const auto& mesh = u.mesh();
  double total = 0.0;
  for (std::size_t e = 0; e < mesh.graph().edge_count(); ++e) {
    const auto& grid = mesh.grid(e);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < grid.nodes; ++k) {
      const double d = u.at(e, k + 1) - u.at(e, k);
      sum += d * d;
    }
    total += sum / grid.spacing;
  }
  return total;
}

double exact_cell_lp(double a, double b, double h, double p) {
  if (h <= 0.0) return 0.0;
  if ((a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0)) {
    const double x0 = h * a / (a - b);
    return exact_cell_lp(a, 0.0, x0, p) + exact_cell_lp(0.0, b, h - x0, p);
  }
  const double lo = std::min(std::abs(a), std::abs(b));
  const double hi = std::max(std::abs(a), std::abs(b));
  if (hi == 0.0) return 0.0;
  if (hi - lo > 1e-3 * hi) {
    return h * (std::pow(hi, p + 1.0) - std::pow(lo, p + 1.0)) / ((p + 1.0) * (hi - lo));
  }
  // nearly constant and bounded away from zero: Gauss-Legendre is exact to
  // rounding on this smooth integrand
  static constexpr std::array<double, 4> nodes = {0.8611363115940526, 0.3399810435848563,
                                                  -0.3399810435848563, -0.8611363115940526};
  static constexpr std::array<double, 4> weights = {0.3478548451374538, 0.6521451548625461,
                                                    0.6521451548625461, 0.3478548451374538};
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double t = 0.5 * (nodes[i] + 1.0);
    sum += weights[i] * std::pow(lo + (hi - lo) * t, p);
  }
  return 0.5 * h * sum;
}

double exact_lp_norm_p(const GraphFunction& u, double p) {
  const auto& mesh = u.mesh();
  double total = 0.0;
  for (std::size_t e = 0; e < mesh.graph().edge_count(); ++e) {
    const auto& grid = mesh.grid(e);
    for (std::size_t k = 0; k + 1 < grid.nodes; ++k)
      total += exact_cell_lp(u.at(e, k), u.at(e, k + 1), grid.spacing, p);
  }
  return total;
}

void write_csv(std::ostream& out, const GraphFunction& u) {
  const auto& mesh = u.mesh();
  out << "edge_id,x,value\n";
  out << std::setprecision(17);
  for (std::size_t e = 0; e < mesh.graph().edge_count(); ++e) {
    const auto& id = mesh.graph().edges()[e].id;
    for (std::size_t k = 0; k < mesh.grid(e).nodes; ++k)
      out << id << ',' << mesh.coordinate(e, k) << ',' << u.at(e, k) << '\n';
  }
}

GraphFunction read_csv(std::istream& in, MeshPtr mesh) {
  GraphFunction u(mesh);
  const auto& g = mesh->graph();
  std::map<std::string, std::vector<double>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, x, value;
    if (!std::getline(ss, id, ',') || !std::getline(ss, x, ',') || !std::getline(ss, value))
      throw DomainError("malformed CSV row: " + line);
    rows[id].push_back(std::stod(value));
  }
  std::vector<bool> set(mesh->dof_count(), false);
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const auto& id = g.edges()[e].id;
    auto it = rows.find(id);
    if (it == rows.end() || it->second.size() != mesh->grid(e).nodes)
      throw DomainError("CSV does not match mesh on edge '" + id + "'");
    for (std::size_t k = 0; k < it->second.size(); ++k) {
      const auto d = mesh->dof(e, k);
      const double v = it->second[k];
      if (set[d] && std::abs(u.values()[static_cast<Eigen::Index>(d)] - v) > 1e-12 * (1.0 + std::abs(v)))
        throw DomainError("CSV values disagree at a vertex of edge '" + id + "'");
      u.values()[static_cast<Eigen::Index>(d)] = v;
      set[d] = true;
    }
  }
  return u;
}

}  // namespace graphnls
