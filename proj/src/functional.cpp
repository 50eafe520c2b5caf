#include "graphnls/functional.hpp"

#include <algorithm>
#include <cmath>

#include "graphnls/error.hpp"

namespace graphnls {

void check_exponent(double p) {
  if (!(p > 2.0 && p <= 6.0)) throw DomainError("unsupported exponent p (must lie in (2, 6])");
}

double energy(const GraphFunction& u, double p) {
  check_exponent(p);
  return 0.5 * dirichlet_energy(u) - lp_norm_p(u, p) / p;
}

double lambda_of(const GraphFunction& u, double p) {
  check_exponent(p);
  const double m = mass(u);
  if (!(m > 0.0)) throw DomainError("lambda(u) is undefined for zero mass");
  return (lp_norm_p(u, p) - dirichlet_energy(u)) / m;
}

Eigen::VectorXd energy_gradient(const GraphFunction& u, double p) {
  const auto& mesh = u.mesh();
  const Eigen::ArrayXd values = u.values().array();
  const Eigen::ArrayXd nonlinear = values.abs().pow(p - 2.0) * values;
  return mesh.stiffness() * u.values() - (mesh.lumped_mass().array() * nonlinear).matrix();
}

Residual residual(const GraphFunction& u, double p) {
  const double lambda = lambda_of(u, p);
  const auto& mesh = u.mesh();
  Residual r;
  const Eigen::VectorXd mu = mesh.lumped_mass().cwiseProduct(u.values());
  r.vector = energy_gradient(u, p) + lambda * mu;
  const double norm2 = mu.squaredNorm();
  const Eigen::VectorXd projected = r.vector - (r.vector.dot(mu) / norm2) * mu;
  r.stationarity = projected.norm();
  return r;
}

namespace {

// Outward derivative at node 0 of a sampled edge.
double outward_derivative(const std::vector<double>& v, double h) {
  if (v.size() >= 3) return (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
  return (v[1] - v[0]) / h;
}

}  // namespace

std::vector<double> kirchhoff_residual(const GraphFunction& u) {
  const auto& mesh = u.mesh();
  const auto& g = mesh.graph();
  std::vector<double> out(g.vertex_count(), 0.0);
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    auto values = u.edge_values(e);
    const double h = mesh.grid(e).spacing;
    out[g.edges()[e].from] += outward_derivative(values, h);
    std::reverse(values.begin(), values.end());
    out[g.edges()[e].to] += outward_derivative(values, h);
  }
  return out;
}

EnergyReport energy_report(const GraphFunction& u, double p) {
  check_exponent(p);
  EnergyReport r;
  r.p = p;
  const double dirichlet = dirichlet_energy(u);
  const double lp = lp_norm_p(u, p);
  r.kinetic = 0.5 * dirichlet;
  r.potential = lp / p;
  r.energy = r.kinetic - r.potential;
  r.mass = mass(u);
  r.kirchhoff_residuals = kirchhoff_residual(u);
  if (r.mass > 0.0) {
    r.lambda = (lp - dirichlet) / r.mass;
    r.stationarity_residual = residual(u, p).stationarity;
  }
  return r;
}

double EnergyReport::max_kirchhoff() const {
  double m = 0.0;
  for (double k : kirchhoff_residuals) m = std::max(m, std::abs(k));
  return m;
}

nlohmann::json EnergyReport::to_json(const MetricGraph& graph) const {
  nlohmann::json j;
  j["p"] = p;
  j["kinetic"] = kinetic;
  j["potential"] = potential;
  j["energy"] = energy;
  j["mass"] = mass;
  j["lambda"] = lambda;
  j["stationarity_residual"] = stationarity_residual;
  nlohmann::json k = nlohmann::json::object();
  for (std::size_t v = 0; v < kirchhoff_residuals.size(); ++v) k[graph.vertices()[v]] = kirchhoff_residuals[v];
  j["kirchhoff_residuals"] = k;
  return j;
}

}  // namespace graphnls
