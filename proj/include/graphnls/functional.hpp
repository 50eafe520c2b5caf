#pragma once

#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "graphnls/mesh.hpp"

namespace graphnls {

struct EnergyReport {
  double p = 0.0;
  double kinetic = 0.0;    // 1/2 ||u'||^2
  double potential = 0.0;  // 1/p ||u||_p^p
  double energy = 0.0;     // kinetic - potential
  double mass = 0.0;
  double lambda = 0.0;
  std::vector<double> kirchhoff_residuals;  // one per vertex
  double stationarity_residual = 0.0;

  double max_kirchhoff() const;
  nlohmann::json to_json(const MetricGraph& graph) const;
};

/// Throws unless p lies in (2, 6].
void check_exponent(double p);

/// E(u) = 1/2 ||u'||^2 - 1/p ||u||_p^p.
double energy(const GraphFunction& u, double p);

/// lambda(u) = (||u||_p^p - ||u'||^2) / mass(u).
double lambda_of(const GraphFunction& u, double p);

struct Residual {
  Eigen::VectorXd vector;  // J(u) tested against every nodal basis function
  double stationarity = 0.0;
};

/// Assembled J(u)v = int u'v' - int |u|^{p-2} u v + lambda(u) int u v over the
/// nodal basis; `stationarity` is its Euclidean norm after projecting out the
/// discrete mass-gradient direction.
Residual residual(const GraphFunction& u, double p);

/// Derivative of the unconstrained energy, K u - M |u|^{p-2} u.
Eigen::VectorXd energy_gradient(const GraphFunction& u, double p);

/// Sum over incident edge ends of the outward derivative at each vertex,
/// using three-point one-sided differences.
std::vector<double> kirchhoff_residual(const GraphFunction& u);

EnergyReport energy_report(const GraphFunction& u, double p);

}  // namespace graphnls
