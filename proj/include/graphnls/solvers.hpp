#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "graphnls/functional.hpp"
#include "graphnls/mesh.hpp"

namespace graphnls {

struct SolveConfig {
  double p = 4.0;
  double mass = 1.0;
  double h = 0.0;            // mesh target; 0 selects min(l_e)/16
  double dt = 0.1;           // initial flow step
  double dt_max = 10.0;
  double tol = 1e-8;         // stationarity tolerance
  int max_iters = 20000;
  std::optional<double> energy_floor;  // default: see default_energy_floor
  double deflation_shift = 1.0;
  double deflation_power = 2.0;
  int k = 1;
  bool polish = true;        // Newton polish once the flow residual is small
  double polish_threshold = 1e-4;
  std::uint64_t seed_order = 0;  // bound_states: nonzero shuffles the seed list with this RNG seed

  void validate() const;
  nlohmann::json to_json() const;
};

enum class SolveStatus { converged, diverged_unbounded, max_iters };

std::string to_string(SolveStatus status);

struct SolveOutcome {
  SolveStatus status = SolveStatus::max_iters;
  std::optional<GraphFunction> state;
  EnergyReport report;
  std::vector<double> energy_history;
  std::vector<double> residual_history;
  std::vector<double> mass_history;
  double lambda_newton = 0.0;  // multiplier solved for by Newton (0 if unused)
  int polish_iterations = 0;
  std::string seed;

  nlohmann::json to_json(const MetricGraph& graph) const;
};

/// Energy floor for divergence detection at p = 6: -mu / (20 h^2), the scale
/// at which a state concentrated on a few cells sits. Unused for p < 6.
double default_energy_floor(const Mesh& mesh, double mass);

/// Normalized gradient flow from one seed: implicit kinetic, explicit
/// nonlinearity, exact renormalisation to the target mass after every step,
/// step halving whenever the energy would rise.
SolveOutcome gradient_flow(const GraphFunction& seed, const SolveConfig& cfg, std::string label = "custom");

/// Ground state by gradient flow from the perturbed constant and from bump
/// seeds concentrated at every tip (or mid-edge when there is no tip). Any
/// seed crossing the energy floor makes the whole solve diverged.
SolveOutcome ground_state(const MeshPtr& mesh, const SolveConfig& cfg);
SolveOutcome ground_state(const MetricGraph& graph, const SolveConfig& cfg);

/// Seeds used by ground_state, normalised to the target mass.
std::vector<std::pair<std::string, GraphFunction>> ground_state_seeds(const MeshPtr& mesh, double mass);

struct Eigenpair {
  double value = 0.0;
  GraphFunction function;  // L2 normalised (lumped mass)
};

/// First k eigenpairs of the Kirchhoff Laplacian K v = sigma M v, ascending.
std::vector<Eigenpair> laplacian_eigenpairs(const MeshPtr& mesh, std::size_t k);

struct NewtonResult {
  bool converged = false;
  GraphFunction state;
  double lambda = 0.0;
  int iterations = 0;
};

/// Newton on (u, lambda) for K u - M|u|^{p-2}u + lambda M u = 0 with the mass
/// equation, deflated against every state in `deflate` and its negative.
NewtonResult newton_solve(const GraphFunction& seed, double lambda0, const SolveConfig& cfg,
                          const std::vector<GraphFunction>& deflate, int max_iters = 60);

struct BoundStates {
  std::vector<SolveOutcome> states;  // ascending energy
  std::vector<int> multiplicity;     // orbit size seen for each state
  int seeds_tried = 0;
  int seeds_failed = 0;
  std::vector<std::string> diagnostics;
};

/// Up to cfg.k distinct bound states by deflated Newton seeded from Laplacian
/// eigenfunctions (plus bump seeds at p = 6). States whose energies agree to
/// 1e-8 relative are treated as one symmetry orbit and reported once.
BoundStates bound_states(const MeshPtr& mesh, const SolveConfig& cfg);
BoundStates bound_states(const MetricGraph& graph, const SolveConfig& cfg);

/// sigma = sqrt(mu / l) with its energy report.
std::pair<GraphFunction, EnergyReport> constant_state(const MeshPtr& mesh, double mass, double p);

struct ProbePoint {
  double lambda = 0.0;
  double energy = 0.0;
  double mass = 0.0;
};

struct ProbeResult {
  bool profile_ok = false;
  std::string mode;      // "tip" (half-soliton at a degree-1 end) or "interior"
  std::string edge;
  double mass = 0.0;
  double profile_energy = 0.0;  // E(v) of the unscaled profile on its own axis
  std::vector<ProbePoint> points;
  double fit_coefficient = 0.0;  // a in E = a lambda^2
  double r_squared = 0.0;
  std::string message;

  bool corroborates_blowup() const { return profile_ok && fit_coefficient < 0.0 && r_squared >= 0.999; }
  nlohmann::json to_json() const;
};

/// Scaling family w_lambda(x) = sqrt(lambda) v(lambda x) of a compactly
/// supported negative-energy profile v on [0, 1], transplanted onto `edge`
/// and zero elsewhere. p = 6.
ProbeResult blowup_probe(const MetricGraph& graph, double mass, const std::vector<double>& lambdas,
                         const std::string& edge);

/// Edge used by default for probing: first terminal edge, else the longest.
std::string default_probe_edge(const MetricGraph& graph);
/// 2^k max(1, 1/l_e) for k = 0..4.
std::vector<double> default_probe_lambdas(const MetricGraph& graph, const std::string& edge);

/// phi(x) = (3 lambda)^{1/4} sech^{1/2}(2 sqrt(lambda) x), solving
/// u'' + u^5 = lambda u on the line with mass sqrt(3) pi / 2.
double soliton(double x, double lambda);

}  // namespace graphnls
