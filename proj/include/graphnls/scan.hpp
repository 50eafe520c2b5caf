#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphnls/solvers.hpp"

namespace graphnls {

/// Classification of one (p, mu) point.
enum class PointStatus {
  bounded,     // ground state converged
  diverged,    // energy floor crossed and the scaling probe corroborates
  threshold,   // mu equals the critical mass; existence asserted, not decidable numerically
  unresolved,  // neither: max iterations, or floor crossed without corroboration
};

std::string to_string(PointStatus status);

struct ScanPoint {
  double mass = 0.0;
  PointStatus status = PointStatus::unresolved;
  SolveStatus solver_status = SolveStatus::max_iters;
  std::optional<double> energy;
  double stationarity = 0.0;
  int iterations = 0;
  std::optional<ProbeResult> probe;
  bool from_bisection = false;
};

struct ScanResult {
  std::string graph_mode;  // "tip" or "no-tip"
  double p = 0.0;
  double critical_mass = 0.0;
  std::vector<ScanPoint> points;  // ascending in mass
  std::optional<double> estimate;
  std::optional<double> bracket_low;
  std::optional<double> bracket_high;
  double resolution = 0.0;
  std::vector<std::string> flags;

  bool all_converged() const;
  nlohmann::json summary_json() const;
  void write_csv(std::ostream& out) const;
  void write_plot_data(std::ostream& out) const;
};

/// Classify a single mass: ground state, plus the blow-up probe whenever the
/// flow crosses the energy floor at p = 6.
ScanPoint classify_mass(const MeshPtr& mesh, double mass, const SolveConfig& cfg);

/// Ground states over an ascending mass grid. At p = 6 the last bounded and
/// first diverged grid masses are bisected down to `resolution`.
ScanResult mass_scan(const MetricGraph& graph, double p, const std::vector<double>& masses, SolveConfig cfg,
                     double resolution = 0.05, unsigned threads = 0);

struct Ladder {
  std::vector<double> energies;
  std::size_t found = 0;
  bool strictly_increasing = false;
  BoundStates states;
};

Ladder bound_state_ladder(const MetricGraph& graph, double p, double mass, int k, SolveConfig cfg);

/// Thread cap from GRAPHNLS_THREADS, else hardware concurrency.
unsigned scan_threads();

/// "a:b:n" -> n evenly spaced values from a to b.
std::vector<double> parse_mass_grid(const std::string& spec);

}  // namespace graphnls
