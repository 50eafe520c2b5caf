#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphnls/mesh.hpp"

namespace graphnls {

/// Linear piece of a function: `length` long, running from value `a` to `b`.
struct Segment {
  double length = 0.0;
  double a = 0.0;
  double b = 0.0;
};

/// Continuous piecewise-linear function on an interval, stored on its own
/// breakpoints (not necessarily uniform). Integrals are exact.
struct Profile {
  std::vector<double> x;
  std::vector<double> value;

  double start() const { return x.front(); }
  double end() const { return x.back(); }
  double mass() const;
  double lp_norm_p(double p) const;
  double dirichlet_energy() const;
  double operator()(double at) const;
  std::vector<Segment> segments() const;
};

/// Every cell of the P1 interpolant of u as a segment.
std::vector<Segment> cell_segments(const GraphFunction& u);

/// |{f > t}| for a function given by segments.
double level_measure(const std::vector<Segment>& pieces, double t);

/// Non-increasing rearrangement of the pieces onto [0, total length).
Profile decreasing_profile(const std::vector<Segment>& pieces);

struct Provenance {
  std::string kind;  // "decreasing" or "two_sided"
  double total_length = 0.0;
  double gamma = 0.0;
  std::string max_edge;
  double max_coordinate = 0.0;
  std::string min_edge;
  double min_coordinate = 0.0;
  struct PathPiece {
    std::string edge;
    double from = 0.0;
    double to = 0.0;
  };
  std::vector<PathPiece> gamma_path;

  nlohmann::json to_json() const;
};

struct RearrangedFunction {
  Profile profile;
  Provenance provenance;
};

/// u*(x) = inf{t >= 0 : |{u > t}| <= x} on [0, l). Requires u >= 0.
RearrangedFunction decreasing_rearrangement(const GraphFunction& u);
RearrangedFunction decreasing_rearrangement(const Profile& f);

/// Two-sided rearrangement on [gamma - l, gamma] with the peak at 0: the
/// function on a path of length gamma (half the shortest cycle) leaving the
/// maximizer is rearranged decreasingly on [0, gamma], the rest increasingly
/// on [gamma - l, 0]. Requires u >= 0, non-constant, and no terminal edge.
RearrangedFunction two_sided_rearrangement(const GraphFunction& u);

/// CSV in the GraphFunction layout with a single edge id "r".
void write_csv(std::ostream& out, const RearrangedFunction& f);

}  // namespace graphnls
