#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "graphnls/graph.hpp"
#include "graphnls/mesh.hpp"

namespace testing {

using namespace graphnls;

inline MetricGraph fixture(const std::string& name) {
  return MetricGraph::load(std::string(GRAPHNLS_FIXTURES) + "/" + name + ".json");
}

inline const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names{"interval", "star3", "tadpole", "loop", "figure_eight", "theta"};
  return names;
}

inline MetricGraph interval(double length) { return MetricGraph({"a", "b"}, {{"e1", "a", "b", length}}); }
inline MetricGraph loop(double length) { return MetricGraph({"v"}, {{"e1", "v", "v", length}}); }

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Connected multigraph with at least one edge: a random spanning tree plus
// extra edges (loops and parallels allowed).
inline MetricGraph random_graph(std::mt19937_64& rng, int vertices, int extra_edges) {
  std::vector<std::string> names;
  for (int i = 0; i < vertices; ++i) names.push_back("v" + std::to_string(i));
  std::vector<EdgeSpec> edges;
  auto add = [&](int a, int b) {
    edges.push_back({"e" + std::to_string(edges.size()), names[a], names[b], uniform(rng, 0.25, 2.0)});
  };
  for (int i = 1; i < vertices; ++i) add(std::uniform_int_distribution<int>(0, i - 1)(rng), i);
  if (vertices == 1) extra_edges = std::max(extra_edges, 1);
  for (int i = 0; i < extra_edges; ++i) {
    std::uniform_int_distribution<int> pick(0, vertices - 1);
    add(pick(rng), pick(rng));
  }
  return MetricGraph(names, edges);
}

// Shortest cycle by enumerating every edge subset in which all vertices have
// even degree 0 or 2 and the used edges are connected. Small graphs only.
inline double brute_force_girth(const MetricGraph& g) {
  const std::size_t m = g.edge_count();
  double best = std::numeric_limits<double>::infinity();
  for (unsigned long mask = 1; mask < (1ul << m); ++mask) {
    std::vector<int> deg(g.vertex_count(), 0);
    double len = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
      if (!(mask >> e & 1)) continue;
      const auto& ed = g.edges()[e];
      ++deg[ed.from];
      ++deg[ed.to];
      len += ed.length;
    }
    if (std::any_of(deg.begin(), deg.end(), [](int d) { return d != 0 && d != 2; })) continue;
    // connectivity of the chosen edges
    std::vector<int> parent(g.vertex_count());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (std::size_t e = 0; e < m; ++e)
      if (mask >> e & 1) parent[find(static_cast<int>(g.edges()[e].from))] = find(static_cast<int>(g.edges()[e].to));
    int roots = 0;
    for (std::size_t v = 0; v < deg.size(); ++v)
      if (deg[v] > 0 && find(static_cast<int>(v)) == static_cast<int>(v)) ++roots;
    if (roots == 1) best = std::min(best, len);
  }
  return best;
}

// Split edge `e` at fraction t with a new degree-2 vertex.
inline MetricGraph subdivide(const MetricGraph& g, std::size_t e, double t) {
  auto vertices = g.vertices();
  const std::string mid = "split";
  vertices.push_back(mid);
  std::vector<EdgeSpec> edges;
  for (std::size_t i = 0; i < g.edge_count(); ++i) {
    const auto& ed = g.edges()[i];
    const auto& from = g.vertices()[ed.from];
    const auto& to = g.vertices()[ed.to];
    if (i == e) {
      edges.push_back({ed.id + "a", from, mid, ed.length * t});
      edges.push_back({ed.id + "b", mid, to, ed.length * (1.0 - t)});
    } else {
      edges.push_back({ed.id, from, to, ed.length});
    }
  }
  return MetricGraph(vertices, edges);
}

inline double soliton_profile(double x, double lambda) {
  return std::pow(3.0 * lambda, 0.25) / std::sqrt(std::cosh(2.0 * std::sqrt(lambda) * x));
}

inline bool close_rel(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)); }

}  // namespace testing
