#pragma once

#include <cstddef>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace graphnls {

/// Critical mass of the half-line soliton, sqrt(3)*pi/4.
inline constexpr double kCriticalMassHalfLine = 1.7320508075688772935 * std::numbers::pi / 4.0;
/// Critical mass of the line soliton, sqrt(3)*pi/2.
inline constexpr double kCriticalMassLine = 1.7320508075688772935 * std::numbers::pi / 2.0;

struct EdgeSpec {
  std::string id;
  std::string from;
  std::string to;
  double length = 0.0;
};

struct Edge {
  std::string id;
  std::size_t from = 0;
  std::size_t to = 0;
  double length = 0.0;

  bool is_loop() const { return from == to; }
};

/// One end of an edge attached to a vertex. `at_start` is true when the edge
/// leaves the vertex at local coordinate x = 0.
struct EdgeEnd {
  std::size_t edge = 0;
  bool at_start = true;
};

/// Compact connected metric graph. Multi-edges and self-loops are allowed;
/// a self-loop contributes two ends (degree 2) to its vertex. Immutable once
/// constructed.
class MetricGraph {
 public:
  MetricGraph(std::vector<std::string> vertices, const std::vector<EdgeSpec>& edges);

  static MetricGraph from_json(const nlohmann::json& doc);
  static MetricGraph load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  const std::vector<std::string>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  std::size_t degree(std::size_t vertex) const { return incidence_[vertex].size(); }
  const std::vector<EdgeEnd>& incident(std::size_t vertex) const { return incidence_[vertex]; }

  std::optional<std::size_t> find_vertex(const std::string& id) const;
  std::optional<std::size_t> find_edge(const std::string& id) const;

  double total_length() const;
  double min_edge_length() const;

 private:
  std::vector<std::string> vertices_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeEnd>> incidence_;
};

struct TopologyReport {
  double total_length = 0.0;
  bool has_terminal_edge = false;
  std::vector<std::string> terminal_edges;
  std::optional<double> shortest_cycle_length;
  double critical_mass = 0.0;

  nlohmann::json to_json() const;
};

/// Length of the shortest cycle (self-loops count with their own length), or
/// nullopt when the graph is a tree.
std::optional<double> shortest_cycle_length(const MetricGraph& graph);

TopologyReport topology_report(const MetricGraph& graph);

/// Critical mass for p = 6: the half-line value if some vertex has degree 1,
/// otherwise the line value.
double critical_mass(const MetricGraph& graph);

bool has_terminal_edge(const MetricGraph& graph);

}  // namespace graphnls
