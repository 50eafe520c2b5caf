#include "graphnls/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <unordered_map>

#include "graphnls/error.hpp"

namespace graphnls {

MetricGraph::MetricGraph(std::vector<std::string> vertices, const std::vector<EdgeSpec>& edges)
    : vertices_(std::move(vertices)) {
  if (vertices_.empty()) throw GraphError("graph has no vertices");

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (!index.emplace(vertices_[i], i).second)
      throw GraphError("duplicate vertex id '" + vertices_[i] + "'");
  }

  std::set<std::string> edge_ids;
  incidence_.resize(vertices_.size());
  for (const auto& spec : edges) {
    if (!edge_ids.insert(spec.id).second) throw GraphError("duplicate edge id '" + spec.id + "'");
    if (!std::isfinite(spec.length) || spec.length <= 0.0)
      throw GraphError("edge '" + spec.id + "' has non-positive or non-finite length");
    auto from = index.find(spec.from);
    auto to = index.find(spec.to);
    if (from == index.end())
      throw GraphError("edge '" + spec.id + "' references unknown vertex '" + spec.from + "'");
    if (to == index.end())
      throw GraphError("edge '" + spec.id + "' references unknown vertex '" + spec.to + "'");
    const std::size_t e = edges_.size();
    edges_.push_back({spec.id, from->second, to->second, spec.length});
    incidence_[from->second].push_back({e, true});
    incidence_[to->second].push_back({e, false});
  }

  // connectivity by BFS from vertex 0
  std::vector<bool> seen(vertices_.size(), false);
  std::queue<std::size_t> queue;
  seen[0] = true;
  queue.push(0);
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop();
    for (const auto& end : incidence_[v]) {
      const auto& e = edges_[end.edge];
      const auto w = end.at_start ? e.to : e.from;
      if (!seen[w]) {
        seen[w] = true;
        queue.push(w);
      }
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw GraphError("graph is disconnected: vertex '" + vertices_[i] + "' is unreachable");
  }
}

MetricGraph MetricGraph::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("vertices") || !doc.contains("edges"))
    throw GraphError("graph document must contain 'vertices' and 'edges'");
  std::vector<std::string> vertices;
  for (const auto& v : doc.at("vertices")) {
    if (!v.is_string()) throw GraphError("vertex identifiers must be strings");
    vertices.push_back(v.get<std::string>());
  }
  std::vector<EdgeSpec> edges;
  for (const auto& e : doc.at("edges")) {
    for (const char* key : {"id", "from", "to", "length"}) {
      if (!e.contains(key)) throw GraphError(std::string("edge entry is missing '") + key + "'");
    }
    if (!e.at("length").is_number())
      throw GraphError("edge '" + e.at("id").get<std::string>() + "' length is not a number");
    edges.push_back({e.at("id").get<std::string>(), e.at("from").get<std::string>(),
                     e.at("to").get<std::string>(), e.at("length").get<double>()});
  }
  return MetricGraph(std::move(vertices), edges);
}

MetricGraph MetricGraph::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("graph document not found: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw GraphError("graph document " + path.string() + " is not valid JSON: " + ex.what());
  }
  return from_json(doc);
}

nlohmann::json MetricGraph::to_json() const {
  nlohmann::json doc;
  doc["vertices"] = vertices_;
  doc["edges"] = nlohmann::json::array();
  for (const auto& e : edges_) {
    doc["edges"].push_back(
        {{"id", e.id}, {"from", vertices_[e.from]}, {"to", vertices_[e.to]}, {"length", e.length}});
  }
  return doc;
}

std::optional<std::size_t> MetricGraph::find_vertex(const std::string& id) const {
  auto it = std::find(vertices_.begin(), vertices_.end(), id);
  if (it == vertices_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - vertices_.begin());
}

std::optional<std::size_t> MetricGraph::find_edge(const std::string& id) const {
  auto it = std::find_if(edges_.begin(), edges_.end(), [&](const Edge& e) { return e.id == id; });
  if (it == edges_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - edges_.begin());
}

double MetricGraph::total_length() const {
  return std::accumulate(edges_.begin(), edges_.end(), 0.0,
                         [](double acc, const Edge& e) { return acc + e.length; });
}

double MetricGraph::min_edge_length() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : edges_) m = std::min(m, e.length);
  return m;
}

namespace {

// Dijkstra distance between two vertices with one edge removed.
double distance_without_edge(const MetricGraph& g, std::size_t source, std::size_t target,
                             std::size_t skipped) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(g.vertex_count(), inf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    if (v == target) return d;
    for (const auto& end : g.incident(v)) {
      if (end.edge == skipped) continue;
      const auto& e = g.edges()[end.edge];
      const auto w = end.at_start ? e.to : e.from;
      if (d + e.length < dist[w]) {
        dist[w] = d + e.length;
        heap.push({dist[w], w});
      }
    }
  }
  return inf;
}

}  // namespace

std::optional<double> shortest_cycle_length(const MetricGraph& graph) {
  // The shortest cycle through edge (a,b) is its length plus the a-b distance
  // in the graph without it; minimizing over edges gives the girth exactly.
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < graph.edge_count(); ++i) {
    const auto& e = graph.edges()[i];
    if (e.is_loop()) {
      best = std::min(best, e.length);
      continue;
    }
    best = std::min(best, e.length + distance_without_edge(graph, e.from, e.to, i));
  }
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

bool has_terminal_edge(const MetricGraph& graph) {
  for (std::size_t v = 0; v < graph.vertex_count(); ++v) {
    if (graph.degree(v) == 1) return true;
  }
  return false;
}

double critical_mass(const MetricGraph& graph) {
  return has_terminal_edge(graph) ? kCriticalMassHalfLine : kCriticalMassLine;
}

TopologyReport topology_report(const MetricGraph& graph) {
  TopologyReport report;
  report.total_length = graph.total_length();
  for (const auto& e : graph.edges()) {
    if (graph.degree(e.from) == 1 || graph.degree(e.to) == 1) report.terminal_edges.push_back(e.id);
  }
  report.has_terminal_edge = !report.terminal_edges.empty();
  report.shortest_cycle_length = shortest_cycle_length(graph);
  report.critical_mass = report.has_terminal_edge ? kCriticalMassHalfLine : kCriticalMassLine;
  return report;
}

nlohmann::json TopologyReport::to_json() const {
  nlohmann::json j;
  j["total_length"] = total_length;
  j["has_terminal_edge"] = has_terminal_edge;
  j["terminal_edges"] = terminal_edges;
  if (shortest_cycle_length) {
    j["shortest_cycle_length"] = *shortest_cycle_length;
    j["gamma"] = *shortest_cycle_length / 2.0;
  } else {
    j["shortest_cycle_length"] = nullptr;
  }
  j["critical_mass"] = critical_mass;
  j["mode"] = has_terminal_edge ? "tip" : "no-tip";
  return j;
}

}  // namespace graphnls
