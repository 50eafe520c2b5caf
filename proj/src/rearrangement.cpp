#include "graphnls/rearrangement.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <queue>

#include "graphnls/error.hpp"

namespace graphnls {

double Profile::mass() const { return lp_norm_p(2.0); }

double Profile::lp_norm_p(double p) const {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    total += exact_cell_lp(value[i], value[i + 1], x[i + 1] - x[i], p);
  return total;
}

double Profile::dirichlet_energy() const {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double dx = x[i + 1] - x[i];
    const double dv = value[i + 1] - value[i];
    if (dx > 0.0) total += dv * dv / dx;
  }
  return total;
}

double Profile::operator()(double at) const {
  if (at <= x.front()) return value.front();
  if (at >= x.back()) return value.back();
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  const auto i = static_cast<std::size_t>(it - x.begin()) - 1;
  const double dx = x[i + 1] - x[i];
  if (dx <= 0.0) return value[i + 1];
  return value[i] + (value[i + 1] - value[i]) * (at - x[i]) / dx;
}

std::vector<Segment> Profile::segments() const {
  std::vector<Segment> out;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (x[i + 1] > x[i]) out.push_back({x[i + 1] - x[i], value[i], value[i + 1]});
  }
  return out;
}

std::vector<Segment> cell_segments(const GraphFunction& u) {
  const auto& mesh = u.mesh();
  std::vector<Segment> out;
  for (std::size_t e = 0; e < mesh.graph().edge_count(); ++e) {
    const auto& grid = mesh.grid(e);
    for (std::size_t k = 0; k + 1 < grid.nodes; ++k) out.push_back({grid.spacing, u.at(e, k), u.at(e, k + 1)});
  }
  return out;
}

double level_measure(const std::vector<Segment>& pieces, double t) {
  double total = 0.0;
  for (const auto& s : pieces) {
    const double lo = std::min(s.a, s.b);
    const double hi = std::max(s.a, s.b);
    if (t < lo) {
      total += s.length;
    } else if (t < hi) {
      total += s.length * (hi - t) / (hi - lo);
    }
  }
  return total;
}

Profile decreasing_profile(const std::vector<Segment>& pieces) {
  if (pieces.empty()) throw DomainError("cannot rearrange an empty function");
  std::vector<double> levels;
  levels.reserve(2 * pieces.size());
  double total = 0.0;
  for (const auto& s : pieces) {
    levels.push_back(s.a);
    levels.push_back(s.b);
    total += s.length;
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const std::size_t n = levels.size();
  auto index_of = [&](double v) {
    return static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), v) - levels.begin());
  };

  // Difference arrays over ascending level index j:
  //   full[j]   : sum of lengths of pieces lying entirely above levels[j]
  //   alpha/beta: pieces whose range straddles levels[j] contribute alpha - beta*t
  //   plateau[j]: flat pieces at exactly levels[j]
  std::vector<double> full(n + 1, 0.0), alpha(n + 1, 0.0), beta(n + 1, 0.0), plateau(n, 0.0);
  for (const auto& s : pieces) {
    const double lo = std::min(s.a, s.b);
    const double hi = std::max(s.a, s.b);
    const auto ilo = index_of(lo);
    full[0] += s.length;
    full[ilo] -= s.length;
    if (hi > lo) {
      const auto ihi = index_of(hi);
      const double slope = s.length / (hi - lo);
      alpha[ilo] += slope * hi;
      alpha[ihi] -= slope * hi;
      beta[ilo] += slope;
      beta[ihi] -= slope;
    } else {
      plateau[ilo] += s.length;
    }
  }
  std::vector<double> above(n), at_least(n);
  double f = 0.0, a = 0.0, b = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    f += full[j];
    a += alpha[j];
    b += beta[j];
    above[j] = std::clamp(f + a - b * levels[j], 0.0, total);
    at_least[j] = std::min(total, above[j] + plateau[j]);
  }
  above[n - 1] = 0.0;
  at_least[0] = total;

  Profile out;
  double last = 0.0;
  auto push = [&](double x, double v) {
    x = std::max(x, last);
    if (!out.x.empty() && x == out.x.back() && v == out.value.back()) return;
    out.x.push_back(x);
    out.value.push_back(v);
    last = x;
  };
  for (std::size_t jj = n; jj-- > 0;) {
    push(above[jj], levels[jj]);
    if (at_least[jj] > above[jj]) push(at_least[jj], levels[jj]);
  }
  if (out.x.size() == 1) {
    out.x.push_back(total);
    out.value.push_back(out.value.front());
  }
  out.x.back() = total;
  return out;
}

namespace {

void require_nonnegative(const GraphFunction& u) {
  if (u.values().size() > 0 && u.values().minCoeff() < 0.0)
    throw DomainError("rearrangement requires a nonnegative function (pass |u|)");
}

// Directed half-cell of the node graph induced by the mesh.
struct Link {
  std::size_t to = 0;
  std::size_t edge = 0;
  std::size_t cell = 0;
  bool forward = true;  // walking in the direction of increasing coordinate
  double length = 0.0;
};

std::vector<std::vector<Link>> node_graph(const Mesh& mesh) {
  std::vector<std::vector<Link>> adj(mesh.dof_count());
  for (std::size_t e = 0; e < mesh.graph().edge_count(); ++e) {
    const auto& grid = mesh.grid(e);
    for (std::size_t k = 0; k + 1 < grid.nodes; ++k) {
      const auto a = mesh.dof(e, k);
      const auto b = mesh.dof(e, k + 1);
      adj[a].push_back({b, e, k, true, grid.spacing});
      adj[b].push_back({a, e, k, false, grid.spacing});
    }
  }
  return adj;
}

struct ShortestPaths {
  std::vector<double> dist;
  std::vector<std::ptrdiff_t> via;  // index into adj[pred] of the link used
  std::vector<std::size_t> pred;
};

ShortestPaths dijkstra(const std::vector<std::vector<Link>>& adj, std::size_t source) {
  const double inf = std::numeric_limits<double>::infinity();
  ShortestPaths sp{std::vector<double>(adj.size(), inf), std::vector<std::ptrdiff_t>(adj.size(), -1),
                   std::vector<std::size_t>(adj.size(), source)};
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  sp.dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > sp.dist[v]) continue;
    for (std::size_t i = 0; i < adj[v].size(); ++i) {
      const auto& l = adj[v][i];
      if (d + l.length < sp.dist[l.to]) {
        sp.dist[l.to] = d + l.length;
        sp.pred[l.to] = v;
        sp.via[l.to] = static_cast<std::ptrdiff_t>(i);
        heap.push({sp.dist[l.to], l.to});
      }
    }
  }
  return sp;
}

// First node in (edge order, coordinate order) satisfying pred.
std::pair<std::size_t, std::size_t> first_node(const GraphFunction& u,
                                               const std::function<bool(double)>& pred) {
  const auto& mesh = u.mesh();
  for (std::size_t e = 0; e < mesh.graph().edge_count(); ++e) {
    for (std::size_t k = 0; k < mesh.grid(e).nodes; ++k) {
      if (pred(u.at(e, k))) return {e, k};
    }
  }
  throw DomainError("no node satisfies the selection predicate");
}

}  // namespace

RearrangedFunction decreasing_rearrangement(const GraphFunction& u) {
  require_nonnegative(u);
  RearrangedFunction out;
  out.profile = decreasing_profile(cell_segments(u));
  out.provenance.kind = "decreasing";
  out.provenance.total_length = u.mesh().graph().total_length();
  return out;
}

RearrangedFunction decreasing_rearrangement(const Profile& f) {
  for (double v : f.value) {
    if (v < 0.0) throw DomainError("rearrangement requires a nonnegative function (pass |u|)");
  }
  RearrangedFunction out;
  out.profile = decreasing_profile(f.segments());
  out.provenance.kind = "decreasing";
  out.provenance.total_length = f.end() - f.start();
  return out;
}

RearrangedFunction two_sided_rearrangement(const GraphFunction& u) {
  require_nonnegative(u);
  const auto& mesh = u.mesh();
  const auto& graph = mesh.graph();
  if (has_terminal_edge(graph)) throw DomainError("two-sided rearrangement requires a graph without terminal edges");
  const double vmax = u.values().maxCoeff();
  const double vmin = u.values().minCoeff();
  if (vmax == vmin) throw DomainError("two-sided rearrangement requires a non-constant function");
  const auto cycle = shortest_cycle_length(graph);
  if (!cycle) throw DomainError("graph has no cycle");
  const double gamma = 0.5 * *cycle;

  const auto adj = node_graph(mesh);
  const auto [max_edge, max_node] = first_node(u, [&](double v) { return v == vmax; });
  const std::size_t x0 = mesh.dof(max_edge, max_node);

  // nearest minimizer to x0; ties resolved by node order
  const auto from_max = dijkstra(adj, x0);
  std::size_t xmin = 0;
  double best = std::numeric_limits<double>::infinity();
  std::pair<std::size_t, std::size_t> min_loc{0, 0};
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    for (std::size_t k = 0; k < mesh.grid(e).nodes; ++k) {
      const auto d = mesh.dof(e, k);
      if (u.at(e, k) == vmin && from_max.dist[d] < best) {
        best = from_max.dist[d];
        xmin = d;
        min_loc = {e, k};
      }
    }
  }

  // Sigma: shortest path x0 -> xmin
  std::vector<bool> on_sigma(mesh.dof_count(), false);
  std::size_t sigma_first = xmin;
  for (std::size_t v = xmin; v != x0; v = from_max.pred[v]) {
    on_sigma[v] = true;
    if (from_max.pred[v] == x0) sigma_first = v;
  }
  on_sigma[x0] = true;
  const auto from_min = dijkstra(adj, xmin);

  // Gamma: walk of length gamma away from the minimizer
  std::vector<bool> visited(mesh.dof_count(), false);
  std::vector<std::vector<bool>> used(graph.edge_count());
  for (std::size_t e = 0; e < graph.edge_count(); ++e) used[e].assign(mesh.grid(e).nodes - 1, false);
  visited[x0] = true;
  std::vector<Segment> gamma_pieces;
  std::vector<Segment> rest_pieces;
  Provenance prov;
  double walked = 0.0;
  std::size_t at = x0;
  bool first_step = true;
  while (walked < gamma) {
    const Link* choice = nullptr;
    for (int pass = 0; pass < 2 && choice == nullptr; ++pass) {
      for (const auto& l : adj[at]) {
        if (used[l.edge][l.cell] || visited[l.to]) continue;
        if (first_step && l.to == sigma_first) continue;
        if (pass == 0 && on_sigma[l.to]) continue;
        if (choice == nullptr || from_min.dist[l.to] > from_min.dist[choice->to] ||
            (from_min.dist[l.to] == from_min.dist[choice->to] && l.edge < choice->edge))
          choice = &l;
      }
    }
    if (choice == nullptr) throw DomainError("cannot extend the path past the maximizer");
    first_step = false;
    const double a = u.values()[static_cast<Eigen::Index>(at)];
    const double b = u.values()[static_cast<Eigen::Index>(choice->to)];
    const double step = std::min(choice->length, gamma - walked);
    const double x_start = mesh.coordinate(choice->edge, choice->cell) + (choice->forward ? 0.0 : choice->length);
    const double dir = choice->forward ? 1.0 : -1.0;
    used[choice->edge][choice->cell] = true;
    if (step < choice->length) {
      const double mid = a + (b - a) * step / choice->length;
      gamma_pieces.push_back({step, a, mid});
      rest_pieces.push_back({choice->length - step, mid, b});
    } else {
      gamma_pieces.push_back({step, a, b});
    }
    prov.gamma_path.push_back({graph.edges()[choice->edge].id, x_start, x_start + dir * step});
    walked += step;
    at = choice->to;
    visited[at] = true;
  }
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    const auto& grid = mesh.grid(e);
    for (std::size_t k = 0; k + 1 < grid.nodes; ++k) {
      if (!used[e][k]) rest_pieces.push_back({grid.spacing, u.at(e, k), u.at(e, k + 1)});
    }
  }

  const Profile right = decreasing_profile(gamma_pieces);
  const Profile left = decreasing_profile(rest_pieces);
  RearrangedFunction out;
  auto& prof = out.profile;
  for (std::size_t i = left.x.size(); i-- > 0;) {
    prof.x.push_back(-left.x[i]);
    prof.value.push_back(left.value[i]);
  }
  // glue at the origin; both sides attain the maximum there
  for (std::size_t i = 0; i < right.x.size(); ++i) {
    if (i == 0 && prof.x.back() == 0.0) {
      prof.value.back() = right.value[0];
      continue;
    }
    prof.x.push_back(right.x[i]);
    prof.value.push_back(right.value[i]);
  }

  prov.kind = "two_sided";
  prov.total_length = graph.total_length();
  prov.gamma = gamma;
  prov.max_edge = graph.edges()[max_edge].id;
  prov.max_coordinate = mesh.coordinate(max_edge, max_node);
  prov.min_edge = graph.edges()[min_loc.first].id;
  prov.min_coordinate = mesh.coordinate(min_loc.first, min_loc.second);
  out.provenance = std::move(prov);
  return out;
}

nlohmann::json Provenance::to_json() const {
  nlohmann::json j;
  j["kind"] = kind;
  j["total_length"] = total_length;
  if (kind == "two_sided") {
    j["gamma"] = gamma;
    j["maximizer"] = {{"edge", max_edge}, {"x", max_coordinate}};
    j["minimizer"] = {{"edge", min_edge}, {"x", min_coordinate}};
    nlohmann::json path = nlohmann::json::array();
    for (const auto& piece : gamma_path) path.push_back({{"edge", piece.edge}, {"from", piece.from}, {"to", piece.to}});
    j["gamma_path"] = path;
  }
  return j;
}

void write_csv(std::ostream& out, const RearrangedFunction& f) {
  out << "edge_id,x,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < f.profile.x.size(); ++i) out << "r," << f.profile.x[i] << ',' << f.profile.value[i] << '\n';
}

}  // namespace graphnls
