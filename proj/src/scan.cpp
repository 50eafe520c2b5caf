#include "graphnls/scan.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "graphnls/error.hpp"

namespace graphnls {

std::string to_string(PointStatus status) {
  switch (status) {
    case PointStatus::bounded:
      return "bounded";
    case PointStatus::diverged:
      return "diverged";
    case PointStatus::threshold:
      return "threshold";
    case PointStatus::unresolved:
      return "unresolved";
  }
  return "unknown";
}

ScanPoint classify_mass(const MeshPtr& mesh, double mass, const SolveConfig& base) {
  SolveConfig cfg = base;
  cfg.mass = mass;
  ScanPoint point;
  point.mass = mass;
  const auto outcome = ground_state(mesh, cfg);
  point.solver_status = outcome.status;
  point.stationarity = outcome.report.stationarity_residual;
  point.iterations = static_cast<int>(outcome.energy_history.size()) - 1;
  if (outcome.status == SolveStatus::converged) point.energy = outcome.report.energy;

  const auto& graph = mesh->graph();
  if (cfg.p == 6.0 && std::abs(mass - critical_mass(graph)) <= 1e-9 * mass) {
    point.status = PointStatus::threshold;
    return point;
  }
  switch (outcome.status) {
    case SolveStatus::converged:
      point.status = PointStatus::bounded;
      break;
    case SolveStatus::max_iters:
      point.status = PointStatus::unresolved;
      break;
    case SolveStatus::diverged_unbounded: {
      point.status = PointStatus::unresolved;
      if (cfg.p == 6.0) {
        const auto edge = default_probe_edge(graph);
        point.probe = blowup_probe(graph, mass, default_probe_lambdas(graph, edge), edge);
        if (point.probe->corroborates_blowup()) point.status = PointStatus::diverged;
      }
      break;
    }
  }
  return point;
}

unsigned scan_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GRAPHNLS_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, static_cast<unsigned>(cap));
  }
  return n;
}

std::vector<double> parse_mass_grid(const std::string& spec) {
  std::stringstream ss(spec);
  std::string a, b, n;
  if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, n))
    throw DomainError("mass grid must look like a:b:n");
  const double lo = std::stod(a);
  const double hi = std::stod(b);
  const int count = std::stoi(n);
  if (count < 1 || !(lo > 0.0) || hi < lo) throw DomainError("mass grid must be positive and ascending");
  std::vector<double> grid;
  for (int i = 0; i < count; ++i)
    grid.push_back(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
  return grid;
}

ScanResult mass_scan(const MetricGraph& graph, double p, const std::vector<double>& masses, SolveConfig cfg,
                     double resolution, unsigned threads) {
  if (masses.empty()) throw DomainError("mass grid is empty");
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (!(masses[i] > 0.0) || (i > 0 && masses[i] <= masses[i - 1]))
      throw DomainError("mass grid must be positive and ascending");
  }
  if (!(resolution > 0.0)) throw DomainError("resolution must be positive");
  cfg.p = p;
  cfg.mass = masses.front();
  cfg.validate();
  const auto mesh = build_mesh(graph, cfg.h > 0.0 ? cfg.h : default_mesh_size(graph));

  ScanResult result;
  result.graph_mode = has_terminal_edge(graph) ? "tip" : "no-tip";
  result.p = p;
  result.critical_mass = critical_mass(graph);
  result.resolution = resolution;
  result.points.resize(masses.size());

  // grid points are independent; each worker owns the slots it claims
  if (threads == 0) threads = scan_threads();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < masses.size(); i = next++) result.points[i] = classify_mass(mesh, masses[i], cfg);
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < std::min<std::size_t>(threads, masses.size()); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (p == 6.0) {
    std::optional<std::size_t> first_diverged;
    for (std::size_t i = 0; i < result.points.size(); ++i) {
      if (result.points[i].status == PointStatus::diverged) {
        first_diverged = i;
        break;
      }
    }
    if (first_diverged) {
      for (std::size_t i = *first_diverged + 1; i < result.points.size(); ++i) {
        if (result.points[i].status == PointStatus::bounded) {
          std::ostringstream msg;
          msg << "resolution failure: bounded at mu=" << result.points[i].mass << " above diverged mu="
              << result.points[*first_diverged].mass;
          result.flags.push_back(msg.str());
        }
      }
      if (*first_diverged == 0) {
        result.flags.push_back("first grid point already diverged; lower bracket unknown");
        result.bracket_high = result.points.front().mass;
      } else {
        double lo = result.points[*first_diverged - 1].mass;
        double hi = result.points[*first_diverged].mass;
        while (hi - lo > resolution) {
          const double mid = 0.5 * (lo + hi);
          auto point = classify_mass(mesh, mid, cfg);
          point.from_bisection = true;
          if (point.status == PointStatus::diverged) {
            hi = mid;
          } else {
            lo = mid;
          }
          result.points.push_back(std::move(point));
        }
        result.bracket_low = lo;
        result.bracket_high = hi;
        result.estimate = 0.5 * (lo + hi);
      }
      std::sort(result.points.begin(), result.points.end(),
                [](const ScanPoint& a, const ScanPoint& b) { return a.mass < b.mass; });
    } else {
      result.flags.push_back("no diverged point on the grid");
    }
  }
  for (const auto& pt : result.points) {
    if (pt.status == PointStatus::unresolved) {
      std::ostringstream msg;
      msg << "unresolved at mu=" << pt.mass << " (" << to_string(pt.solver_status) << ")";
      result.flags.push_back(msg.str());
    }
  }
  return result;
}

bool ScanResult::all_converged() const {
  return std::all_of(points.begin(), points.end(),
                     [](const ScanPoint& pt) { return pt.solver_status == SolveStatus::converged; });
}

nlohmann::json ScanResult::summary_json() const {
  nlohmann::json j;
  j["p"] = p;
  j["mode"] = graph_mode;
  j["critical_mass"] = critical_mass;
  j["resolution"] = resolution;
  j["estimate"] = estimate ? nlohmann::json(*estimate) : nlohmann::json(nullptr);
  j["bracket"] = bracket_low && bracket_high ? nlohmann::json::array({*bracket_low, *bracket_high})
                                             : nlohmann::json(nullptr);
  j["bracket_contains_critical_mass"] =
      bracket_low && bracket_high && *bracket_low <= critical_mass && critical_mass <= *bracket_high;
  j["flags"] = flags;
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& pt : points) {
    nlohmann::json r{{"mass", pt.mass},
                     {"status", to_string(pt.status)},
                     {"solver_status", to_string(pt.solver_status)},
                     {"stationarity", pt.stationarity},
                     {"iterations", pt.iterations},
                     {"bisection", pt.from_bisection}};
    r["energy"] = pt.energy ? nlohmann::json(*pt.energy) : nlohmann::json(nullptr);
    if (pt.probe) r["probe"] = pt.probe->to_json();
    pts.push_back(r);
  }
  j["points"] = pts;
  return j;
}

void ScanResult::write_csv(std::ostream& out) const {
  out << "p,mu,status,energy\n" << std::setprecision(17);
  for (const auto& pt : points) {
    out << p << ',' << pt.mass << ',' << to_string(pt.status) << ',';
    if (pt.energy) out << *pt.energy;
    out << '\n';
  }
}

void ScanResult::write_plot_data(std::ostream& out) const {
  out << "# mu energy\n" << std::setprecision(17);
  for (const auto& pt : points) {
    if (pt.energy) out << pt.mass << ' ' << *pt.energy << '\n';
  }
}

Ladder bound_state_ladder(const MetricGraph& graph, double p, double mass, int k, SolveConfig cfg) {
  cfg.p = p;
  cfg.mass = mass;
  cfg.k = k;
  Ladder ladder;
  ladder.states = bound_states(graph, cfg);
  for (const auto& s : ladder.states.states) ladder.energies.push_back(s.report.energy);
  ladder.found = ladder.energies.size();
  ladder.strictly_increasing = ladder.found > 0;
  for (std::size_t i = 1; i < ladder.found; ++i) {
    if (!(ladder.energies[i] > ladder.energies[i - 1])) ladder.strictly_increasing = false;
  }
  return ladder;
}

}  // namespace graphnls
