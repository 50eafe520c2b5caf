// graphnls: command-line front end for the NLS-on-metric-graphs toolkit.
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "graphnls/error.hpp"
#include "graphnls/functional.hpp"
#include "graphnls/gn.hpp"
#include "graphnls/graph.hpp"
#include "graphnls/mesh.hpp"
#include "graphnls/rearrangement.hpp"
#include "graphnls/scan.hpp"
#include "graphnls/solvers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace graphnls;

namespace {

struct RunConfig {
  std::string command;
  std::string graph;
  double p = 4.0;
  double mass = 1.0;
  std::string mass_grid;
  double h = 0.0;
  double tol = 1e-8;
  int max_iters = 20000;
  int k = 1;
  std::uint64_t seed = 1;
  std::string out = ".";
  std::optional<double> energy_floor;
  // subcommand extras
  double resolution = 0.05;
  std::string function_csv;
  std::string edge;
  std::vector<double> lambdas;
  std::optional<double> constant;
  std::size_t samples = 100;

  json to_json() const {
    // the output directory is left out so runs into different directories compare equal
    json j{{"command", command}, {"graph", graph}, {"p", p},           {"mass", mass},
           {"h", h},             {"tol", tol},     {"max_iters", max_iters}, {"k", k},
           {"seed", seed}};
    if (!mass_grid.empty()) j["mass_grid"] = mass_grid;
    j["energy_floor"] = energy_floor ? json(*energy_floor) : json(nullptr);
    return j;
  }

  SolveConfig solver() const {
    SolveConfig cfg;
    cfg.p = p;
    cfg.mass = mass;
    cfg.h = h;
    cfg.tol = tol;
    cfg.max_iters = max_iters;
    cfg.k = k;
    cfg.energy_floor = energy_floor;
    cfg.validate();
    return cfg;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

template <typename Writer>
void write_with(const fs::path& path, Writer&& writer) {
  std::ostringstream ss;
  writer(ss);
  write_text(path, ss.str());
}

json envelope(const RunConfig& rc, const SolveConfig* cfg) {
  json j;
  j["run"] = rc.to_json();
  if (cfg) j["solver"] = cfg->to_json();
  return j;
}

double mesh_size(const RunConfig& rc, const MetricGraph& g) { return rc.h > 0.0 ? rc.h : default_mesh_size(g); }

// Either the CSV given with --function or a seeded random member of mass --mass.
GraphFunction input_function(const RunConfig& rc, const MeshPtr& mesh, std::string& source) {
  if (!rc.function_csv.empty()) {
    std::ifstream in(rc.function_csv);
    if (!in) throw Error("function file not found: " + rc.function_csv);
    source = rc.function_csv;
    return read_csv(in, mesh);
  }
  source = "random(seed=" + std::to_string(rc.seed) + ")";
  return random_function(mesh, rc.seed, rc.mass);
}

json history_json(const SolveOutcome& o) {
  return json{{"energy", o.energy_history}, {"stationarity", o.residual_history}, {"mass", o.mass_history}};
}

void write_history(const fs::path& path, const SolveOutcome& o) {
  write_with(path, [&](std::ostream& out) {
    out << "iteration,energy,stationarity,mass\n";
    out.precision(17);
    for (std::size_t i = 0; i < o.energy_history.size(); ++i) {
      out << i << ',' << o.energy_history[i] << ',' << o.residual_history[i] << ',' << o.mass_history[i] << '\n';
    }
  });
}

void run_report(const RunConfig& rc) {
  const auto g = MetricGraph::load(rc.graph);
  json doc = envelope(rc, nullptr);
  doc["graph_document"] = g.to_json();
  doc["topology"] = topology_report(g).to_json();
  write_json(fs::path(rc.out) / "topology.json", doc);
  std::cout << doc["topology"].dump(2) << "\n";
}

void run_solve(const RunConfig& rc) {
  const auto g = MetricGraph::load(rc.graph);
  auto cfg = rc.solver();
  const auto mesh = build_mesh(g, mesh_size(rc, g));
  const auto outcome = ground_state(mesh, cfg);
  json doc = envelope(rc, &cfg);
  doc["mesh"] = {{"dofs", mesh->dof_count()}, {"h_max", mesh->max_spacing()}, {"h_min", mesh->min_spacing()}};
  doc["energy_floor_used"] = cfg.energy_floor ? *cfg.energy_floor : default_energy_floor(*mesh, cfg.mass);
  doc["outcome"] = outcome.to_json(g);
  doc["history"] = history_json(outcome);
  const auto [sigma, sigma_report] = constant_state(mesh, cfg.mass, cfg.p);
  doc["constant_state_energy"] = sigma_report.energy;
  const fs::path out(rc.out);
  write_json(out / "solve.json", doc);
  write_history(out / "history.csv", outcome);
  if (outcome.state) write_with(out / "state.csv", [&](std::ostream& s) { write_csv(s, *outcome.state); });
  std::cout << "status " << to_string(outcome.status) << "  energy " << outcome.report.energy << "  stationarity "
            << outcome.report.stationarity_residual << "\n";
}

void run_bound(const RunConfig& rc) {
  const auto g = MetricGraph::load(rc.graph);
  auto cfg = rc.solver();
  const auto ladder = bound_state_ladder(g, cfg.p, cfg.mass, cfg.k, cfg);
  json doc = envelope(rc, &cfg);
  json states = json::array();
  const fs::path out(rc.out);
  for (std::size_t i = 0; i < ladder.states.states.size(); ++i) {
    const auto& s = ladder.states.states[i];
    json e = s.to_json(g);
    e["multiplicity"] = ladder.states.multiplicity[i];
    e["file"] = "state_" + std::to_string(i) + ".csv";
    states.push_back(e);
    if (s.state) write_with(out / e["file"].get<std::string>(), [&](std::ostream& o) { write_csv(o, *s.state); });
  }
  doc["requested"] = cfg.k;
  doc["found"] = ladder.found;
  doc["energies"] = ladder.energies;
  doc["strictly_increasing"] = ladder.strictly_increasing;
  doc["seeds_tried"] = ladder.states.seeds_tried;
  doc["seeds_failed"] = ladder.states.seeds_failed;
  doc["diagnostics"] = ladder.states.diagnostics;
  doc["states"] = states;
  write_json(out / "bound_states.json", doc);
  std::cout << "found " << ladder.found << " of " << cfg.k << " bound states\n";
  for (double e : ladder.energies) std::cout << "  E = " << e << "\n";
}

void run_scan(const RunConfig& rc) {
  if (rc.mass_grid.empty()) throw DomainError("scan needs --mass-grid a:b:n");
  const auto g = MetricGraph::load(rc.graph);
  const auto masses = parse_mass_grid(rc.mass_grid);
  auto cfg = rc.solver();
  const auto result = mass_scan(g, rc.p, masses, cfg, rc.resolution, scan_threads());
  json doc = envelope(rc, &cfg);
  doc["resolution"] = rc.resolution;
  doc["scan"] = result.summary_json();
  const fs::path out(rc.out);
  write_json(out / "scan.json", doc);
  write_with(out / "scan.csv", [&](std::ostream& s) { result.write_csv(s); });
  write_with(out / "scan_plot.dat", [&](std::ostream& s) { result.write_plot_data(s); });
  std::cout << "critical mass " << result.critical_mass;
  if (result.bracket_low && result.bracket_high)
    std::cout << "  bracket [" << *result.bracket_low << ", " << *result.bracket_high << "]";
  else
    std::cout << "  no bracket";
  std::cout << "\n";
  for (const auto& f : result.flags) std::cout << "flag: " << f << "\n";
}

void run_gn(const RunConfig& rc) {
  const auto g = MetricGraph::load(rc.graph);
  check_exponent(rc.p);
  const auto mesh = build_mesh(g, mesh_size(rc, g));
  std::string source;
  const auto u = input_function(rc, mesh, source);
  const GnMode mode = mode_for(g);
  const auto norms = gn_norms(u);

  json doc = envelope(rc, nullptr);
  doc["run"]["samples"] = rc.samples;
  doc["run"]["constant"] = rc.constant ? json(*rc.constant) : json(nullptr);
  doc["function"] = source;
  doc["mode"] = to_string(mode);
  doc["threshold"] = mode_threshold(mode);
  doc["norms"] = {{"mass", norms.mass}, {"l6", norms.l6}, {"dirichlet", norms.dirichlet}};
  doc["ratio_compact"] = gn_ratio_compact(u, rc.p);
  doc["ratio_critical"] = norms.dirichlet > 0.0 ? json(gn_ratio_critical(u)) : json(nullptr);

  const auto estimate = estimate_constant(mesh, mode, rc.samples, rc.seed);
  doc["estimate"] = estimate.to_json();
  // an estimate of 0 means no sample needed the sqrt(theta) term; take the C -> 0+ limit
  const double c = rc.constant ? *rc.constant : std::max(estimate.constant, std::numeric_limits<double>::min());
  if (norms.mass <= mode_threshold(mode) * (1.0 + 1e-12)) {
    doc["theta_min"] = theta_min(norms, c, mode).to_json();
    doc["required_constant"] = required_constant(norms, mode);
  } else {
    doc["theta_min"] = nullptr;
    doc["theta_min_skipped"] = "mass above the mode threshold";
  }
  write_json(fs::path(rc.out) / "gn.json", doc);
  std::cout << "ratio_critical " << doc["ratio_critical"].dump() << "  estimated C " << estimate.constant << "\n";
}

json profile_norms(const Profile& f) {
  return json{{"mass", f.mass()}, {"l6", f.lp_norm_p(6.0)}, {"dirichlet", f.dirichlet_energy()}};
}

void run_rearrange(const RunConfig& rc) {
  const auto g = MetricGraph::load(rc.graph);
  const auto mesh = build_mesh(g, mesh_size(rc, g));
  std::string source;
  auto u = input_function(rc, mesh, source);
  u.values() = u.values().cwiseAbs();

  json doc = envelope(rc, nullptr);
  doc["function"] = source;
  doc["input"] = {{"mass", exact_lp_norm_p(u, 2.0)}, {"l6", exact_lp_norm_p(u, 6.0)}, {"dirichlet", dirichlet_energy(u)}};
  const fs::path out(rc.out);

  const auto dec = decreasing_rearrangement(u);
  doc["decreasing"] = {{"provenance", dec.provenance.to_json()}, {"norms", profile_norms(dec.profile)},
                       {"file", "decreasing.csv"}};
  write_with(out / "decreasing.csv", [&](std::ostream& s) { write_csv(s, dec); });

  if (has_terminal_edge(g) || !shortest_cycle_length(g)) {
    doc["two_sided"] = nullptr;
    doc["two_sided_skipped"] = has_terminal_edge(g) ? "graph has a terminal edge" : "graph has no cycle";
  } else {
    const auto two = two_sided_rearrangement(u);
    doc["two_sided"] = {{"provenance", two.provenance.to_json()}, {"norms", profile_norms(two.profile)},
                        {"file", "two_sided.csv"}};
    write_with(out / "two_sided.csv", [&](std::ostream& s) { write_csv(s, two); });
  }
  write_json(out / "rearrange.json", doc);
  std::cout << "rearranged " << source << "\n";
}

void run_probe(const RunConfig& rc) {
  const auto g = MetricGraph::load(rc.graph);
  const std::string edge = rc.edge.empty() ? default_probe_edge(g) : rc.edge;
  const auto lambdas = rc.lambdas.empty() ? default_probe_lambdas(g, edge) : rc.lambdas;
  const auto result = blowup_probe(g, rc.mass, lambdas, edge);
  json doc = envelope(rc, nullptr);
  doc["run"]["edge"] = edge;
  doc["run"]["lambdas"] = lambdas;
  doc["probe"] = result.to_json();
  doc["corroborates_blowup"] = result.corroborates_blowup();
  const fs::path out(rc.out);
  write_json(out / "probe.json", doc);
  write_with(out / "probe.csv", [&](std::ostream& s) {
    s << "lambda,energy,mass\n";
    s.precision(17);
    for (const auto& pt : result.points) s << pt.lambda << ',' << pt.energy << ',' << pt.mass << '\n';
  });
  std::cout << (result.corroborates_blowup() ? "blow-up corroborated" : "blow-up not corroborated") << "  a "
            << result.fit_coefficient << "  R^2 " << result.r_squared << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stationary states of the NLS energy on compact metric graphs"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  RunConfig rc;

  auto common = [&](CLI::App* sub, bool solver_flags) {
    sub->add_option("--graph", rc.graph, "graph document (JSON)")->required();
    sub->add_option("--out", rc.out, "output directory")->capture_default_str();
    sub->add_option("--h", rc.h, "mesh size (0 = min edge length / 16)")->capture_default_str();
    sub->add_option("--seed", rc.seed, "random seed")->capture_default_str();
    if (solver_flags) {
      sub->add_option("--p", rc.p, "nonlinearity exponent in (2, 6]")->capture_default_str();
      sub->add_option("--tol", rc.tol, "stationarity tolerance")->capture_default_str();
      sub->add_option("--max-iters", rc.max_iters, "flow iteration cap")->capture_default_str();
      sub->add_option("--energy-floor", rc.energy_floor, "divergence floor (default mesh-scaled, p = 6 only)");
    }
  };

  auto* report = app.add_subcommand("report", "topology report");
  common(report, false);

  auto* solve = app.add_subcommand("solve", "ground state by normalized gradient flow");
  common(solve, true);
  solve->add_option("--mass", rc.mass, "mass constraint")->capture_default_str();

  auto* bound = app.add_subcommand("bound", "bound states by deflated Newton");
  common(bound, true);
  bound->add_option("--mass", rc.mass, "mass constraint")->capture_default_str();
  bound->add_option("--k", rc.k, "number of states")->capture_default_str();

  auto* scan = app.add_subcommand("scan", "ground-state mass scan");
  common(scan, true);
  scan->add_option("--mass-grid", rc.mass_grid, "a:b:n")->required();
  scan->add_option("--resolution", rc.resolution, "threshold bisection resolution")->capture_default_str();

  auto* gn = app.add_subcommand("gn", "Gagliardo-Nirenberg ratios, theta_min, constant estimate");
  common(gn, false);
  gn->add_option("--p", rc.p, "exponent for the compact ratio")->capture_default_str();
  gn->add_option("--mass", rc.mass, "mass of the random test function")->capture_default_str();
  gn->add_option("--function", rc.function_csv, "function CSV (edge_id,x,value)");
  gn->add_option("--constant", rc.constant, "constant C for theta_min (default: estimated)");
  gn->add_option("--samples", rc.samples, "random family size for the C estimate")->capture_default_str();

  auto* rearr = app.add_subcommand("rearrange", "decreasing and two-sided rearrangements of |u|");
  common(rearr, false);
  rearr->add_option("--mass", rc.mass, "mass of the random test function")->capture_default_str();
  rearr->add_option("--function", rc.function_csv, "function CSV (edge_id,x,value)");

  auto* probe = app.add_subcommand("probe", "p = 6 scaling-law blow-up probe");
  common(probe, false);
  probe->add_option("--mass", rc.mass, "mass")->capture_default_str();
  probe->add_option("--edge", rc.edge, "edge id (default: first terminal edge, else longest)");
  probe->add_option("--lambdas", rc.lambdas, "scaling parameters")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    rc.command = app.get_subcommands().front()->get_name();
    if (!(rc.h >= 0.0) || !std::isfinite(rc.h)) throw DomainError("--h must be non-negative");
    if (!(rc.mass > 0.0) || !std::isfinite(rc.mass)) throw DomainError("--mass must be positive");
    if (!(rc.resolution > 0.0)) throw DomainError("--resolution must be positive");
    fs::create_directories(rc.out);
    if (rc.command == "report") run_report(rc);
    else if (rc.command == "solve") run_solve(rc);
    else if (rc.command == "bound") run_bound(rc);
    else if (rc.command == "scan") run_scan(rc);
    else if (rc.command == "gn") run_gn(rc);
    else if (rc.command == "rearrange") run_rearrange(rc);
    else if (rc.command == "probe") run_probe(rc);
  } catch (const std::exception& e) {
    std::cerr << "graphnls " << rc.command << ": error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
