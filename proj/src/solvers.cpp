#include "graphnls/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "graphnls/error.hpp"

namespace graphnls {

void SolveConfig::validate() const {
  check_exponent(p);
  if (!(mass > 0.0) || !std::isfinite(mass)) throw DomainError("mass must be positive");
  if (h < 0.0 || !std::isfinite(h)) throw DomainError("mesh size must be positive");
  if (!(dt > 0.0) || !(dt_max >= dt)) throw DomainError("flow step must be positive and <= dt_max");
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  if (max_iters <= 0) throw DomainError("max_iters must be positive");
  if (energy_floor && !std::isfinite(*energy_floor)) throw DomainError("energy floor must be finite");
  if (!(deflation_shift >= 0.0) || !(deflation_power > 0.0)) throw DomainError("invalid deflation parameters");
  if (k < 1) throw DomainError("k must be at least 1");
}

nlohmann::json SolveConfig::to_json() const {
  nlohmann::json j{{"p", p},     {"mass", mass},          {"h", h},
                   {"dt", dt},   {"dt_max", dt_max},      {"tol", tol},
                   {"max_iters", max_iters},
                   {"deflation_shift", deflation_shift},  {"deflation_power", deflation_power},
                   {"k", k},     {"polish", polish},      {"polish_threshold", polish_threshold},
                   {"seed_order", seed_order}};
  j["energy_floor"] = energy_floor ? nlohmann::json(*energy_floor) : nlohmann::json(nullptr);
  return j;
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::diverged_unbounded:
      return "diverged_unbounded";
    case SolveStatus::max_iters:
      return "max_iters";
  }
  return "unknown";
}

nlohmann::json SolveOutcome::to_json(const MetricGraph& graph) const {
  nlohmann::json j;
  j["status"] = to_string(status);
  j["seed"] = seed;
  j["energy"] = report.energy;
  j["lambda"] = report.lambda;
  j["lambda_newton"] = lambda_newton;
  j["iterations"] = energy_history.empty() ? 0 : energy_history.size() - 1;
  j["polish_iterations"] = polish_iterations;
  j["report"] = report.to_json(graph);
  return j;
}

double default_energy_floor(const Mesh& mesh, double mass) {
  const double h = mesh.min_spacing();
  return -mass / (20.0 * h * h);
}

double soliton(double x, double lambda) {
  const double c = std::cosh(2.0 * std::sqrt(lambda) * x);
  if (!std::isfinite(c)) return 0.0;
  return std::pow(3.0 * lambda, 0.25) / std::sqrt(c);
}

namespace {

void normalise_mass(GraphFunction& u, double target) {
  const double m = mass(u);
  if (!(m > 0.0)) throw DomainError("cannot normalise the zero function");
  u.values() *= std::sqrt(target / m);
}

// flip so the entry of largest magnitude is positive
void normalise_sign(GraphFunction& u) {
  Eigen::Index i = 0;
  u.values().cwiseAbs().maxCoeff(&i);
  if (u.values()[i] < 0.0) u.values() = -u.values();
}

double floor_for(const Mesh& mesh, const SolveConfig& cfg) {
  if (cfg.energy_floor) return *cfg.energy_floor;
  if (cfg.p == 6.0) return default_energy_floor(mesh, cfg.mass);
  return -std::numeric_limits<double>::infinity();
}

}  // namespace

SolveOutcome gradient_flow(const GraphFunction& seed, const SolveConfig& cfg, std::string label) {
  cfg.validate();
  const auto& mesh = seed.mesh();
  const auto& lumped = mesh.lumped_mass();
  const double p = cfg.p;
  const double floor = floor_for(mesh, cfg);

  SolveOutcome out;
  out.seed = std::move(label);
  GraphFunction u = seed;
  normalise_mass(u, cfg.mass);
  double e = energy(u, p);
  const double kinetic0 = 0.5 * dirichlet_energy(u);
  double res = residual(u, p).stationarity;
  out.energy_history.push_back(e);
  out.residual_history.push_back(res);
  out.mass_history.push_back(mass(u));

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  Eigen::SparseMatrix<double> system = mesh.stiffness();
  for (Eigen::Index i = 0; i < system.rows(); ++i) system.coeffRef(i, i) += lumped[i];
  solver.analyzePattern(system);
  double dt = cfg.dt;
  double polish_at = cfg.polish_threshold;
  int streak = 0;
  int iterations = 0;
  out.status = SolveStatus::max_iters;

  auto done = [&](SolveStatus status) {
    out.status = status;
    normalise_sign(u);
    out.report = energy_report(u, p);
    out.state = u;
    return out;
  };

  if (res <= cfg.tol) return done(SolveStatus::converged);

  while (iterations < cfg.max_iters) {
    ++iterations;
    // (M (1/dt + s) + K) v = M (u/dt + |u|^{p-2} u + (s - lambda) u), s = max(lambda, 0):
    // fixed points are exactly the constrained critical points
    const double lambda = lambda_of(u, p);
    const double shift = std::max(lambda, 0.0);
    system = mesh.stiffness();
    for (Eigen::Index i = 0; i < system.rows(); ++i) system.coeffRef(i, i) += lumped[i] * (1.0 / dt + shift);
    solver.factorize(system);
    if (solver.info() != Eigen::Success) throw Error("flow system factorisation failed");
    const Eigen::ArrayXd vals = u.values().array();
    const Eigen::VectorXd rhs =
        (lumped.array() * (vals / dt + vals.abs().pow(p - 2.0) * vals + (shift - lambda) * vals)).matrix();
    GraphFunction next(u.mesh_ptr(), solver.solve(rhs));
    normalise_mass(next, cfg.mass);
    const double e_next = energy(next, p);
    if (!std::isfinite(e_next) || e_next > e + 1e-12 * std::max(1.0, std::abs(e))) {
      dt *= 0.5;
      streak = 0;
      if (dt < 1e-14) break;
      continue;
    }
    u = std::move(next);
    e = e_next;
    res = residual(u, p).stationarity;
    out.energy_history.push_back(e);
    out.residual_history.push_back(res);
    out.mass_history.push_back(mass(u));

    if (e <= floor && 0.5 * dirichlet_energy(u) > kinetic0) return done(SolveStatus::diverged_unbounded);
    if (res <= cfg.tol) return done(SolveStatus::converged);
    if (cfg.polish && res <= polish_at) {
      const auto newton = newton_solve(u, lambda_of(u, p), cfg, {}, 40);
      if (newton.converged) {
        const double e_polished = energy(newton.state, p);
        if (std::abs(e_polished - e) <= 1e-6 * std::max(1.0, std::abs(e))) {
          out.polish_iterations = newton.iterations;
          out.lambda_newton = newton.lambda;
          u = newton.state;
          return done(SolveStatus::converged);
        }
      }
      polish_at *= 0.1;
    }
    if (++streak >= 3) {
      dt = std::min(2.0 * dt, cfg.dt_max);
      streak = 0;
    }
  }
  return done(SolveStatus::max_iters);
}

namespace {

// Continuous graph distance from vertex 0, evaluated at every node.
GraphFunction distance_function(const MeshPtr& mesh) {
  const auto& g = mesh->graph();
  std::vector<double> dist(g.vertex_count(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[0] = 0.0;
  heap.push({0.0, 0});
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    for (const auto& end : g.incident(v)) {
      const auto& e = g.edges()[end.edge];
      const auto w = end.at_start ? e.to : e.from;
      if (d + e.length < dist[w]) {
        dist[w] = d + e.length;
        heap.push({dist[w], w});
      }
    }
  }
  return GraphFunction::sample(mesh, [&](std::size_t e, double x) {
    const auto& edge = g.edges()[e];
    return std::min(dist[edge.from] + x, dist[edge.to] + edge.length - x);
  });
}

GraphFunction bump_on_edge(const MeshPtr& mesh, std::size_t edge, bool at_tip, bool tip_at_start) {
  const auto& g = mesh->graph();
  const double len = g.edges()[edge].length;
  const double root = at_tip ? 6.0 / len : 12.0 / len;
  const double lambda = root * root;
  const double tail = at_tip ? soliton(len, lambda) : soliton(0.5 * len, lambda);
  return GraphFunction::sample(mesh, [&](std::size_t e, double x) {
    if (e != edge) return 0.0;
    const double s = at_tip ? (tip_at_start ? x : len - x) : x - 0.5 * len;
    return std::max(0.0, soliton(s, lambda) - tail);
  });
}

}  // namespace

std::vector<std::pair<std::string, GraphFunction>> ground_state_seeds(const MeshPtr& mesh, double target) {
  const auto& g = mesh->graph();
  std::vector<std::pair<std::string, GraphFunction>> seeds;

  const GraphFunction dist = distance_function(mesh);
  const double reach = std::max(dist.values().maxCoeff(), 1e-300);
  GraphFunction perturbed(mesh);
  perturbed.values() = (1.0 + 0.1 * (std::numbers::pi * dist.values().array() / reach).cos()).matrix();
  seeds.emplace_back("constant+perturbation", perturbed);

  constexpr std::size_t kMaxBumps = 4;
  if (has_terminal_edge(g)) {
    for (std::size_t e = 0; e < g.edge_count() && seeds.size() <= kMaxBumps; ++e) {
      const auto& edge = g.edges()[e];
      if (edge.is_loop()) continue;
      if (g.degree(edge.from) == 1) seeds.emplace_back("tip:" + edge.id, bump_on_edge(mesh, e, true, true));
      else if (g.degree(edge.to) == 1) seeds.emplace_back("tip:" + edge.id, bump_on_edge(mesh, e, true, false));
    }
  } else {
    std::vector<std::size_t> order(g.edge_count());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return g.edges()[a].length > g.edges()[b].length; });
    for (std::size_t i = 0; i < order.size() && i < kMaxBumps; ++i)
      seeds.emplace_back("mid:" + g.edges()[order[i]].id, bump_on_edge(mesh, order[i], false, true));
  }
  for (auto& [name, u] : seeds) normalise_mass(u, target);
  return seeds;
}

SolveOutcome ground_state(const MeshPtr& mesh, const SolveConfig& cfg) {
  cfg.validate();
  std::optional<SolveOutcome> best;
  std::optional<SolveOutcome> fallback;
  for (auto& [name, seed] : ground_state_seeds(mesh, cfg.mass)) {
    auto outcome = gradient_flow(seed, cfg, name);
    if (outcome.status == SolveStatus::diverged_unbounded) return outcome;
    if (outcome.status == SolveStatus::converged) {
      if (!best || outcome.report.energy < best->report.energy) best = std::move(outcome);
    } else if (!fallback || outcome.report.energy < fallback->report.energy) {
      fallback = std::move(outcome);
    }
  }
  if (best) return *best;
  return *fallback;
}

SolveOutcome ground_state(const MetricGraph& graph, const SolveConfig& cfg) {
  cfg.validate();
  return ground_state(build_mesh(graph, cfg.h > 0.0 ? cfg.h : default_mesh_size(graph)), cfg);
}

std::vector<Eigenpair> laplacian_eigenpairs(const MeshPtr& mesh, std::size_t k) {
  const auto n = mesh->dof_count();
  if (k < 1) throw DomainError("k must be at least 1");
  if (k > n) throw DomainError("requested more eigenpairs than degrees of freedom");
  const Eigen::VectorXd inv_sqrt = mesh->lumped_mass().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd a =
      inv_sqrt.asDiagonal() * Eigen::MatrixXd(mesh->stiffness()) * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) throw Error("eigen decomposition failed");
  std::vector<Eigenpair> out;
  for (std::size_t i = 0; i < k; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    GraphFunction v(mesh, inv_sqrt.cwiseProduct(solver.eigenvectors().col(col)));
    normalise_mass(v, 1.0);
    normalise_sign(v);
    out.push_back({solver.eigenvalues()[col], std::move(v)});
  }
  return out;
}

NewtonResult newton_solve(const GraphFunction& seed, double lambda0, const SolveConfig& cfg,
                          const std::vector<GraphFunction>& deflate, int max_iters) {
  const auto& mesh = seed.mesh();
  const auto& lumped = mesh.lumped_mass();
  const auto n = static_cast<Eigen::Index>(mesh.dof_count());
  const double p = cfg.p;
  const double mu = cfg.mass;

  Eigen::VectorXd u = seed.values();
  double lambda = lambda0;

  auto system = [&](const Eigen::VectorXd& w, double lam) {
    Eigen::VectorXd f(n + 1);
    const Eigen::ArrayXd a = w.array();
    f.head(n) = mesh.stiffness() * w - (lumped.array() * a.abs().pow(p - 2.0) * a).matrix() +
                lam * lumped.cwiseProduct(w);
    f[n] = 0.5 * (lumped.dot(w.cwiseAbs2()) - mu);
    return f;
  };
  // log of the deflation factor and its gradient
  auto deflation = [&](const Eigen::VectorXd& w, Eigen::VectorXd* grad) {
    double log_m = 0.0;
    if (grad) grad->setZero(n);
    for (const auto& root : deflate) {
      for (double sign : {1.0, -1.0}) {
        const Eigen::VectorXd diff = w - sign * root.values();
        const double d2 = lumped.dot(diff.cwiseAbs2());
        const double dq = std::pow(d2, -0.5 * cfg.deflation_power);
        const double factor = dq + cfg.deflation_shift;
        log_m += std::log(factor);
        if (grad) *grad += (-cfg.deflation_power * dq / d2 / factor) * lumped.cwiseProduct(diff);
      }
    }
    return log_m;
  };
  // Judged after exact renormalisation: near a symmetry orbit (rotations on a
  // loop) the Jacobian is almost singular and the mass row stalls around 1e-11.
  auto converged = [&](const Eigen::VectorXd& w) {
    const double m = lumped.dot(w.cwiseAbs2());
    if (std::abs(m - mu) > 1e-8 * mu) return false;
    const Eigen::VectorXd scaled = w * std::sqrt(mu / m);
    return residual(GraphFunction(seed.mesh_ptr(), scaled), p).stationarity <= 1e-2 * cfg.tol;
  };

  NewtonResult result;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (int it = 0; it < max_iters; ++it) {
    result.iterations = it;
    if (converged(u)) {
      result.converged = true;
      break;
    }
    const Eigen::VectorXd f = system(u, lambda);
    Eigen::VectorXd grad;
    const double merit = std::exp(deflation(u, &grad)) * f.norm();

    std::vector<Eigen::Triplet<double>> trip;
    const auto& k = mesh.stiffness();
    for (Eigen::Index col = 0; col < k.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator itk(k, col); itk; ++itk)
        trip.emplace_back(itk.row(), itk.col(), itk.value());
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      trip.emplace_back(i, i, lumped[i] * (lambda - (p - 1.0) * std::pow(std::abs(u[i]), p - 2.0)));
      trip.emplace_back(i, n, lumped[i] * u[i]);
      trip.emplace_back(n, i, lumped[i] * u[i]);
    }
    Eigen::SparseMatrix<double> jac(n + 1, n + 1);
    jac.setFromTriplets(trip.begin(), trip.end());
    lu.compute(jac);
    if (lu.info() != Eigen::Success) break;
    Eigen::VectorXd step = lu.solve(f);
    if (lu.info() != Eigen::Success || !step.allFinite()) break;
    if (!deflate.empty()) {
      const double denom = 1.0 + grad.dot(step.head(n));
      if (std::abs(denom) > 1e-300) step /= denom;
    }

    double alpha = 1.0;
    bool accepted = false;
    for (int tries = 0; tries < 12; ++tries) {
      const Eigen::VectorXd trial_u = u - alpha * step.head(n);
      const double trial_lambda = lambda - alpha * step[n];
      const double trial = std::exp(deflation(trial_u, nullptr)) * system(trial_u, trial_lambda).norm();
      if (std::isfinite(trial) && trial < merit) {
        u = trial_u;
        lambda = trial_lambda;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      u -= alpha * step.head(n);
      lambda -= alpha * step[n];
    }
    if (!u.allFinite()) break;
  }
  if (!result.converged && u.allFinite() && converged(u)) result.converged = true;

  GraphFunction state(seed.mesh_ptr(), u);
  if (result.converged) {
    normalise_mass(state, mu);
    result.converged = residual(state, p).stationarity <= cfg.tol;
  }
  result.state = std::move(state);
  result.lambda = lambda;
  return result;
}

BoundStates bound_states(const MeshPtr& mesh, const SolveConfig& cfg) {
  cfg.validate();
  const double p = cfg.p;
  const double mu = cfg.mass;
  const auto k = static_cast<std::size_t>(cfg.k);
  const std::size_t want = std::min(mesh->dof_count(), std::max<std::size_t>(3 * k + 3, 10));

  std::vector<std::pair<std::string, GraphFunction>> seeds;
  const auto eig = laplacian_eigenpairs(mesh, want);
  for (std::size_t i = 0; i < eig.size(); ++i) {
    GraphFunction s = eig[i].function;
    normalise_mass(s, mu);
    seeds.emplace_back("eigen:" + std::to_string(i), std::move(s));
  }
  if (p == 6.0) {
    auto extra = ground_state_seeds(mesh, mu);
    for (std::size_t i = 1; i < extra.size(); ++i) seeds.push_back(std::move(extra[i]));
  }
  if (cfg.seed_order != 0) {
    std::mt19937_64 rng(cfg.seed_order);
    std::shuffle(seeds.begin(), seeds.end(), rng);
  }

  BoundStates out;
  std::vector<GraphFunction> deflate;
  std::vector<SolveOutcome> found;
  std::vector<int> multiplicity;
  const double distinct = 1e-3 * std::sqrt(mu);
  for (auto& [name, seed] : seeds) {
    ++out.seeds_tried;
    auto newton = newton_solve(seed, lambda_of(seed, p), cfg, deflate, 80);
    // deflation can push a seed out of its basin; duplicates are caught below
    if (!newton.converged && !deflate.empty()) newton = newton_solve(seed, lambda_of(seed, p), cfg, {}, 80);
    if (!newton.converged) {
      ++out.seeds_failed;
      out.diagnostics.push_back("seed " + name + ": Newton did not converge");
      continue;
    }
    GraphFunction state = newton.state;
    normalise_sign(state);
    bool same_state = false;
    for (const auto& d : deflate) {
      const Eigen::VectorXd& a = state.values();
      const double dplus = std::sqrt(mesh->lumped_mass().dot((a - d.values()).cwiseAbs2()));
      const double dminus = std::sqrt(mesh->lumped_mass().dot((a + d.values()).cwiseAbs2()));
      if (std::min(dplus, dminus) < distinct) same_state = true;
    }
    if (same_state) {
      out.diagnostics.push_back("seed " + name + ": converged to an already deflated state");
      continue;
    }
    deflate.push_back(state);
    const double e = energy(state, p);
    bool same_orbit = false;
    for (std::size_t i = 0; i < found.size(); ++i) {
      if (std::abs(found[i].report.energy - e) <= 1e-8 * std::max(1.0, std::abs(e))) {
        ++multiplicity[i];
        same_orbit = true;
        break;
      }
    }
    if (same_orbit) continue;
    SolveOutcome o;
    o.status = SolveStatus::converged;
    o.seed = name;
    o.lambda_newton = newton.lambda;
    o.polish_iterations = newton.iterations;
    o.report = energy_report(state, p);
    o.state = std::move(state);
    found.push_back(std::move(o));
    multiplicity.push_back(1);
  }

  std::vector<std::size_t> order(found.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return found[a].report.energy < found[b].report.energy; });
  for (std::size_t i = 0; i < order.size() && i < k; ++i) {
    out.states.push_back(std::move(found[order[i]]));
    out.multiplicity.push_back(multiplicity[order[i]]);
  }
  if (out.states.empty()) out.diagnostics.push_back("no bound state found");
  return out;
}

BoundStates bound_states(const MetricGraph& graph, const SolveConfig& cfg) {
  cfg.validate();
  return bound_states(build_mesh(graph, cfg.h > 0.0 ? cfg.h : default_mesh_size(graph)), cfg);
}

std::pair<GraphFunction, EnergyReport> constant_state(const MeshPtr& mesh, double target, double p) {
  if (!(target > 0.0)) throw DomainError("mass must be positive");
  GraphFunction u(mesh);
  u.values().setConstant(std::sqrt(target / mesh->graph().total_length()));
  auto report = energy_report(u, p);
  return {std::move(u), std::move(report)};
}

namespace {

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Unit-support profile: half-soliton from x = 0 (tip) or a soliton centred at
// 1/2 (interior), tapered to zero by a cubic at the support boundary.
double raw_profile(double x, bool tip) {
  if (x < 0.0 || x > 1.0) return 0.0;
  if (tip) return soliton(x, 256.0) * (1.0 - smoothstep((x - 0.75) / 0.25));
  const double taper = smoothstep(x / 0.25) * (1.0 - smoothstep((x - 0.75) / 0.25));
  return soliton(x - 0.5, 1024.0) * taper;
}

}  // namespace

std::string default_probe_edge(const MetricGraph& graph) {
  for (const auto& e : graph.edges()) {
    if (!e.is_loop() && (graph.degree(e.from) == 1 || graph.degree(e.to) == 1)) return e.id;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < graph.edge_count(); ++i) {
    if (graph.edges()[i].length > graph.edges()[best].length) best = i;
  }
  return graph.edges()[best].id;
}

std::vector<double> default_probe_lambdas(const MetricGraph& graph, const std::string& edge) {
  const auto idx = graph.find_edge(edge);
  if (!idx) throw DomainError("unknown edge '" + edge + "'");
  const double base = std::max(1.0, 1.0 / graph.edges()[*idx].length);
  return {base, 2.0 * base, 4.0 * base, 8.0 * base, 16.0 * base};
}

ProbeResult blowup_probe(const MetricGraph& graph, double target, const std::vector<double>& lambdas,
                         const std::string& edge_id) {
  if (!(target > 0.0)) throw DomainError("mass must be positive");
  if (lambdas.empty()) throw DomainError("empty lambda grid");
  const auto idx = graph.find_edge(edge_id);
  if (!idx) throw DomainError("unknown edge '" + edge_id + "'");
  const auto& edge = graph.edges()[*idx];
  double lambda_max = 0.0;
  for (double l : lambdas) {
    if (!(l > 0.0)) throw DomainError("lambda values must be positive");
    if (1.0 / l > edge.length)
      throw DomainError("support [0, 1/lambda] does not fit on edge '" + edge_id + "' for lambda = " +
                        std::to_string(l));
    lambda_max = std::max(lambda_max, l);
  }

  ProbeResult out;
  out.edge = edge_id;
  out.mass = target;
  const bool tip = !edge.is_loop() && (graph.degree(edge.from) == 1 || graph.degree(edge.to) == 1);
  const bool tip_at_start = tip && graph.degree(edge.from) == 1;
  out.mode = tip ? "tip" : "interior";

  // profile on its own fine axis
  constexpr std::size_t kFine = 200000;
  const double hf = 1.0 / static_cast<double>(kFine);
  std::vector<double> v(kFine + 1);
  for (std::size_t i = 0; i <= kFine; ++i) v[i] = raw_profile(static_cast<double>(i) * hf, tip);
  auto fine_norms = [&](double scale) {
    double m = 0.0, l6 = 0.0, d = 0.0;
    for (std::size_t i = 0; i <= kFine; ++i) {
      const double w = (i == 0 || i == kFine) ? 0.5 * hf : hf;
      const double a = scale * v[i];
      m += w * a * a;
      l6 += w * std::pow(a, 6.0);
      if (i < kFine) d += std::pow(scale * (v[i + 1] - v[i]), 2.0) / hf;
    }
    return std::array<double, 3>{m, l6, d};
  };
  const double scale = std::sqrt(target / fine_norms(1.0)[0]);
  const auto norms = fine_norms(scale);
  out.profile_energy = 0.5 * norms[2] - norms[1] / 6.0;
  if (!(out.profile_energy < -1e-8 * norms[2])) {
    out.message = "no negative-energy compactly supported profile at this mass";
    return out;
  }
  out.profile_ok = true;

  const double h = std::min(default_mesh_size(graph), 1.0 / (400.0 * lambda_max));
  const auto mesh = build_mesh(graph, h);
  for (double l : lambdas) {
    auto w = GraphFunction::sample(mesh, [&](std::size_t e, double x) {
      if (e != *idx) return 0.0;
      const double s = tip ? (tip_at_start ? x : edge.length - x) : x - 0.5 * (edge.length - 1.0 / l);
      return scale * std::sqrt(l) * raw_profile(l * s, tip);
    });
    normalise_mass(w, target);
    out.points.push_back({l, energy(w, 6.0), mass(w)});
  }
  double num = 0.0, den = 0.0, mean = 0.0;
  for (const auto& pt : out.points) {
    num += pt.energy * pt.lambda * pt.lambda;
    den += std::pow(pt.lambda, 4.0);
    mean += pt.energy;
  }
  mean /= static_cast<double>(out.points.size());
  out.fit_coefficient = num / den;
  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& pt : out.points) {
    ss_res += std::pow(pt.energy - out.fit_coefficient * pt.lambda * pt.lambda, 2.0);
    ss_tot += std::pow(pt.energy - mean, 2.0);
  }
  out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return out;
}

nlohmann::json ProbeResult::to_json() const {
  nlohmann::json j;
  j["profile_ok"] = profile_ok;
  j["mode"] = mode;
  j["edge"] = edge;
  j["mass"] = mass;
  j["profile_energy"] = profile_energy;
  j["fit_coefficient"] = fit_coefficient;
  j["r_squared"] = r_squared;
  j["corroborates_blowup"] = corroborates_blowup();
  if (!message.empty()) j["message"] = message;
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& pt : points) pts.push_back({{"lambda", pt.lambda}, {"energy", pt.energy}, {"mass", pt.mass}});
  j["points"] = pts;
  return j;
}

}  // namespace graphnls
