#include "graphnls/gn.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "graphnls/error.hpp"

namespace graphnls {

std::string to_string(GnMode mode) { return mode == GnMode::tip ? "tip" : "no-tip"; }

double mode_threshold(GnMode mode) { return mode == GnMode::tip ? kCriticalMassHalfLine : kCriticalMassLine; }

GnMode mode_for(const MetricGraph& graph) { return has_terminal_edge(graph) ? GnMode::tip : GnMode::no_tip; }

double gn_ratio_compact(const GraphFunction& u, double p) {
  const double m = mass(u);
  if (!(m > 0.0)) throw DomainError("GN ratio is undefined for the zero function");
  const double h1 = m + dirichlet_energy(u);
  return lp_norm_p(u, p) / (std::pow(m, 0.25 * p + 0.5) * std::pow(h1, 0.25 * p - 0.5));
}

double gn_ratio_critical(const GraphFunction& u) {
  const double d = dirichlet_energy(u);
  if (!(d > 0.0)) throw DomainError("zero kinetic energy: critical GN ratio undefined");
  const double m = mass(u);
  return lp_norm_p(u, 6.0) / (m * m * d);
}

double gn_ratio_critical(const Profile& f) {
  const double d = f.dirichlet_energy();
  if (!(d > 0.0)) throw DomainError("zero kinetic energy: critical GN ratio undefined");
  const double m = f.mass();
  return f.lp_norm_p(6.0) / (m * m * d);
}

Profile transplant_to_line(const Profile& f, double ramp) {
  Profile out;
  if (f.value.front() != 0.0) {
    out.x.push_back(f.x.front() - ramp);
    out.value.push_back(0.0);
  }
  out.x.insert(out.x.end(), f.x.begin(), f.x.end());
  out.value.insert(out.value.end(), f.value.begin(), f.value.end());
  if (f.value.back() != 0.0) {
    out.x.push_back(f.x.back() + ramp);
    out.value.push_back(0.0);
  }
  return out;
}

GnNorms gn_norms(const GraphFunction& u) { return {mass(u), lp_norm_p(u, 6.0), dirichlet_energy(u)}; }

namespace {

// RHS - LHS of the modified inequality as a function of s = sqrt(theta).
struct ThetaGap {
  double a;   // 3 ||u'||^2 / mu_c^2
  double mu;
  double c;
  double l6;
  double operator()(double s) const {
    const double r = mu - s * s;
    return a * r * r + c * s - l6;
  }
};

// first s in [lo, hi] with gap(s) >= 0, gap increasing on the interval
double bisect_increasing(const ThetaGap& gap, double lo, double hi, double theta_tol) {
  while (hi * hi - lo * lo > theta_tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (gap(mid) >= 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

// root of the increasing branch 4 a s (mu - s^2) = c on [lo, hi]
double bisect_slope(double a, double mu, double c, double lo, double hi, bool increasing) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double h = 4.0 * a * mid * (mu - mid * mid);
    if ((h < c) == increasing) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

ThetaResult theta_min(const GnNorms& norms, double constant, GnMode mode) {
  if (!(constant > 0.0)) throw DomainError("GN constant C must be positive");
  const double mu = norms.mass;
  const double threshold = mode_threshold(mode);
  if (mu > threshold * (1.0 + 1e-12))
    throw DomainError("mass exceeds the " + to_string(mode) + " threshold for the modified GN inequality");
  ThetaResult result;
  result.constant = constant;
  result.mode = mode;
  result.mass = mu;

  const ThetaGap gap{3.0 * norms.dirichlet / (threshold * threshold), mu, constant, norms.l6};
  const double smax = std::sqrt(mu);
  const double tol = 1e-10 * mu;
  auto finish = [&](double s) {
    result.feasible = true;
    result.theta = std::min(mu, s * s);
    result.slack = gap(std::sqrt(result.theta));
    return result;
  };

  if (gap(0.0) >= 0.0) return finish(0.0);

  const double s_star = std::sqrt(mu / 3.0);
  const double h_max = 4.0 * gap.a * s_star * (2.0 * mu / 3.0);
  if (constant >= h_max) {
    // gap is non-decreasing in s
    if (gap(smax) < 0.0) {
      result.slack = gap(smax);
      return result;
    }
    return finish(bisect_increasing(gap, 0.0, smax, tol));
  }
  const double s1 = bisect_slope(gap.a, mu, constant, 0.0, s_star, true);
  const double s2 = bisect_slope(gap.a, mu, constant, s_star, smax, false);
  if (gap(s1) >= 0.0) return finish(bisect_increasing(gap, 0.0, s1, tol));
  if (gap(smax) >= 0.0) return finish(bisect_increasing(gap, s2, smax, tol));
  result.slack = std::max(gap(s1), gap(smax));
  return result;
}

ThetaResult theta_min(const GraphFunction& u, double constant, GnMode mode) {
  return theta_min(gn_norms(u), constant, mode);
}

double required_constant(const GnNorms& norms, GnMode mode) {
  const double threshold = mode_threshold(mode);
  const double a = 3.0 * norms.dirichlet / (threshold * threshold);
  if (a * norms.mass * norms.mass >= norms.l6) return 0.0;
  // theta = mu is always feasible once C sqrt(mu) >= ||u||_6^6
  double hi = norms.l6 / std::sqrt(norms.mass);
  double lo = 0.0;
  while (hi - lo > 1e-6 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (theta_min(norms, mid, mode).feasible) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

namespace {

double uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

GraphFunction random_function(const MeshPtr& mesh, std::uint64_t seed, double target_mass, int modes) {
  std::mt19937_64 rng(seed);
  const auto& g = mesh->graph();
  GraphFunction u(mesh);
  std::vector<std::vector<double>> samples(g.edge_count());
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const double len = g.edges()[e].length;
    const double offset = 0.5 + uniform(rng);
    std::vector<double> cos_c(static_cast<std::size_t>(modes)), sin_c(static_cast<std::size_t>(modes));
    for (int k = 0; k < modes; ++k) {
      cos_c[static_cast<std::size_t>(k)] = (2.0 * uniform(rng) - 1.0) / (1.0 + k);
      sin_c[static_cast<std::size_t>(k)] = (2.0 * uniform(rng) - 1.0) / (1.0 + k);
    }
    const auto& grid = mesh->grid(e);
    auto& s = samples[e];
    s.resize(grid.nodes);
    for (std::size_t n = 0; n < grid.nodes; ++n) {
      const double x = mesh->coordinate(e, n);
      double v = offset;
      for (int k = 0; k < modes; ++k) {
        const double w = (k + 1) * std::numbers::pi * x / len;
        v += cos_c[static_cast<std::size_t>(k)] * std::cos(w) + sin_c[static_cast<std::size_t>(k)] * std::sin(w);
      }
      s[n] = v;
    }
  }
  // vertex value = mean of incident edge-end samples; linear correction per edge
  std::vector<double> vertex(g.vertex_count(), 0.0);
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    for (const auto& end : g.incident(v)) {
      const auto& s = samples[end.edge];
      vertex[v] += end.at_start ? s.front() : s.back();
    }
    if (g.degree(v) > 0) vertex[v] /= static_cast<double>(g.degree(v));
  }
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const auto& edge = g.edges()[e];
    auto& s = samples[e];
    const double d0 = vertex[edge.from] - s.front();
    const double d1 = vertex[edge.to] - s.back();
    const auto n = s.size();
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(n - 1);
      s[k] += (1.0 - t) * d0 + t * d1;
      u.values()[static_cast<Eigen::Index>(mesh->dof(e, k))] = s[k];
    }
  }
  if (target_mass > 0.0) u.values() *= std::sqrt(target_mass / mass(u));
  return u;
}

std::vector<GraphFunction> random_family(const MeshPtr& mesh, std::size_t count, std::uint64_t seed,
                                         double max_mass, int modes) {
  std::vector<GraphFunction> family;
  family.reserve(count);
  std::vector<std::uint64_t> seeds(count);
  std::mt19937_64 master(seed);
  for (auto& s : seeds) s = master();
  for (std::size_t i = 0; i < count; ++i) {
    const double m = max_mass > 0.0 ? max_mass * static_cast<double>(i + 1) / static_cast<double>(count) : 1.0;
    family.push_back(random_function(mesh, seeds[i], m, modes));
  }
  return family;
}

ConstantEstimate estimate_constant(const std::vector<GraphFunction>& family, GnMode mode) {
  if (family.empty()) throw DomainError("sample budget must be positive");
  ConstantEstimate est;
  est.mode = mode;
  est.samples = family.size();
  for (std::size_t i = 0; i < family.size(); ++i) {
    const double c = required_constant(gn_norms(family[i]), mode);
    if (c > est.constant) {
      est.constant = c;
      est.witness = i;
    }
  }
  return est;
}

ConstantEstimate estimate_constant(const MeshPtr& mesh, GnMode mode, std::size_t sample_budget,
                                   std::uint64_t seed) {
  if (sample_budget == 0) throw DomainError("sample budget must be positive");
  if (mode != mode_for(mesh->graph())) throw DomainError("GN mode does not match the graph topology");
  auto est = estimate_constant(random_family(mesh, sample_budget, seed, mode_threshold(mode)), mode);
  est.seed = seed;
  return est;
}

nlohmann::json ThetaResult::to_json() const {
  nlohmann::json j;
  j["feasible"] = feasible;
  j["theta_min"] = feasible ? nlohmann::json(theta) : nlohmann::json("infeasible");
  j["constant"] = constant;
  j["mode"] = to_string(mode);
  j["slack"] = slack;
  j["mass"] = mass;
  return j;
}

nlohmann::json ConstantEstimate::to_json() const {
  return {{"constant", constant}, {"witness", witness}, {"samples", samples},
          {"seed", seed},         {"mode", to_string(mode)}};
}

}  // namespace graphnls
