#include <doctest.h>

#include "graphnls/error.hpp"
#include "graphnls/gn.hpp"
#include "support.hpp"

using namespace graphnls;
using testing::fixture;

namespace {

const double kLine = 4.0 / (std::numbers::pi * std::numbers::pi);

double gap(const GnNorms& n, double c, double theta, double threshold) {
  const double r = (n.mass - theta) / threshold;
  return 3.0 * r * r * n.dirichlet + c * std::sqrt(theta) - n.l6;
}

}  // namespace

TEST_CASE("GN ratios of constants") {
  for (const auto& name : testing::fixture_names()) {
    const auto g = fixture(name);
    const auto mesh = build_mesh(g, 0.1);
    const GraphFunction c(mesh, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(mesh->dof_count()), 0.8));
    CHECK(gn_ratio_compact(c, 6.0) == doctest::Approx(1.0 / (g.total_length() * g.total_length())).epsilon(1e-12));
    CHECK_THROWS_WITH_AS(gn_ratio_critical(c), doctest::Contains("zero kinetic energy"), DomainError);
    CHECK_THROWS_AS(gn_ratio_compact(GraphFunction(mesh), 4.0), DomainError);
  }
}

TEST_CASE("GN ratios are scale invariant") {
  std::mt19937_64 rng(1);
  const auto mesh = build_mesh(fixture("star3"), 0.05);
  for (int i = 0; i < 10; ++i) {
    const auto u = random_function(mesh, rng(), 1.0);
    const GraphFunction v(mesh, 2.0 * u.values());
    CHECK(gn_ratio_critical(v) == doctest::Approx(gn_ratio_critical(u)).epsilon(1e-12));
    for (double p : {3.0, 4.0, 6.0}) CHECK(gn_ratio_compact(v, p) == doctest::Approx(gn_ratio_compact(u, p)).epsilon(1e-12));
  }
}

TEST_CASE("soliton saturates the line and half-line constants") {
  const auto line = build_mesh(testing::interval(40.0), 1e-3);
  const auto phi = GraphFunction::sample(line, [](std::size_t, double x) { return testing::soliton_profile(x - 20.0, 1.0); });
  CHECK(gn_ratio_critical(phi) == doctest::Approx(kLine).epsilon(1e-2));

  const auto half = build_mesh(testing::interval(20.0), 1e-3);
  const auto hphi = GraphFunction::sample(half, [](std::size_t, double x) { return testing::soliton_profile(x, 1.0); });
  CHECK(gn_ratio_critical(hphi) == doctest::Approx(4.0 * kLine).epsilon(1e-2));

  const double compact = gn_ratio_compact(phi, 4.0);
  CHECK(std::isfinite(compact));
  CHECK(compact > 0.0);
}

TEST_CASE("theta_min closed forms") {
  // ||u||_6^6 below the theta = 0 right-hand side
  const GnNorms easy{1.0, 1.0, 10.0};
  const auto t0 = theta_min(easy, 1.0, GnMode::tip);
  CHECK(t0.feasible);
  CHECK(t0.theta == 0.0);

  // constants: C sqrt(theta) = mu^3 / l^2
  for (double len : {1.0, 2.0, 4.5}) {
    for (double mu : {0.5, 1.0, 1.3}) {
      const GnNorms c{mu, mu * mu * mu / (len * len), 0.0};
      const double cc = 3.0;
      const double expected = std::pow(mu * mu * mu / (cc * len * len), 2.0);
      const auto r = theta_min(c, cc, GnMode::tip);
      if (expected <= mu) {
        REQUIRE(r.feasible);
        CHECK(std::abs(r.theta - expected) <= 2e-10 * mu);
      } else {
        CHECK_FALSE(r.feasible);
      }
    }
  }
  CHECK_THROWS_AS(theta_min(easy, 0.0, GnMode::tip), DomainError);
  CHECK_THROWS_AS(theta_min(GnNorms{2.0, 1.0, 1.0}, 1.0, GnMode::tip), DomainError);
  CHECK_NOTHROW(theta_min(GnNorms{2.0, 1.0, 1.0}, 1.0, GnMode::no_tip));
}

TEST_CASE("theta_min is minimal and non-increasing in C") {
  std::mt19937_64 rng(77);
  for (const auto& name : {"interval", "star3", "loop", "theta"}) {
    const auto g = fixture(name);
    const auto mode = mode_for(g);
    const auto mesh = build_mesh(g, 0.05);
    for (int trial = 0; trial < 20; ++trial) {
      const auto u = random_function(mesh, rng(), testing::uniform(rng, 0.05, 1.0) * mode_threshold(mode));
      const auto n = gn_norms(u);
      double previous = n.mass + 1.0;
      for (double c : {0.5, 1.0, 2.0, 5.0, 20.0, 100.0}) {
        const auto r = theta_min(n, c, mode);
        if (!r.feasible) continue;
        CHECK(r.theta >= 0.0);
        CHECK(r.theta <= n.mass);
        CHECK(r.theta <= previous + 1e-12);
        previous = r.theta;
        CHECK(gap(n, c, r.theta, mode_threshold(mode)) >= -1e-9 * n.l6);
        // nothing feasible on [0, theta - tol]: sample densely
        const double tol = 1e-10 * n.mass;
        if (r.theta > 2.0 * tol) {
          for (int i = 0; i <= 400; ++i) {
            const double t = (r.theta - 2.0 * tol) * i / 400.0;
            CHECK(gap(n, c, t, mode_threshold(mode)) < 0.0);
          }
        }
      }
    }
  }
}

TEST_CASE("required constant is the feasibility boundary") {
  std::mt19937_64 rng(8);
  const auto mesh = build_mesh(fixture("figure_eight"), 0.05);
  for (int i = 0; i < 20; ++i) {
    const auto n = gn_norms(random_function(mesh, rng(), testing::uniform(rng, 0.5, 2.7)));
    const double c = required_constant(n, GnMode::no_tip);
    if (c == 0.0) {
      // satisfied at theta = 0, so any positive C works
      const auto r = theta_min(n, 1e-300, GnMode::no_tip);
      CHECK(r.feasible);
      CHECK(r.theta == 0.0);
      continue;
    }
    CHECK(theta_min(n, c, GnMode::no_tip).feasible);
    CHECK_FALSE(theta_min(n, c * (1.0 - 1e-5), GnMode::no_tip).feasible);
  }
}

TEST_CASE("constant estimate") {
  const auto g = fixture("theta");
  const auto mesh = build_mesh(g, 0.1);
  std::vector<GraphFunction> constants;
  double bound = 0.0;
  for (double mu : {0.3, 1.0, 2.0, 2.7}) {
    constants.emplace_back(mesh, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(mesh->dof_count()),
                                                           std::sqrt(mu / g.total_length())));
    bound = std::max(bound, std::pow(mu, 2.5) / (g.total_length() * g.total_length()));
  }
  const auto est = estimate_constant(constants, GnMode::no_tip);
  CHECK(est.constant <= bound * (1.0 + 2e-6));
  CHECK(est.constant >= bound * (1.0 - 2e-6));
  CHECK(est.witness == 3);

  // more constraints never lower the estimate
  const auto loop = build_mesh(fixture("loop"), 1.0 / 16.0);
  const auto fam = random_family(loop, 60, 5, mode_threshold(GnMode::no_tip));
  double last = 0.0;
  for (std::size_t n : {10, 20, 40, 60}) {
    const auto e = estimate_constant(std::vector<GraphFunction>(fam.begin(), fam.begin() + static_cast<long>(n)), GnMode::no_tip);
    CHECK(e.constant >= last * (1.0 - 2e-6));
    last = e.constant;
  }
  // every member is feasible at the estimate
  const auto full = estimate_constant(fam, GnMode::no_tip);
  REQUIRE(full.constant > 0.0);
  for (const auto& u : fam) {
    const auto r = theta_min(u, full.constant * (1.0 + 1e-9), GnMode::no_tip);
    CHECK(r.feasible);
    CHECK(r.theta >= 0.0);
    CHECK(r.theta <= mass(u) * (1.0 + 1e-12));
  }

  CHECK_THROWS_AS(estimate_constant(mesh, GnMode::no_tip, 0, 1), DomainError);
  CHECK_THROWS_AS(estimate_constant(mesh, GnMode::tip, 10, 1), DomainError);
}

TEST_CASE("constant estimate regression on the unit loop") {
  const auto mesh = build_mesh(fixture("loop"), default_mesh_size(fixture("loop")));
  const auto est = estimate_constant(mesh, GnMode::no_tip, 100, 1);
  CHECK(est.samples == 100);
  CHECK(est.constant > 0.0);
  CHECK(est.constant == doctest::Approx(11.355353408556592).epsilon(1e-9));
  CHECK(est.witness == 82);
}

TEST_CASE("two-sided rearrangement on the line obeys the line GN bound") {
  std::mt19937_64 rng(500);
  for (const auto& name : {"loop", "figure_eight", "theta"}) {
    const auto g = fixture(name);
    const double h = default_mesh_size(g);
    const auto mesh = build_mesh(g, h);
    for (int i = 0; i < 500 / 3 + 1; ++i) {
      auto u = random_function(mesh, rng(), testing::uniform(rng, 0.1, 2.7));
      u.values() = u.values().cwiseAbs();
      const auto r = two_sided_rearrangement(u);
      const auto line = transplant_to_line(r.profile, r.provenance.gamma);
      CHECK(line.value.front() == 0.0);
      CHECK(line.value.back() == 0.0);
      CHECK(gn_ratio_critical(line) <= kLine * (1.0 + 5.0 * h));
    }
  }
}
