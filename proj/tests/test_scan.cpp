#include <doctest.h>

#include <sstream>

#include "graphnls/error.hpp"
#include "graphnls/scan.hpp"
#include "support.hpp"

using namespace graphnls;
using testing::fixture;

namespace {

SolveConfig fine(const MetricGraph& g) {
  SolveConfig cfg;
  cfg.h = g.min_edge_length() / 64.0;
  return cfg;
}

}  // namespace

TEST_CASE("mass grid parsing") {
  const auto grid = parse_mass_grid("0.5:2.5:5");
  REQUIRE(grid.size() == 5);
  CHECK(grid[0] == 0.5);
  CHECK(grid[2] == doctest::Approx(1.5));
  CHECK(grid[4] == 2.5);
  CHECK(parse_mass_grid("1:1:1") == std::vector<double>{1.0});
  CHECK_THROWS_AS(parse_mass_grid("1:2"), DomainError);
  CHECK_THROWS_AS(parse_mass_grid("2:1:3"), DomainError);
  CHECK_THROWS_AS(parse_mass_grid("0:1:3"), DomainError);
  CHECK_THROWS_AS(mass_scan(fixture("loop"), 4.0, {}, SolveConfig{}), DomainError);
  CHECK_THROWS_AS(mass_scan(fixture("loop"), 4.0, {2.0, 1.0}, SolveConfig{}), DomainError);
}

TEST_CASE("interval threshold bracket") {
  const auto g = fixture("interval");
  const auto r = mass_scan(g, 6.0, parse_mass_grid("0.5:2.5:5"), fine(g), 0.02);
  REQUIRE(r.estimate.has_value());
  REQUIRE(r.bracket_low.has_value());
  CHECK(*r.estimate >= 1.29);
  CHECK(*r.estimate <= 1.43);
  CHECK(*r.bracket_low <= kCriticalMassHalfLine);
  CHECK(*r.bracket_high >= kCriticalMassHalfLine);
  CHECK(*r.bracket_high - *r.bracket_low <= 0.02 + 1e-12);
  // unresolved points just below the critical mass are flagged, monotonicity violations must not be
  for (const auto& f : r.flags) CHECK(f.find("resolution failure") == std::string::npos);
  CHECK(r.summary_json()["bracket_contains_critical_mass"] == true);

  std::ostringstream csv;
  r.write_csv(csv);
  CHECK(csv.str().rfind("p,mu,status,energy\n", 0) == 0);
}

TEST_CASE("loop threshold bracket") {
  const auto g = fixture("loop");
  const auto r = mass_scan(g, 6.0, parse_mass_grid("1:4:7"), fine(g), 0.05);
  REQUIRE(r.bracket_low.has_value());
  CHECK(*r.bracket_low <= kCriticalMassLine);
  CHECK(*r.bracket_high >= kCriticalMassLine);
  CHECK(r.graph_mode == "no-tip");
}

TEST_CASE("subcritical scans are bounded everywhere") {
  for (const auto& name : {"interval", "tadpole", "theta"}) {
    const auto r = mass_scan(fixture(name), 4.0, parse_mass_grid("0.1:10:5"), SolveConfig{});
    CHECK(r.all_converged());
    for (const auto& pt : r.points) CHECK(pt.status == PointStatus::bounded);
    CHECK_FALSE(r.estimate.has_value());
  }
}

TEST_CASE("threshold masses are reported as such") {
  const auto g = fixture("interval");
  SolveConfig cfg = fine(g);
  cfg.p = 6.0;
  const auto pt = classify_mass(build_mesh(g, cfg.h), kCriticalMassHalfLine, cfg);
  CHECK(pt.status == PointStatus::threshold);
  CHECK(to_string(PointStatus::threshold) == "threshold");
}

TEST_CASE("scan output does not depend on the thread count") {
  const auto g = fixture("star3");
  const auto grid = parse_mass_grid("0.5:2.5:5");
  const auto a = mass_scan(g, 6.0, grid, fine(g), 0.05, 1);
  const auto b = mass_scan(g, 6.0, grid, fine(g), 0.05, 4);
  CHECK(a.summary_json().dump() == b.summary_json().dump());
}

TEST_CASE("halving h moves the bracket by less than its width") {
  const auto g = fixture("interval");
  SolveConfig coarse;
  coarse.h = 1.0 / 32.0;
  const auto grid = parse_mass_grid("0.5:2.5:5");
  const auto a = mass_scan(g, 6.0, grid, coarse, 0.05);
  const auto b = mass_scan(g, 6.0, grid, fine(g), 0.05);
  REQUIRE(a.bracket_low.has_value());
  REQUIRE(b.bracket_low.has_value());
  const double width = *a.bracket_high - *a.bracket_low;
  CHECK(std::abs(*a.bracket_low - *b.bracket_low) < width);
  CHECK(std::abs(*a.bracket_high - *b.bracket_high) < width);
}

TEST_CASE("bound-state ladder on the loop of length 2 pi") {
  SolveConfig cfg;
  cfg.h = 0.05;
  const auto ladder = bound_state_ladder(fixture("loop2pi"), 4.0, 1.0, 5, cfg);
  REQUIRE(ladder.found == 5);
  CHECK(ladder.strictly_increasing);
  const double expected[] = {-0.0397887, 0.439804, 1.938559, 4.431886, 7.913802};
  for (std::size_t i = 0; i < 5; ++i) CHECK(ladder.energies[i] == doctest::Approx(expected[i]).epsilon(1e-5));

  const auto one = bound_state_ladder(fixture("loop2pi"), 4.0, 1.0, 1, cfg);
  REQUIRE(one.found == 1);
  CHECK(one.energies[0] == doctest::Approx(-1.0 / (8.0 * std::numbers::pi)).epsilon(1e-10));
}

TEST_CASE("interval ladder at p = 6 below threshold") {
  SolveConfig cfg;
  cfg.h = 1.0 / 64.0;
  const auto ladder = bound_state_ladder(fixture("interval"), 6.0, 1.0, 3, cfg);
  REQUIRE(ladder.found == 3);
  CHECK(ladder.strictly_increasing);
}
