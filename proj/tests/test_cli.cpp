#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kFixtures = GRAPHNLS_FIXTURES;

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("graphnls-cli-test-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(GRAPHNLS_CLI) + " " + args + " >" + (log / "stdout.txt").string() + " 2>" +
                          (log / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json load(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST_CASE("report") {
  const auto dir = scratch_dir("report");
  REQUIRE(run("report --graph " + kFixtures + "/interval.json --out " + dir.string(), dir) == 0);
  const auto doc = load(dir / "topology.json");
  CHECK(doc["topology"]["critical_mass"].get<double>() == doctest::Approx(1.3603495).epsilon(1e-7));
  CHECK(doc["topology"]["has_terminal_edge"] == true);
  CHECK(doc["run"]["command"] == "report");
}

TEST_CASE("solve writes outcome files") {
  const auto dir = scratch_dir("solve");
  REQUIRE(run("solve --graph " + kFixtures + "/loop.json --p 4 --mass 0.1 --out " + dir.string(), dir) == 0);
  const auto doc = load(dir / "solve.json");
  CHECK(doc["outcome"]["status"] == "converged");
  CHECK(doc["solver"]["tol"] == 1e-8);
  CHECK(doc["solver"]["max_iters"] == 20000);
  CHECK(fs::exists(dir / "state.csv"));
  CHECK(slurp(dir / "history.csv").rfind("iteration,energy,stationarity,mass\n", 0) == 0);
}

TEST_CASE("errors exit nonzero with a diagnostic") {
  const auto dir = scratch_dir("errors");
  CHECK(run("solve --graph " + (dir / "missing.json").string() + " --out " + dir.string(), dir) != 0);
  CHECK(slurp(dir / "stderr.txt").find("graph document not found") != std::string::npos);

  CHECK(run("bogus --graph " + kFixtures + "/loop.json", dir) != 0);
  CHECK(run("solve --graph " + kFixtures + "/loop.json --p 7 --out " + dir.string(), dir) != 0);
  CHECK(slurp(dir / "stderr.txt").find("exponent") != std::string::npos);
  CHECK(run("scan --graph " + kFixtures + "/loop.json --mass-grid 1:2 --out " + dir.string(), dir) != 0);
  CHECK(run("probe --graph " + kFixtures + "/interval.json --edge nope --out " + dir.string(), dir) != 0);
}

TEST_CASE("every subcommand emits its files") {
  const auto dir = scratch_dir("all");
  const std::string loop = " --graph " + kFixtures + "/loop.json";
  CHECK(run("bound" + loop + " --k 2 --out " + (dir / "bound").string(), dir) == 0);
  CHECK(fs::exists(dir / "bound" / "bound_states.json"));
  CHECK(fs::exists(dir / "bound" / "state_1.csv"));
  CHECK(run("scan --graph " + kFixtures + "/interval.json --p 6 --mass-grid 0.5:2.5:5 --out " + (dir / "scan").string(), dir) == 0);
  CHECK(fs::exists(dir / "scan" / "scan.csv"));
  CHECK(fs::exists(dir / "scan" / "scan_plot.dat"));
  CHECK(load(dir / "scan" / "scan.json")["scan"]["bracket_contains_critical_mass"] == true);
  CHECK(run("gn" + loop + " --samples 20 --out " + (dir / "gn").string(), dir) == 0);
  CHECK(load(dir / "gn" / "gn.json")["theta_min"]["feasible"] == true);
  CHECK(run("rearrange" + loop + " --out " + (dir / "re").string(), dir) == 0);
  CHECK(fs::exists(dir / "re" / "two_sided.csv"));
  CHECK(run("probe --graph " + kFixtures + "/interval.json --mass 2.8 --out " + (dir / "probe").string(), dir) == 0);
  CHECK(load(dir / "probe" / "probe.json")["corroborates_blowup"] == true);

  // a function written by solve feeds gn and rearrange
  CHECK(run("solve" + loop + " --p 6 --mass 2 --out " + (dir / "s").string(), dir) == 0);
  CHECK(run("rearrange" + loop + " --function " + (dir / "s" / "state.csv").string() + " --out " + (dir / "re2").string(),
            dir) == 0);
}

TEST_CASE("identical arguments give byte-identical JSON") {
  const auto a = scratch_dir("det-a");
  const auto b = scratch_dir("det-b");
  const std::string theta = " --graph " + kFixtures + "/theta.json";
  for (const auto& [cmd, file] : std::vector<std::pair<std::string, std::string>>{
           {"solve" + theta + " --p 5 --mass 3", "solve.json"},
           {"gn" + theta + " --samples 30 --seed 9", "gn.json"},
           {"rearrange" + theta + " --seed 4", "rearrange.json"},
           {"scan --graph " + kFixtures + "/star3.json --p 6 --mass-grid 0.5:2.5:3", "scan.json"}}) {
    REQUIRE(run(cmd + " --out " + a.string(), a) == 0);
    REQUIRE(run(cmd + " --out " + b.string(), b) == 0);
    CHECK(slurp(a / file) == slurp(b / file));
  }
}
