#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dbss/config_io.hpp"
#include "support.hpp"

using namespace dbss;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dbss_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

int run(const std::string& args) {
  const std::string cmd = std::string(DBSS_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path write_config(const fs::path& dir, const SystemConfig& c, const std::string& name = "c.json") {
  const fs::path p = dir / name;
  std::ofstream(p) << config_to_json(c);
  return p;
}

}  // namespace

TEST_CASE("config JSON round trip") {
  SystemConfig c = testkit::star_batches(8, 2, 6);
  c.downlink = {{1, 2, 3, 4}, {0}, {0}, {0}, {0}};
  const SystemConfig back = parse_config(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(back.downlink[0] == std::vector<int>{1, 2, 3, 4});
  CHECK(back.dispatch_share == c.dispatch_share);
}

TEST_CASE("config parse errors") {
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config("[]"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"N": 2})"), ConfigError);
  std::string text = config_to_json(testkit::example_one(10));
  text.insert(1, "\"lamda\": [1, 2],");
  CHECK_THROWS_WITH_AS(parse_config(text), doctest::Contains("unknown key \"lamda\""), ConfigError);
  text = config_to_json(testkit::example_one(10));
  const auto at = text.find("\"M\": 5");
  text.replace(at, 6, "\"M\": 2.5");
  CHECK_THROWS_AS(parse_config(text), ConfigError);
}

TEST_CASE("sweep parameters") {
  SystemConfig c = testkit::example_one(10);
  set_parameter(c, "alpha", 0.05);
  set_parameter(c, "lambda[2]", 3.0);
  set_parameter(c, "K", 15);
  CHECK(c.failure_rate == 0.05);
  CHECK(c.arrival_rate == std::vector<double>{10.0, 3.0});
  CHECK(c.fleet == 15);
  CHECK_THROWS_AS(set_parameter(c, "M", 1.5), ConfigError);
  CHECK_THROWS_AS(set_parameter(c, "lambda[3]", 1.0), ConfigError);
  CHECK_THROWS_AS(set_parameter(c, "p", 1.0), ConfigError);
}

TEST_CASE("shipped configs parse and validate") {
  for (const char* name : {"example_one.json", "star_alpha_w.json", "star_batches.json"}) {
    CAPTURE(name);
    const SystemConfig c = load_config(fs::path(DBSS_SOURCE_DIR) / "configs" / name);
    CHECK(validate_config(c).empty());
  }
  const SystemConfig one = load_config(fs::path(DBSS_SOURCE_DIR) / "configs" / "example_one.json");
  CHECK(config_to_json(one) == config_to_json(testkit::example_one(10)));
}

TEST_CASE("solve writes nine rates in node order and is deterministic") {
  const fs::path dir = scratch("solve");
  const fs::path cfg = write_config(dir, testkit::example_one(10));
  REQUIRE(run("solve --config " + cfg.string() + " --out " + (dir / "a").string()) == 0);
  REQUIRE(run("solve --config " + cfg.string() + " --out " + (dir / "b").string()) == 0);
  const std::string rates = slurp(dir / "a" / "rates.csv");
  CHECK(std::count(rates.begin(), rates.end(), '\n') == 10);
  CHECK(rates.find("3,1->2,") != std::string::npos);
  CHECK(rates.find("8,0->2,") != std::string::npos);
  for (const char* f : {"rates.csv", "trace.csv", "measures.csv", "marginals.csv", "summary.txt"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
}

TEST_CASE("invalid config exits with the validation code and writes nothing") {
  const fs::path dir = scratch("invalid");
  SystemConfig c = testkit::example_one(10);
  c.route_prob[0][1] = 0.7;
  const fs::path cfg = write_config(dir, c);
  CHECK(run("solve --config " + cfg.string() + " --out " + (dir / "out").string()) == 2);
  CHECK_FALSE(fs::exists(dir / "out"));
  CHECK(run("solve --config " + (dir / "missing.json").string() + " --out " + (dir / "out").string()) == 2);
  CHECK(run("solve --bogus-flag") == 2);
}

TEST_CASE("non-convergence and state cap exit codes") {
  const fs::path dir = scratch("codes");
  const fs::path cfg = write_config(dir, testkit::example_one(30));
  CHECK(run("solve --config " + cfg.string() + " --max-iterations 2 --out " + (dir / "a").string()) == 3);
  CHECK(fs::exists(dir / "a" / "trace.csv"));
  CHECK(run("solve --config " + cfg.string() + " --max-states 100 --out " + (dir / "b").string()) == 4);
  CHECK(run("solve --config " + cfg.string() + " --max-states 100 --node-marginal-only --out " +
            (dir / "c").string()) == 0);
  CHECK(fs::exists(dir / "c" / "marginals_decomposition.csv"));
}

TEST_CASE("single-point sweep reproduces solve") {
  const fs::path dir = scratch("sweep");
  const fs::path cfg = write_config(dir, testkit::two_region(4, 2, 2));
  REQUIRE(run("solve --config " + cfg.string() + " --out " + (dir / "solve").string()) == 0);
  REQUIRE(run("sweep --config " + cfg.string() + " --sweep alpha=0.01 --out " + (dir / "sweep").string()) == 0);
  const std::string measures = slurp(dir / "solve" / "measures.csv");
  const std::string solve_row = measures.substr(measures.find('\n') + 1);  // mode,eta,...
  const std::string sweep = slurp(dir / "sweep" / "sweep.csv");
  const std::string sweep_row = sweep.substr(sweep.find('\n') + 1);  // alpha,status,mode,eta,...
  const std::string tail = solve_row.substr(0, solve_row.size() - 1);
  CHECK(sweep_row.find("0.01,ok," + tail + ",") == 0);
}

TEST_CASE("sweeps over pairs and environment overrides") {
  const fs::path dir = scratch("pairs");
  const fs::path cfg = write_config(dir, testkit::two_region(6, 1, 2));
  CHECK(run("sweep --config " + cfg.string() + " --pairs \"(1,2);(2,2);(2,4)\" --workers 2 --out " +
            (dir / "p").string()) == 0);
  const std::string table = slurp(dir / "p" / "sweep.csv");
  CHECK(table.rfind("M,Z,status,mode,eta,", 0) == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 4);
  CHECK(fs::exists(dir / "p" / "points" / "point_0002.csv"));
  // invalid pair (Z not a multiple of M) is rejected before any work
  CHECK(run("sweep --config " + cfg.string() + " --pairs \"(2,3)\" --out " + (dir / "q").string()) == 2);

  const std::string env = "DBSS_CONFIG=" + cfg.string() + " DBSS_OUT=" + (dir / "env").string() + " ";
  const int status = std::system((env + DBSS_CLI + " solve > /dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(status) == 0);
  CHECK(fs::exists(dir / "env" / "rates.csv"));
}

TEST_CASE("simulate subcommand writes histograms") {
  const fs::path dir = scratch("sim");
  const fs::path cfg = write_config(dir, testkit::two_region(4, 2, 2));
  CHECK(run("simulate --config " + cfg.string() + " --horizon 500 --warmup 50 --replications 2 --out " +
            (dir / "s").string()) == 0);
  const std::string hist = slurp(dir / "s" / "histograms.csv");
  CHECK(hist.rfind("query,probability,se\n", 0) == 0);
  CHECK(fs::exists(dir / "s" / "simulation.csv"));
}
