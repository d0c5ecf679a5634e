#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("cmvspec_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(CMVSPEC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

fs::path write_config(const fs::path& dir, const json& j) {
  fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump();
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const json kConst = {{"sampling", {{"preset", "constant"}, {"dim", 1}, {"value", 0.5}}},
                     {"frequency", {{"preset", "golden"}}},
                     {"seed", 7}};

}  // namespace

TEST_CASE("usage and config errors exit with code 2") {
  fs::path d = scratch("errors");
  CHECK(run("") == 2);
  CHECK(run("lyapunov") == 2);
  CHECK(run("lyapunov --config " + (d / "missing.json").string()) == 2);
  json bad = kConst;
  bad["spectrum-scan"] = {{"arc", {0.0}}};
  CHECK(run("spectrum-scan --config " + write_config(d, bad).string() + " --out " + (d / "o").string()) == 2);
  std::ofstream(d / "broken.json") << "{not json";
  CHECK(run("lyapunov --config " + (d / "broken.json").string()) == 2);
}

TEST_CASE("lyapunov on zero coefficients writes zero exponents") {
  fs::path d = scratch("zero");
  json j = {{"sampling", {{"preset", "zero"}, {"dim", 1}}},
            {"frequency", {{"preset", "golden"}}},
            {"lyapunov", {{"theta", {0.3, 2.0}}, {"n", {20}}, {"samples", 4}}}};
  REQUIRE(run("lyapunov --config " + write_config(d, j).string() + " --out " + (d / "o").string()) == 0);
  std::istringstream csv(slurp(d / "o" / "lyapunov.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "theta,n,L_n,stderr");
  int rows = 0;
  while (std::getline(csv, line)) {
    std::stringstream ls(line);
    std::string th, n, L;
    std::getline(ls, th, ',');
    std::getline(ls, n, ',');
    std::getline(ls, L, ',');
    CHECK(std::abs(std::stod(L)) < 1e-12);
    ++rows;
  }
  CHECK(rows == 2);
  CHECK(fs::exists(d / "o" / "manifest.json"));
}

TEST_CASE("identity suite passes its default tolerances") {
  fs::path d = scratch("identity");
  json j = {{"sampling", {{"preset", "strong_coupling"}, {"lambda", 0.9}}}, {"identity-suite", {{"cases", 10}}}};
  CHECK(run("identity-suite --workers 2 --config " + write_config(d, j).string() + " --out " + (d / "o").string()) ==
        0);
  json s = json::parse(slurp(d / "o" / "summary.json"));
  CHECK(s["ok"] == true);
  j["identity-suite"]["poisson_tol"] = 0.0;
  CHECK(run("identity-suite --config " + write_config(d, j).string() + " --out " + (d / "o2").string()) == 3);
}

TEST_CASE("rerunning from a manifest reproduces the outputs") {
  fs::path d = scratch("manifest");
  json j = kConst;
  j["lyapunov"] = {{"theta", {0.0, 1.0}}, {"n", {50, 100}}, {"samples", 16}};
  REQUIRE(run("lyapunov --workers 1 --config " + write_config(d, j).string() + " --out " + (d / "a").string()) == 0);
  REQUIRE(run("lyapunov --workers 3 --config " + (d / "a" / "manifest.json").string() + " --out " +
              (d / "b").string()) == 0);
  CHECK(slurp(d / "a" / "manifest.json") == slurp(d / "b" / "manifest.json"));
  CHECK(slurp(d / "a" / "lyapunov.csv") == slurp(d / "b" / "lyapunov.csv"));
  // a manifest from one command is refused by another
  CHECK(run("ldt --config " + (d / "a" / "manifest.json").string() + " --out " + (d / "c").string()) == 2);
}

TEST_CASE("localize accepts an explicit vector") {
  fs::path d = scratch("localize");
  json vals = json::array();
  for (int s = -20; s <= 20; ++s) vals.push_back(std::exp(-1.0 * std::abs(s)));
  json j = kConst;
  j["localize"] = {{"N0", 8}, {"gamma", 0.5}, {"vector", {{"first", -20}, {"values", vals}}}};
  REQUIRE(run("localize --config " + write_config(d, j).string() + " --out " + (d / "o").string()) == 0);
  json s = json::parse(slurp(d / "o" / "summary.json"));
  CHECK(s["source"] == "vector");
  CHECK(s["center"] == 0);
  CHECK(s["pass"] == true);
  CHECK(s["fitted_rate"].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("multiscale at depth 0 evaluates tracking and decay only") {
  fs::path d = scratch("multiscale");
  json j = {{"sampling", {{"preset", "strong_coupling"}, {"lambda", 0.95}}}, {"seed", 1},
            {"multiscale", {{"depth", 0}}}};
  CHECK(run("multiscale --config " + write_config(d, j).string() + " --out " + (d / "o").string()) == 0);
  json r = json::parse(slurp(d / "o" / "report.json"));
  CHECK(r["ok"] == true);
  const json& v = r["stages"][0]["verify"];
  CHECK(v.contains("tracking"));
  CHECK(v.contains("decay"));
  CHECK_FALSE(v.contains("exceptional_set"));
  CHECK_FALSE(v.contains("gradient"));
}
