#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "tdbsde/errors.hpp"
#include "tdbsde_cli/config.hpp"
#include "tdbsde_cli/dispatch.hpp"

using namespace tdbsde;
using namespace tdbsde::cli;

namespace {

std::string read(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> problems_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.problems;
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  for (const auto& p : problems) {
    if (p.find(needle) != std::string::npos) return true;
  }
  return false;
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("tdbsde_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("minimal config gets defaults") {
  const RunConfig c = parse_config("[asian]\nbeta = 0.6\ngamma = 0.4\n");
  CHECK(c.product() == Product::Asian);
  CHECK(c.text("model", "variant") == "cir");
  CHECK(c.number("model", "kappa") == 0.5);
  CHECK(c.count("grid", "steps") == 256);
  CHECK(c.asian().beta == 0.6);
  CHECK(c.model().is_cir());
}

TEST_CASE("bare product section uses its defaults") {
  CHECK(parse_config("[obpi]\n").number("obpi", "weight") == 0.6);
}

TEST_CASE("validation errors") {
  CHECK(mentions(problems_of("[asian]\nbeta = 0.6\ngamma = 0.5\n"), "βE[S̃]+γ=1"));
  CHECK(mentions(problems_of("[asian]\nbeta = 0.6\ngama = 0.4\n"), "did you mean 'gamma'"));
  CHECK(mentions(problems_of("[asian]\nvariant = fixed\nbeta = 0.6\ngamma = 1\n"), "no solution"));
  CHECK(mentions(problems_of("[grid]\nsteps = 10\n"), "no product section"));
  CHECK(mentions(problems_of("[obpi]\n[withdrawal]\n"), "more than one product"));
  CHECK(mentions(problems_of("[obpi]\nweight = heavy\n"), "is not a number"));
  CHECK(mentions(problems_of("[ratchet-discrete]\ng = 0\n"), "missing required key ratchet-discrete.gamma"));
  CHECK(mentions(problems_of("[ratchet-discrete]\ngamma = 1\nanniversaries = 0, 0.3, 1\n[grid]\nsteps = 64\n"),
                 "not a grid node"));
  // All problems are reported, not just the first.
  CHECK(problems_of("[asian]\nbeta = x\ngama = 1\n[run]\nseed = -1\n").size() >= 3);
}

TEST_CASE("serialization is canonical and idempotent") {
  const RunConfig c = parse_config("[run]\npaths=10\n\n[ratchet-discrete]\ngamma=1\nanniversaries=0,0.5,1\n");
  const std::string once = serialize(c);
  CHECK(serialize(parse_config(once)) == once);
  CHECK(parse_config(once) == c);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double beta = u(rng);
    std::ostringstream text;
    text << "[model]\nsigma = " << format_number(u(rng) * 0.2) << "\nr0 = " << format_number(u(rng) * 0.1)
         << "\n[asian]\nvariant = fixed\nbeta = " << format_number(beta + 0.01)
         << "\ngamma = " << format_number(u(rng) * 0.9) << "\n[run]\nseed = " << rng() << "\n";
    const std::string s = serialize(parse_config(text.str()));
    CHECK(serialize(parse_config(s)) == s);
  }
}

TEST_CASE("tolerances can only be loosened with force") {
  const RunConfig strict = parse_config("[asian]\nbeta=0.6\ngamma=0.4\n[run]\nasian_tolerance = 1e-4\n");
  bool forced = true;
  CHECK(strict.tolerances("asian", false, &forced).asian_terminal == 1e-4);
  CHECK_FALSE(forced);
  const RunConfig loose = parse_config("[asian]\nbeta=0.6\ngamma=0.4\n[run]\nasian_tolerance = 0.1\n");
  CHECK_THROWS_AS(loose.tolerances("asian", false), ConfigError);
  CHECK(loose.tolerances("asian", true, &forced).asian_terminal == 0.1);
  CHECK(forced);
}

TEST_CASE("exit codes are distinct per error family") {
  CHECK(exit_code_for(InvalidInput("x")) == kExitConfig);
  CHECK(exit_code_for(ZeroSolutionOnly("x")) == kExitZeroSolution);
  CHECK(exit_code_for(NonConvergence("x", {}, 1.0)) == kExitNonConvergence);
  CHECK(exit_code_for(ConstructionFailure("x")) == kExitConstruction);
  CHECK(exit_code_for(BudgetExceeded("x")) == kExitBudget);
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("dispatch writes reproducible artifacts") {
  const RunConfig c = parse_config("[asian]\nbeta=0.6\ngamma=0.4\n[grid]\nsteps=64\n[run]\npaths=100\n");
  std::ostringstream log;
  const auto a = scratch("a");
  const auto b = scratch("b");
  CHECK(dispatch(c, "hedge-asian", a, false, log) == kExitPass);
  CHECK(dispatch(c, "hedge-asian", b, false, log) == kExitPass);
  CHECK(read(a / "report.json") == read(b / "report.json"));
  CHECK(read(a / "paths.csv") == read(b / "paths.csv"));
  CHECK(read(a / "paths.csv").rfind("path_id,t,Y,Z,M,running_avg\n", 0) == 0);
  const std::string manifest = read(a / "manifest.json");
  CHECK(manifest.find(sha256_hex(serialize(c))) != std::string::npos);
  CHECK(log.str().find("hedge-asian [pass]") != std::string::npos);
}

TEST_CASE("dispatch flags partial output on module errors") {
  const RunConfig c = parse_config("[ratchet-discrete]\ngamma = 1.05\n[grid]\nsteps=16\n[run]\npaths=4\n");
  std::ostringstream log;
  const auto out = scratch("partial");
  CHECK(dispatch(c, "hedge-ratchet-discrete", out, false, log) == kExitZeroSolution);
  const std::string report = read(out / "report.json");
  CHECK(report.find("\"partial\": true") != std::string::npos);
  CHECK(report.find("ZeroSolutionOnly") != std::string::npos);

  CHECK(dispatch(c, "classify", scratch("classify"), false, log) == kExitPass);
  CHECK(log.str().find("classify [pass] shortfall") != std::string::npos);
}

TEST_CASE("withdrawal report") {
  const RunConfig c = parse_config("[withdrawal]\ndepth = 6\n");
  std::ostringstream log;
  const auto out = scratch("withdrawal");
  CHECK(dispatch(c, "solve-withdrawal", out, false, log) == kExitPass);
  const std::string report = read(out / "report.json");
  for (const char* key : {"root_value", "iterations", "deltas", "contraction_ratio", "depth"}) {
    CHECK(report.find(std::string("\"") + key + "\"") != std::string::npos);
  }
  CHECK(std::filesystem::exists(out / "nodes.csv"));
}
