#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "defectlab/errors.hpp"
#include "defectlab/experiments.hpp"
#include "defectlab/gasket.hpp"
#include "defectlab/io.hpp"
#include "defectlab/runner.hpp"
#include "defectlab/semigroup.hpp"
#include "helpers.hpp"

using namespace defectlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string usage_field(const json& config) {
  try {
    run_config(config);
  } catch (const UsageError& e) {
    return e.field();
  }
  return "";
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("defectlab-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(DEFECTLAB_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("experiment names") {
  const auto names = experiment_names();
  for (const char* n : {"esqq0", "kato-brezis", "regularity", "max-principle", "mc-vs-exact", "lq-positivity",
                        "doubling", "liyau", "feller", "chain-rule", "gasket"}) {
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  }
}

TEST_CASE("malformed configs name the offending field") {
  CHECK(usage_field(json{{"experiment", "esqq1"}}) == "experiment");
  CHECK(usage_field(json{{"experiment", "esqq0"}, {"params", {{"trails", 3}}}}) == "params.trails");
  CHECK(usage_field(json{{"experiment", "esqq0"}, {"experiments", {"esqq0"}}}) == "experiment");
  CHECK(usage_field(json{{"experiment", "esqq0"}, {"sead", 1}}) == "sead");
  CHECK(usage_field(json{{"experiment", "esqq0"}, {"space", {{"family", "torus-3"}}}}) == "space.family");
  CHECK(usage_field(json{{"experiment", "doubling"}}) == "space");
  CHECK(usage_field(json{{"experiments", {"esqq0", 4}}}) == "experiments[1]");
}

TEST_CASE("runner reports match direct suite calls") {
  const json config{{"experiment", "esqq0"},
                    {"seed", 3},
                    {"space", {{"family", "path-64"}}},
                    {"params", {{"trials", 24}}}};
  const RunOutcome out = run_config(config);
  CHECK(out.pass);
  const auto fam = family_from_name("path-64", 3, 2);
  SuiteOptions o;
  o.trials = 24;
  o.seed = 3;
  json direct = to_json(esqq0_suite({fam.get()}, o));
  json via = out.report["reports"][0];
  CHECK(via["verdict"] == direct["verdict"]);
  CHECK(via["worstViolation"] == direct["worstViolation"]);
  CHECK(via["details"] == direct["details"]);
}

TEST_CASE("identical configs give byte-identical reports") {
  const json config{{"experiments", {"kato-brezis", "max-principle", "chain-rule"}},
                    {"seed", 11},
                    {"params", {{"trials", 16}, {"workers", 2}}}};
  const RunOutcome a = run_config(config), b = run_config(config);
  CHECK(dump_json(a.report) == dump_json(b.report));
  json single = config;
  single["params"]["workers"] = 1;
  json a_report = a.report, c_report = run_config(single).report;
  a_report.erase("config");
  c_report.erase("config");
  CHECK(dump_json(a_report) == dump_json(c_report));
}

TEST_CASE("bundle layout") {
  const fs::path dir = scratch_dir("bundle");
  const RunOutcome out = run_config(json{{"experiment", "chain-rule"}, {"seed", 1}});
  write_outcome(out, dir.string());
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "timings.json"));
  const json report = json::parse(slurp(dir / "report.json"));
  CHECK(report["schema"] == kBundleSchema);
  CHECK(report["verdict"] == "pass");
  bool csv = false;
  for (const auto& e : fs::directory_iterator(dir)) csv |= e.path().extension() == ".csv";
  CHECK(csv);
}

TEST_CASE("tables serialize with a header row") {
  Table t{"demo", {"a", "b"}, {{1.0, 0.5}}};
  std::ostringstream os;
  write_csv(os, t);
  CHECK(os.str() == "a,b\n" + format_sci(1.0) + "," + format_sci(0.5) + "\n");
}

TEST_CASE("named families and admissible regions") {
  for (const char* name : {"path-64", "grid-10x10", "gasket-3", "er-50"}) {
    const auto fam = family_from_name(name, 1, 2);
    CHECK(fam->regions.size() == 2);
    for (const Region& r : fam->regions) CHECK(admissible_region(r));
  }
  CHECK_THROWS_AS(family_from_name("grid-10", 1, 2), DomainError);
  const WeightedSpace p = build(path_spec(5));
  CHECK_FALSE(admissible_region(Region(p, {1, 2})));
}

TEST_CASE("doubling exponent on a path") {
  DoublingOptions o;
  o.seed = 2;
  const DoublingFit fit = fit_doubling(build(path_spec(1024)), o);
  CHECK(std::abs(fit.alpha - 1.0) <= 0.1);
  CHECK(fit.report.pass);
  CHECK(fit.C >= 1.0);
}

TEST_CASE("doubling rejects degenerate radii") {
  DoublingOptions o;
  o.radii = {0.1, 0.2, 0.3};
  CHECK_THROWS_AS(fit_doubling(build(path_spec(50)), o), NumericalError);
}

TEST_CASE("Li-Yau fit on the two-vertex space") {
  // p(t,0,1) = (1 - e^{-2t})/2 <= 1/2 and m(x, sqrt t) >= 1, so the bound holds
  // with finite constants for every candidate pair.
  LiYauOptions o;
  o.t_grid = {0.1, 1.0, 10.0};
  o.centers = 2;
  const LiYauFit fit = fit_liyau(build(path_spec(2)), o);
  CHECK(fit.report.pass);
  CHECK(std::isfinite(fit.c1));
  // c1 is the tightest constant, so the worst sample sits on the bound.
  CHECK(std::abs(fit.worst_slack) <= 1e-12);
  CHECK(fit.evaluated > 0);
}

TEST_CASE("Feller route on the gasket") {
  const CheckReport r = feller_route(build_gasket(3).space, {0.01, 0.1, 1.0, 10.0}, 4);
  CHECK(r.pass);
}

TEST_CASE("chain rule: identity, constant data and the square") {
  const auto id = [](double s) { return s; };
  const auto one = [](double) { return 1.0; };
  const auto sq = [](double s) { return s * s; };
  const auto dsq = [](double s) { return 2.0 * s; };
  const ChainRuleResult identity = chain_rule_defect(interval_spec(8), id, one, id, 3);
  for (double d : identity.defect) CHECK(d <= 1e-15);
  CHECK(identity.report.pass);
  const ChainRuleResult flat = chain_rule_defect(interval_spec(8), sq, dsq, [](double) { return 0.3; }, 3);
  for (double d : flat.defect) CHECK(d == 0.0);
  const ChainRuleResult square = chain_rule_defect(interval_spec(8), sq, dsq, id, 4);
  CHECK(square.rate >= 0.9);
  for (std::size_t i = 1; i < square.defect.size(); ++i) {
    CHECK(square.defect[i] == doctest::Approx(square.defect[i - 1] / 2).epsilon(1e-9));
  }
  BuilderSpec er = erdos_renyi_spec(10, 0.5, 1);
  CHECK_THROWS_AS(chain_rule_defect(er, sq, dsq, id, 2), DomainError);
}

TEST_CASE("command line: gen, check, experiment and run") {
  const fs::path dir = scratch_dir("cli");
  const fs::path log = dir / "log.txt";

  REQUIRE(run_cli("gen path --n 5 --out " + (dir / "p5.json").string(), log) == 0);
  const WeightedSpace p5 = read_space_file((dir / "p5.json").string());
  CHECK(p5.size() == 5);

  std::ofstream(dir / "tent.json") << "[0, 0, 1, 0, 0]";
  std::ofstream(dir / "line.json") << "[0, 1, 2, 3, 4]";
  const std::string space = " --space " + (dir / "p5.json").string();
  CHECK(run_cli("check subharmonic" + space + " --field " + (dir / "line.json").string() + " --region 1,2,3", log) == 0);
  CHECK(run_cli("check subharmonic" + space + " --field " + (dir / "tent.json").string() + " --region 1,2,3", log) == 1);
  CHECK(json::parse(slurp(log))["worstViolation"].get<double>() == doctest::Approx(2.0));
  CHECK(run_cli("check max-principle" + space + " --field " + (dir / "tent.json").string() + " --region 1,2,3 --part A",
                log) == 1);

  CHECK(run_cli("experiment chain-rule --out " + (dir / "cr").string(), log) == 0);
  CHECK(fs::exists(dir / "cr" / "report.json"));
  CHECK(run_cli("experiment nonsense", log) == 2);
  CHECK(slurp(log).find("experiment") != std::string::npos);
  CHECK(run_cli("experiment esqq0 --param trails=3", log) == 2);
  CHECK(slurp(log).find("params.trails") != std::string::npos);
  CHECK(run_cli("bogus", log) == 2);

  const fs::path cfg = dir / "cfg.json";
  std::ofstream(cfg) << json{{"experiment", "esqq0"},
                             {"space", {{"family", "path-64"}}},
                             {"params", {{"trials", 12}}},
                             {"seed", 4},
                             {"out", (dir / "run1").string()}}
                            .dump();
  REQUIRE(run_cli("run " + cfg.string(), log) == 0);
  REQUIRE(run_cli("run " + cfg.string() + " --out " + (dir / "run2").string(), log) == 0);
  CHECK(slurp(dir / "run1" / "report.json") == slurp(dir / "run2" / "report.json"));
}
