// Acceptance run: one line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "defectlab/builders.hpp"
#include "defectlab/experiments.hpp"
#include "defectlab/report.hpp"

using namespace defectlab;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = false;
  std::string summary;
};

int failures = 0;

void criterion(int id, const std::string& name, double time_limit, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("error: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = seconds < time_limit;
  const bool pass = out.pass && in_time;
  if (!pass) ++failures;
  std::printf("criterion %d: %s %s | %s | %.2f s (limit %.0f s%s)\n", id, pass ? "PASS" : "FAIL", name.c_str(),
              out.summary.c_str(), seconds, time_limit, in_time ? "" : ", exceeded");
  std::fflush(stdout);
}

std::string detail(const CheckReport& r, const char* key) {
  return r.details.contains(key) ? r.details.at(key).dump() : "?";
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

int main() {
  const auto families = standard_families(kSeed);
  const auto fams = view(families);

  criterion(1, "checker equivalence, 500 instances", 60, [&] {
    SuiteOptions o;
    o.trials = 500;
    o.seed = kSeed;
    const CheckReport r = esqq0_suite(fams, o);
    return Outcome{r.pass && r.details.at("trials").get<std::size_t>() == 500,
                   "trials " + detail(r, "trials") + ", planted " + detail(r, "planted") + ", detected " +
                       detail(r, "plantedDetected") + ", verdict disagreements " + detail(r, "verdictDisagreements") +
                       ", witness mismatches " + detail(r, "witnessMismatches")};
  });

  criterion(2, "Kato-Brezis closure, 1000 pairs", 60, [&] {
    SuiteOptions o;
    o.trials = 1000;
    o.seed = kSeed;
    const CheckReport r = kato_brezis_suite(fams, o);
    return Outcome{r.pass, "max failures " + detail(r, "maxFailures") + ", input failures " +
                               detail(r, "inputFailures") + ", worst violation / tol " +
                               detail(r, "worstViolationOverTolerance")};
  });

  criterion(3, "regularity powers, 100 seeds x q {2,3,4,8} x c {0,0.1}", 60, [&] {
    SuiteOptions o;
    o.trials = 100;
    o.seed = kSeed;
    const CheckReport r = regularity_suite(fams, o);
    return Outcome{r.pass, "failures " + detail(r, "failures") + ", checks " + detail(r, "checks")};
  });

  criterion(4, "maximum principle, 300 triples, tol 1e-12", 30, [&] {
    SuiteOptions o;
    o.trials = 300;
    o.seed = kSeed;
    const CheckReport r = max_principle_suite(fams, o);
    return Outcome{r.pass,
                   "failures " + detail(r, "failures") + ", worst interior excess " + detail(r, "worstInteriorExcess")};
  });

  criterion(5, "Monte-Carlo vs exact, 1000 configs x 1e4 paths, 8 workers", 300, [&] {
    McOptions o;
    o.configs = 1000;
    o.paths = 10000;
    o.workers = 8;
    o.seed = kSeed;
    const CheckReport r = mc_vs_exact_suite(fams, o);
    return Outcome{r.pass, "within 3 se " + detail(r, "withinThreeSe") + " (fraction " + detail(r, "fraction") +
                               "), rerun mismatches " + detail(r, "rerunMismatches")};
  });

  criterion(6, "gasket anchors", 120, [&] {
    const GasketAnchors g = gasket_anchors(5, 8);
    return Outcome{g.report.pass, "alpha " + num(g.alpha) + " (target " + num(std::log(3.0) / std::log(2.0)) +
                                      " +- 0.1), midpoint gap " + detail(g.report, "worstMidpointGap") +
                                      ", energy gap " + detail(g.report, "worstEnergyGap") + ", direct-solve gap " +
                                      detail(g.report, "worstDirectSolveGap")};
  });

  criterion(7, "volume doubling and Li-Yau fits", 300, [&] {
    DoublingOptions d;
    d.seed = kSeed;
    const DoublingFit grid = fit_doubling(build(grid_spec(64, 64)), d);
    const DoublingFit path = fit_doubling(build(path_spec(4096)), d);
    LiYauOptions l;
    l.t_grid = {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0};
    l.seed = kSeed;
    const LiYauFit ly = fit_liyau(build(grid_spec(32, 32)), l);
    const bool grid_ok = grid.report.pass && std::abs(grid.alpha - 2.0) <= 0.2;
    const bool path_ok = path.report.pass && std::abs(path.alpha - 1.0) <= 0.1;
    const bool ly_ok = ly.report.pass && std::isfinite(ly.c1) && ly.c2 >= 0.1 && ly.worst_slack <= 1e-12;
    return Outcome{grid_ok && path_ok && ly_ok,
                   "grid alpha " + num(grid.alpha) + ", path alpha " + num(path.alpha) + ", Li-Yau (c1,c2,c3) = (" +
                       num(ly.c1) + ", " + num(ly.c2) + ", " + num(ly.c3) + "), D " + num(ly.D) + ", worst slack " +
                       num(ly.worst_slack)};
  });

  criterion(8, "L^q positivity, 1000 resolvent images", 60, [&] {
    SuiteOptions o;
    o.trials = 1000;
    o.seed = kSeed;
    const CheckReport r = lq_positivity_suite(fams, o);
    return Outcome{r.pass, "negativity violations " + detail(r, "negativityViolations") + ", not excessive " +
                               detail(r, "notExcessive") + ", min value " + detail(r, "minValue") +
                               ", planted accepted " + detail(r, "plantedAccepted")};
  });

  criterion(9, "chain-rule refinement, 4 halvings", 30, [&] {
    const ChainRuleResult c = chain_rule_defect(
        interval_spec(8), [](double s) { return s * s; }, [](double s) { return 2.0 * s; },
        [](double x) { return x; }, 4, 0.9);
    return Outcome{c.report.pass && c.rate >= 0.9,
                   "rate " + num(c.rate) + ", defects " + num(c.defect.front()) + " -> " + num(c.defect.back())};
  });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
