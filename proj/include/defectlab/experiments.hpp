#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "defectlab/builders.hpp"
#include "defectlab/report.hpp"
#include "defectlab/space.hpp"

namespace defectlab {

// Comma-separated table with a header row.
struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_csv(std::ostream& out, const Table& table);

// A test space with regions U that leave room for a shift source and a
// planted interior vertex.
struct Family {
  std::string name;
  WeightedSpace space;
  std::vector<Region> regions;
};

using FamilyPtr = std::unique_ptr<Family>;

// True when U has an interior vertex x with closure({x}) != U, the default
// outer region of U reaches beyond closure(U), and the unit shift at
// `conditioning_lambda` stays below `max_shift_ratio` times its minimum.
// Long thin regions force an exponentially growing shift, and the
// semigroup criterion on f - g then loses all precision in double.
bool admissible_region(const Region& region, double conditioning_lambda = 1.0, double max_shift_ratio = 1e4);

// Picks `count` admissible BFS regions around seeded centers, each as
// large as possible up to `max_fraction` of the space.
FamilyPtr make_family(std::string name, WeightedSpace space, std::size_t count, std::uint64_t seed,
                      double max_fraction = 0.7);

// "path-N", "grid-RxC", "gasket-N", "er-N" (edge probability 4/N).
FamilyPtr family_from_name(const std::string& name, std::uint64_t seed, std::size_t regions = 2);

// path-64, grid-10x10, gasket-3, er-50.
std::vector<FamilyPtr> standard_families(std::uint64_t seed);

std::vector<const Family*> view(const std::vector<FamilyPtr>& families);

struct SuiteOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::vector<double> lambdas = {0.0, 0.1, 0.5};
};

// Equivalence of the residual, semigroup and exit criteria, restricted and
// ambient, over all (family, region, lambda) combinations. Odd trials
// carry a planted violation.
CheckReport esqq0_suite(const std::vector<const Family*>& families, const SuiteOptions& options);

// Pairs of shift-defective functions; the pointwise max must pass.
CheckReport kato_brezis_suite(const std::vector<const Family*>& families, const SuiteOptions& options);

// (f - c)_+^{q/2} weakly subharmonic for each seed, q and c.
CheckReport regularity_suite(const std::vector<const Family*>& families, const SuiteOptions& options,
                             const std::vector<double>& qs = {2, 3, 4, 8}, const std::vector<double>& cs = {0, 0.1});

// Boundary max equals closure max on V = interior(U); part A for lambda = 0
// and part B (positive part) for every lambda.
CheckReport max_principle_suite(const std::vector<const Family*>& families, const SuiteOptions& options);

// Resolvent images (H + 1)^{-1} psi, psi >= 0, are 1-shift excessive and
// nonnegative; planted negative functions are rejected as excessive.
CheckReport lq_positivity_suite(const std::vector<const Family*>& families, const SuiteOptions& options);

struct McOptions {
  std::size_t configs = 1000;
  std::size_t paths = 10000;
  std::size_t max_events = 1000000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::size_t reruns = 20;          // configs re-simulated for bit identity
  std::size_t max_region = 6;       // members of V
  double required_fraction = 0.99;  // within three standard errors
};

CheckReport mc_vs_exact_suite(const std::vector<const Family*>& families, const McOptions& options,
                              Table* table = nullptr);

struct DoublingOptions {
  std::vector<double> radii;  // at least 3
  std::size_t centers = 32;
  std::uint64_t seed = 0;
  bool counting = false;      // counting measure instead of m
  // Centers are drawn among vertices whose ball of the largest radius
  // stays clear of the metric boundary when the coordinates allow it.
  bool interior_centers = true;
};

struct DoublingFit {
  double alpha = 0.0;
  double C = 1.0;
  double rms_residual = 0.0;
  CheckReport report;
  Table table;
};

// Pooled least squares log m(x,r) = a_x + alpha log r, then the smallest
// C >= 1 with m(x,R)/m(x,r) <= C e^{CR} (R/r)^alpha over all sampled pairs.
DoublingFit fit_doubling(const WeightedSpace& space, const DoublingOptions& options);

struct LiYauOptions {
  std::vector<double> t_grid;
  std::size_t centers = 24;
  std::uint64_t seed = 0;
  std::vector<double> c2_grid = {0.1, 0.125, 0.15, 0.2, 0.25};
  std::vector<double> c3_grid = {0.0, 0.05, 0.1, 0.2, 0.5, 1.0};
  double resolution = 1e-12;  // p below resolution * p(t,x,x) is skipped
};

struct LiYauFit {
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
  double D = 1.0;
  double worst_slack = 0.0;  // max log(p / bound) at the certified triple
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  CheckReport report;
  Table candidates;
};

// p(t,x,y) <= c1 m(x,sqrt t)^{-1} e^{-c2 d^2/t} e^{c3 t}: for each candidate
// (c2, c3) the minimal c1 over the samples; the certified triple minimizes
// c1. Also fits D in m(x,sqrt t)/m(y,sqrt t) <= D e^{Dt} e^{d^2/t}.
LiYauFit fit_liyau(const WeightedSpace& space, const LiYauOptions& options);

// Mapping properties of P_t checked where a Gaussian Li-Yau form is not
// expected: positivity, P_t 1 = 1 and sup-norm contraction.
CheckReport feller_route(const WeightedSpace& space, const std::vector<double>& t_grid, std::uint64_t seed);

struct GasketAnchors {
  double alpha = 0.0;
  CheckReport report;
  Table table;  // level, energy, max gap to the direct Dirichlet solve
};

// Corner data (1,0,0): the 1/5-2/5 extension against a direct harmonic
// solve and the level-one midpoints {2/5, 2/5, 1/5} for levels
// 1..max_level, the renormalized energy 2 at each level, and the
// ball-count exponent at `alpha_level` within `alpha_band` of log 3/log 2.
GasketAnchors gasket_anchors(int max_level = 5, int alpha_level = 8, double tolerance = 1e-12,
                             double alpha_band = 0.1);

struct ChainRuleResult {
  std::vector<double> mesh;
  std::vector<double> defect;
  double rate = 0.0;
  CheckReport report;
  Table table;
};

// max_x |Gamma(eta(u), u)(x) - eta'(u(x)) Gamma(u, u)(x)| on successive
// halvings of an interval spec; `rate` is the fitted slope of log defect
// against log h.
ChainRuleResult chain_rule_defect(const BuilderSpec& interval, const std::function<double(double)>& eta,
                                  const std::function<double(double)>& deta, const std::function<double(double)>& u,
                                  std::size_t refinements, double min_rate = 0.9);

}  // namespace defectlab
