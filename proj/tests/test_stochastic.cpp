#include <cstring>

#include <doctest.h>

#include "defectlab/errors.hpp"
#include "defectlab/harmonic.hpp"
#include "defectlab/stochastic.hpp"
#include "defectlab/subharmonic.hpp"
#include "helpers.hpp"

using namespace defectlab;
using testing::sup_gap;
using testing::unit_path;
using testing::vec;

TEST_CASE("symmetric exit from the middle of the three-vertex path") {
  const auto s = unit_path(3);
  const Region v(s, {1});
  const Field f = vec({0, 0, 1});
  CHECK(exact_exit_functional(v, 0.0, f)[0] == doctest::Approx(0.5));
  WalkConfig cfg;
  cfg.start = 1;
  cfg.paths = 20000;
  cfg.seed = 3;
  const ExitEstimate e = simulate_exit(v, cfg, f);
  CHECK(e.paths == 20000);
  CHECK(e.standard_error > 0.0);
  CHECK(std::abs(e.mean - 0.5) <= 3 * e.standard_error);
}

TEST_CASE("discounted exit from a single vertex: r / (r + lambda)") {
  const auto s = unit_path(3);
  const Region v(s, {1});
  const Field f = vec({1, 0, 1});
  CHECK(exact_exit_functional(v, 2.0, f)[0] == doctest::Approx(0.5));
  WalkConfig cfg;
  cfg.start = 1;
  cfg.lambda = 2.0;
  cfg.paths = 20000;
  cfg.seed = 8;
  const ExitEstimate e = simulate_exit(v, cfg, f);
  CHECK(std::abs(e.mean - 0.5) <= 3 * e.standard_error);
}

TEST_CASE("certain exit with unit payoff") {
  const auto s = build(grid_spec(5, 5));
  const Region v = ball_region(s, 12, 1);
  WalkConfig cfg;
  cfg.start = 12;
  cfg.paths = 500;
  const ExitEstimate e = simulate_exit(v, cfg, Field::Ones(25));
  CHECK(e.mean == 1.0);
  CHECK(e.standard_error == 0.0);
  CHECK(e.censored == 0);
}

TEST_CASE("exit estimates are seed-deterministic and independent of the worker count") {
  const auto s = build(erdos_renyi_spec(30, 0.15, 4));
  const Region v = bfs_region(s, 0, 6);
  Field f = Field::Zero(30);
  for (Eigen::Index i = 0; i < 30; ++i) f[i] = std::sin(static_cast<double>(i));
  WalkConfig cfg;
  cfg.start = v.members()[0];
  cfg.lambda = 0.3;
  cfg.paths = 3000;
  cfg.seed = 99;
  const ExitEstimate a = simulate_exit(v, cfg, f);
  cfg.workers = 3;
  const ExitEstimate b = simulate_exit(v, cfg, f);
  CHECK(std::memcmp(&a.mean, &b.mean, sizeof(double)) == 0);
  CHECK(std::memcmp(&a.standard_error, &b.standard_error, sizeof(double)) == 0);
  cfg.seed = 100;
  CHECK(simulate_exit(v, cfg, f).mean != a.mean);
}

TEST_CASE("censoring beyond the jump horizon raises a horizon error") {
  const auto s = unit_path(40);
  const Region v = ball_region(s, 20, 15);
  WalkConfig cfg;
  cfg.start = 20;
  cfg.paths = 200;
  cfg.max_events = 3;
  CHECK_THROWS_AS(simulate_exit(v, cfg, Field::Ones(40)), HorizonError);
}

TEST_CASE("exact exit functional fixes lambda-harmonic functions") {
  const auto s = build(grid_spec(7, 7));
  const Region v = ball_region(s, 24, 2);
  for (double lambda : {0.0, 0.6}) {
    const Field g = random_harmonic(v, lambda, 21, -1, 1);
    CHECK(sup_gap(exact_exit_functional(v, lambda, g), v.restrict(g)) < 1e-12);
  }
}

TEST_CASE("tower property through nested regions") {
  const auto s = build(grid_spec(9, 9));
  const Region v1 = ball_region(s, 40, 1), v2 = ball_region(s, 40, 3);
  Field f = Field::Zero(81);
  for (Eigen::Index i = 0; i < 81; ++i) f[i] = std::cos(0.3 * static_cast<double>(i));
  for (double lambda : {0.0, 0.4}) {
    const Field u2 = v2.extend(exact_exit_functional(v2, lambda, f), f);
    const Field through = exact_exit_functional(v1, lambda, u2);
    CHECK(sup_gap(through, v1.restrict(u2)) < 1e-10);
  }
}

TEST_CASE("probabilistic defectiveness: harmonic, shifted and planted fields") {
  const auto s = build(grid_spec(9, 9));
  const Region outer = ball_region(s, 40, 3), inner = ball_region(s, 40, 1);
  const double lambda = 0.25;

  const Field g = random_harmonic(outer, lambda, 5, 0, 1);
  CHECK(probabilistic_defectiveness_check(outer, inner, g, lambda).pass);

  const Field f = g + outer.extend_by_zero(sample_defective(outer, lambda, 6));
  CHECK(probabilistic_defectiveness_check(outer, inner, f, lambda).pass);
  ProbabilisticOptions mc;
  mc.mode = ExitMode::MonteCarlo;
  mc.paths = 2000;
  mc.seed = 1;
  CHECK(probabilistic_defectiveness_check(outer, inner, f, lambda, mc).pass);
  CHECK(probabilistic_defectiveness_scan(outer, f, lambda).pass);

  Field bad = f;
  bad[40] += 0.5;
  const CheckReport r = probabilistic_defectiveness_check(outer, inner, bad, lambda);
  CHECK_FALSE(r.pass);
  CHECK(r.witness_vertex == std::optional<std::size_t>(40));
  CHECK_FALSE(weak_subharmonicity_check(outer, bad, lambda).pass);
}

TEST_CASE("probabilistic check geometry") {
  const auto s = build(grid_spec(9, 9));
  const Region v = ball_region(s, 40, 2);
  CHECK_THROWS_AS(probabilistic_defectiveness_check(v, v, Field::Zero(81), 0.0), DomainError);
  CHECK_THROWS_AS(probabilistic_defectiveness_check(v.closure(), v, Field::Zero(81), 0.0), DomainError);
}

TEST_CASE("restricted exit criterion agrees with the residual criterion") {
  const auto s = build(grid_spec(7, 7));
  const Region u = ball_region(s, 24, 2);
  const DirichletSolver solver(u, 0.5);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Field h = sample_defective(u, 0.5, seed);
    CHECK(restricted_exit_check(u, h, 0.5).pass);
    const PlantedSample p = plant_violation(solver, seed, [](const Field& x) { return default_tolerance(x); });
    const CheckReport exit = restricted_exit_check(u, p.h, 0.5, p.tolerance);
    CHECK_FALSE(exit.pass);
    CHECK(exit.witness_vertex == restricted_residual_check(u, p.h, 0.5, p.tolerance).witness_vertex);
  }
}
