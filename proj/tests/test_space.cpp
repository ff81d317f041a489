#include <doctest.h>

#include "defectlab/errors.hpp"
#include "defectlab/random.hpp"
#include "defectlab/space.hpp"
#include "helpers.hpp"

using namespace defectlab;
using testing::unit_path;
using testing::vec;

TEST_CASE("energy of a linear and a tent function on the three-vertex path") {
  const auto s = unit_path(3);
  CHECK(energy(s, vec({0, 1, 2})) == doctest::Approx(2.0));
  CHECK(energy(s, vec({0, 1, 0})) == doctest::Approx(2.0));
  CHECK(energy(s, vec({5, 5, 5})) == 0.0);
}

TEST_CASE("generator action on the three-vertex path") {
  const auto s = unit_path(3);
  CHECK(testing::sup_gap(apply_generator(s, vec({0, 1, 0})), vec({-1, 2, -1})) < 1e-15);
  CHECK(testing::sup_gap(apply_generator(s, vec({0, 1, 2})), vec({-1, 0, 1})) < 1e-15);
  const Eigen::MatrixXd h = s.generator_matrix();
  CHECK(testing::sup_gap(h * vec({0, 1, 0}), vec({-1, 2, -1})) < 1e-15);
}

TEST_CASE("energy measure density sums to the energy") {
  const auto s = unit_path(3);
  const Field g = energy_measure(s, vec({0, 1, 2}), vec({0, 1, 2}));
  CHECK(testing::sup_gap(g, vec({0.5, 1.0, 0.5})) < 1e-15);
  CHECK(inner(s, g, Field::Ones(3)) == doctest::Approx(energy(s, vec({0, 1, 2}))));
}

TEST_CASE("form identity E(f,g) = <Hf, g> and symmetry on a random graph") {
  const auto s = build(erdos_renyi_spec(30, 0.2, 7));
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Field f(30), g(30);
    for (int i = 0; i < 30; ++i) {
      f[i] = rng.uniform(-1, 1);
      g[i] = rng.uniform(-1, 1);
    }
    const double e = energy(s, f, g);
    CHECK(e == doctest::Approx(inner(s, apply_generator(s, f), g)).epsilon(1e-12));
    CHECK(e == doctest::Approx(energy(s, g, f)).epsilon(1e-12));
    CHECK(energy(s, f) >= 0.0);
    CHECK(shifted_energy(s, f, 0.5) == doctest::Approx(energy(s, f) + 0.5 * inner(s, f, f)));
  }
}

TEST_CASE("Markov cut: normal contraction does not increase energy") {
  const auto s = build(grid_spec(5, 6));
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Field f(30);
    for (int i = 0; i < 30; ++i) f[i] = rng.uniform(-2, 2);
    const Field cut = f.cwiseMax(0.0).cwiseMin(1.0);
    CHECK(energy(s, cut) <= energy(s, f) + 1e-12);
  }
}

TEST_CASE("region interior and vertex boundary") {
  const auto p4 = unit_path(4);
  const Region a(p4, {1, 2});
  CHECK(a.interior().empty());
  CHECK(a.boundary() == std::vector<std::size_t>{0, 3});
  CHECK(a.boundary_adjacent() == std::vector<std::size_t>{1, 2});

  const auto p5 = unit_path(5);
  const Region b(p5, {3, 1, 2, 2});
  CHECK(b.members() == std::vector<std::size_t>{1, 2, 3});
  CHECK(b.interior() == std::vector<std::size_t>{2});
  CHECK(b.closure().members().size() == 5);
  CHECK(b.closure().is_whole_space());
  CHECK(Region(p5, {2}).dilate(1).members() == std::vector<std::size_t>{1, 2, 3});
}

TEST_CASE("region fields: restriction, zero extension and the restricted generator") {
  const auto s = unit_path(5);
  const Region r(s, {1, 2, 3});
  const Field f = vec({10, 1, 2, 3, 20});
  CHECK(testing::sup_gap(r.restrict(f), vec({1, 2, 3})) == 0.0);
  CHECK(testing::sup_gap(r.extend_by_zero(vec({1, 2, 3})), vec({0, 1, 2, 3, 0})) == 0.0);
  const Field hu = r.apply_restricted(vec({1, 2, 3}));
  const Field direct = r.restrict(apply_generator(s, r.extend_by_zero(vec({1, 2, 3}))));
  CHECK(testing::sup_gap(hu, direct) < 1e-15);
  CHECK(testing::sup_gap(r.restricted_generator() * vec({1, 2, 3}), direct) < 1e-15);
}

TEST_CASE("ball and bfs regions") {
  const auto s = unit_path(9);
  CHECK(ball_region(s, 4, 2).members() == std::vector<std::size_t>{2, 3, 4, 5, 6});
  CHECK(bfs_region(s, 0, 3).members() == std::vector<std::size_t>{0, 1, 2});
  CHECK_THROWS_AS(bfs_region(s, 20, 3), DomainError);
}

TEST_CASE("spectral gap of a two-vertex region and degeneracy of the whole space") {
  const auto s = unit_path(4);
  const CheckReport gap = spectral_gap_check(Region(s, {1, 2}));
  CHECK(gap.pass);
  CHECK(gap.details["lambdaMin"].get<double>() == doctest::Approx(1.0));
  const CheckReport whole = spectral_gap_check(whole_space(s));
  CHECK(whole.degenerate);
  CHECK_FALSE(whole.pass);
}

TEST_CASE("irreducibility and components") {
  SpaceData d;
  d.measure = {1, 1, 1, 1};
  d.edges = {{0, 1, 1.0}, {2, 3, 2.0}};
  const WeightedSpace s(d);
  CHECK_FALSE(irreducibility_check(s).pass);
  const auto comps = connected_components(s);
  REQUIRE(comps.size() == 2);
  CHECK(comps[0] == std::vector<std::size_t>{0, 1});
  CHECK(irreducibility_check(unit_path(6)).pass);
}

TEST_CASE("invalid space data is rejected") {
  SpaceData bad_measure;
  bad_measure.measure = {1, 0};
  CHECK_THROWS_AS(WeightedSpace{bad_measure}, DomainError);

  SpaceData loop;
  loop.measure = {1, 1};
  loop.edges = {{0, 0, 1.0}};
  CHECK_THROWS_AS(WeightedSpace{loop}, DomainError);

  SpaceData negative;
  negative.measure = {1, 1};
  negative.edges = {{0, 1, -1.0}};
  CHECK_THROWS_AS(WeightedSpace{negative}, DomainError);

  SpaceData duplicate;
  duplicate.measure = {1, 1};
  duplicate.edges = {{0, 1, 1.0}, {1, 0, 1.0}};
  CHECK_THROWS_AS(WeightedSpace{duplicate}, DomainError);

  CHECK_THROWS_AS(Region(unit_path(3), {}), DomainError);
}

TEST_CASE("explicit metric and the triangle inequality scan") {
  SpaceData d;
  d.measure = {1, 1, 1};
  d.edges = {{0, 1, 1.0}, {1, 2, 1.0}};
  d.metric = {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 5.0}};
  const WeightedSpace bad(d);
  CHECK(bad.metric_violation().has_value());
  d.metric[2].distance = 2.0;
  const WeightedSpace good(d);
  CHECK_FALSE(good.metric_violation().has_value());
  CHECK(good.distance(2, 0) == 2.0);
}
