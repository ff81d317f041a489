#include <doctest.h>

#include "defectlab/errors.hpp"
#include "defectlab/harmonic.hpp"
#include "defectlab/random.hpp"
#include "defectlab/subharmonic.hpp"
#include "helpers.hpp"

using namespace defectlab;
using testing::sup_gap;
using testing::unit_path;
using testing::vec;

TEST_CASE("harmonic extension on the four-vertex path interpolates linearly") {
  const auto s = unit_path(4);
  const Field u = harmonic_extension(Region(s, {1, 2}), vec({0, 0, 0, 3}), 0.0);
  CHECK(sup_gap(u, vec({0, 1, 2, 3})) < 1e-14);
}

TEST_CASE("single member between two boundary values with lambda = 1") {
  const auto s = unit_path(3);
  const Field u = harmonic_extension(Region(s, {1}), vec({3, 0, 3}), 1.0);
  CHECK(u[1] == doctest::Approx(2.0));
}

TEST_CASE("constant boundary data extends to the constant") {
  const auto s = build(grid_spec(5, 5));
  const Region r(s, {6, 7, 8, 11, 12, 13, 16, 17, 18});
  const Field u = harmonic_extension(r, Field::Constant(25, 4.5), 0.0);
  CHECK((u.array() - 4.5).abs().maxCoeff() < 1e-13);
}

TEST_CASE("extension solves the equation and obeys the discrete maximum principle") {
  const auto s = build(erdos_renyi_spec(40, 0.12, 3));
  const Region r = bfs_region(s, 0, 15);
  Rng rng(5);
  for (double lambda : {0.0, 0.7}) {
    Field data = Field::Zero(40);
    for (std::size_t y : r.boundary()) data[static_cast<Eigen::Index>(y)] = rng.uniform(-1, 2);
    const Field u = harmonic_extension(r, data, lambda);
    const Field residual = apply_generator(s, u) + lambda * u;
    double lo = 1e300, hi = -1e300;
    for (std::size_t y : r.boundary()) {
      lo = std::min(lo, data[static_cast<Eigen::Index>(y)]);
      hi = std::max(hi, data[static_cast<Eigen::Index>(y)]);
      CHECK(u[static_cast<Eigen::Index>(y)] == data[static_cast<Eigen::Index>(y)]);
    }
    for (std::size_t x : r.members()) {
      CHECK(std::abs(residual[static_cast<Eigen::Index>(x)]) < 1e-10 * (1 + data.cwiseAbs().maxCoeff()));
      if (lambda == 0.0) {
        CHECK(u[static_cast<Eigen::Index>(x)] >= lo - 1e-12);
        CHECK(u[static_cast<Eigen::Index>(x)] <= hi + 1e-12);
      }
    }
  }
}

TEST_CASE("comparison: larger boundary data gives a larger extension") {
  const auto s = build(grid_spec(6, 6));
  const Region r = ball_region(s, 14, 2);
  Rng rng(9);
  Field a = Field::Zero(36), b = Field::Zero(36);
  for (std::size_t y : r.boundary()) {
    a[static_cast<Eigen::Index>(y)] = rng.uniform(-1, 1);
    b[static_cast<Eigen::Index>(y)] = a[static_cast<Eigen::Index>(y)] + rng.uniform(0, 1);
  }
  const Field ua = harmonic_extension(r, a, 0.0), ub = harmonic_extension(r, b, 0.0);
  CHECK((ub - ua).minCoeff() >= -1e-13);
}

TEST_CASE("singular Dirichlet problem") {
  const auto s = unit_path(4);
  CHECK_THROWS_AS(harmonic_extension(whole_space(s), Field::Zero(4), 0.0), NumericalError);
  CHECK_NOTHROW(harmonic_extension(whole_space(s), Field::Zero(4), 0.5));
  CHECK_THROWS_AS(harmonic_extension(Region(s, {1}), Field::Zero(3), 0.0), DomainError);
}

TEST_CASE("shift with lambda = 0 is the constant") {
  const auto s = unit_path(8);
  const Region u(s, {2, 3, 4});
  const ShiftCertificate cert = build_shift(u, default_outer(u), 0.0, 2.5);
  CHECK((cert.shift.array() - 2.5).abs().maxCoeff() == 0.0);
  CHECK(cert.residual == 0.0);
}

TEST_CASE("shift with lambda = 1 on the six-vertex path") {
  // h = (H^{U'} + 1)^{-1} 1_{4} on U' = {1,2,3,4} is (1, 3, 8, 21) / 55, so
  // a = c / h(1) = 55 c and g = c (1, 3) on U = {1,2}.
  const auto s = unit_path(6);
  const Region u(s, {1, 2}), outer(s, {1, 2, 3, 4});
  const ShiftCertificate one = build_shift(u, outer, 1.0, 1.0);
  CHECK(sup_gap(one.shift, vec({1, 3})) < 1e-13);
  CHECK(one.source_support == std::vector<std::size_t>{4});
  CHECK(one.scale == doctest::Approx(55.0));
  const ShiftCertificate two = build_shift(u, outer, 1.0, 2.0);
  CHECK(two.scale == doctest::Approx(2.0 * one.scale));
}

TEST_CASE("shift is lambda-harmonic on the interior and bounded below") {
  const auto s = build(grid_spec(9, 9));
  const Region u = ball_region(s, 40, 2);
  for (double lambda : {0.1, 0.5, 1.0}) {
    const ShiftCertificate cert = build_shift(u, default_outer(u), lambda, 0.75);
    CHECK(cert.shift.minCoeff() >= 0.75 - 1e-12);
    CHECK(cert.residual <= 1e-10 * (1 + cert.shift.maxCoeff()));
  }
}

TEST_CASE("shift geometry errors") {
  const auto s = unit_path(5);
  const Region u(s, {1, 2, 3});
  CHECK_THROWS_AS(build_shift(u, u.closure(), 1.0, 1.0), GeometryError);
  CHECK_THROWS_AS(build_shift(u, Region(s, {1, 2}), 1.0, 1.0), GeometryError);
}

TEST_CASE("defective samples are nonpositive with nonpositive residual") {
  const auto s = build(grid_spec(7, 7));
  const Region u = ball_region(s, 24, 2);
  for (double lambda : {0.0, 0.5}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const DefectiveSample d = sample_defective_with_source(u, lambda, seed);
      CHECK(d.source.minCoeff() >= 0.0);
      CHECK(d.h.maxCoeff() <= 0.0);
      const Field residual = u.apply_restricted(d.h) + lambda * d.h;
      CHECK(sup_gap(residual, -d.source) < 1e-12 * (1 + d.h.cwiseAbs().maxCoeff()));
      CHECK(restricted_residual_check(u, d.h, lambda).pass);
      CHECK(defectiveness_check(u, d.h, lambda).pass);
    }
  }
}

TEST_CASE("zero source gives the zero sample") {
  const auto s = unit_path(6);
  const Region u(s, {1, 2, 3, 4});
  DefectiveSampleOptions opts;
  opts.zero_source = u.members();
  const DefectiveSample d = sample_defective_with_source(u, 0.3, 1, opts);
  CHECK(d.h.cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.source.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("random harmonic fields are seed-deterministic and harmonic on members") {
  const auto s = build(grid_spec(6, 6));
  const Region u = ball_region(s, 14, 1);
  const Field a = random_harmonic(u, 0.2, 42, -1, 1), b = random_harmonic(u, 0.2, 42, -1, 1);
  CHECK(sup_gap(a, b) == 0.0);
  const Field residual = apply_generator(s, a) + 0.2 * a;
  for (std::size_t x : u.members()) CHECK(std::abs(residual[static_cast<Eigen::Index>(x)]) < 1e-12);
}
