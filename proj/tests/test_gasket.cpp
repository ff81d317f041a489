#include <cmath>

#include <doctest.h>

#include "defectlab/errors.hpp"
#include "defectlab/gasket.hpp"
#include "defectlab/harmonic.hpp"
#include "defectlab/random.hpp"
#include "helpers.hpp"

using namespace defectlab;

namespace {

std::size_t find_vertex(const WeightedSpace& s, double x, double y) {
  for (std::size_t v = 0; v < s.size(); ++v) {
    if (std::abs(s.coords(v)[0] - x) < 1e-12 && std::abs(s.coords(v)[1] - y) < 1e-12) return v;
  }
  FAIL("no vertex at the requested coordinates");
  return 0;
}

}  // namespace

TEST_CASE("low levels: vertex, edge and conductance counts") {
  const GasketLevel g0 = build_gasket(0);
  CHECK(g0.space.size() == 3);
  CHECK(g0.space.edges().size() == 3);
  for (const Edge& e : g0.space.edges()) CHECK(e.weight == 1.0);

  const GasketLevel g1 = build_gasket(1);
  CHECK(g1.space.size() == 6);
  CHECK(g1.space.edges().size() == 9);
  for (const Edge& e : g1.space.edges()) CHECK(e.weight == doctest::Approx(5.0 / 3.0));

  const GasketLevel g2 = build_gasket(2);
  CHECK(g2.space.size() == 15);
  CHECK(g2.space.edges().size() == 27);
}

TEST_CASE("closed-form counts and total measure through level 6") {
  for (int n = 0; n <= 6; ++n) {
    const GasketLevel g = build_gasket(n);
    const auto p = static_cast<std::size_t>(std::pow(3, n));
    CHECK(g.space.size() == 3 * (p + 1) / 2);
    CHECK(g.space.edges().size() == 3 * p);
    CHECK(g.cells.size() == p);
    // Rounding grows with the 3^n summed terms.
    CHECK(std::abs(g.space.total_measure() - 1.0) <= (n <= 2 ? 1e-15 : 1e-16 * static_cast<double>(p)));
    CHECK(g.space.metric_violation(200).has_value() == false);
  }
}

TEST_CASE("cell measure at levels 0 and 1") {
  const Field m0 = gasket_measure(0);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(m0[i] == doctest::Approx(1.0 / 3.0));
  const GasketLevel g1 = build_gasket(1);
  for (std::size_t v = 0; v < 6; ++v) {
    const bool corner = v == g1.boundary[0] || v == g1.boundary[1] || v == g1.boundary[2];
    CHECK(g1.space.measure(v) == doctest::Approx(corner ? 1.0 / 9.0 : 2.0 / 9.0));
  }
  CHECK(std::abs(gasket_measure(2).sum() - 1.0) < 1e-15);
  const Field uniform = gasket_measure(2, GasketMeasure::UniformVertex);
  CHECK((uniform.array() - 1.0 / 15.0).abs().maxCoeff() < 1e-16);
}

TEST_CASE("level-one extension of corner data (1,0,0)") {
  const GasketLevel g = build_gasket(1);
  const Field u = gasket_harmonic_extend(g, {1, 0, 0});
  const auto c0 = g.space.coords(g.boundary[0]), c1 = g.space.coords(g.boundary[1]),
             c2 = g.space.coords(g.boundary[2]);
  const std::size_t m01 = find_vertex(g.space, (c0[0] + c1[0]) / 2, (c0[1] + c1[1]) / 2);
  const std::size_t m02 = find_vertex(g.space, (c0[0] + c2[0]) / 2, (c0[1] + c2[1]) / 2);
  const std::size_t m12 = find_vertex(g.space, (c1[0] + c2[0]) / 2, (c1[1] + c2[1]) / 2);
  CHECK(std::abs(u[static_cast<Eigen::Index>(m01)] - 0.4) < 1e-15);
  CHECK(std::abs(u[static_cast<Eigen::Index>(m02)] - 0.4) < 1e-15);
  CHECK(std::abs(u[static_cast<Eigen::Index>(m12)] - 0.2) < 1e-15);
}

TEST_CASE("extension agrees with a direct Dirichlet solve and keeps energy 2") {
  for (int n = 1; n <= 6; ++n) {
    const GasketLevel g = build_gasket(n);
    const Field u = gasket_harmonic_extend(g, {1, 0, 0});
    std::vector<std::size_t> inner;
    for (std::size_t v = 0; v < g.space.size(); ++v) {
      if (v != g.boundary[0] && v != g.boundary[1] && v != g.boundary[2]) inner.push_back(v);
    }
    Field data = Field::Zero(static_cast<Eigen::Index>(g.space.size()));
    data[static_cast<Eigen::Index>(g.boundary[0])] = 1.0;
    const Field direct = harmonic_extension(Region(g.space, inner), data, 0.0);
    CHECK(testing::sup_gap(u, direct) < 1e-12);
    CHECK(std::abs(gasket_energy(g, u) - 2.0) < 1e-12);
    CHECK(gasket_energy(g, u) == doctest::Approx(energy(g.space, u)).epsilon(1e-14));
  }
}

TEST_CASE("constant corners extend to the constant with zero energy") {
  const GasketLevel g = build_gasket(4);
  const Field u = gasket_harmonic_extend(g, {0.7, 0.7, 0.7});
  CHECK((u.array() - 0.7).abs().maxCoeff() < 1e-15);
  CHECK(gasket_energy(g, u) < 1e-28);
}

TEST_CASE("renormalized energy is level independent for random corner data") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const std::array<double, 3> c{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double e0 = (c[0] - c[1]) * (c[0] - c[1]) + (c[1] - c[2]) * (c[1] - c[2]) + (c[0] - c[2]) * (c[0] - c[2]);
    double previous = e0;
    for (int n = 1; n <= 6; ++n) {
      const GasketLevel g = build_gasket(n);
      const double e = gasket_energy(g, gasket_harmonic_extend(g, c));
      CHECK(std::abs(e - previous) < 1e-12);
      previous = e;
    }
  }
}

TEST_CASE("addresses and level caps") {
  const GasketLevel g = build_gasket(2);
  CHECK(g.space.annotations().size() == g.space.size());
  CHECK_THROWS_AS(build_gasket(kMaxGasketLevel + 1), ResourceError);
  CHECK_THROWS_AS(build_gasket(-1), DomainError);
}
