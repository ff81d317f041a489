#include <cmath>
#include <sstream>

#include <doctest.h>

#include "defectlab/builders.hpp"
#include "defectlab/errors.hpp"
#include "defectlab/io.hpp"
#include "helpers.hpp"

using namespace defectlab;
using testing::sup_gap;
using testing::vec;

namespace {

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("unit path of three vertices") {
  const WeightedSpace s = build(path_spec(3));
  CHECK(s.size() == 3);
  CHECK(s.edges().size() == 2);
  CHECK(s.conductance(0, 1) == 1.0);
  CHECK(s.conductance(0, 2) == 0.0);
  CHECK(s.measure(1) == 1.0);
  CHECK(s.label(2) == "2");
}

TEST_CASE("grid lattice counts") {
  const WeightedSpace s = build(grid_spec(10, 10));
  CHECK(s.size() == 100);
  CHECK(s.edges().size() == 180);
  CHECK(irreducibility_check(s).pass);
}

TEST_CASE("interval energy of a linear function") {
  const WeightedSpace s = build(interval_spec(100, 1.0));
  CHECK(s.size() == 101);
  const Field f = sample(s, [](double x) { return x; });
  CHECK(std::abs(energy(s, f) - 1.0) <= 1e-4);
}

TEST_CASE("interval coefficient enters the conductances at cell midpoints") {
  const WeightedSpace s = build(interval_spec(4, 2.0, [](double x) { return 1.0 + x; }));
  const double h = 0.5;
  CHECK(s.conductance(0, 1) == doctest::Approx((1.0 + 0.25) / h));
  CHECK(s.conductance(3, 4) == doctest::Approx((1.0 + 1.75) / h));
  CHECK(s.measure(2) == doctest::Approx(h));
  CHECK_THROWS_AS(build(interval_spec(4, 1.0, [](double) { return -1.0; })), DomainError);
}

TEST_CASE("interval energy converges at second order") {
  const double exact = M_PI * M_PI / 2.0;  // integral of (pi cos pi x)^2 over [0,1]
  BuilderSpec spec = interval_spec(8, 1.0);
  std::vector<double> log_h, log_err;
  for (int level = 0; level < 5; ++level) {
    const WeightedSpace s = build(spec);
    const double e = energy(s, sample(s, [](double x) { return std::sin(M_PI * x); }));
    log_h.push_back(std::log(1.0 / static_cast<double>(spec.n)));
    log_err.push_back(std::log(std::abs(e - exact)));
    spec = refine(spec).spec;
  }
  CHECK(slope(log_h, log_err) >= 1.9);
}

TEST_CASE("refinement of paths, grids and intervals") {
  const Refinement p = refine(path_spec(5, 1.0));
  CHECK(p.space.size() == 9);
  CHECK(p.spec.spacing == 0.5);
  REQUIRE(p.coarse_to_fine.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(p.space.coords(p.coarse_to_fine[i])[0] == doctest::Approx(static_cast<double>(i)));
  }
  const Refinement g = refine(grid_spec(10, 10));
  CHECK(g.space.size() == 19 * 19);
  const Refinement i = refine(interval_spec(8), 4);
  CHECK(i.space.size() == 33);
  CHECK_THROWS_AS(refine(erdos_renyi_spec(20, 0.3, 1)), DomainError);
}

TEST_CASE("random graphs are connected, seeded and within the weight range") {
  const WeightedSpace a = build(erdos_renyi_spec(50, 0.08, 12));
  const WeightedSpace b = build(erdos_renyi_spec(50, 0.08, 12));
  CHECK(irreducibility_check(a).pass);
  CHECK(sup_gap(a.measure(), b.measure()) == 0.0);
  REQUIRE(a.edges().size() == b.edges().size());
  for (std::size_t k = 0; k < a.edges().size(); ++k) {
    CHECK(a.edges()[k].weight == b.edges()[k].weight);
    CHECK(a.edges()[k].weight >= 0.5);
    CHECK(a.edges()[k].weight <= 1.5);
  }
  CHECK(a.measure().minCoeff() >= 0.5);
  CHECK(a.measure().maxCoeff() <= 1.5);
  CHECK_THROWS_AS(build(erdos_renyi_spec(50, 0.0, 1)), DomainError);
  CHECK_THROWS_AS(build(erdos_renyi_spec(60, 1e-4, 1)), NumericalError);
}

TEST_CASE("builder kind names") {
  for (BuilderKind k : {BuilderKind::Path, BuilderKind::Grid, BuilderKind::Interval, BuilderKind::ErdosRenyi}) {
    CHECK(builder_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(builder_kind_from_string("torus"), DomainError);
}

TEST_CASE("space files round-trip exactly") {
  const WeightedSpace s = build(erdos_renyi_spec(15, 0.3, 3));
  std::ostringstream out;
  write_space(out, s);
  const WeightedSpace t = read_space_string(out.str());
  CHECK(t.size() == s.size());
  CHECK(sup_gap(t.measure(), s.measure()) == 0.0);
  REQUIRE(t.edges().size() == s.edges().size());
  for (std::size_t k = 0; k < s.edges().size(); ++k) {
    CHECK(t.conductance(s.edges()[k].a, s.edges()[k].b) == s.edges()[k].weight);
  }
  std::ostringstream again;
  write_space(again, t);
  CHECK(again.str() == out.str());
}

TEST_CASE("space file with string ids, coordinates and annotations") {
  const std::string text = R"({"vertices": [
  {"id": "a", "measure": 1.5, "coords": [0, 0], "annotation": "left"},
  {"id": "b", "measure": 0.5, "coords": [3, 4]}
],
"edges": [
  {"a": "a", "b": "b", "weight": 2}
]})";
  const WeightedSpace s = read_space_string(text);
  CHECK(s.size() == 2);
  CHECK(s.index_of("b") == std::optional<std::size_t>(1));
  CHECK(s.conductance(0, 1) == 2.0);
  CHECK(s.distance(0, 1) == doctest::Approx(5.0));
  CHECK(s.annotations().at(0) == "left");
}

TEST_CASE("malformed space files name the offending line") {
  const std::string unknown_vertex = R"({"vertices": [
  {"id": 0, "measure": 1},
  {"id": 1, "measure": 1}
],
"edges": [
  {"a": 0, "b": 1, "weight": 1},
  {"a": 0, "b": 7, "weight": 1}
]})";
  try {
    read_space_string(unknown_vertex);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.line() == 7);
  }

  const std::string bad_measure = R"({"vertices": [
  {"id": 0, "measure": 1},
  {"id": 1, "measure": -2}
],
"edges": []})";
  try {
    read_space_string(bad_measure);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.line() == 3);
  }

  CHECK_THROWS_AS(read_space_string("{\"vertices\": [}"), FormatError);
  CHECK_THROWS_AS(read_space_string("{\"edges\": []}"), FormatError);
  CHECK_THROWS_AS(read_space_file("/nonexistent/space.json"), FormatError);
}

TEST_CASE("field files as arrays or objects") {
  const WeightedSpace s = build(path_spec(3));
  std::istringstream arr("[1, 2.5, -3]");
  CHECK(sup_gap(read_field(arr, s), vec({1, 2.5, -3})) == 0.0);
  std::istringstream obj(R"({"2": 9, "0": 1, "1": 4})");
  CHECK(sup_gap(read_field(obj, s), vec({1, 4, 9})) == 0.0);
  std::istringstream short_arr("[1, 2]");
  CHECK_THROWS_AS(read_field(short_arr, s), FormatError);
  std::istringstream missing(R"({"0": 1, "1": 4})");
  CHECK_THROWS_AS(read_field(missing, s), FormatError);
  std::istringstream text("\"hello\"");
  CHECK_THROWS_AS(read_field(text, s), FormatError);
}
