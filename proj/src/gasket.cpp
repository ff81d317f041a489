#include "defectlab/gasket.hpp"

#include <cmath>
#include <string>

#include "defectlab/errors.hpp"

namespace defectlab {

namespace {

// Skew integer coordinates: corner k of the unit triangle scaled by 2^n.
using Point = std::pair<long long, long long>;

struct Builder {
  int n = 0;
  std::map<Point, std::size_t> index;
  SpaceData data;
  std::vector<std::array<std::size_t, 3>> cells;

  std::size_t vertex(const Point& p, const std::string& address) {
    auto [it, inserted] = index.emplace(p, index.size());
    if (inserted) {
      const double scale = std::ldexp(1.0, -n);
      const double a = static_cast<double>(p.first) * scale;
      const double b = static_cast<double>(p.second) * scale;
      data.labels.push_back(std::to_string(it->second));
      data.coords.push_back({a + 0.5 * b, 0.5 * std::sqrt(3.0) * b});
      data.annotations[it->second] = address;
    }
    return it->second;
  }

  void cell(const std::array<Point, 3>& p, int depth, const std::string& path) {
    if (depth == n) {
      std::array<std::size_t, 3> ids{};
      for (int k = 0; k < 3; ++k) ids[k] = vertex(p[k], (path.empty() ? "" : path) + "." + std::to_string(k));
      cells.push_back(ids);
      return;
    }
    const auto mid = [](const Point& a, const Point& b) {
      return Point{(a.first + b.first) / 2, (a.second + b.second) / 2};
    };
    const Point m01 = mid(p[0], p[1]), m12 = mid(p[1], p[2]), m02 = mid(p[0], p[2]);
    cell({p[0], m01, m02}, depth + 1, path + "0");
    cell({m01, p[1], m12}, depth + 1, path + "1");
    cell({m02, m12, p[2]}, depth + 1, path + "2");
  }
};

}  // namespace

GasketLevel build_gasket(int n, GasketMeasure measure) {
  if (n < 0) throw DomainError("gasket level must be nonnegative");
  if (n > kMaxGasketLevel) throw ResourceError("gasket level capped at " + std::to_string(kMaxGasketLevel));
  Builder b;
  b.n = n;
  const long long side = 1LL << n;
  const std::array<Point, 3> corners{Point{0, 0}, Point{side, 0}, Point{0, side}};
  for (int k = 0; k < 3; ++k) b.vertex(corners[k], "." + std::to_string(k));
  b.cell(corners, 0, "");

  const std::size_t nv = b.index.size();
  const double conductance = std::pow(5.0 / 3.0, n);
  const double cell_mass = std::pow(3.0, -n);
  b.data.measure.assign(nv, 0.0);
  for (const auto& c : b.cells) {
    for (int k = 0; k < 3; ++k) b.data.measure[c[k]] += cell_mass / 3.0;
    b.data.edges.push_back({c[0], c[1], conductance});
    b.data.edges.push_back({c[1], c[2], conductance});
    b.data.edges.push_back({c[0], c[2], conductance});
  }
  if (measure == GasketMeasure::UniformVertex) b.data.measure.assign(nv, 1.0 / static_cast<double>(nv));

  return GasketLevel{n, WeightedSpace(std::move(b.data)), {0, 1, 2}, std::move(b.cells)};
}

Field gasket_measure(int n, GasketMeasure measure) { return build_gasket(n, measure).space.measure(); }

Field gasket_harmonic_extend(const GasketLevel& gasket, const std::array<double, 3>& corners) {
  const auto& space = gasket.space;
  Field f = Field::Zero(static_cast<Eigen::Index>(space.size()));
  // Recurse through the same cell tree as the builder, resolving points
  // to vertex ids by coordinates.
  std::map<Point, std::size_t> index;
  const double scale = std::ldexp(1.0, gasket.level);
  for (std::size_t x = 0; x < space.size(); ++x) {
    const auto c = space.coords(x);
    const double b = c[1] / (0.5 * std::sqrt(3.0));
    const double a = c[0] - 0.5 * b;
    index[{std::llround(a * scale), std::llround(b * scale)}] = x;
  }
  const long long side = 1LL << gasket.level;
  struct Frame {
    std::array<Point, 3> p;
    std::array<double, 3> v;
    int depth;
  };
  std::vector<Frame> stack{{{Point{0, 0}, Point{side, 0}, Point{0, side}}, corners, 0}};
  while (!stack.empty()) {
    const Frame fr = stack.back();
    stack.pop_back();
    for (int k = 0; k < 3; ++k) f[static_cast<Eigen::Index>(index.at(fr.p[k]))] = fr.v[k];
    if (fr.depth == gasket.level) continue;
    const auto mid = [](const Point& a, const Point& b) {
      return Point{(a.first + b.first) / 2, (a.second + b.second) / 2};
    };
    const auto& v = fr.v;
    const double v01 = (2.0 * v[0] + 2.0 * v[1] + v[2]) / 5.0;
    const double v12 = (v[0] + 2.0 * v[1] + 2.0 * v[2]) / 5.0;
    const double v02 = (2.0 * v[0] + v[1] + 2.0 * v[2]) / 5.0;
    const Point m01 = mid(fr.p[0], fr.p[1]), m12 = mid(fr.p[1], fr.p[2]), m02 = mid(fr.p[0], fr.p[2]);
    stack.push_back({{fr.p[0], m01, m02}, {v[0], v01, v02}, fr.depth + 1});
    stack.push_back({{m01, fr.p[1], m12}, {v01, v[1], v12}, fr.depth + 1});
    stack.push_back({{m02, m12, fr.p[2]}, {v02, v12, v[2]}, fr.depth + 1});
  }
  return f;
}

double gasket_energy(const GasketLevel& gasket, const Field& f) { return energy(gasket.space, f); }

}  // namespace defectlab
