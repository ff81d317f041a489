#include "defectlab/builders.hpp"

#include "defectlab/errors.hpp"
#include "defectlab/random.hpp"

namespace defectlab {

std::string to_string(BuilderKind kind) {
  switch (kind) {
    case BuilderKind::Path: return "path";
    case BuilderKind::Grid: return "grid";
    case BuilderKind::Interval: return "interval";
    case BuilderKind::ErdosRenyi: return "erdos-renyi";
  }
  return "unknown";
}

BuilderKind builder_kind_from_string(const std::string& name) {
  if (name == "path") return BuilderKind::Path;
  if (name == "grid") return BuilderKind::Grid;
  if (name == "interval" || name == "interval-with-coefficient") return BuilderKind::Interval;
  if (name == "erdos-renyi" || name == "erdos-renyi-connected" || name == "er") return BuilderKind::ErdosRenyi;
  throw DomainError("unknown builder kind '" + name + "'");
}

BuilderSpec path_spec(std::size_t n, double spacing) {
  BuilderSpec s;
  s.kind = BuilderKind::Path;
  s.n = n;
  s.spacing = spacing;
  return s;
}

BuilderSpec grid_spec(std::size_t rows, std::size_t cols, double spacing) {
  BuilderSpec s;
  s.kind = BuilderKind::Grid;
  s.rows = rows;
  s.cols = cols;
  s.spacing = spacing;
  return s;
}

BuilderSpec interval_spec(std::size_t cells, double length, std::function<double(double)> a) {
  BuilderSpec s;
  s.kind = BuilderKind::Interval;
  s.n = cells;
  s.length = length;
  s.coefficient = std::move(a);
  return s;
}

BuilderSpec erdos_renyi_spec(std::size_t n, double p, std::uint64_t seed) {
  BuilderSpec s;
  s.kind = BuilderKind::ErdosRenyi;
  s.n = n;
  s.edge_probability = p;
  s.seed = seed;
  return s;
}

namespace {

std::string label(std::size_t i) { return std::to_string(i); }

WeightedSpace build_path(const BuilderSpec& spec) {
  if (spec.n < 2) throw DomainError("path needs at least 2 vertices");
  if (!(spec.spacing > 0.0)) throw DomainError("path spacing must be positive");
  SpaceData d;
  for (std::size_t i = 0; i < spec.n; ++i) {
    d.labels.push_back(label(i));
    d.measure.push_back(spec.spacing);
    d.coords.push_back({static_cast<double>(i) * spec.spacing});
  }
  for (std::size_t i = 0; i + 1 < spec.n; ++i) d.edges.push_back({i, i + 1, 1.0 / spec.spacing});
  return WeightedSpace(std::move(d));
}

WeightedSpace build_grid(const BuilderSpec& spec) {
  if (spec.rows < 2 || spec.cols < 2) throw DomainError("grid needs at least 2 rows and 2 columns");
  if (!(spec.spacing > 0.0)) throw DomainError("grid spacing must be positive");
  SpaceData d;
  const auto id = [&](std::size_t r, std::size_t c) { return r * spec.cols + c; };
  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (std::size_t c = 0; c < spec.cols; ++c) {
      d.labels.push_back(std::to_string(r) + "," + std::to_string(c));
      d.measure.push_back(spec.spacing * spec.spacing);
      d.coords.push_back({static_cast<double>(c) * spec.spacing, static_cast<double>(r) * spec.spacing});
      if (c + 1 < spec.cols) d.edges.push_back({id(r, c), id(r, c + 1), 1.0});
      if (r + 1 < spec.rows) d.edges.push_back({id(r, c), id(r + 1, c), 1.0});
    }
  }
  return WeightedSpace(std::move(d));
}

WeightedSpace build_interval(const BuilderSpec& spec) {
  if (spec.n < 1) throw DomainError("interval needs at least one cell");
  if (!(spec.length > 0.0)) throw DomainError("interval length must be positive");
  const double h = spec.length / static_cast<double>(spec.n);
  SpaceData d;
  for (std::size_t i = 0; i <= spec.n; ++i) {
    d.labels.push_back(label(i));
    d.measure.push_back(h);
    d.coords.push_back({static_cast<double>(i) * h});
  }
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double mid = (static_cast<double>(i) + 0.5) * h;
    const double a = spec.coefficient ? spec.coefficient(mid) : 1.0;
    if (!(a > 0.0)) throw DomainError("interval coefficient must be positive");
    d.edges.push_back({i, i + 1, a / h});
  }
  return WeightedSpace(std::move(d));
}

WeightedSpace build_erdos_renyi(const BuilderSpec& spec) {
  if (spec.n < 2) throw DomainError("random graph needs at least 2 vertices");
  if (!(spec.edge_probability > 0.0 && spec.edge_probability <= 1.0)) {
    throw DomainError("edge probability must lie in (0, 1]");
  }
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    Rng rng(derive_seed(spec.seed, attempt));
    SpaceData d;
    for (std::size_t i = 0; i < spec.n; ++i) {
      d.labels.push_back(label(i));
      d.measure.push_back(rng.uniform(0.5, 1.5));
    }
    for (std::size_t i = 0; i < spec.n; ++i) {
      for (std::size_t j = i + 1; j < spec.n; ++j) {
        if (rng.uniform() < spec.edge_probability) d.edges.push_back({i, j, rng.uniform(0.5, 1.5)});
      }
    }
    WeightedSpace space(std::move(d));
    if (connected_components(space).size() == 1) return space;
  }
  throw NumericalError("no connected random graph after 100 draws; raise the edge probability");
}

}  // namespace

WeightedSpace build(const BuilderSpec& spec) {
  switch (spec.kind) {
    case BuilderKind::Path: return build_path(spec);
    case BuilderKind::Grid: return build_grid(spec);
    case BuilderKind::Interval: return build_interval(spec);
    case BuilderKind::ErdosRenyi: return build_erdos_renyi(spec);
  }
  throw DomainError("unknown builder kind");
}

Refinement refine(const BuilderSpec& spec, std::size_t factor) {
  if (factor < 1) throw DomainError("refinement factor must be positive");
  BuilderSpec fine = spec;
  std::vector<std::size_t> map;
  switch (spec.kind) {
    case BuilderKind::Path:
      fine.n = factor * (spec.n - 1) + 1;
      fine.spacing = spec.spacing / static_cast<double>(factor);
      for (std::size_t i = 0; i < spec.n; ++i) map.push_back(factor * i);
      break;
    case BuilderKind::Grid:
      fine.rows = factor * (spec.rows - 1) + 1;
      fine.cols = factor * (spec.cols - 1) + 1;
      fine.spacing = spec.spacing / static_cast<double>(factor);
      for (std::size_t r = 0; r < spec.rows; ++r) {
        for (std::size_t c = 0; c < spec.cols; ++c) map.push_back(factor * r * fine.cols + factor * c);
      }
      break;
    case BuilderKind::Interval:
      fine.n = factor * spec.n;
      for (std::size_t i = 0; i <= spec.n; ++i) map.push_back(factor * i);
      break;
    case BuilderKind::ErdosRenyi:
      throw DomainError("random graphs cannot be refined");
  }
  return {fine, build(fine), std::move(map)};
}

Field sample(const WeightedSpace& space, const std::function<double(double)>& fn) {
  if (!space.has_coords()) throw DomainError("sampling needs vertex coordinates");
  Field f(static_cast<Eigen::Index>(space.size()));
  for (std::size_t x = 0; x < space.size(); ++x) f[static_cast<Eigen::Index>(x)] = fn(space.coords(x)[0]);
  return f;
}

}  // namespace defectlab
