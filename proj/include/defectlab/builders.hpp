#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "defectlab/space.hpp"

namespace defectlab {

enum class BuilderKind { Path, Grid, Interval, ErdosRenyi };

std::string to_string(BuilderKind kind);
BuilderKind builder_kind_from_string(const std::string& name);

// Parameters for the example families.
//
//   path      n vertices at spacing h, w = 1/h, m = h (unit data for h = 1)
//   grid      rows x cols lattice at spacing h, w = 1, m = h^2
//   interval  [0, length] cut into n cells, w(i,i+1) = a(midpoint)/h, m = h
//   erdos-renyi  n vertices, edge probability p, weights and measures
//             uniform in [0.5, 1.5], redrawn until connected
struct BuilderSpec {
  BuilderKind kind = BuilderKind::Path;
  std::size_t n = 3;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double spacing = 1.0;
  double length = 1.0;
  std::function<double(double)> coefficient;  // unset means a = 1
  double edge_probability = 0.1;
  std::uint64_t seed = 0;
};

BuilderSpec path_spec(std::size_t n, double spacing = 1.0);
BuilderSpec grid_spec(std::size_t rows, std::size_t cols, double spacing = 1.0);
BuilderSpec interval_spec(std::size_t cells, double length = 1.0, std::function<double(double)> a = {});
BuilderSpec erdos_renyi_spec(std::size_t n, double p, std::uint64_t seed);

WeightedSpace build(const BuilderSpec& spec);

struct Refinement {
  BuilderSpec spec;
  WeightedSpace space;
  std::vector<std::size_t> coarse_to_fine;  // coarse vertex -> fine vertex
};

// Divides the mesh width by `factor`: path n -> factor (n - 1) + 1, grid
// likewise per axis, interval n cells -> factor n cells.
Refinement refine(const BuilderSpec& spec, std::size_t factor = 2);

// Samples of a function at the vertex coordinates (first coordinate).
Field sample(const WeightedSpace& space, const std::function<double(double)>& fn);

}  // namespace defectlab
