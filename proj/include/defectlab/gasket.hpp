#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "defectlab/space.hpp"

namespace defectlab {

inline constexpr int kMaxGasketLevel = 10;

enum class GasketMeasure { Cell, UniformVertex };

// Level-n graph approximation of the Sierpinski gasket. Vertices are
// indexed in construction order with the three outer corners first; each
// vertex is annotated with the address (cell path, then corner) of the
// first level-n cell that contains it.
struct GasketLevel {
  int level = 0;
  WeightedSpace space;
  std::array<std::size_t, 3> boundary{0, 1, 2};
  // Level-n cells as corner triples.
  std::vector<std::array<std::size_t, 3>> cells;
};

// Conductance (5/3)^n on every level-n edge. Cell measure: each level-n
// cell carries 3^{-n}, split equally over its corners. UniformVertex gives
// every vertex mass 1/|V| instead.
GasketLevel build_gasket(int n, GasketMeasure measure = GasketMeasure::Cell);

// m(x) for the level-n gasket under the chosen convention.
Field gasket_measure(int n, GasketMeasure measure = GasketMeasure::Cell);

// Harmonic extension of corner data through the 1/5-2/5 rule, level by
// level: in each cell the midpoint opposite corner a receives
// (a + 2b + 2c)/5.
Field gasket_harmonic_extend(const GasketLevel& gasket, const std::array<double, 3>& corners);

// E_n(f) = (5/3)^n sum over level-n edges of (f(x) - f(y))^2.
double gasket_energy(const GasketLevel& gasket, const Field& f);

}  // namespace defectlab
