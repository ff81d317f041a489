#pragma once

#include <initializer_list>

#include <doctest.h>

#include "defectlab/builders.hpp"
#include "defectlab/space.hpp"

namespace testing {

// Unit-data path 0-1-...-(n-1).
inline defectlab::WeightedSpace unit_path(std::size_t n) { return defectlab::build(defectlab::path_spec(n)); }

inline defectlab::Field vec(std::initializer_list<double> values) {
  defectlab::Field f(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) f(i++) = v;
  return f;
}

inline double sup_gap(const defectlab::Field& a, const defectlab::Field& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testing
