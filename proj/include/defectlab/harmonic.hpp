#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/SparseCholesky>

#include "defectlab/space.hpp"

namespace defectlab {

// Sparse LDL^T factorization of the symmetrized D^{1/2}(H^V + lambda)D^{-1/2}.
// The factorized matrix is a symmetric M-matrix, so solves with nonnegative
// right-hand sides stay nonnegative.
class DirichletSolver {
 public:
  DirichletSolver(const Region& region, double lambda);

  const Region& region() const { return region_; }
  double lambda() const { return lambda_; }
  // Solves (H^V + lambda) u = rhs for fields local to the region.
  Field solve(const Field& rhs) const;

 private:
  Region region_;
  double lambda_;
  Eigen::VectorXd sqrt_m_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

// Solves (H + lambda) u = 0 on the members of V with u = boundary_values on
// the vertex boundary. Returns `boundary_values` with the members replaced.
Field harmonic_extension(const Region& region, const Field& boundary_values, double lambda);

// Weakly lambda-harmonic g >= c on U, built from a positive resolvent image
// supported away from U (or the constant c when lambda = 0).
struct ShiftCertificate {
  Region region;
  Field shift;            // g on the members of U
  double lambda = 0.0;
  double lower_bound = 0.0;
  double scale = 0.0;     // a in g = a * h
  double residual = 0.0;  // max |(H g + lambda g)(x)| over U's interior
  std::vector<std::size_t> source_support;
};

// `outer` must contain U and have members outside U's closure; the source
// is the indicator of outer \ closure(U), normalized in L^1(m).
ShiftCertificate build_shift(const Region& region, const Region& outer, double lambda, double lower_bound);

// Default outer region: two layers of vertex boundary around U.
Region default_outer(const Region& region);

struct DefectiveSampleOptions {
  // Probability that a member carries a positive source value.
  double support_fraction = 1.0;
  // Members forced to carry zero source.
  std::vector<std::size_t> zero_source;
};

struct DefectiveSample {
  Field h;       // local to the region, h = -(H^U + lambda)^{-1} psi <= 0
  Field source;  // psi >= 0
};

DefectiveSample sample_defective_with_source(const Region& region, double lambda, std::uint64_t seed,
                                             const DefectiveSampleOptions& options = {});
Field sample_defective(const Region& region, double lambda, std::uint64_t seed);
// Same, reusing a factorization of (H^U + lambda).
DefectiveSample sample_defective_with_source(const DirichletSolver& solver, std::uint64_t seed,
                                             const DefectiveSampleOptions& options = {});

// Harmonic extension of boundary data drawn uniformly from [lo, hi]; the
// returned ambient field carries the data on the boundary and zero
// elsewhere outside the closure.
Field random_harmonic(const Region& region, double lambda, std::uint64_t seed, double lo, double hi);

}  // namespace defectlab
