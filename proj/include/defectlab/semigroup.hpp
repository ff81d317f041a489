#pragma once

#include <cstddef>
#include <functional>
#include <optional>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "defectlab/space.hpp"

namespace defectlab {

inline constexpr std::size_t kDenseLimit = 2000;

// Eigendecomposition of H (or of H^U for a region) through the symmetric
// similarity transform S = D^{1/2} H D^{-1/2}, D = diag(m). Functional
// calculus phi(H) f = D^{-1/2} Q phi(Lambda) Q^T D^{1/2} f.
class SpectralCache {
 public:
  explicit SpectralCache(const WeightedSpace& space, std::size_t max_vertices = kDenseLimit);
  explicit SpectralCache(const Region& region, std::size_t max_vertices = kDenseLimit);

  std::size_t size() const { return static_cast<std::size_t>(evals_.size()); }
  // Ascending.
  const Eigen::VectorXd& eigenvalues() const { return evals_; }
  // Columns are m-orthonormal eigenvectors of the generator.
  Eigen::MatrixXd eigenvectors() const;
  // True when no mass can leave (whole space, or a region without boundary).
  bool conservative() const { return conservative_; }
  const Eigen::VectorXd& measure() const { return measure_; }
  // |H - sum_i lambda_i v_i v_i^T M| / |H| in the max norm.
  double reconstruction_residual() const;

  // phi(H) f for a spectral multiplier.
  Field apply(const Field& f, const std::function<double(double)>& phi) const;

  // P_t f.
  Field evolve(const Field& f, double t) const;
  // e^{-lambda t} P_t f - f, evaluated from the residual (H + lambda) f so
  // that it keeps full accuracy as t -> 0 and for large f.
  Field defect_increment(const Field& f, double t, double lambda) const;
  // (H + lambda)^{-1} f.
  Field resolvent(const Field& f, double lambda) const;
  // p(t,x,y) = (e^{-tH})(x,y)/m(y).
  Eigen::MatrixXd heat_kernel(double t) const;

 private:
  void decompose(const Eigen::MatrixXd& symmetric, std::size_t max_vertices);
  void require(const Field& f) const;

  Eigen::VectorXd measure_;
  Eigen::VectorXd sqrt_m_;
  Eigen::VectorXd evals_;
  Eigen::MatrixXd q_;
  Eigen::MatrixXd generator_;
  bool conservative_ = false;
};

Field evolve(const SpectralCache& cache, const Field& f, double t);
// P^U_t on a local field of the region.
Field evolve_restricted(const Region& region, const Field& local, double t);
Field evolve_restricted(const SpectralCache& region_cache, const Field& local, double t);
Field resolvent(const SpectralCache& cache, const Field& f, double lambda);
Eigen::MatrixXd heat_kernel(const SpectralCache& cache, double t);

// Geometric grid of `count` points from lo to hi inclusive.
std::vector<double> geometric_grid(double lo, double hi, std::size_t count);
// 41 points from 2^-20 to 2^10.
std::vector<double> default_t_grid();

// Krylov (Lanczos) action of e^{-tH} for spaces too large for the dense
// cache. Works on the symmetrized sparse operator with full
// reorthogonalization.
class KrylovPropagator {
 public:
  explicit KrylovPropagator(const Region& region);
  explicit KrylovPropagator(const WeightedSpace& space);

  std::size_t size() const { return static_cast<std::size_t>(s_.rows()); }
  // Stops when the a-posteriori error estimate drops below tol * |f|_2 or
  // the basis reaches max_dim.
  Field evolve(const Field& f, double t, double tol = 1e-13, std::size_t max_dim = 120) const;
  // Basis dimension used by the last evolve call.
  std::size_t last_dimension() const { return last_dim_; }

 private:
  Eigen::SparseMatrix<double> s_;
  Eigen::VectorXd sqrt_m_;
  mutable std::size_t last_dim_ = 0;
};

}  // namespace defectlab
