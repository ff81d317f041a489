#include "defectlab/semigroup.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "defectlab/errors.hpp"

namespace defectlab {

SpectralCache::SpectralCache(const WeightedSpace& space, std::size_t max_vertices) {
  const Region all = whole_space(space);
  measure_ = space.measure();
  conservative_ = true;
  generator_ = space.generator_matrix();
  decompose(all.symmetrized_generator_dense(), max_vertices);
}

SpectralCache::SpectralCache(const Region& region, std::size_t max_vertices) {
  measure_ = region.restrict(region.space().measure());
  conservative_ = region.boundary().empty();
  generator_ = region.restricted_generator();
  decompose(region.symmetrized_generator_dense(), max_vertices);
}

void SpectralCache::decompose(const Eigen::MatrixXd& symmetric, std::size_t max_vertices) {
  if (static_cast<std::size_t>(symmetric.rows()) > max_vertices) {
    throw ResourceError("dense spectral cache limited to " + std::to_string(max_vertices) +
                        " vertices; use KrylovPropagator");
  }
  sqrt_m_ = measure_.cwiseSqrt();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetric);
  if (eig.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  evals_ = eig.eigenvalues();
  q_ = eig.eigenvectors();
  const double scale = std::max(1.0, evals_.cwiseAbs().maxCoeff());
  if (evals_[0] < -1e-12 * scale) {
    throw NumericalError("generator has a negative eigenvalue " + std::to_string(evals_[0]));
  }
}

void SpectralCache::require(const Field& f) const {
  if (f.size() != evals_.size()) throw DomainError("field size does not match spectral cache");
}

Eigen::MatrixXd SpectralCache::eigenvectors() const {
  return sqrt_m_.cwiseInverse().asDiagonal() * q_;
}

double SpectralCache::reconstruction_residual() const {
  const Eigen::MatrixXd v = eigenvectors();
  const Eigen::MatrixXd rebuilt = v * evals_.asDiagonal() * v.transpose() * measure_.asDiagonal();
  const double norm = std::max(generator_.cwiseAbs().maxCoeff(), 1e-300);
  return (generator_ - rebuilt).cwiseAbs().maxCoeff() / norm;
}

Field SpectralCache::apply(const Field& f, const std::function<double(double)>& phi) const {
  require(f);
  Eigen::VectorXd c = q_.transpose() * sqrt_m_.cwiseProduct(f);
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= phi(evals_[i]);
  return (q_ * c).cwiseQuotient(sqrt_m_);
}

Field SpectralCache::evolve(const Field& f, double t) const {
  if (!(t >= 0.0)) throw DomainError("evolve: time must be nonnegative");
  if (t == 0.0) {
    require(f);
    return f;
  }
  return apply(f, [t](double mu) { return std::exp(-t * std::max(mu, 0.0)); });
}

Field SpectralCache::defect_increment(const Field& f, double t, double lambda) const {
  if (!(t >= 0.0)) throw DomainError("defect_increment: time must be nonnegative");
  // e^{-tA} f - f = -t phi1(tA) A f with A = H + lambda, phi1(z) = (1 - e^{-z})/z.
  // Rounding then scales with the residual A f rather than with f.
  require(f);
  const Field residual = generator_ * f + lambda * f;
  return apply(residual, [t, lambda](double mu) {
    const double a = std::max(mu, 0.0) + lambda;
    const double z = t * a;
    return z < 1e-300 ? -t : std::expm1(-z) / a;
  });
}

Field SpectralCache::resolvent(const Field& f, double lambda) const {
  if (!(lambda >= 0.0)) throw DomainError("resolvent: lambda must be nonnegative");
  const double scale = std::max(1.0, evals_.cwiseAbs().maxCoeff());
  if (evals_[0] + lambda <= 1e-12 * scale) {
    throw NumericalError("resolvent: H + lambda is singular on this target");
  }
  return apply(f, [lambda](double mu) { return 1.0 / (std::max(mu, 0.0) + lambda); });
}

Eigen::MatrixXd SpectralCache::heat_kernel(double t) const {
  if (!(t > 0.0)) throw DomainError("heat_kernel: time must be positive");
  const Eigen::VectorXd decay = (-t * evals_.cwiseMax(0.0)).array().exp();
  const Eigen::MatrixXd scaled = sqrt_m_.cwiseInverse().asDiagonal() * q_;
  Eigen::MatrixXd p = scaled * decay.asDiagonal() * scaled.transpose();
  // Symmetric by construction; remove the rounding asymmetry of the product.
  return 0.5 * (p + p.transpose());
}

Field evolve(const SpectralCache& cache, const Field& f, double t) { return cache.evolve(f, t); }

Field evolve_restricted(const Region& region, const Field& local, double t) {
  return SpectralCache(region).evolve(local, t);
}

Field evolve_restricted(const SpectralCache& region_cache, const Field& local, double t) {
  return region_cache.evolve(local, t);
}

Field resolvent(const SpectralCache& cache, const Field& f, double lambda) { return cache.resolvent(f, lambda); }

Eigen::MatrixXd heat_kernel(const SpectralCache& cache, double t) { return cache.heat_kernel(t); }

std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
  if (count < 2 || !(lo > 0.0) || !(hi > lo)) throw DomainError("geometric_grid needs 0 < lo < hi and count >= 2");
  std::vector<double> g(count);
  const double ratio = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) g[i] = lo * std::exp(ratio * static_cast<double>(i));
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::vector<double> default_t_grid() {
  return geometric_grid(std::ldexp(1.0, -20), std::ldexp(1.0, 10), 41);
}

// ---------------------------------------------------------------- Krylov

KrylovPropagator::KrylovPropagator(const Region& region)
    : s_(region.symmetrized_generator()), sqrt_m_(region.restrict(region.space().measure()).cwiseSqrt()) {}

KrylovPropagator::KrylovPropagator(const WeightedSpace& space) : KrylovPropagator(whole_space(space)) {}

Field KrylovPropagator::evolve(const Field& f, double t, double tol, std::size_t max_dim) const {
  if (!(t >= 0.0)) throw DomainError("evolve: time must be nonnegative");
  if (f.size() != s_.rows()) throw DomainError("field size does not match propagator");
  if (t == 0.0) return f;
  const Eigen::VectorXd v0 = sqrt_m_.cwiseProduct(f);
  const double beta0 = v0.norm();
  if (beta0 == 0.0) return Field::Zero(f.size());

  const auto n = static_cast<std::size_t>(s_.rows());
  max_dim = std::min(max_dim, n);
  Eigen::MatrixXd basis(s_.rows(), static_cast<Eigen::Index>(max_dim));
  std::vector<double> alpha, beta;
  basis.col(0) = v0 / beta0;

  Eigen::VectorXd small;
  std::size_t k = 0;
  for (; k < max_dim; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    Eigen::VectorXd w = s_ * basis.col(kk);
    alpha.push_back(basis.col(kk).dot(w));
    // Full reorthogonalization, twice.
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd proj = basis.leftCols(kk + 1).transpose() * w;
      w -= basis.leftCols(kk + 1) * proj;
    }
    const double b = w.norm();

    const auto dim = static_cast<Eigen::Index>(k + 1);
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      tri(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < dim) tri(i, i + 1) = tri(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(tri);
    const Eigen::VectorXd decay = (-t * eig.eigenvalues().array()).exp();
    small = eig.eigenvectors() * decay.cwiseProduct(eig.eigenvectors().row(0).transpose());
    // Standard a-posteriori estimate: beta_k * |last entry of exp(-tT) e_1|.
    const double err = b * std::abs(small[dim - 1]);
    if (err <= tol || b <= 1e-14 * std::abs(alpha.back()) || k + 1 == max_dim) {
      ++k;
      break;
    }
    beta.push_back(b);
    basis.col(kk + 1) = w / b;
  }
  last_dim_ = k;
  const Eigen::VectorXd y = beta0 * (basis.leftCols(static_cast<Eigen::Index>(k)) * small);
  return y.cwiseQuotient(sqrt_m_);
}

}  // namespace defectlab
