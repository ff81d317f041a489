#include "defectlab/harmonic.hpp"

#include <algorithm>
#include <cmath>

#include "defectlab/errors.hpp"
#include "defectlab/random.hpp"

namespace defectlab {

DirichletSolver::DirichletSolver(const Region& region, double lambda) : region_(region), lambda_(lambda) {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be nonnegative");
  if (lambda == 0.0 && region.boundary().empty()) {
    throw NumericalError("singular Dirichlet problem: lambda = 0 and the region has no boundary");
  }
  sqrt_m_ = region.restrict(region.space().measure()).cwiseSqrt();
  ldlt_.compute(region.symmetrized_generator(lambda));
  if (ldlt_.info() != Eigen::Success) throw NumericalError("LDL^T factorization failed");
  const Eigen::VectorXd d = ldlt_.vectorD();
  if (d.minCoeff() <= 1e-14 * std::max(1.0, d.cwiseAbs().maxCoeff())) {
    throw NumericalError("singular Dirichlet problem: vanishing pivot");
  }
}

Field DirichletSolver::solve(const Field& rhs) const {
  if (static_cast<std::size_t>(rhs.size()) != region_.size()) throw DomainError("rhs size does not match region");
  const Eigen::VectorXd z = ldlt_.solve(sqrt_m_.cwiseProduct(rhs));
  if (ldlt_.info() != Eigen::Success) throw NumericalError("Dirichlet solve failed");
  return z.cwiseQuotient(sqrt_m_);
}

namespace {

// (1/m(x)) sum_{y outside V} w(x,y) b(y) for each member x.
Field boundary_load(const Region& region, const Field& boundary_values) {
  const auto& space = region.space();
  Field rhs = Field::Zero(static_cast<Eigen::Index>(region.size()));
  for (std::size_t i = 0; i < region.size(); ++i) {
    const std::size_t x = region.members()[i];
    double s = 0.0;
    for (const auto& nb : space.neighbors(x)) {
      if (!region.contains(nb.vertex)) s += nb.weight * boundary_values[static_cast<Eigen::Index>(nb.vertex)];
    }
    rhs[static_cast<Eigen::Index>(i)] = s / space.measure(x);
  }
  return rhs;
}

}  // namespace

Field harmonic_extension(const Region& region, const Field& boundary_values, double lambda) {
  if (static_cast<std::size_t>(boundary_values.size()) != region.space().size()) {
    throw DomainError("boundary values must be an ambient field");
  }
  const DirichletSolver solver(region, lambda);
  return region.extend(solver.solve(boundary_load(region, boundary_values)), boundary_values);
}

Region default_outer(const Region& region) { return region.dilate(2); }

ShiftCertificate build_shift(const Region& region, const Region& outer, double lambda, double lower_bound) {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be nonnegative");
  if (&region.space() != &outer.space()) throw DomainError("regions live on different spaces");
  for (std::size_t x : region.members()) {
    if (!outer.contains(x)) throw GeometryError("outer region must contain U");
  }
  const Region closure = region.closure();
  std::vector<std::size_t> support;
  for (std::size_t x : outer.members()) {
    if (!closure.contains(x)) support.push_back(x);
  }
  if (support.empty()) throw GeometryError("no room for the source: outer region lies inside the closure of U");

  ShiftCertificate cert{region, Field(), lambda, lower_bound, 0.0, 0.0, support};
  if (lambda == 0.0) {
    cert.shift = Field::Constant(static_cast<Eigen::Index>(region.size()), lower_bound);
    cert.scale = lower_bound;
    cert.residual = 0.0;
    return cert;
  }

  const auto& space = region.space();
  double mass = 0.0;
  for (std::size_t x : support) mass += space.measure(x);
  Field psi = Field::Zero(static_cast<Eigen::Index>(outer.size()));
  for (std::size_t x : support) psi[static_cast<Eigen::Index>(*outer.local_index(x))] = 1.0 / mass;

  const DirichletSolver solver(outer, lambda);
  const Field h_outer = solver.solve(psi);
  Field h(static_cast<Eigen::Index>(region.size()));
  for (std::size_t i = 0; i < region.size(); ++i) {
    h[static_cast<Eigen::Index>(i)] = h_outer[static_cast<Eigen::Index>(*outer.local_index(region.members()[i]))];
  }
  const double hmin = h.minCoeff();
  if (!(hmin > 0.0)) throw NumericalError("resolvent image vanishes on U; outer region must be connected");
  cert.scale = std::max(lower_bound, 0.0) / hmin;
  cert.shift = cert.scale * h;

  const Field hg = region.apply_restricted(cert.shift) + lambda * cert.shift;
  double res = 0.0;
  for (std::size_t x : region.interior()) {
    res = std::max(res, std::abs(hg[static_cast<Eigen::Index>(*region.local_index(x))]));
  }
  cert.residual = res;
  return cert;
}

DefectiveSample sample_defective_with_source(const DirichletSolver& solver, std::uint64_t seed,
                                             const DefectiveSampleOptions& options) {
  const Region& region = solver.region();
  Rng rng(seed);
  Field psi(static_cast<Eigen::Index>(region.size()));
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    const double keep = rng.uniform();
    const double value = rng.uniform();
    psi[i] = keep < options.support_fraction ? value : 0.0;
  }
  for (std::size_t x : options.zero_source) {
    if (auto li = region.local_index(x)) psi[static_cast<Eigen::Index>(*li)] = 0.0;
  }
  return {-solver.solve(psi), psi};
}

DefectiveSample sample_defective_with_source(const Region& region, double lambda, std::uint64_t seed,
                                             const DefectiveSampleOptions& options) {
  return sample_defective_with_source(DirichletSolver(region, lambda), seed, options);
}

Field sample_defective(const Region& region, double lambda, std::uint64_t seed) {
  return sample_defective_with_source(region, lambda, seed).h;
}

Field random_harmonic(const Region& region, double lambda, std::uint64_t seed, double lo, double hi) {
  Rng rng(seed);
  Field data = Field::Zero(static_cast<Eigen::Index>(region.space().size()));
  for (std::size_t y : region.boundary()) data[static_cast<Eigen::Index>(y)] = rng.uniform(lo, hi);
  if (region.boundary().empty()) {
    if (lambda > 0.0) return data;  // the only lambda-harmonic function is 0
    data.setConstant(rng.uniform(lo, hi));
    return data;
  }
  return harmonic_extension(region, data, lambda);
}

}  // namespace defectlab
