#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "defectlab/harmonic.hpp"
#include "defectlab/report.hpp"
#include "defectlab/semigroup.hpp"
#include "defectlab/space.hpp"

namespace defectlab {

// (Hf + lambda f)(x) <= tol at every vertex of U whose whole neighborhood
// lies in U. f is an ambient field. Boundary-adjacent members carry no
// constraint; an empty test set gives a vacuous report.
CheckReport weak_subharmonicity_check(const Region& region, const Field& f, double lambda,
                                      std::optional<double> tolerance = std::nullopt);

// The same criterion inside the restricted space of U: h is local to U and
// extended by zero, so every member is a test vertex and the operator is
// the principal submatrix H^U.
CheckReport restricted_residual_check(const Region& region, const Field& h_local, double lambda,
                                      std::optional<double> tolerance = std::nullopt);

struct DefectivenessOptions {
  std::vector<double> t_grid = default_t_grid();
  std::optional<double> tolerance;
  // Extra geometric sweeps toward t = 0 when the worst value sits at the
  // smallest grid time. Each sweep spans one `refine_factor` decade.
  int refinements = 5;
  double refine_factor = 1.0 / 256.0;
  std::size_t refine_points = 8;
};

// h <= 0 and e^{-lambda t} P_t h >= h over the t-grid. The semigroup
// constraint is measured in rate form
//   max_x (h - e^{-lambda t} P_t h)(x) / min(t, 1)
// which coincides with the plain difference for t >= 1 and tends to the
// residual (H + lambda) h as t -> 0. `vertices` maps cache indices to
// witness vertex ids.
CheckReport defectiveness_check(const SpectralCache& cache, const Field& h, double lambda,
                                const DefectivenessOptions& options = {},
                                std::span<const std::size_t> vertices = {});
CheckReport defectiveness_check(const Region& region, const Field& h_local, double lambda,
                                const DefectivenessOptions& options = {});
CheckReport defectiveness_check(const WeightedSpace& space, const Field& h, double lambda,
                                const DefectivenessOptions& options = {});

struct ShiftCheckResult {
  CheckReport report;    // semigroup verdict on f|_U - g
  CheckReport residual;  // weak subharmonicity at U's interior
  ShiftCertificate certificate;
  bool methods_agree = true;
};

// Reusable shift defectiveness checker for one (U, lambda). Caches the unit
// shift g1 >= 1 and the spectral decomposition of H^U.
//
// For an ambient f the shift is g = c g1 with c the smallest value that
// makes both f|_U - g <= 0 and (H^U + lambda)(f|_U - g) <= 0 at the
// boundary-adjacent members, where H^U sees the Dirichlet condition.
class ShiftChecker {
 public:
  ShiftChecker(const Region& region, double lambda);
  ShiftChecker(const Region& region, const Region& outer, double lambda);

  const Region& region() const { return region_; }
  double lambda() const { return lambda_; }
  const ShiftCertificate& unit_shift() const { return unit_; }
  const SpectralCache& cache() const { return cache_; }

  // The shift g for f, as a certificate.
  ShiftCertificate shift_for(const Field& f) const;
  ShiftCheckResult check(const Field& f, std::optional<double> tolerance = std::nullopt,
                         const DefectivenessOptions& options = {}) const;

 private:
  Region region_;
  double lambda_;
  ShiftCertificate unit_;
  Field kappa_;  // (H^U + lambda) g1, local
  SpectralCache cache_;
};

ShiftCheckResult shift_defectiveness_check(const Region& region, const Field& f, double lambda,
                                           std::optional<double> tolerance = std::nullopt);

struct ApproximationResult {
  std::vector<Field> terms;     // f_k on the members of U, k = 1..k_max
  std::vector<double> gaps;     // |f_k - f|_U|_inf
  CheckReport monotonicity;     // f_{k+1} - f_k <= tol
  CheckReport gap_decrease;     // gaps[k] - gaps[k-1] <= tol
};

// f_k = e^{-lambda/k} P^U_{1/k}(f|_U - g) + g on U.
ApproximationResult approximation_sequence(const Region& region, const Field& f, const Field& g_local,
                                           double lambda, std::size_t k_max,
                                           std::optional<double> tolerance = std::nullopt);

struct MaxResult {
  Field value;  // ambient pointwise max
  CheckReport report;
};

// f v g with both inputs, the max, and (when f >= 0 on U) the zero-lambda
// clause checked through `checker`.
MaxResult kato_brezis_max(const ShiftChecker& checker, const Field& f, const Field& g,
                          std::optional<double> tolerance = std::nullopt);

struct PowerResult {
  Field value;  // (f - c)_+^{q/2}, ambient
  CheckReport report;
};

PowerResult regularity_power(const Region& region, const Field& f, double c, double q, double lambda,
                             std::optional<double> tolerance = std::nullopt);

enum class MaxPrinciplePart { A, B };

// sup over V and its vertex boundary equals sup over the boundary, for f
// (part A) or f_+ (part B).
CheckReport maximum_principle_check(const Region& inner, const Field& f, MaxPrinciplePart part,
                                    std::optional<double> tolerance = std::nullopt);

struct Esqq0Options {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  // Every other trial carries a planted violation.
  bool plant = true;
  // Pairs (h, phi) per conforming trial for the energy inequality.
  std::size_t energy_pairs = 1;
  DefectivenessOptions semigroup;
};

// Seeded equivalence suite on one region. Each trial draws a defective h,
// optionally plants a violation, and runs two layers:
//   restricted: residual, semigroup and exit checks inside U's restricted space
//   ambient:    the same three criteria on f = G + h with G lambda-harmonic,
//               through the shift construction.
// All six verdicts must coincide with the planted state and all failing
// witnesses must agree with the planted vertex.
CheckReport esqq0_equivalence_suite(const Region& region, double lambda, const Esqq0Options& options = {});

// Verdicts in layer order: restricted residual, restricted semigroup,
// restricted exit, ambient residual, shift semigroup, ambient exit.
struct Esqq0Trial {
  bool planted = false;
  std::optional<std::size_t> planted_vertex;
  std::array<bool, 6> verdicts{};
  std::array<std::optional<std::size_t>, 6> witnesses{};
  bool agree = true;
  bool witnesses_agree = true;
  std::size_t energy_checks = 0;
  std::size_t energy_failures = 0;
  double worst_energy_ratio = -std::numeric_limits<double>::infinity();
};

// Factorizations shared by all trials on one (U, lambda).
class Esqq0Context {
 public:
  Esqq0Context(const Region& region, double lambda);
  const Region& region() const { return region_; }
  double lambda() const { return lambda_; }
  Esqq0Trial run(std::uint64_t seed, bool plant, const Esqq0Options& options = {}) const;

 private:
  Region region_;
  double lambda_;
  DirichletSolver solver_;
  ShiftChecker shifter_;
};

struct Esqq0Tally {
  std::size_t trials = 0, planted = 0, detected = 0, disagreements = 0, witness_mismatches = 0;
  std::size_t energy_checks = 0, energy_failures = 0;
  double worst_energy_ratio = -std::numeric_limits<double>::infinity();
  void add(const Esqq0Trial& trial);
  // Violation = number of failed trials and energy checks.
  void write(CheckReport& report) const;
};

// Perturbation of a defective sample: the planted vertex is an interior
// vertex whose closed neighborhood carries no source, so adding eps there
// makes the residual positive only at that vertex. Vertices whose
// neighbors are all interior are preferred.
// `tolerance_of` maps the unperturbed sample to the tolerance the checks
// will use; eps = 10 tol max(1, 1/A(x0,x0)) with A = H^U + lambda.
struct PlantedSample {
  Field h;  // local to the region
  std::size_t vertex = 0;
  double epsilon = 0.0;
  double tolerance = 0.0;
};

PlantedSample plant_violation(const DirichletSolver& solver, std::uint64_t seed,
                              const std::function<double(const Field&)>& tolerance_of,
                              std::size_t attempts = 64);

}  // namespace defectlab
