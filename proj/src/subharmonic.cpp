#include "defectlab/subharmonic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "defectlab/errors.hpp"
#include "defectlab/random.hpp"
#include "defectlab/stochastic.hpp"

namespace defectlab {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

double sup_norm(const Field& f) { return f.size() == 0 ? 0.0 : f.cwiseAbs().maxCoeff(); }

void require_ambient(const Region& region, const Field& f) {
  if (static_cast<std::size_t>(f.size()) != region.space().size()) {
    throw DomainError("expected an ambient field on the whole space");
  }
}

void require_local(const Region& region, const Field& f) {
  if (static_cast<std::size_t>(f.size()) != region.size()) {
    throw DomainError("expected a field local to the region");
  }
}

}  // namespace

CheckReport weak_subharmonicity_check(const Region& region, const Field& f, double lambda,
                                      std::optional<double> tolerance) {
  require_ambient(region, f);
  CheckReport r;
  r.name = "weak-subharmonicity";
  r.method = Method::Residual;
  r.lambda = lambda;
  r.tolerance = tolerance.value_or(default_tolerance(region.closure().restrict(f)));
  const auto& space = region.space();
  for (std::size_t x : region.interior()) {
    double s = 0.0;
    for (const auto& nb : space.neighbors(x)) {
      s += nb.weight * (f[idx(x)] - f[idx(nb.vertex)]);
    }
    r.observe(s / space.measure(x) + lambda * f[idx(x)], x);
  }
  r.details["testVertices"] = region.interior().size();
  if (region.interior().empty()) {
    r.vacuous = true;
    r.notes.push_back("no member of U has its whole neighborhood in U");
  }
  r.finalize();
  return r;
}

CheckReport restricted_residual_check(const Region& region, const Field& h_local, double lambda,
                                      std::optional<double> tolerance) {
  require_local(region, h_local);
  CheckReport r;
  r.name = "restricted-residual";
  r.method = Method::Residual;
  r.lambda = lambda;
  r.tolerance = tolerance.value_or(default_tolerance(h_local));
  const Field res = region.apply_restricted(h_local) + lambda * h_local;
  for (std::size_t i = 0; i < region.size(); ++i) r.observe(res[idx(i)], region.members()[i]);
  r.details["testVertices"] = region.size();
  r.finalize();
  return r;
}

CheckReport defectiveness_check(const SpectralCache& cache, const Field& h, double lambda,
                                const DefectivenessOptions& options, std::span<const std::size_t> vertices) {
  if (static_cast<std::size_t>(h.size()) != cache.size()) throw DomainError("field size does not match cache");
  if (!vertices.empty() && vertices.size() != cache.size()) throw DomainError("vertex map size mismatch");
  if (options.t_grid.empty()) throw DomainError("empty t-grid");
  auto vertex = [&](Eigen::Index i) {
    return vertices.empty() ? static_cast<std::size_t>(i) : vertices[static_cast<std::size_t>(i)];
  };

  CheckReport r;
  r.name = "defectiveness";
  r.method = Method::Semigroup;
  r.lambda = lambda;
  r.tolerance = options.tolerance.value_or(default_tolerance(h));
  r.t_grid = options.t_grid;

  CheckReport sign;
  for (Eigen::Index i = 0; i < h.size(); ++i) sign.observe(h[i], vertex(i));
  r.observe(sign.worst_violation, sign.witness_vertex);

  double tmin = *std::min_element(options.t_grid.begin(), options.t_grid.end());
  CheckReport flow;
  auto sweep = [&](const std::vector<double>& ts) {
    for (double t : ts) {
      if (!(t > 0.0)) throw DomainError("t-grid entries must be positive");
      const Field inc = cache.defect_increment(h, t, lambda);
      const double scale = std::min(t, 1.0);
      Eigen::Index arg = 0;
      const double worst = (-inc).maxCoeff(&arg);
      flow.observe(worst / scale, vertex(arg), t);
    }
  };
  sweep(options.t_grid);
  int used = 0;
  while (used < options.refinements && flow.witness_time && *flow.witness_time <= tmin) {
    const double lo = tmin * options.refine_factor;
    std::vector<double> ts = geometric_grid(lo, tmin, options.refine_points + 1);
    ts.pop_back();
    sweep(ts);
    tmin = lo;
    ++used;
  }
  r.observe(flow.worst_violation, flow.witness_vertex, flow.witness_time);
  r.details["signViolation"] = sign.worst_violation;
  r.details["semigroupViolation"] = flow.worst_violation;
  r.details["refinements"] = used;
  r.details["smallestTime"] = tmin;
  r.finalize();
  return r;
}

CheckReport defectiveness_check(const Region& region, const Field& h_local, double lambda,
                                const DefectivenessOptions& options) {
  require_local(region, h_local);
  return defectiveness_check(SpectralCache(region), h_local, lambda, options, region.members());
}

CheckReport defectiveness_check(const WeightedSpace& space, const Field& h, double lambda,
                                const DefectivenessOptions& options) {
  return defectiveness_check(SpectralCache(space), h, lambda, options);
}

ShiftChecker::ShiftChecker(const Region& region, double lambda)
    : ShiftChecker(region, default_outer(region), lambda) {}

ShiftChecker::ShiftChecker(const Region& region, const Region& outer, double lambda)
    : region_(region), lambda_(lambda), unit_(build_shift(region, outer, lambda, 1.0)), cache_(region) {
  kappa_ = region_.apply_restricted(unit_.shift) + lambda_ * unit_.shift;
}

ShiftCertificate ShiftChecker::shift_for(const Field& f) const {
  require_ambient(region_, f);
  const Field fu = region_.restrict(f);
  double c = fu.maxCoeff();
  const Field rho = region_.apply_restricted(fu) + lambda_ * fu;
  for (std::size_t x : region_.boundary_adjacent()) {
    const auto i = idx(*region_.local_index(x));
    c = std::max(c, rho[i] / kappa_[i]);
  }
  ShiftCertificate cert = unit_;
  cert.lower_bound = c;
  if (lambda_ == 0.0) {
    cert.shift = Field::Constant(idx(region_.size()), c);
    cert.scale = c;
    cert.residual = 0.0;
  } else {
    const double a = std::max(c, 0.0);
    cert.shift = a * unit_.shift;
    cert.scale = a * unit_.scale;
    cert.residual = a * unit_.residual;
  }
  return cert;
}

ShiftCheckResult ShiftChecker::check(const Field& f, std::optional<double> tolerance,
                                     const DefectivenessOptions& options) const {
  require_ambient(region_, f);
  const double tol = tolerance.value_or(default_tolerance(region_.closure().restrict(f)));
  ShiftCheckResult out{CheckReport{}, weak_subharmonicity_check(region_, f, lambda_, tol), shift_for(f), true};
  DefectivenessOptions opts = options;
  opts.tolerance = tol;
  out.report = defectiveness_check(cache_, region_.restrict(f) - out.certificate.shift, lambda_, opts,
                                   region_.members());
  out.report.name = "shift-defectiveness";
  out.report.details["shiftLowerBound"] = out.certificate.lower_bound;
  out.report.details["shiftResidual"] = out.certificate.residual;
  out.report.details["residualVerdict"] = out.residual.pass ? "pass" : "fail";
  out.methods_agree = out.report.pass == out.residual.pass;
  if (!out.methods_agree) out.report.notes.push_back("semigroup and residual verdicts disagree");
  return out;
}

ShiftCheckResult shift_defectiveness_check(const Region& region, const Field& f, double lambda,
                                           std::optional<double> tolerance) {
  return ShiftChecker(region, lambda).check(f, tolerance);
}

ApproximationResult approximation_sequence(const Region& region, const Field& f, const Field& g_local,
                                           double lambda, std::size_t k_max, std::optional<double> tolerance) {
  require_ambient(region, f);
  require_local(region, g_local);
  if (k_max == 0) throw DomainError("k_max must be positive");
  const SpectralCache cache(region);
  const Field fu = region.restrict(f);
  const Field u = fu - g_local;
  const double tol = tolerance.value_or(default_tolerance(fu));

  ApproximationResult out;
  out.monotonicity.name = "approximation-monotonicity";
  out.gap_decrease.name = "approximation-gap";
  for (auto* rep : {&out.monotonicity, &out.gap_decrease}) {
    rep->method = Method::Semigroup;
    rep->lambda = lambda;
    rep->tolerance = tol;
  }
  for (std::size_t k = 1; k <= k_max; ++k) {
    const double t = 1.0 / static_cast<double>(k);
    Field fk = std::exp(-lambda * t) * cache.evolve(u, t) + g_local;
    out.gaps.push_back(sup_norm(fk - fu));
    if (!out.terms.empty()) {
      Eigen::Index arg = 0;
      const double worst = (fk - out.terms.back()).maxCoeff(&arg);
      out.monotonicity.observe(worst, region.members()[static_cast<std::size_t>(arg)], t);
      out.gap_decrease.observe(out.gaps.back() - out.gaps[out.gaps.size() - 2], std::nullopt, t);
    }
    out.terms.push_back(std::move(fk));
  }
  if (k_max == 1) {
    out.monotonicity.vacuous = true;
    out.gap_decrease.vacuous = true;
  }
  out.monotonicity.details["finalGap"] = out.gaps.back();
  out.gap_decrease.details["finalGap"] = out.gaps.back();
  out.monotonicity.finalize();
  out.gap_decrease.finalize();
  return out;
}

namespace {

// Suite reports count failed parts: each failing part contributes 1.
void absorb(CheckReport& suite, const std::string& label, const CheckReport& part) {
  suite.details[label] = {{"verdict", part.pass ? "pass" : "fail"}, {"worstViolation", part.worst_violation}};
  suite.observe(part.pass ? 0.0 : 1.0, part.witness_vertex, part.witness_time);
}

}  // namespace

MaxResult kato_brezis_max(const ShiftChecker& checker, const Field& f, const Field& g,
                          std::optional<double> tolerance) {
  const Region& region = checker.region();
  require_ambient(region, f);
  require_ambient(region, g);
  MaxResult out{f.cwiseMax(g), CheckReport{}};
  const double tol = tolerance.value_or(
      default_tolerance(region.closure().restrict(f).cwiseAbs().cwiseMax(region.closure().restrict(g).cwiseAbs())));
  CheckReport& r = out.report;
  r.name = "kato-brezis";
  r.method = Method::Suite;
  r.lambda = checker.lambda();
  r.tolerance = 0.0;

  const auto cf = checker.check(f, tol);
  const auto cg = checker.check(g, tol);
  const auto cm = checker.check(out.value, tol);
  r.details["preconditionF"] = cf.report.pass;
  r.details["preconditionG"] = cg.report.pass;
  if (!cf.report.pass || !cg.report.pass) r.notes.push_back("an input is not shift defective on U");
  // The verdict concerns the max; the inputs are recorded as preconditions.
  absorb(r, "max", cm.report);
  r.details["maxResidualVerdict"] = cm.residual.pass ? "pass" : "fail";

  const Field mu = region.restrict(out.value);
  if (mu.minCoeff() >= 0.0 && checker.lambda() > 0.0) {
    const ShiftChecker zero(region, 0.0);
    absorb(r, "maxAtZeroLambda", zero.check(out.value, tol).report);
  }
  r.finalize();
  return out;
}

PowerResult regularity_power(const Region& region, const Field& f, double c, double q, double lambda,
                             std::optional<double> tolerance) {
  require_ambient(region, f);
  if (!(q > 1.0)) throw DomainError("regularity power needs q > 1");
  if (!(c >= 0.0)) throw DomainError("regularity power needs c >= 0");
  PowerResult out;
  out.value = (f.array() - c).max(0.0).pow(q / 2.0).matrix();
  if (q < 2.0) {
    CheckReport r;
    r.name = "regularity-power";
    r.method = Method::Residual;
    r.lambda = 0.0;
    r.vacuous = true;
    r.notes.push_back("1 < q < 2: only local energy membership is asserted, automatic on finite spaces");
    r.finalize();
    out.report = r;
    return out;
  }
  out.report = weak_subharmonicity_check(region, out.value, 0.0, tolerance);
  out.report.name = "regularity-power";
  out.report.details["q"] = q;
  out.report.details["c"] = c;
  out.report.details["inputLambda"] = lambda;
  return out;
}

CheckReport maximum_principle_check(const Region& inner, const Field& f, MaxPrinciplePart part,
                                    std::optional<double> tolerance) {
  require_ambient(inner, f);
  if (inner.boundary().empty()) throw DomainError("maximum principle needs a nonempty vertex boundary");
  const Field v = part == MaxPrinciplePart::A ? f : Field(f.cwiseMax(0.0));
  CheckReport r;
  r.name = part == MaxPrinciplePart::A ? "maximum-principle" : "maximum-principle-positive-part";
  r.method = Method::Exact;
  r.tolerance = tolerance.value_or(1e-12 * std::max(1.0, sup_norm(inner.closure().restrict(v))));
  double bmax = -std::numeric_limits<double>::infinity();
  for (std::size_t y : inner.boundary()) bmax = std::max(bmax, v[idx(y)]);
  for (std::size_t x : inner.members()) r.observe(v[idx(x)] - bmax, x);
  r.details["boundaryMax"] = bmax;
  r.details["closureMax"] = std::max(bmax, bmax + r.worst_violation);
  r.finalize();
  return r;
}

PlantedSample plant_violation(const DirichletSolver& solver, std::uint64_t seed,
                              const std::function<double(const Field&)>& tolerance_of, std::size_t attempts) {
  const Region& region = solver.region();
  const auto& space = region.space();
  std::vector<std::size_t> candidates;
  for (std::size_t x : region.interior()) {
    const Region single(space, {x});
    if (single.closure().size() < region.size()) candidates.push_back(x);
  }
  if (candidates.empty()) throw GeometryError("region has no interior vertex to plant a violation at");
  // Prefer vertices two steps from the boundary: a shifted sample can carry a
  // large negative residual at boundary-adjacent members, which would mask
  // a small planted excess next to it for all but the tiniest times.
  std::vector<std::size_t> deep;
  for (std::size_t x : candidates) {
    const auto& nbs = space.neighbors(x);
    if (std::all_of(nbs.begin(), nbs.end(), [&](const auto& nb) {
          const auto& inner = space.neighbors(nb.vertex);
          return std::all_of(inner.begin(), inner.end(), [&](const auto& z) { return region.contains(z.vertex); });
        })) {
      deep.push_back(x);
    }
  }
  if (!deep.empty()) candidates = std::move(deep);
  Rng rng(seed, 0x706c616e74ULL);
  for (std::size_t a = 0; a < attempts; ++a) {
    const std::size_t x0 = candidates[rng.below(candidates.size())];
    DefectiveSampleOptions opts;
    opts.zero_source.push_back(x0);
    for (const auto& nb : space.neighbors(x0)) opts.zero_source.push_back(nb.vertex);
    DefectiveSample s = sample_defective_with_source(solver, derive_seed(seed, a), opts);
    const double tol = tolerance_of(s.h);
    const double a00 = space.degree(x0) / space.measure(x0) + solver.lambda();
    const double eps = 10.0 * tol * std::max(1.0, 1.0 / a00);
    const auto i = idx(*region.local_index(x0));
    if (s.h[i] + eps > -eps) continue;
    s.h[i] += eps;
    return {s.h, x0, eps, tol};
  }
  throw NumericalError("could not plant a violation that keeps the sample nonpositive");
}

Esqq0Context::Esqq0Context(const Region& region, double lambda)
    : region_(region), lambda_(lambda), solver_(region, lambda), shifter_(region, lambda) {}

Esqq0Trial Esqq0Context::run(std::uint64_t seed, bool plant, const Esqq0Options& options) const {
  const Region& region = region_;
  const double lambda = lambda_;
  auto tol_for = [](const Field& h, const Field& f) { return 1e-9 * (1.0 + std::max(sup_norm(h), sup_norm(f))); };

  const Field G = random_harmonic(region, lambda, derive_seed(seed, 1), -1.0, 1.0);
  auto ambient_of = [&](const Field& h) {
    Field f = G;
    for (std::size_t i = 0; i < region.size(); ++i) f[idx(region.members()[i])] += h[idx(i)];
    return f;
  };

  Esqq0Trial out;
  out.planted = plant;
  Field h;
  double tol = 0.0;
  if (plant) {
    const PlantedSample ps = plant_violation(solver_, derive_seed(seed, 2), [&](const Field& base) {
      return tol_for(base, region.closure().restrict(ambient_of(base)));
    });
    h = ps.h;
    tol = ps.tolerance;
    out.planted_vertex = ps.vertex;
  } else {
    h = sample_defective_with_source(solver_, derive_seed(seed, 2)).h;
    tol = tol_for(h, region.closure().restrict(ambient_of(h)));
  }
  const Field f = ambient_of(h);

  DefectivenessOptions sg = options.semigroup;
  sg.tolerance = tol;
  ProbabilisticOptions po;
  po.mode = ExitMode::Exact;
  po.tolerance = tol;

  const CheckReport checks[6] = {
      restricted_residual_check(region, h, lambda, tol),
      defectiveness_check(shifter_.cache(), h, lambda, sg, region.members()),
      restricted_exit_check(region, h, lambda, tol),
      weak_subharmonicity_check(region, f, lambda, tol),
      shifter_.check(f, tol, sg).report,
      probabilistic_defectiveness_scan(region, f, lambda, po),
  };
  for (std::size_t k = 0; k < 6; ++k) {
    out.verdicts[k] = checks[k].pass;
    out.witnesses[k] = checks[k].witness_vertex;
    if (checks[k].pass == plant) out.agree = false;
    if (!checks[k].pass && plant && checks[k].witness_vertex != out.planted_vertex) out.witnesses_agree = false;
  }

  if (!plant) {
    // E_lambda(h v phi) <= E_lambda(phi) inside the restricted space of U.
    Rng rng(seed, 3);
    const auto& space = region.space();
    const double amp = sup_norm(h);
    for (std::size_t p = 0; p < options.energy_pairs; ++p) {
      Field phi(idx(region.size()));
      for (Eigen::Index i = 0; i < phi.size(); ++i) phi[i] = rng.uniform(-1.5 * amp, 0.5 * amp);
      const double lhs = shifted_energy(space, region.extend_by_zero(h.cwiseMax(phi)), lambda);
      const double rhs = shifted_energy(space, region.extend_by_zero(phi), lambda);
      const double scale = 1e-9 * (1.0 + std::abs(rhs));
      out.worst_energy_ratio = std::max(out.worst_energy_ratio, (lhs - rhs) / scale);
      ++out.energy_checks;
      if (lhs - rhs > scale) ++out.energy_failures;
    }
  }
  return out;
}

void Esqq0Tally::add(const Esqq0Trial& t) {
  ++trials;
  if (t.planted) ++planted;
  if (t.planted && t.agree) ++detected;
  if (!t.agree) ++disagreements;
  if (!t.witnesses_agree) ++witness_mismatches;
  energy_checks += t.energy_checks;
  energy_failures += t.energy_failures;
  worst_energy_ratio = std::max(worst_energy_ratio, t.worst_energy_ratio);
}

void Esqq0Tally::write(CheckReport& report) const {
  report.observe(static_cast<double>(disagreements + witness_mismatches + energy_failures), std::nullopt);
  report.details["trials"] = trials;
  report.details["planted"] = planted;
  report.details["plantedDetected"] = detected;
  report.details["verdictDisagreements"] = disagreements;
  report.details["witnessMismatches"] = witness_mismatches;
  report.details["energyChecks"] = energy_checks;
  report.details["energyFailures"] = energy_failures;
  report.details["worstEnergyRatio"] = energy_checks ? worst_energy_ratio : 0.0;
  if (trials == 0) report.vacuous = true;
}

CheckReport esqq0_equivalence_suite(const Region& region, double lambda, const Esqq0Options& options) {
  CheckReport suite;
  suite.name = "esqq0-equivalence";
  suite.method = Method::Suite;
  suite.lambda = lambda;
  suite.tolerance = 0.0;
  suite.notes.push_back("finite dimensions: all five conditions coincide; the collapsed equivalence is tested");
  const Esqq0Context context(region, lambda);
  Esqq0Tally tally;
  for (std::size_t trial = 0; trial < options.trials; ++trial) {
    tally.add(context.run(derive_seed(options.seed, trial), options.plant && trial % 2 == 1, options));
  }
  tally.write(suite);
  suite.finalize();
  return suite;
}

}  // namespace defectlab
