#include "defectlab/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <ostream>
#include <regex>
#include <set>

#include "defectlab/errors.hpp"
#include "defectlab/gasket.hpp"
#include "defectlab/harmonic.hpp"
#include "defectlab/parallel.hpp"
#include "defectlab/random.hpp"
#include "defectlab/semigroup.hpp"
#include "defectlab/stochastic.hpp"
#include "defectlab/subharmonic.hpp"

namespace defectlab {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

double sup_norm(const Field& f) { return f.size() == 0 ? 0.0 : f.cwiseAbs().maxCoeff(); }

// Slope of the least-squares line through (x, y).
double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

// Smallest C >= 1 with log C + C a >= b, for a >= 0.
double solve_log_linear(double a, double b) {
  if (a >= b) return 1.0;
  double lo = 1.0, hi = 2.0;
  while (std::log(hi) + hi * a < b) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::log(mid) + mid * a >= b ? hi : lo) = mid;
  }
  return hi;
}

struct Combo {
  const Family* family;
  const Region* region;
  double lambda;
};

std::vector<Combo> combos_of(const std::vector<const Family*>& families, const std::vector<double>& lambdas) {
  std::vector<Combo> out;
  for (const Family* f : families) {
    for (const Region& r : f->regions) {
      for (double l : lambdas) out.push_back({f, &r, l});
    }
  }
  if (out.empty()) throw DomainError("suite needs at least one family with a region and one lambda");
  return out;
}

// G + h on U with G lambda-harmonic on U (boundary data in [lo, hi]) and
// h = -(H^U + lambda)^{-1} psi scaled to sup norm 1.
Field shift_defective_sample(const Region& region, const DirichletSolver& solver, std::uint64_t seed, double lo,
                             double hi) {
  Field f = random_harmonic(region, solver.lambda(), derive_seed(seed, 1), lo, hi);
  Field h = sample_defective_with_source(solver, derive_seed(seed, 2)).h;
  const double n = sup_norm(h);
  if (n > 0.0) h /= n;
  for (std::size_t i = 0; i < region.size(); ++i) f[idx(region.members()[i])] += h[idx(i)];
  return f;
}

CheckReport suite_report(const std::string& name, const SuiteOptions& options) {
  CheckReport r;
  r.name = name;
  r.method = Method::Suite;
  r.tolerance = 0.0;
  r.details["trials"] = options.trials;
  r.details["seed"] = options.seed;
  r.details["lambdas"] = options.lambdas;
  return r;
}

std::string combo_name(const Combo& c) {
  return c.family->name + "/U" + std::to_string(c.region - c.family->regions.data()) + "/lambda=" +
         format_sci(c.lambda);
}

}  // namespace

void write_csv(std::ostream& out, const Table& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_sci(row[i]);
    out << "\n";
  }
}

bool admissible_region(const Region& region, double conditioning_lambda, double max_shift_ratio) {
  if (region.interior().empty() || region.boundary().empty()) return false;
  bool plantable = false;
  for (std::size_t x : region.interior()) {
    if (Region(region.space(), {x}).closure().size() < region.size()) {
      plantable = true;
      break;
    }
  }
  if (!plantable) return false;
  const Region outer = default_outer(region);
  if (outer.size() <= region.closure().size()) return false;
  const Field g1 = build_shift(region, outer, conditioning_lambda, 1.0).shift;
  return g1.maxCoeff() <= max_shift_ratio;
}

FamilyPtr make_family(std::string name, WeightedSpace space, std::size_t count, std::uint64_t seed,
                      double max_fraction) {
  auto fam = std::make_unique<Family>(Family{std::move(name), std::move(space), {}});
  const std::size_t n = fam->space.size();
  Rng rng(seed, 0x66616d696c79ULL);
  std::set<std::vector<std::size_t>> seen;
  const std::size_t top = std::max<std::size_t>(3, static_cast<std::size_t>(max_fraction * static_cast<double>(n)));
  for (std::size_t attempt = 0; attempt < 64 && fam->regions.size() < count; ++attempt) {
    const std::size_t center = rng.below(n);
    for (std::size_t size = top; size >= 3; size = size * 9 / 10 == size ? size - 1 : size * 9 / 10) {
      Region U = bfs_region(fam->space, center, size);
      if (!admissible_region(U)) continue;
      if (seen.insert(U.members()).second) fam->regions.push_back(std::move(U));
      break;
    }
  }
  if (fam->regions.empty()) throw GeometryError("no admissible region in family '" + fam->name + "'");
  return fam;
}

FamilyPtr family_from_name(const std::string& name, std::uint64_t seed, std::size_t regions) {
  std::smatch m;
  if (std::regex_match(name, m, std::regex(R"(path-(\d+))"))) {
    return make_family(name, build(path_spec(std::stoul(m[1]))), regions, seed);
  }
  if (std::regex_match(name, m, std::regex(R"(grid-(\d+)x(\d+))"))) {
    return make_family(name, build(grid_spec(std::stoul(m[1]), std::stoul(m[2]))), regions, seed);
  }
  if (std::regex_match(name, m, std::regex(R"(gasket-(\d+))"))) {
    return make_family(name, build_gasket(std::stoi(m[1])).space, regions, seed);
  }
  if (std::regex_match(name, m, std::regex(R"(er-(\d+))"))) {
    const std::size_t n = std::stoul(m[1]);
    return make_family(name, build(erdos_renyi_spec(n, std::min(1.0, 4.0 / static_cast<double>(n)), seed)), regions,
                       seed);
  }
  throw DomainError("unknown family '" + name + "' (expected path-N, grid-RxC, gasket-N or er-N)");
}

std::vector<FamilyPtr> standard_families(std::uint64_t seed) {
  std::vector<FamilyPtr> out;
  for (const char* name : {"path-64", "grid-10x10", "gasket-3", "er-50"}) out.push_back(family_from_name(name, seed));
  return out;
}

std::vector<const Family*> view(const std::vector<FamilyPtr>& families) {
  std::vector<const Family*> out;
  for (const auto& f : families) out.push_back(f.get());
  return out;
}

CheckReport esqq0_suite(const std::vector<const Family*>& families, const SuiteOptions& options) {
  const auto combos = combos_of(families, options.lambdas);
  std::vector<std::unique_ptr<Esqq0Context>> contexts(combos.size());
  parallel_for(combos.size(), options.workers, [&](std::size_t i) {
    contexts[i] = std::make_unique<Esqq0Context>(*combos[i].region, combos[i].lambda);
  });
  std::vector<Esqq0Trial> trials(options.trials);
  parallel_for(options.trials, options.workers, [&](std::size_t i) {
    const std::size_t c = i % combos.size();
    const bool plant = (i / combos.size()) % 2 == 1;
    trials[i] = contexts[c]->run(derive_seed(options.seed, i), plant);
  });

  CheckReport r = suite_report("esqq0-equivalence", options);
  r.notes.push_back("finite dimensions: the five conditions coincide; the collapsed equivalence is tested");
  r.notes.push_back("every vertex is tested where the continuum statement says quasi-every");
  Esqq0Tally tally;
  std::vector<Esqq0Tally> per_combo(combos.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    tally.add(trials[i]);
    per_combo[i % combos.size()].add(trials[i]);
    if (!trials[i].agree || !trials[i].witnesses_agree) {
      r.observe(1.0, trials[i].planted_vertex);
    }
  }
  tally.write(r);
  nlohmann::json by_combo = nlohmann::json::array();
  for (std::size_t c = 0; c < combos.size(); ++c) {
    by_combo.push_back({{"combo", combo_name(combos[c])},
                        {"trials", per_combo[c].trials},
                        {"planted", per_combo[c].planted},
                        {"failures", per_combo[c].disagreements + per_combo[c].witness_mismatches}});
  }
  r.details["combos"] = by_combo;
  r.finalize();
  return r;
}

CheckReport kato_brezis_suite(const std::vector<const Family*>& families, const SuiteOptions& options) {
  const auto combos = combos_of(families, options.lambdas);
  std::vector<std::unique_ptr<ShiftChecker>> checkers(combos.size());
  std::vector<std::unique_ptr<DirichletSolver>> solvers(combos.size());
  parallel_for(combos.size(), options.workers, [&](std::size_t i) {
    checkers[i] = std::make_unique<ShiftChecker>(*combos[i].region, combos[i].lambda);
    solvers[i] = std::make_unique<DirichletSolver>(*combos[i].region, combos[i].lambda);
  });
  struct Outcome {
    bool pass = true;
    bool preconditions = true;
    bool zero_clause = false;
    double worst = 0.0;
  };
  std::vector<Outcome> out(options.trials);
  parallel_for(options.trials, options.workers, [&](std::size_t i) {
    const std::size_t c = i % combos.size();
    const Region& U = *combos[c].region;
    const std::uint64_t s = derive_seed(options.seed, i);
    const Field f = shift_defective_sample(U, *solvers[c], derive_seed(s, 1), -1.0, 1.0);
    const Field g = shift_defective_sample(U, *solvers[c], derive_seed(s, 2), -1.0, 1.0);
    const double tol = 1e-9 * (1.0 + std::max(sup_norm(U.closure().restrict(f)), sup_norm(U.closure().restrict(g))));
    const MaxResult m = kato_brezis_max(*checkers[c], f, g, tol);
    out[i].pass = m.report.pass;
    out[i].preconditions = m.report.details.value("preconditionF", false) && m.report.details.value("preconditionG", false);
    out[i].zero_clause = m.report.details.contains("maxAtZeroLambda");
    out[i].worst = m.report.details["max"]["worstViolation"].get<double>() / tol;
  });
  CheckReport r = suite_report("kato-brezis", options);
  std::size_t failures = 0, bad_inputs = 0, zero_clauses = 0;
  double worst_ratio = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out[i].pass) {
      ++failures;
      r.observe(1.0, std::nullopt);
    }
    if (!out[i].preconditions) ++bad_inputs;
    if (out[i].zero_clause) ++zero_clauses;
    worst_ratio = std::max(worst_ratio, out[i].worst);
  }
  r.observe(static_cast<double>(bad_inputs), std::nullopt);
  r.details["pairs"] = options.trials;
  r.details["maxFailures"] = failures;
  r.details["inputFailures"] = bad_inputs;
  r.details["zeroLambdaClauses"] = zero_clauses;
  r.details["worstViolationOverTolerance"] = options.trials ? worst_ratio : 0.0;
  if (options.trials == 0) r.vacuous = true;
  r.finalize();
  return r;
}

CheckReport regularity_suite(const std::vector<const Family*>& families, const SuiteOptions& options,
                             const std::vector<double>& qs, const std::vector<double>& cs) {
  const auto combos = combos_of(families, options.lambdas);
  std::vector<std::unique_ptr<ShiftChecker>> checkers(combos.size());
  std::vector<std::unique_ptr<DirichletSolver>> solvers(combos.size());
  parallel_for(combos.size(), options.workers, [&](std::size_t i) {
    checkers[i] = std::make_unique<ShiftChecker>(*combos[i].region, combos[i].lambda);
    solvers[i] = std::make_unique<DirichletSolver>(*combos[i].region, combos[i].lambda);
  });
  struct Outcome {
    std::size_t checks = 0, failures = 0, vacuous = 0;
    bool precondition = true;
  };
  std::vector<Outcome> out(options.trials);
  parallel_for(options.trials, options.workers, [&](std::size_t i) {
    const std::size_t c = i % combos.size();
    const Region& U = *combos[c].region;
    const Field f = shift_defective_sample(U, *solvers[c], derive_seed(options.seed, i), -0.5, 1.5);
    out[i].precondition = checkers[c]->check(f).report.pass;
    for (double q : qs) {
      for (double cc : cs) {
        const PowerResult p = regularity_power(U, f, cc, q, combos[c].lambda);
        ++out[i].checks;
        if (!p.report.pass) ++out[i].failures;
        if (p.report.vacuous) ++out[i].vacuous;
      }
    }
  });
  CheckReport r = suite_report("regularity", options);
  std::size_t checks = 0, failures = 0, vacuous = 0, bad_inputs = 0;
  for (const auto& o : out) {
    checks += o.checks;
    failures += o.failures;
    vacuous += o.vacuous;
    if (!o.precondition) ++bad_inputs;
  }
  r.observe(static_cast<double>(failures + bad_inputs), std::nullopt);
  r.details["qs"] = qs;
  r.details["cs"] = cs;
  r.details["checks"] = checks;
  r.details["failures"] = failures;
  r.details["vacuousChecks"] = vacuous;
  r.details["inputFailures"] = bad_inputs;
  if (std::any_of(qs.begin(), qs.end(), [](double q) { return q < 2.0; })) {
    r.notes.push_back("q < 2 asserts local energy membership only, automatic on finite spaces");
  }
  if (options.trials == 0) r.vacuous = true;
  r.finalize();
  return r;
}

CheckReport max_principle_suite(const std::vector<const Family*>& families, const SuiteOptions& options) {
  const auto combos = combos_of(families, options.lambdas);
  std::vector<std::unique_ptr<ShiftChecker>> checkers(combos.size());
  std::vector<std::unique_ptr<DirichletSolver>> solvers(combos.size());
  parallel_for(combos.size(), options.workers, [&](std::size_t i) {
    checkers[i] = std::make_unique<ShiftChecker>(*combos[i].region, combos[i].lambda);
    solvers[i] = std::make_unique<DirichletSolver>(*combos[i].region, combos[i].lambda);
  });
  struct Outcome {
    std::size_t checks = 0, failures = 0;
    bool precondition = true;
    double worst = -std::numeric_limits<double>::infinity();
  };
  std::vector<Outcome> out(options.trials);
  parallel_for(options.trials, options.workers, [&](std::size_t i) {
    const std::size_t c = i % combos.size();
    const Region& U = *combos[c].region;
    const Region V(U.space(), U.interior());
    const Field f = shift_defective_sample(U, *solvers[c], derive_seed(options.seed, i), -1.0, 1.0);
    out[i].precondition = checkers[c]->check(f).report.pass;
    std::vector<MaxPrinciplePart> parts{MaxPrinciplePart::B};
    if (combos[c].lambda == 0.0) parts.insert(parts.begin(), MaxPrinciplePart::A);
    for (auto part : parts) {
      const CheckReport m = maximum_principle_check(V, f, part);
      ++out[i].checks;
      if (!m.pass) ++out[i].failures;
      out[i].worst = std::max(out[i].worst, m.worst_violation);
    }
  });
  CheckReport r = suite_report("maximum-principle", options);
  std::size_t checks = 0, failures = 0, bad_inputs = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& o : out) {
    checks += o.checks;
    failures += o.failures;
    if (!o.precondition) ++bad_inputs;
    worst = std::max(worst, o.worst);
  }
  r.observe(static_cast<double>(failures + bad_inputs), std::nullopt);
  r.details["checks"] = checks;
  r.details["failures"] = failures;
  r.details["inputFailures"] = bad_inputs;
  r.details["worstInteriorExcess"] = options.trials ? worst : 0.0;
  if (options.trials == 0) r.vacuous = true;
  r.finalize();
  return r;
}

CheckReport lq_positivity_suite(const std::vector<const Family*>& families, const SuiteOptions& options) {
  if (families.empty()) throw DomainError("suite needs at least one family");
  std::vector<std::unique_ptr<DirichletSolver>> solvers(families.size());
  std::vector<std::unique_ptr<Region>> wholes(families.size());
  for (std::size_t i = 0; i < families.size(); ++i) {
    if (connected_components(families[i]->space).size() != 1) {
      throw DomainError("family '" + families[i]->name + "' is not connected");
    }
    wholes[i] = std::make_unique<Region>(whole_space(families[i]->space));
    solvers[i] = std::make_unique<DirichletSolver>(*wholes[i], 1.0);
  }
  struct Outcome {
    bool excessive = true;
    bool nonnegative = true;
    bool rejected = true;
    double min_value = 0.0;
  };
  std::vector<Outcome> out(options.trials);
  parallel_for(options.trials, options.workers, [&](std::size_t i) {
    const std::size_t k = i % families.size();
    const Region& X = *wholes[k];
    const auto& space = families[k]->space;
    Rng rng(options.seed, i);
    Field psi = Field::Zero(idx(space.size()));
    if (i != 0) {
      const double fraction = rng.uniform(0.2, 1.0);
      for (Eigen::Index x = 0; x < psi.size(); ++x) {
        const double keep = rng.uniform();
        const double v = rng.uniform();
        if (keep < fraction) psi[x] = v;
      }
    }
    const Field f = solvers[k]->solve(psi);
    out[i].excessive = weak_subharmonicity_check(X, -f, 1.0).pass;
    out[i].min_value = f.minCoeff();
    out[i].nonnegative = f.minCoeff() >= -1e-12 * std::max(1.0, sup_norm(f));

    // A function with a negative region is never 1-shift excessive.
    const Region B = bfs_region(space, rng.below(space.size()), 1 + rng.below(5));
    Field g = Field::Zero(idx(space.size()));
    for (std::size_t x : B.members()) g[idx(x)] = -rng.uniform(0.5, 1.5);
    out[i].rejected = !weak_subharmonicity_check(X, -g, 1.0).pass;
  });
  CheckReport r = suite_report("lq-positivity", options);
  std::size_t not_excessive = 0, negative = 0, accepted = 0;
  double min_value = std::numeric_limits<double>::infinity();
  for (const auto& o : out) {
    if (!o.excessive) ++not_excessive;
    if (!o.nonnegative) ++negative;
    if (!o.rejected) ++accepted;
    min_value = std::min(min_value, o.min_value);
  }
  r.observe(static_cast<double>(not_excessive + negative + accepted), std::nullopt);
  r.details.erase("lambdas");
  r.details["families"] = families.size();
  r.details["notExcessive"] = not_excessive;
  r.details["negativityViolations"] = negative;
  r.details["plantedAccepted"] = accepted;
  r.details["minValue"] = options.trials ? min_value : 0.0;
  r.notes.push_back("lambda = 1 on the whole space; finite spaces are trivially L^q for every q");
  if (options.trials == 0) r.vacuous = true;
  r.finalize();
  return r;
}

CheckReport mc_vs_exact_suite(const std::vector<const Family*>& families, const McOptions& options, Table* table) {
  if (families.empty()) throw DomainError("suite needs at least one family");
  struct Config {
    const Family* family = nullptr;
    std::vector<std::size_t> members;
    std::size_t start = 0;
    double lambda = 0.0;
    Field f;
  };
  auto make_config = [&](std::size_t i) {
    Config c;
    c.family = families[i % families.size()];
    const auto& space = c.family->space;
    Rng rng(options.seed, i);
    const std::size_t k = 1 + rng.below(std::min(options.max_region, space.size() - 1));
    c.members = bfs_region(space, rng.below(space.size()), k).members();
    c.start = c.members[rng.below(c.members.size())];
    const double lambdas[] = {0.0, 0.1, 0.5, 1.0};
    c.lambda = lambdas[rng.below(4)];
    c.f = Field(idx(space.size()));
    for (Eigen::Index x = 0; x < c.f.size(); ++x) c.f[x] = rng.uniform(-1.0, 1.0);
    return c;
  };
  auto simulate = [&](const Config& c, const Region& V, std::size_t i, unsigned workers) {
    WalkConfig w;
    w.start = c.start;
    w.lambda = c.lambda;
    w.paths = options.paths;
    w.max_events = options.max_events;
    w.seed = derive_seed(options.seed, i);
    w.workers = workers;
    return simulate_exit(V, w, c.f);
  };

  struct Outcome {
    double exact = 0, mean = 0, se = 0, censored = 0, lambda = 0;
    std::size_t size = 0;
    bool within = false;
  };
  std::vector<Outcome> out(options.configs);
  parallel_for(options.configs, options.workers, [&](std::size_t i) {
    const Config c = make_config(i);
    const Region V(c.family->space, c.members);
    const Field u = exact_exit_functional(V, c.lambda, c.f);
    const double exact = u[idx(*V.local_index(c.start))];
    const ExitEstimate est = simulate(c, V, i, 1);
    out[i] = {exact, est.mean, est.standard_error, est.censored_fraction, c.lambda, c.members.size(),
              std::abs(est.mean - exact) <= 3.0 * est.standard_error + 1e-12 * (1.0 + std::abs(exact))};
  });

  std::size_t mismatched = 0;
  const std::size_t reruns = std::min(options.reruns, options.configs);
  for (std::size_t i = 0; i < reruns; ++i) {
    const Config c = make_config(i);
    const Region V(c.family->space, c.members);
    const ExitEstimate again = simulate(c, V, i, 3);
    if (std::memcmp(&again.mean, &out[i].mean, sizeof(double)) != 0 ||
        std::memcmp(&again.standard_error, &out[i].se, sizeof(double)) != 0) {
      ++mismatched;
    }
  }

  CheckReport r;
  r.name = "mc-vs-exact";
  r.method = Method::Stochastic;
  std::size_t within = 0;
  double worst_z = 0.0;
  for (const auto& o : out) {
    if (o.within) ++within;
    if (o.se > 0) worst_z = std::max(worst_z, std::abs(o.mean - o.exact) / o.se);
  }
  const double fraction = options.configs ? static_cast<double>(within) / static_cast<double>(options.configs) : 1.0;
  // Violation: shortfall of the coverage fraction, plus one per rerun mismatch.
  r.tolerance = 0.0;
  r.observe(options.required_fraction - fraction + static_cast<double>(mismatched), std::nullopt);
  r.details["configs"] = options.configs;
  r.details["paths"] = options.paths;
  r.details["withinThreeSe"] = within;
  r.details["fraction"] = fraction;
  r.details["requiredFraction"] = options.required_fraction;
  r.details["worstZ"] = worst_z;
  r.details["reruns"] = reruns;
  r.details["rerunMismatches"] = mismatched;
  r.details["seed"] = options.seed;
  if (options.configs == 0) r.vacuous = true;
  r.finalize();
  if (table) {
    table->name = "mc-vs-exact";
    table->header = {"config", "size", "lambda", "exact", "mean", "standardError", "censoredFraction", "within"};
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& o = out[i];
      table->rows.push_back({static_cast<double>(i), static_cast<double>(o.size), o.lambda, o.exact, o.mean, o.se,
                             o.censored, o.within ? 1.0 : 0.0});
    }
  }
  return r;
}

namespace {

std::vector<std::size_t> pick_centers(std::size_t n, std::size_t count, std::uint64_t seed,
                                      const std::vector<std::size_t>& pool_in) {
  std::vector<std::size_t> pool = pool_in;
  if (pool.empty()) {
    pool.resize(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
  }
  Rng rng(seed, 0x63656e74ULL);
  for (std::size_t i = 0; i + 1 < pool.size(); ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  if (pool.size() > count) pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<double> default_radii(const WeightedSpace& space) {
  double hmin = std::numeric_limits<double>::infinity();
  for (const auto& e : space.edges()) hmin = std::min(hmin, space.distance(e.a, e.b));
  double diam = 0.0;
  if (space.has_coords()) {
    const std::size_t dim = space.coords(0).size();
    double sq = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t x = 0; x < space.size(); ++x) {
        lo = std::min(lo, space.coords(x)[k]);
        hi = std::max(hi, space.coords(x)[k]);
      }
      sq += (hi - lo) * (hi - lo);
    }
    diam = std::sqrt(sq);
  } else {
    for (std::size_t y = 0; y < space.size(); ++y) diam = std::max(diam, space.distance(0, y));
    diam *= 2.0;
  }
  std::vector<double> radii;
  for (double r = 2.0 * hmin; r <= diam / 4.0; r *= 2.0) radii.push_back(r);
  return radii;
}

// Vertices whose ball of radius R stays inside the coordinate bounding box.
std::vector<std::size_t> interior_pool(const WeightedSpace& space, double R) {
  std::vector<std::size_t> pool;
  if (!space.has_coords()) return pool;
  const std::size_t dim = space.coords(0).size();
  std::vector<double> lo(dim, std::numeric_limits<double>::infinity()), hi(dim, -std::numeric_limits<double>::infinity());
  for (std::size_t x = 0; x < space.size(); ++x) {
    for (std::size_t k = 0; k < dim; ++k) {
      lo[k] = std::min(lo[k], space.coords(x)[k]);
      hi[k] = std::max(hi[k], space.coords(x)[k]);
    }
  }
  for (std::size_t x = 0; x < space.size(); ++x) {
    bool ok = true;
    for (std::size_t k = 0; k < dim && ok; ++k) {
      const double c = space.coords(x)[k];
      if (hi[k] - lo[k] > 0.0 && (c - R < lo[k] - 1e-12 || c + R > hi[k] + 1e-12)) ok = false;
    }
    if (ok) pool.push_back(x);
  }
  return pool;
}

// Sorted (distance, mass) pairs from x.
std::vector<std::pair<double, double>> shells(const WeightedSpace& space, std::size_t x, bool counting) {
  std::vector<std::pair<double, double>> s(space.size());
  for (std::size_t y = 0; y < space.size(); ++y) s[y] = {space.distance(x, y), counting ? 1.0 : space.measure(y)};
  std::sort(s.begin(), s.end());
  for (std::size_t i = 1; i < s.size(); ++i) s[i].second += s[i - 1].second;
  return s;
}

double ball_mass(const std::vector<std::pair<double, double>>& s, double r) {
  const double cut = r * (1.0 + 1e-12);
  auto it = std::upper_bound(s.begin(), s.end(), cut,
                             [](double v, const std::pair<double, double>& e) { return v < e.first; });
  return it == s.begin() ? 0.0 : std::prev(it)->second;
}

}  // namespace

DoublingFit fit_doubling(const WeightedSpace& space, const DoublingOptions& options) {
  if (!space.has_metric()) throw DomainError("doubling fit needs a metric");
  std::vector<double> radii = options.radii.empty() ? default_radii(space) : options.radii;
  std::sort(radii.begin(), radii.end());
  if (radii.size() < 3) throw DomainError("doubling fit needs at least 3 radii");
  if (radii.front() <= 0.0) throw DomainError("radii must be positive");

  std::vector<std::size_t> pool;
  if (options.interior_centers) pool = interior_pool(space, radii.back());
  const auto centers = pick_centers(space.size(), options.centers, options.seed, pool);

  const std::size_t nr = radii.size();
  std::vector<std::vector<double>> logv(centers.size(), std::vector<double>(nr));
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const auto s = shells(space, centers[c], options.counting);
    for (std::size_t k = 0; k < nr; ++k) logv[c][k] = std::log(ball_mass(s, radii[k]));
  }

  std::vector<double> logr(nr);
  for (std::size_t k = 0; k < nr; ++k) logr[k] = std::log(radii[k]);
  const double mr = std::accumulate(logr.begin(), logr.end(), 0.0) / static_cast<double>(nr);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (const auto& row : logv) {
    const double mv = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(nr);
    for (std::size_t k = 0; k < nr; ++k) {
      sxy += (logr[k] - mr) * (row[k] - mv);
      sxx += (logr[k] - mr) * (logr[k] - mr);
      syy += (row[k] - mv) * (row[k] - mv);
    }
  }
  if (syy == 0.0) throw NumericalError("degenerate radii: every ball has the same mass");

  DoublingFit fit;
  fit.alpha = sxy / sxx;
  double ss = 0.0;
  for (const auto& row : logv) {
    const double mv = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(nr);
    for (std::size_t k = 0; k < nr; ++k) {
      const double e = row[k] - mv - fit.alpha * (logr[k] - mr);
      ss += e * e;
    }
  }
  fit.rms_residual = std::sqrt(ss / static_cast<double>(logv.size() * nr));

  for (const auto& row : logv) {
    for (std::size_t i = 0; i < nr; ++i) {
      for (std::size_t j = i + 1; j < nr; ++j) {
        const double excess = row[j] - row[i] - fit.alpha * (logr[j] - logr[i]);
        fit.C = std::max(fit.C, solve_log_linear(radii[j], excess));
      }
    }
  }
  CheckReport& r = fit.report;
  r.name = "doubling-fit";
  r.method = Method::Fit;
  r.tolerance = 1e-12;
  for (std::size_t c = 0; c < logv.size(); ++c) {
    for (std::size_t i = 0; i < nr; ++i) {
      for (std::size_t j = i + 1; j < nr; ++j) {
        const double excess = logv[c][j] - logv[c][i] - fit.alpha * (logr[j] - logr[i]);
        r.observe(excess - std::log(fit.C) - fit.C * radii[j], centers[c]);
      }
    }
  }
  r.details["alpha"] = fit.alpha;
  r.details["C"] = fit.C;
  r.details["rmsResidual"] = fit.rms_residual;
  r.details["centers"] = centers.size();
  r.details["radii"] = radii;
  r.details["measure"] = options.counting ? "counting" : "space";
  r.notes.push_back("the fitted constants certify feasibility of the bound, not tightness");
  r.finalize();

  fit.table.name = "doubling";
  fit.table.header = {"center", "radius", "logMass"};
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (std::size_t k = 0; k < nr; ++k) {
      fit.table.rows.push_back({static_cast<double>(centers[c]), radii[k], logv[c][k]});
    }
  }
  return fit;
}

LiYauFit fit_liyau(const WeightedSpace& space, const LiYauOptions& options) {
  if (!space.has_metric()) throw DomainError("Li-Yau fit needs a metric");
  if (connected_components(space).size() != 1) throw DomainError("Li-Yau fit needs a connected space");
  if (options.t_grid.empty()) throw DomainError("Li-Yau fit needs a t-grid");
  if (options.c2_grid.empty() || options.c3_grid.empty()) throw DomainError("empty candidate grid");
  const SpectralCache cache(space);
  const Eigen::MatrixXd V = cache.eigenvectors();
  const Eigen::VectorXd& evals = cache.eigenvalues();
  const auto centers = pick_centers(space.size(), options.centers, options.seed, {});
  const std::size_t n = space.size();

  struct Sample {
    double logp, logm, d2, t;
  };
  std::vector<Sample> samples;
  LiYauFit fit;
  double mass_error = 0.0;
  double logD_need = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> need;  // (t, log ratio - d^2/t)

  std::vector<std::vector<std::pair<double, double>>> all_shells(n);
  for (std::size_t y = 0; y < n; ++y) all_shells[y] = shells(space, y, false);

  for (double t : options.t_grid) {
    if (!(t > 0.0)) throw DomainError("t-grid entries must be positive");
    const Eigen::VectorXd decay = (-t * evals.cwiseMax(0.0)).array().exp();
    const double rt = std::sqrt(t);
    std::vector<double> logm(n);
    for (std::size_t y = 0; y < n; ++y) logm[y] = std::log(ball_mass(all_shells[y], rt));
    for (std::size_t x : centers) {
      const Eigen::VectorXd row = V * decay.cwiseProduct(V.row(idx(x)).transpose());
      mass_error = std::max(mass_error, std::abs(row.dot(space.measure()) - 1.0));
      const double diag = row[idx(x)];
      for (std::size_t y = 0; y < n; ++y) {
        const double d = space.distance(x, y);
        const double p = row[idx(y)];
        need.push_back({t, logm[x] - logm[y] - d * d / t});
        if (!(p > options.resolution * diag)) {
          ++fit.skipped;
          continue;
        }
        samples.push_back({std::log(p), logm[x], d * d / t, t});
      }
    }
  }
  fit.evaluated = samples.size();
  (void)logD_need;

  fit.candidates.name = "liyau-candidates";
  fit.candidates.header = {"c2", "c3", "logC1"};
  double best = std::numeric_limits<double>::infinity();
  for (double c2 : options.c2_grid) {
    for (double c3 : options.c3_grid) {
      double lc1 = -std::numeric_limits<double>::infinity();
      for (const auto& s : samples) lc1 = std::max(lc1, s.logp + s.logm + c2 * s.d2 - c3 * s.t);
      fit.candidates.rows.push_back({c2, c3, lc1});
      if (lc1 < best || (lc1 == best && c2 > fit.c2)) {
        best = lc1;
        fit.c1 = std::exp(lc1);
        fit.c2 = c2;
        fit.c3 = c3;
      }
    }
  }

  CheckReport& r = fit.report;
  r.name = "liyau-fit";
  r.method = Method::Fit;
  r.tolerance = 1e-12;
  r.t_grid = options.t_grid;
  const double lc1 = std::log(fit.c1);
  fit.worst_slack = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    const double slack = s.logp - (lc1 - s.logm - fit.c2 * s.d2 + fit.c3 * s.t);
    fit.worst_slack = std::max(fit.worst_slack, slack);
    r.observe(slack, std::nullopt, s.t);
  }
  for (const auto& [t, b] : need) fit.D = std::max(fit.D, solve_log_linear(t, b));
  double worst_doub = -std::numeric_limits<double>::infinity();
  for (const auto& [t, b] : need) worst_doub = std::max(worst_doub, b - std::log(fit.D) - fit.D * t);
  r.observe(worst_doub, std::nullopt);
  r.observe(mass_error - 1e-10 + r.tolerance, std::nullopt);
  r.details["c1"] = fit.c1;
  r.details["c2"] = fit.c2;
  r.details["c3"] = fit.c3;
  r.details["D"] = fit.D;
  r.details["worstSlack"] = fit.worst_slack;
  r.details["worstDoublingSlack"] = worst_doub;
  r.details["evaluated"] = fit.evaluated;
  r.details["skippedBelowResolution"] = fit.skipped;
  r.details["massError"] = mass_error;
  r.details["centers"] = centers.size();
  r.notes.push_back("certifies feasibility of the bound at the sampled points, not tightness");
  r.finalize();
  return fit;
}

CheckReport feller_route(const WeightedSpace& space, const std::vector<double>& t_grid, std::uint64_t seed) {
  const SpectralCache cache(space);
  CheckReport r;
  r.name = "feller-route";
  r.method = Method::Spectral;
  r.tolerance = 1e-10;
  r.t_grid = t_grid;
  Rng rng(seed);
  Field pos(idx(space.size())), sgn(idx(space.size()));
  for (Eigen::Index x = 0; x < pos.size(); ++x) {
    pos[x] = rng.uniform();
    sgn[x] = rng.uniform(-1.0, 1.0);
  }
  const Field one = Field::Ones(idx(space.size()));
  double conservation = 0.0, negativity = 0.0, growth = 0.0;
  for (double t : t_grid) {
    const double c = sup_norm(cache.evolve(one, t) - one);
    const double neg = -cache.evolve(pos, t).minCoeff();
    const double g = sup_norm(cache.evolve(sgn, t)) - sup_norm(sgn);
    conservation = std::max(conservation, c);
    negativity = std::max(negativity, neg);
    growth = std::max(growth, g);
    r.observe(std::max({c, neg, g}), std::nullopt, t);
  }
  r.details["conservation"] = conservation;
  r.details["negativity"] = negativity;
  r.details["supNormGrowth"] = growth;
  r.notes.push_back("heat kernel is sub-Gaussian here; the Gaussian Li-Yau form is not fitted");
  r.notes.push_back("continuity statements are automatic on finite spaces; mapping properties are checked");
  r.finalize();
  return r;
}

GasketAnchors gasket_anchors(int max_level, int alpha_level, double tolerance, double alpha_band) {
  if (max_level < 1) throw DomainError("gasket anchors need level >= 1");
  GasketAnchors out;
  CheckReport& r = out.report;
  r.name = "gasket-anchors";
  r.method = Method::Exact;
  r.tolerance = 0.0;  // each constraint below is already offset by its own tolerance
  out.table.name = "gasket-anchors";
  out.table.header = {"level", "energy", "directSolveGap", "midpointGap"};

  const std::array<double, 3> corners{1.0, 0.0, 0.0};
  double worst_energy = 0.0, worst_direct = 0.0, worst_mid = 0.0;
  for (int n = 1; n <= max_level; ++n) {
    const GasketLevel g = build_gasket(n);
    const Field f = gasket_harmonic_extend(g, corners);

    std::vector<std::size_t> inner;
    for (std::size_t x = 3; x < g.space.size(); ++x) inner.push_back(x);
    Field data = Field::Zero(idx(g.space.size()));
    for (int k = 0; k < 3; ++k) data[idx(g.boundary[k])] = corners[k];
    const Field direct = harmonic_extension(Region(g.space, inner), data, 0.0);
    const double direct_gap = sup_norm(f - direct);

    // Level-one midpoints sit at the averages of corner coordinates.
    auto find = [&](std::size_t a, std::size_t b) {
      const auto ca = g.space.coords(g.boundary[a]);
      const auto cb = g.space.coords(g.boundary[b]);
      for (std::size_t x = 0; x < g.space.size(); ++x) {
        const auto c = g.space.coords(x);
        if (std::abs(c[0] - 0.5 * (ca[0] + cb[0])) < 1e-12 && std::abs(c[1] - 0.5 * (ca[1] + cb[1])) < 1e-12) return x;
      }
      throw GeometryError("gasket midpoint not found");
    };
    const double mid_gap = std::max({std::abs(f[idx(find(0, 1))] - 0.4), std::abs(f[idx(find(0, 2))] - 0.4),
                                     std::abs(f[idx(find(1, 2))] - 0.2)});
    const double energy = gasket_energy(g, f);
    r.observe(std::abs(energy - 2.0) - tolerance, std::nullopt);
    r.observe(direct_gap - tolerance, std::nullopt);
    r.observe(mid_gap - tolerance, std::nullopt);
    worst_energy = std::max(worst_energy, std::abs(energy - 2.0));
    worst_direct = std::max(worst_direct, direct_gap);
    worst_mid = std::max(worst_mid, mid_gap);
    out.table.rows.push_back({static_cast<double>(n), energy, direct_gap, mid_gap});
  }

  const double target = std::log(3.0) / std::log(2.0);
  if (alpha_level > 0) {
    DoublingOptions d;
    d.counting = true;
    out.alpha = fit_doubling(build_gasket(alpha_level).space, d).alpha;
    r.observe(std::abs(out.alpha - target) - alpha_band, std::nullopt);
    r.details["alpha"] = out.alpha;
    r.details["alphaLevel"] = alpha_level;
  }
  r.details["alphaTarget"] = target;
  r.details["alphaBand"] = alpha_band;
  r.details["levels"] = max_level;
  r.details["worstEnergyGap"] = worst_energy;
  r.details["worstDirectSolveGap"] = worst_direct;
  r.details["worstMidpointGap"] = worst_mid;
  r.details["anchorTolerance"] = tolerance;
  r.finalize();
  return out;
}

ChainRuleResult chain_rule_defect(const BuilderSpec& interval, const std::function<double(double)>& eta,
                                  const std::function<double(double)>& deta, const std::function<double(double)>& u,
                                  std::size_t refinements, double min_rate) {
  if (interval.kind != BuilderKind::Interval) throw DomainError("chain-rule study needs an interval spec");
  ChainRuleResult out;
  BuilderSpec spec = interval;
  double scale = 0.0;
  for (std::size_t level = 0; level <= refinements; ++level) {
    if (level > 0) spec = refine(spec, 2).spec;
    const WeightedSpace space = build(spec);
    const Field uf = sample(space, u);
    Field eu(uf.size()), du(uf.size());
    for (Eigen::Index i = 0; i < uf.size(); ++i) {
      eu[i] = eta(uf[i]);
      du[i] = deta(uf[i]);
    }
    const Field lhs = energy_measure(space, eu, uf);
    const Field rhs = du.cwiseProduct(energy_measure(space, uf, uf));
    out.mesh.push_back(spec.length / static_cast<double>(spec.n));
    out.defect.push_back(sup_norm(lhs - rhs));
    scale = std::max(scale, sup_norm(lhs));
  }
  CheckReport& r = out.report;
  r.name = "chain-rule";
  r.method = Method::Fit;
  r.tolerance = 0.0;
  const double floor = 1e-13 * std::max(1.0, scale);
  const bool exact = std::all_of(out.defect.begin(), out.defect.end(), [&](double d) { return d <= floor; });
  if (exact) {
    out.rate = std::numeric_limits<double>::infinity();
    r.observe(-1.0, std::nullopt);
    r.notes.push_back("defect vanishes at every level");
  } else {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < out.mesh.size(); ++i) {
      if (out.defect[i] > floor) {
        lx.push_back(std::log(out.mesh[i]));
        ly.push_back(std::log(out.defect[i]));
      }
    }
    out.rate = lx.size() >= 2 ? fit_slope(lx, ly) : 0.0;
    r.observe(min_rate - out.rate, std::nullopt);
  }
  r.details["rate"] = std::isfinite(out.rate) ? nlohmann::json(out.rate) : nlohmann::json("inf");
  r.details["minRate"] = min_rate;
  r.details["mesh"] = out.mesh;
  r.details["defect"] = out.defect;
  r.finalize();
  out.table.name = "chain-rule";
  out.table.header = {"level", "mesh", "defect"};
  for (std::size_t i = 0; i < out.mesh.size(); ++i) {
    out.table.rows.push_back({static_cast<double>(i), out.mesh[i], out.defect[i]});
  }
  return out;
}

}  // namespace defectlab
