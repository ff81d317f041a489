#include "defectlab/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "defectlab/errors.hpp"
#include "defectlab/harmonic.hpp"
#include "defectlab/parallel.hpp"
#include "defectlab/random.hpp"

namespace defectlab {

namespace {

constexpr std::size_t kBlock = 1024;

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t censored = 0;

  void push(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  void merge(const Moments& o) {
    censored += o.censored;
    if (o.n == 0) return;
    if (n == 0) {
      const std::size_t c = censored;
      *this = o;
      censored = c;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }
};

}  // namespace

ExitEstimate simulate_exit(const Region& region, const WalkConfig& config, const Field& f) {
  const auto& space = region.space();
  if (config.paths == 0) throw DomainError("simulate_exit: paths must be positive");
  if (!region.contains(config.start)) throw DomainError("simulate_exit: start vertex must lie in V");
  if (region.boundary().empty()) throw DomainError("simulate_exit: V needs a nonempty vertex boundary");
  if (!(config.lambda >= 0.0)) throw DomainError("simulate_exit: lambda must be nonnegative");
  if (static_cast<std::size_t>(f.size()) != space.size()) throw DomainError("simulate_exit: f must be an ambient field");

  // Cumulative jump weights per vertex for inverse-CDF neighbor draws.
  std::vector<double> cumulative;
  std::vector<std::size_t> offset(space.size() + 1, 0);
  for (std::size_t x = 0; x < space.size(); ++x) {
    double run = 0.0;
    for (const auto& nb : space.neighbors(x)) {
      run += nb.weight;
      cumulative.push_back(run);
    }
    offset[x + 1] = cumulative.size();
  }

  const std::size_t blocks = (config.paths + kBlock - 1) / kBlock;
  std::vector<Moments> partial(blocks);
  parallel_for(blocks, config.workers, [&](std::size_t b) {
    Moments acc;
    const std::size_t end = std::min(config.paths, (b + 1) * kBlock);
    for (std::size_t p = b * kBlock; p < end; ++p) {
      Rng rng(config.seed, p);
      std::size_t x = config.start;
      double tau = 0.0;
      bool exited = false;
      double value = 0.0;
      for (std::size_t events = 0; events < config.max_events; ++events) {
        const double deg = space.degree(x);
        if (deg <= 0.0) break;
        tau += rng.exponential(deg / space.measure(x));
        const double u = rng.uniform() * deg;
        const auto first = cumulative.begin() + static_cast<std::ptrdiff_t>(offset[x]);
        const auto last = cumulative.begin() + static_cast<std::ptrdiff_t>(offset[x + 1]);
        auto it = std::upper_bound(first, last, u);
        if (it == last) --it;
        const std::size_t y = space.neighbors(x)[static_cast<std::size_t>(it - first)].vertex;
        if (!region.contains(y)) {
          value = std::exp(-config.lambda * tau) * f[static_cast<Eigen::Index>(y)];
          exited = true;
          break;
        }
        x = y;
      }
      if (exited) {
        acc.push(value);
      } else {
        ++acc.censored;
        if (config.lambda > 0.0) acc.push(0.0);
      }
    }
    partial[b] = acc;
  });

  Moments total;
  for (const auto& m : partial) total.merge(m);

  ExitEstimate est;
  est.paths = config.paths;
  est.censored = total.censored;
  est.censored_fraction = static_cast<double>(total.censored) / static_cast<double>(config.paths);
  if (est.censored_fraction >= 0.01) {
    std::ostringstream os;
    os << "censored fraction " << est.censored_fraction << " >= 0.01 at maxEventHorizon " << config.max_events
       << "; raise maxEventHorizon";
    throw HorizonError(os.str());
  }
  est.mean = total.mean;
  est.standard_error =
      total.n > 1 ? std::sqrt(total.m2 / static_cast<double>(total.n - 1) / static_cast<double>(total.n)) : 0.0;
  return est;
}

Field exact_exit_functional(const Region& region, double lambda, const Field& f) {
  return region.restrict(harmonic_extension(region, f, lambda));
}

namespace {

void require_inside(const Region& outer, const Region& inner) {
  if (&outer.space() != &inner.space()) throw DomainError("regions live on different spaces");
  const Region closure = inner.closure();
  for (std::size_t x : closure.members()) {
    if (!outer.contains(x)) throw DomainError("closure of V must lie inside U");
  }
  if (closure.size() >= outer.size()) throw DomainError("U \\ closure(V) must be nonempty");
}

void observe_region(CheckReport& report, const Region& outer, const Region& inner, const Field& f, double lambda,
                    const ProbabilisticOptions& options, std::uint64_t stream) {
  (void)outer;
  if (options.mode == ExitMode::Exact) {
    const Field u = exact_exit_functional(inner, lambda, f);
    for (std::size_t i = 0; i < inner.size(); ++i) {
      const std::size_t x = inner.members()[i];
      report.observe(f[static_cast<Eigen::Index>(x)] - u[static_cast<Eigen::Index>(i)], x);
    }
    return;
  }
  for (std::size_t i = 0; i < inner.size(); ++i) {
    const std::size_t x = inner.members()[i];
    WalkConfig cfg;
    cfg.start = x;
    cfg.lambda = lambda;
    cfg.paths = options.paths;
    cfg.max_events = options.max_events;
    cfg.seed = derive_seed(options.seed, stream * 1000003ULL + x);
    cfg.workers = options.workers;
    const ExitEstimate est = simulate_exit(inner, cfg, f);
    report.observe(f[static_cast<Eigen::Index>(x)] - (est.mean + 3.0 * est.standard_error), x);
  }
}

}  // namespace

CheckReport probabilistic_defectiveness_check(const Region& outer, const Region& inner, const Field& f,
                                              double lambda, const ProbabilisticOptions& options) {
  require_inside(outer, inner);
  CheckReport r;
  r.name = "probabilistic-defectiveness";
  r.method = options.mode == ExitMode::Exact ? Method::Exact : Method::Stochastic;
  r.lambda = lambda;
  r.tolerance = options.tolerance.value_or(default_tolerance(outer.restrict(f)));
  r.notes.push_back("every x in V is tested (finite analogue of quasi-every x)");
  observe_region(r, outer, inner, f, lambda, options, 0);
  r.finalize();
  return r;
}

CheckReport probabilistic_defectiveness_scan(const Region& outer, const Field& f, double lambda,
                                             const ProbabilisticOptions& options) {
  CheckReport r;
  r.name = "probabilistic-defectiveness-scan";
  r.method = options.mode == ExitMode::Exact ? Method::Exact : Method::Stochastic;
  r.lambda = lambda;
  r.tolerance = options.tolerance.value_or(default_tolerance(outer.restrict(f)));
  std::size_t tested = 0;
  std::uint64_t stream = 1;
  for (std::size_t x : outer.interior()) {
    const Region single(outer.space(), {x});
    if (single.closure().size() >= outer.size()) continue;
    observe_region(r, outer, single, f, lambda, options, stream++);
    ++tested;
  }
  if (!outer.interior().empty()) {
    const Region inner(outer.space(), outer.interior());
    if (inner.closure().size() < outer.size()) {
      observe_region(r, outer, inner, f, lambda, options, stream++);
      ++tested;
    }
  }
  r.details["regionsTested"] = tested;
  if (tested == 0) {
    r.vacuous = true;
    r.notes.push_back("no admissible V inside U");
  }
  r.finalize();
  return r;
}

CheckReport restricted_exit_check(const Region& region, const Field& h_local, double lambda,
                                  std::optional<double> tolerance) {
  if (static_cast<std::size_t>(h_local.size()) != region.size()) throw DomainError("field size does not match region");
  CheckReport r;
  r.name = "restricted-exit";
  r.method = Method::Exact;
  r.lambda = lambda;
  r.tolerance = tolerance.value_or(default_tolerance(h_local));
  const Field ambient = region.extend_by_zero(h_local);
  for (std::size_t i = 0; i < region.size(); ++i) {
    const std::size_t x = region.members()[i];
    const Region single(region.space(), {x});
    if (single.boundary().empty()) {
      // Isolated vertex: the walk never leaves, the functional is 0 for
      // lambda > 0 and undefined otherwise.
      if (lambda > 0.0) r.observe(h_local[static_cast<Eigen::Index>(i)], x);
      continue;
    }
    const double u = exact_exit_functional(single, lambda, ambient)[0];
    r.observe(h_local[static_cast<Eigen::Index>(i)] - u, x);
  }
  r.finalize();
  return r;
}

}  // namespace defectlab
