#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "defectlab/report.hpp"
#include "defectlab/space.hpp"

namespace defectlab {

struct WalkConfig {
  std::size_t start = 0;
  double lambda = 0.0;
  std::size_t paths = 10000;
  std::size_t max_events = 1000000;  // jump cap per path
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

struct ExitEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  double censored_fraction = 0.0;
  std::size_t paths = 0;
  std::size_t censored = 0;
};

// Monte-Carlo estimate of E^x[exp(-lambda tau_V) f(X_{tau_V})] for the
// continuous-time chain with holding rate deg(x)/m(x) and jump law
// w(x,.)/deg(x), whose generator is -H. Censored paths count as 0 when
// lambda > 0 and are dropped when lambda = 0. Bit-identical for a fixed
// config regardless of `workers`.
ExitEstimate simulate_exit(const Region& region, const WalkConfig& config, const Field& f);

// Exact exit functional on the members of V (local field): the
// lambda-harmonic extension of f from the vertex boundary.
Field exact_exit_functional(const Region& region, double lambda, const Field& f);

enum class ExitMode { Exact, MonteCarlo };

struct ProbabilisticOptions {
  ExitMode mode = ExitMode::Exact;
  std::optional<double> tolerance;
  std::size_t paths = 10000;
  std::size_t max_events = 1000000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

// Checks E^x[exp(-lambda tau_V) f(X_tau_V)] >= f(x) at every x in V for a
// single V with closure(V) inside U and U \ closure(V) nonempty. In
// Monte-Carlo mode the estimate plus three standard errors must reach f(x).
CheckReport probabilistic_defectiveness_check(const Region& outer, const Region& inner, const Field& f,
                                              double lambda, const ProbabilisticOptions& options = {});

// Same criterion over the family of singletons {x} for x in U's interior
// (where the geometry allows) together with V = interior(U).
CheckReport probabilistic_defectiveness_scan(const Region& outer, const Field& f, double lambda,
                                             const ProbabilisticOptions& options = {});

// Exit criterion inside the restricted space of U: h is local to U, the walk
// is killed on leaving U, and every singleton {x}, x in U, is tested.
CheckReport restricted_exit_check(const Region& region, const Field& h_local, double lambda,
                                  std::optional<double> tolerance = std::nullopt);

}  // namespace defectlab
