#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "defectlab/experiments.hpp"

namespace defectlab {

// Config documents:
//   {"experiment": name | "experiments": [name, ...],
//    "space": {"file": path} | {"builder": {...}} | {"family": name} | {"families": [names]},
//    "params": {...}, "seed": n, "out": dir}
// Names: esqq0, kato-brezis, regularity, max-principle, mc-vs-exact,
// lq-positivity, doubling, liyau, feller, chain-rule, gasket.
// Malformed entries raise UsageError naming the field.
struct RunOutcome {
  nlohmann::json report;   // schema, config, verdict, reports
  nlohmann::json timings;  // seconds per experiment, kept apart from the report
  std::vector<Table> tables;
  bool pass = true;
};

inline constexpr const char* kBundleSchema = "defectlab.bundle/1";

std::vector<std::string> experiment_names();

// Relative space files resolve against `base_dir`.
RunOutcome run_config(const nlohmann::json& config, const std::string& base_dir = ".");

// report.json, timings.json and one CSV per table.
void write_outcome(const RunOutcome& outcome, const std::string& out_dir);

// Reads, runs and writes the bundle to the config's "out" (or `out_override`).
// Returns 0 when every verdict passes, 1 otherwise; usage problems throw.
int run_config_file(const std::string& path, const std::string& out_override = "");

// Space from a {"file"|"builder"|"family"} object; `field` prefixes errors.
WeightedSpace space_from_json(const nlohmann::json& spec, const std::string& base_dir, std::uint64_t seed,
                              const std::string& field = "space");

}  // namespace defectlab
