#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace defectlab {

enum class Method { Residual, Semigroup, Stochastic, Exact, Spectral, Graph, Suite, Fit };

std::string to_string(Method m);

// Verdict for any checker or experiment.
//
// `worst_violation` is the largest raw value of (constraint LHS - RHS) over
// all constraints that were evaluated; `pass` holds iff it does not exceed
// `tolerance`. A report with no constraints at all is `vacuous` and passes.
struct CheckReport {
  std::string name;
  Method method = Method::Residual;
  bool pass = true;
  double worst_violation = -std::numeric_limits<double>::infinity();
  std::optional<std::size_t> witness_vertex;
  std::optional<double> witness_time;
  double lambda = 0.0;
  double tolerance = 0.0;
  std::vector<double> t_grid;
  bool vacuous = false;
  bool degenerate = false;
  std::vector<std::string> notes;
  nlohmann::json details = nlohmann::json::object();
  std::map<std::string, double> timings;

  // Folds one constraint value into the report, keeping the worst witness.
  void observe(double violation, std::optional<std::size_t> vertex,
               std::optional<double> time = std::nullopt);
  // Recomputes `pass` from the worst violation and tolerance.
  void finalize();
};

// Versioned JSON form without timings (those go through timings_to_json so
// golden comparisons can ignore them).
nlohmann::json to_json(const CheckReport& report);
nlohmann::json timings_to_json(const CheckReport& report);

inline constexpr const char* kReportSchema = "defectlab.report/1";

// Writes JSON with every floating-point number in full-precision scientific
// notation. Integers stay integers.
void write_json(std::ostream& os, const nlohmann::json& value, int indent = 2);
std::string dump_json(const nlohmann::json& value, int indent = 2);

// "%.17e"
std::string format_sci(double x);

}  // namespace defectlab
