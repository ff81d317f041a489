#include "defectlab/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace defectlab {

std::string to_string(Method m) {
  switch (m) {
    case Method::Residual: return "residual";
    case Method::Semigroup: return "semigroup";
    case Method::Stochastic: return "stochastic";
    case Method::Exact: return "exact";
    case Method::Spectral: return "spectral";
    case Method::Graph: return "graph";
    case Method::Suite: return "suite";
    case Method::Fit: return "fit";
  }
  return "unknown";
}

void CheckReport::observe(double violation, std::optional<std::size_t> vertex,
                          std::optional<double> time) {
  if (std::isnan(violation)) {
    violation = std::numeric_limits<double>::infinity();
  }
  if (violation > worst_violation) {
    worst_violation = violation;
    witness_vertex = vertex;
    witness_time = time;
  }
}

void CheckReport::finalize() {
  if (vacuous && std::isinf(worst_violation) && worst_violation < 0) {
    pass = true;
    return;
  }
  pass = worst_violation <= tolerance;
}

namespace {

nlohmann::json finite_or_string(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

}  // namespace

nlohmann::json to_json(const CheckReport& r) {
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["name"] = r.name;
  j["verdict"] = r.pass ? "pass" : "fail";
  j["method"] = to_string(r.method);
  j["worstViolation"] = finite_or_string(r.worst_violation);
  nlohmann::json witness = nlohmann::json::object();
  witness["vertex"] = r.witness_vertex ? nlohmann::json(*r.witness_vertex) : nlohmann::json(nullptr);
  witness["time"] = r.witness_time ? nlohmann::json(*r.witness_time) : nlohmann::json(nullptr);
  j["witness"] = witness;
  nlohmann::json params;
  params["lambda"] = r.lambda;
  params["tolerance"] = r.tolerance;
  params["tGrid"] = r.t_grid;
  j["parameters"] = params;
  j["vacuous"] = r.vacuous;
  j["degenerate"] = r.degenerate;
  j["notes"] = r.notes;
  j["details"] = r.details;
  return j;
}

nlohmann::json timings_to_json(const CheckReport& r) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : r.timings) j[k] = v;
  return j;
}

std::string format_sci(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", x);
  return buf;
}

namespace {

void write_value(std::ostream& os, const nlohmann::json& v, int indent, int depth) {
  const auto pad = [&](int d) {
    if (indent > 0) os << '\n' << std::string(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (v.type()) {
    case nlohmann::json::value_t::object: {
      if (v.empty()) {
        os << "{}";
        return;
      }
      os << '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) os << ',';
        first = false;
        pad(depth + 1);
        os << nlohmann::json(it.key()).dump() << (indent > 0 ? ": " : ":");
        write_value(os, it.value(), indent, depth + 1);
      }
      pad(depth);
      os << '}';
      return;
    }
    case nlohmann::json::value_t::array: {
      if (v.empty()) {
        os << "[]";
        return;
      }
      os << '[';
      bool first = true;
      for (const auto& e : v) {
        if (!first) os << ',';
        first = false;
        pad(depth + 1);
        write_value(os, e, indent, depth + 1);
      }
      pad(depth);
      os << ']';
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double x = v.get<double>();
      if (std::isfinite(x)) {
        os << format_sci(x);
      } else {
        os << "null";
      }
      return;
    }
    default:
      os << v.dump();
  }
}

}  // namespace

void write_json(std::ostream& os, const nlohmann::json& value, int indent) {
  write_value(os, value, indent, 0);
  os << '\n';
}

std::string dump_json(const nlohmann::json& value, int indent) {
  std::ostringstream os;
  write_json(os, value, indent);
  return os.str();
}

}  // namespace defectlab
