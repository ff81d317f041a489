#include "defectlab/runner.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "defectlab/builders.hpp"
#include "defectlab/errors.hpp"
#include "defectlab/gasket.hpp"
#include "defectlab/io.hpp"
#include "defectlab/semigroup.hpp"

namespace defectlab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::map<std::string, std::set<std::string>>& known_params() {
  static const std::set<std::string> suite{"trials", "workers", "lambdas", "regions"};
  static const std::map<std::string, std::set<std::string>> table{
      {"esqq0", suite},
      {"kato-brezis", suite},
      {"max-principle", suite},
      {"lq-positivity", {"trials", "workers", "regions"}},
      {"regularity", {"trials", "workers", "lambdas", "regions", "qs", "cs"}},
      {"mc-vs-exact",
       {"configs", "paths", "max_events", "workers", "reruns", "max_region", "required_fraction", "regions"}},
      {"doubling", {"radii", "centers", "counting", "interior_centers"}},
      {"liyau", {"t_grid", "centers", "c2_grid", "c3_grid", "resolution"}},
      {"feller", {"t_grid"}},
      {"chain-rule", {"cells", "length", "refinements", "eta", "u", "min_rate"}},
      {"gasket", {"max_level", "alpha_level", "tolerance", "alpha_band"}},
  };
  return table;
}

// Typed access to one params object; every read key is remembered so that
// leftovers can be reported.
class Params {
 public:
  Params(json values, std::string prefix) : values_(std::move(values)), prefix_(std::move(prefix)) {}

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!values_.contains(key)) return fallback;
    try {
      return values_.at(key).get<T>();
    } catch (const json::exception&) {
      throw UsageError(prefix_ + "." + key, "wrong type");
    }
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const double v = get<double>(key, static_cast<double>(fallback));
    if (!(v >= 0.0) || v != std::floor(v)) throw UsageError(prefix_ + "." + key, "expected a nonnegative integer");
    return static_cast<std::size_t>(v);
  }

  std::vector<double> list(const std::string& key, std::vector<double> fallback) {
    auto v = get<std::vector<double>>(key, std::move(fallback));
    return v;
  }

  std::string field(const std::string& key) const { return prefix_ + "." + key; }

  void reject_unknown(const std::set<std::string>& allowed) const {
    for (const auto& [k, _] : values_.items()) {
      if (!allowed.count(k) && !known_params().count(k)) throw UsageError(prefix_ + "." + k, "unknown parameter");
    }
  }

 private:
  json values_;
  std::string prefix_;
  std::set<std::string> used_;
};

std::uint64_t read_seed(const json& config) {
  if (!config.contains("seed")) return 0;
  const json& s = config.at("seed");
  if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
    throw UsageError("seed", "expected a nonnegative integer");
  }
  return s.get<std::uint64_t>();
}

template <class T>
T field_value(const json& obj, const std::string& key, const std::string& prefix, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(prefix + "." + key, "wrong type");
  }
}

std::size_t field_count(const json& obj, const std::string& key, const std::string& prefix, std::size_t fallback) {
  const double v = field_value<double>(obj, key, prefix, static_cast<double>(fallback));
  if (!(v >= 0.0) || v != std::floor(v)) throw UsageError(prefix + "." + key, "expected a nonnegative integer");
  return static_cast<std::size_t>(v);
}

std::vector<double> parse_t_grid(Params& p) {
  std::vector<double> grid = p.list("t_grid", default_t_grid());
  if (grid.empty()) throw UsageError(p.field("t_grid"), "empty");
  for (double t : grid) {
    if (!(t > 0.0)) throw UsageError(p.field("t_grid"), "times must be positive");
  }
  return grid;
}

std::function<double(double)> named_function(const std::string& name, const std::string& field, bool derivative) {
  if (name == "identity") return derivative ? [](double) { return 1.0; } : [](double s) { return s; };
  if (name == "square") return derivative ? [](double s) { return 2.0 * s; } : [](double s) { return s * s; };
  if (name == "cube") return derivative ? [](double s) { return 3.0 * s * s; } : [](double s) { return s * s * s; };
  if (name == "constant") return derivative ? [](double) { return 0.0; } : [](double) { return 1.0; };
  if (name == "sine") {
    return derivative ? [](double s) { return std::cos(s); } : [](double s) { return std::sin(s); };
  }
  throw UsageError(field, "unknown function '" + name + "' (identity, square, cube, constant, sine)");
}

std::vector<FamilyPtr> families_for(const json& config, const std::string& base_dir, std::uint64_t seed,
                                    std::size_t regions) {
  std::vector<FamilyPtr> out;
  if (!config.contains("space")) {
    for (const char* name : {"path-64", "grid-10x10", "gasket-3", "er-50"}) {
      out.push_back(family_from_name(name, seed, regions));
    }
    return out;
  }
  const json& space = config.at("space");
  if (!space.is_object()) throw UsageError("space", "expected an object");
  auto named = [&](const std::string& name, const std::string& field) {
    try {
      return family_from_name(name, seed, regions);
    } catch (const DomainError& e) {
      throw UsageError(field, e.what());
    }
  };
  if (space.contains("families")) {
    const json& list = space.at("families");
    if (!list.is_array() || list.empty()) throw UsageError("space.families", "expected a nonempty array of names");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string field = "space.families[" + std::to_string(i) + "]";
      if (!list[i].is_string()) throw UsageError(field, "expected a family name");
      out.push_back(named(list[i].get<std::string>(), field));
    }
    return out;
  }
  if (space.contains("family")) {
    if (!space.at("family").is_string()) throw UsageError("space.family", "expected a family name");
    out.push_back(named(space.at("family").get<std::string>(), "space.family"));
    return out;
  }
  out.push_back(make_family("custom", space_from_json(space, base_dir, seed), regions, seed));
  return out;
}

struct Ran {
  CheckReport report;
  std::vector<Table> tables;
};

Ran run_one(const std::string& name, const json& config, Params& p, const std::string& base_dir,
            std::uint64_t seed) {
  p.reject_unknown(known_params().at(name));
  auto suite = [&](std::size_t default_trials) {
    SuiteOptions o;
    o.trials = p.count("trials", default_trials);
    o.workers = static_cast<unsigned>(std::max<std::size_t>(1, p.count("workers", 1)));
    o.lambdas = p.list("lambdas", o.lambdas);
    for (double l : o.lambdas) {
      if (!(l >= 0.0)) throw UsageError(p.field("lambdas"), "lambda must be nonnegative");
    }
    o.seed = seed;
    return o;
  };
  auto need_space = [&]() {
    if (!config.contains("space")) throw UsageError("space", "experiment '" + name + "' needs a space");
    return space_from_json(config.at("space"), base_dir, seed);
  };

  Ran out;
  if (name == "esqq0" || name == "kato-brezis" || name == "max-principle" || name == "lq-positivity" ||
      name == "regularity") {
    const SuiteOptions o = suite(100);
    const auto fams = families_for(config, base_dir, seed, p.count("regions", 2));
    const auto v = view(fams);
    if (name == "esqq0") out.report = esqq0_suite(v, o);
    if (name == "kato-brezis") out.report = kato_brezis_suite(v, o);
    if (name == "max-principle") out.report = max_principle_suite(v, o);
    if (name == "lq-positivity") out.report = lq_positivity_suite(v, o);
    if (name == "regularity") {
      const auto qs = p.list("qs", {2, 3, 4, 8});
      const auto cs = p.list("cs", {0, 0.1});
      for (double q : qs) {
        if (!(q > 1.0)) throw UsageError(p.field("qs"), "q must exceed 1");
      }
      for (double c : cs) {
        if (!(c >= 0.0)) throw UsageError(p.field("cs"), "c must be nonnegative");
      }
      out.report = regularity_suite(v, o, qs, cs);
    }
  } else if (name == "mc-vs-exact") {
    McOptions o;
    o.configs = p.count("configs", o.configs);
    o.paths = p.count("paths", o.paths);
    o.max_events = p.count("max_events", o.max_events);
    o.workers = static_cast<unsigned>(std::max<std::size_t>(1, p.count("workers", 1)));
    o.reruns = p.count("reruns", o.reruns);
    o.max_region = p.count("max_region", o.max_region);
    o.required_fraction = p.get<double>("required_fraction", o.required_fraction);
    if (o.paths < 2) throw UsageError(p.field("paths"), "need at least 2 paths");
    if (o.max_region < 1) throw UsageError(p.field("max_region"), "must be positive");
    o.seed = seed;
    const auto fams = families_for(config, base_dir, seed, p.count("regions", 2));
    Table t;
    out.report = mc_vs_exact_suite(view(fams), o, &t);
    out.tables.push_back(std::move(t));
  } else if (name == "doubling") {
    DoublingOptions o;
    o.radii = p.list("radii", {});
    o.centers = p.count("centers", o.centers);
    o.counting = p.get<bool>("counting", false);
    o.interior_centers = p.get<bool>("interior_centers", true);
    o.seed = seed;
    if (!o.radii.empty() && o.radii.size() < 3) throw UsageError(p.field("radii"), "need at least 3 radii");
    DoublingFit fit = fit_doubling(need_space(), o);
    out.report = std::move(fit.report);
    out.tables.push_back(std::move(fit.table));
  } else if (name == "liyau") {
    LiYauOptions o;
    o.t_grid = parse_t_grid(p);
    o.centers = p.count("centers", o.centers);
    o.c2_grid = p.list("c2_grid", o.c2_grid);
    o.c3_grid = p.list("c3_grid", o.c3_grid);
    o.resolution = p.get<double>("resolution", o.resolution);
    o.seed = seed;
    LiYauFit fit = fit_liyau(need_space(), o);
    out.report = std::move(fit.report);
    out.tables.push_back(std::move(fit.candidates));
  } else if (name == "feller") {
    const auto grid = parse_t_grid(p);
    out.report = feller_route(need_space(), grid, seed);
  } else if (name == "chain-rule") {
    const std::size_t cells = p.count("cells", 8);
    const double length = p.get<double>("length", 1.0);
    if (cells < 1) throw UsageError(p.field("cells"), "must be positive");
    if (!(length > 0.0)) throw UsageError(p.field("length"), "must be positive");
    const std::string eta = p.get<std::string>("eta", "square");
    const std::string u = p.get<std::string>("u", "identity");
    ChainRuleResult r = chain_rule_defect(interval_spec(cells, length), named_function(eta, p.field("eta"), false),
                                          named_function(eta, p.field("eta"), true),
                                          named_function(u, p.field("u"), false), p.count("refinements", 4),
                                          p.get<double>("min_rate", 0.9));
    out.report = std::move(r.report);
    out.tables.push_back(std::move(r.table));
  } else if (name == "gasket") {
    const int max_level = static_cast<int>(p.count("max_level", 5));
    const int alpha_level = static_cast<int>(p.count("alpha_level", 8));
    if (max_level < 1 || max_level > kMaxGasketLevel) throw UsageError(p.field("max_level"), "out of range");
    if (alpha_level > kMaxGasketLevel) throw UsageError(p.field("alpha_level"), "out of range");
    GasketAnchors a =
        gasket_anchors(max_level, alpha_level, p.get<double>("tolerance", 1e-12), p.get<double>("alpha_band", 0.1));
    out.report = std::move(a.report);
    out.tables.push_back(std::move(a.table));
  }
  return out;
}

}  // namespace

std::vector<std::string> experiment_names() {
  std::vector<std::string> out;
  for (const auto& [k, _] : known_params()) out.push_back(k);
  return out;
}

WeightedSpace space_from_json(const json& spec, const std::string& base_dir, std::uint64_t seed,
                              const std::string& field) {
  if (!spec.is_object()) throw UsageError(field, "expected an object");
  if (spec.contains("file")) {
    if (!spec.at("file").is_string()) throw UsageError(field + ".file", "expected a path");
    fs::path path = spec.at("file").get<std::string>();
    if (path.is_relative()) path = fs::path(base_dir) / path;
    if (!fs::exists(path)) throw UsageError(field + ".file", "no such file: " + path.string());
    return read_space_file(path.string());
  }
  if (spec.contains("family")) {
    if (!spec.at("family").is_string()) throw UsageError(field + ".family", "expected a family name");
    try {
      return family_from_name(spec.at("family").get<std::string>(), seed, 1)->space;
    } catch (const DomainError& e) {
      throw UsageError(field + ".family", e.what());
    }
  }
  if (!spec.contains("builder")) throw UsageError(field, "expected one of file, builder, family, families");
  const json& b = spec.at("builder");
  const std::string bf = field + ".builder";
  if (!b.is_object()) throw UsageError(bf, "expected an object");
  const std::string kind = field_value<std::string>(b, "kind", bf, "");
  if (kind.empty()) throw UsageError(bf + ".kind", "missing");
  if (kind == "gasket") {
    const std::size_t level = field_count(b, "level", bf, 3);
    if (level > static_cast<std::size_t>(kMaxGasketLevel)) throw UsageError(bf + ".level", "out of range");
    const std::string m = field_value<std::string>(b, "measure", bf, "cell");
    if (m != "cell" && m != "uniform") throw UsageError(bf + ".measure", "expected cell or uniform");
    return build_gasket(static_cast<int>(level), m == "cell" ? GasketMeasure::Cell : GasketMeasure::UniformVertex)
        .space;
  }
  BuilderSpec s;
  try {
    s.kind = builder_kind_from_string(kind);
  } catch (const DomainError& e) {
    throw UsageError(bf + ".kind", e.what());
  }
  const double spacing = field_value<double>(b, "spacing", bf, 1.0);
  switch (s.kind) {
    case BuilderKind::Path:
      s = path_spec(field_count(b, "n", bf, 64), spacing);
      break;
    case BuilderKind::Grid:
      s = grid_spec(field_count(b, "rows", bf, 10), field_count(b, "cols", bf, 10), spacing);
      break;
    case BuilderKind::Interval:
      s = interval_spec(field_count(b, "cells", bf, 8), field_value<double>(b, "length", bf, 1.0));
      break;
    case BuilderKind::ErdosRenyi: {
      const std::size_t n = field_count(b, "n", bf, 50);
      s = erdos_renyi_spec(n, field_value<double>(b, "p", bf, n ? 4.0 / static_cast<double>(n) : 0.0),
                           field_count(b, "seed", bf, seed));
      break;
    }
  }
  try {
    return build(s);
  } catch (const DomainError& e) {
    throw UsageError(bf, e.what());
  }
}

RunOutcome run_config(const json& config, const std::string& base_dir) {
  if (!config.is_object()) throw UsageError("config", "expected a JSON object");
  for (const auto& [k, _] : config.items()) {
    static const std::set<std::string> top{"experiment", "experiments", "space", "params", "seed", "out"};
    if (!top.count(k)) throw UsageError(k, "unknown field");
  }
  std::vector<std::string> names;
  if (config.contains("experiment") == config.contains("experiments")) {
    throw UsageError("experiment", "give exactly one of experiment or experiments");
  }
  if (config.contains("experiment")) {
    if (!config.at("experiment").is_string()) throw UsageError("experiment", "expected a name");
    names.push_back(config.at("experiment").get<std::string>());
  } else {
    const json& list = config.at("experiments");
    if (!list.is_array() || list.empty()) throw UsageError("experiments", "expected a nonempty array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!list[i].is_string()) throw UsageError("experiments[" + std::to_string(i) + "]", "expected a name");
      names.push_back(list[i].get<std::string>());
    }
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!known_params().count(names[i])) {
      const std::string field = config.contains("experiment") ? "experiment" : "experiments[" + std::to_string(i) + "]";
      std::string all;
      for (const auto& n : experiment_names()) all += (all.empty() ? "" : ", ") + n;
      throw UsageError(field, "unknown experiment '" + names[i] + "' (one of " + all + ")");
    }
  }
  const json params = config.value("params", json::object());
  if (!params.is_object()) throw UsageError("params", "expected an object");
  const std::uint64_t seed = read_seed(config);

  RunOutcome out;
  out.report = {{"schema", kBundleSchema}, {"config", config}, {"reports", json::array()}};
  out.timings = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string& name = names[i];
    // Per-experiment objects override the shared flat keys.
    json merged = json::object();
    for (const auto& [k, v] : params.items()) {
      if (!known_params().count(k)) merged[k] = v;
    }
    std::string prefix = "params";
    if (params.contains(name)) {
      if (!params.at(name).is_object()) throw UsageError("params." + name, "expected an object");
      for (const auto& [k, v] : params.at(name).items()) merged[k] = v;
    }
    // Shared keys only need to make sense for some experiment in the run.
    json own = json::object();
    for (const auto& [k, v] : merged.items()) {
      const bool specific = params.contains(name) && params.at(name).contains(k);
      if (specific || known_params().at(name).count(k)) {
        own[k] = v;
        continue;
      }
      bool anyone = false;
      for (const auto& n : names) anyone = anyone || known_params().at(n).count(k);
      if (!anyone) throw UsageError("params." + k, "unknown parameter");
    }
    if (params.contains(name)) prefix = "params." + name;
    Params p(own, prefix);

    const auto t0 = std::chrono::steady_clock::now();
    Ran ran;
    try {
      ran = run_one(name, config, p, base_dir, seed);
    } catch (const DomainError& e) {
      throw UsageError(prefix, e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json r = to_json(ran.report);
    r["experiment"] = name;
    out.report["reports"].push_back(r);
    out.timings[std::to_string(i) + "-" + name] = seconds;
    out.pass = out.pass && ran.report.pass;
    for (auto& t : ran.tables) {
      t.name = std::to_string(i) + "-" + name + "-" + t.name;
      out.tables.push_back(std::move(t));
    }
  }
  out.report["verdict"] = out.pass ? "pass" : "fail";
  return out;
}

void write_outcome(const RunOutcome& outcome, const std::string& out_dir) {
  fs::create_directories(out_dir);
  auto open = [&](const std::string& file) {
    std::ofstream os(fs::path(out_dir) / file);
    if (!os) throw UsageError("out", "cannot write " + (fs::path(out_dir) / file).string());
    return os;
  };
  {
    auto os = open("report.json");
    write_json(os, outcome.report);
    os << "\n";
  }
  {
    auto os = open("timings.json");
    write_json(os, outcome.timings);
    os << "\n";
  }
  for (const auto& t : outcome.tables) {
    auto os = open(t.name + ".csv");
    write_csv(os, t);
  }
}

int run_config_file(const std::string& path, const std::string& out_override) {
  std::ifstream in(path);
  if (!in) throw UsageError("config", "cannot read " + path);
  json config;
  try {
    config = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config", std::string("malformed JSON: ") + e.what());
  }
  const std::string base = fs::path(path).parent_path().string();
  RunOutcome out = run_config(config, base.empty() ? "." : base);
  std::string dir = out_override;
  if (dir.empty()) {
    if (!config.contains("out") || !config.at("out").is_string()) throw UsageError("out", "missing output directory");
    fs::path p = config.at("out").get<std::string>();
    if (p.is_relative()) p = fs::path(base.empty() ? "." : base) / p;
    dir = p.string();
  }
  write_outcome(out, dir);
  return out.pass ? 0 : 1;
}

}  // namespace defectlab
