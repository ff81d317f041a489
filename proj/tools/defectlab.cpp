#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "defectlab/builders.hpp"
#include "defectlab/errors.hpp"
#include "defectlab/gasket.hpp"
#include "defectlab/io.hpp"
#include "defectlab/runner.hpp"
#include "defectlab/semigroup.hpp"
#include "defectlab/subharmonic.hpp"

using namespace defectlab;
using nlohmann::json;

namespace {

constexpr int kUsage = 2;

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(flag, "not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError(flag, "empty list");
  return out;
}

// "label:n" for --ball and --bfs.
std::pair<std::size_t, std::size_t> parse_anchor(const WeightedSpace& space, const std::string& text,
                                                 const std::string& flag) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw UsageError(flag, "expected LABEL:N");
  const auto x = space.index_of(text.substr(0, colon));
  if (!x) throw UsageError(flag, "unknown vertex '" + text.substr(0, colon) + "'");
  try {
    return {*x, std::stoul(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw UsageError(flag, "expected LABEL:N");
  }
}

void emit(const json& value, const std::string& out) {
  if (out.empty()) {
    write_json(std::cout, value);
    std::cout << "\n";
    return;
  }
  std::ofstream os(out);
  if (!os) throw UsageError("--out", "cannot write " + out);
  write_json(os, value);
  os << "\n";
}

struct GenArgs {
  std::string kind;
  std::size_t n = 64, rows = 10, cols = 10, cells = 8, level = 3;
  double spacing = 1.0, length = 1.0, p = -1.0;
  std::string measure = "cell";
  std::uint64_t seed = 0;
  std::string out;
};

struct CheckArgs {
  std::string which;
  std::string space, family, field, region, ball, bfs, part = "B", t_grid, out;
  double lambda = 0.0;
  std::optional<double> tol;
  std::uint64_t seed = 0;
};

struct ExperimentArgs {
  std::string name, space, out, t_grid;
  std::vector<std::string> families, params;
  std::vector<double> lambdas;
  std::optional<std::size_t> trials, workers;
  std::uint64_t seed = 0;
};

int do_gen(const GenArgs& a) {
  json builder{{"kind", a.kind}};
  if (a.kind == "gasket") {
    builder["level"] = a.level;
    builder["measure"] = a.measure;
  } else {
    builder["n"] = a.n;
    builder["rows"] = a.rows;
    builder["cols"] = a.cols;
    builder["cells"] = a.cells;
    builder["spacing"] = a.spacing;
    builder["length"] = a.length;
    builder["seed"] = a.seed;
    if (a.p >= 0.0) builder["p"] = a.p;
  }
  const WeightedSpace space = space_from_json(json{{"builder", builder}}, ".", a.seed, "gen");
  if (a.out.empty()) {
    write_space(std::cout, space);
  } else {
    write_space_file(a.out, space);
  }
  return 0;
}

int do_check(const CheckArgs& a) {
  if (a.space.empty() == a.family.empty()) throw UsageError("--space", "give exactly one of --space or --family");
  const WeightedSpace space = a.space.empty() ? family_from_name(a.family, a.seed, 1)->space : read_space_file(a.space);
  if (a.field.empty()) throw UsageError("--field", "required");
  const Field f = read_field_file(a.field, space);

  std::optional<Region> region;
  const int selectors = !a.region.empty() + !a.ball.empty() + !a.bfs.empty();
  if (selectors > 1) throw UsageError("--region", "give at most one of --region, --ball, --bfs");
  if (!a.region.empty()) {
    std::vector<std::size_t> members;
    std::stringstream ss(a.region);
    std::string label;
    while (std::getline(ss, label, ',')) {
      const auto x = space.index_of(label);
      if (!x) throw UsageError("--region", "unknown vertex '" + label + "'");
      members.push_back(*x);
    }
    region.emplace(space, members);
  } else if (!a.ball.empty()) {
    const auto [c, hops] = parse_anchor(space, a.ball, "--ball");
    region.emplace(ball_region(space, c, hops));
  } else if (!a.bfs.empty()) {
    const auto [c, count] = parse_anchor(space, a.bfs, "--bfs");
    region.emplace(bfs_region(space, c, count));
  }

  DefectivenessOptions opts;
  if (!a.t_grid.empty()) opts.t_grid = parse_list(a.t_grid, "--t-grid");
  opts.tolerance = a.tol;

  CheckReport report;
  if (a.which == "subharmonic") {
    report = weak_subharmonicity_check(region ? *region : whole_space(space), f, a.lambda, a.tol);
  } else if (a.which == "defective") {
    report = region ? defectiveness_check(*region, region->restrict(f), a.lambda, opts)
                    : defectiveness_check(space, f, a.lambda, opts);
  } else if (a.which == "shift-defective") {
    if (!region) throw UsageError("--region", "shift-defective needs a region");
    report = ShiftChecker(*region, a.lambda).check(f, a.tol, opts).report;
  } else if (a.which == "max-principle") {
    if (!region) throw UsageError("--region", "max-principle needs a region");
    if (a.part != "A" && a.part != "B") throw UsageError("--part", "expected A or B");
    report = maximum_principle_check(*region, f, a.part == "A" ? MaxPrinciplePart::A : MaxPrinciplePart::B, a.tol);
  }
  emit(to_json(report), a.out);
  return report.pass ? 0 : 1;
}

int do_experiment(const ExperimentArgs& a) {
  json config{{"experiment", a.name}, {"seed", a.seed}};
  if (!a.space.empty() && !a.families.empty()) throw UsageError("--space", "give at most one of --space or --family");
  if (!a.space.empty()) config["space"] = {{"file", a.space}};
  if (a.families.size() == 1) config["space"] = {{"family", a.families[0]}};
  if (a.families.size() > 1) config["space"] = {{"families", a.families}};
  json params = json::object();
  if (a.trials) params[a.name == "mc-vs-exact" ? "configs" : "trials"] = *a.trials;
  if (a.workers) params["workers"] = *a.workers;
  if (!a.lambdas.empty()) params["lambdas"] = a.lambdas;
  if (!a.t_grid.empty()) params["t_grid"] = parse_list(a.t_grid, "--t-grid");
  for (const auto& kv : a.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--param", "expected KEY=VALUE, got '" + kv + "'");
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    try {
      params[key] = json::parse(value);
    } catch (const json::parse_error&) {
      params[key] = value;
    }
  }
  config["params"] = params;
  const RunOutcome out = run_config(config, ".");
  if (!a.out.empty()) write_outcome(out, a.out);
  for (const auto& r : out.report["reports"]) {
    std::cout << r["experiment"].get<std::string>() << ": " << r["verdict"].get<std::string>()
              << " (worst violation "
              << (r["worstViolation"].is_number() ? format_sci(r["worstViolation"].get<double>()) : "none") << ")\n";
  }
  if (a.out.empty()) emit(out.report, "");
  return out.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subharmonicity and shift-defectiveness checks on finite weighted spaces"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Write a space file from a builder");
  g->add_option("kind", gen.kind, "path, grid, interval, erdos-renyi or gasket")->required();
  g->add_option("--n", gen.n, "vertices (path, erdos-renyi)");
  g->add_option("--rows", gen.rows);
  g->add_option("--cols", gen.cols);
  g->add_option("--cells", gen.cells, "interval cells");
  g->add_option("--spacing", gen.spacing);
  g->add_option("--length", gen.length, "interval length");
  g->add_option("--p", gen.p, "edge probability (default 4/n)");
  g->add_option("--level", gen.level, "gasket level");
  g->add_option("--measure", gen.measure, "gasket measure: cell or uniform");
  g->add_option("--seed", gen.seed);
  g->add_option("--out", gen.out, "output file (default stdout)");

  CheckArgs check;
  auto* c = app.add_subcommand("check", "Run one checker on a field");
  c->add_option("which", check.which, "subharmonic, defective, shift-defective or max-principle")
      ->required()
      ->check(CLI::IsMember({"subharmonic", "defective", "shift-defective", "max-principle"}));
  c->add_option("--space", check.space, "space file");
  c->add_option("--family", check.family, "named family instead of a file");
  c->add_option("--field", check.field, "JSON field file");
  c->add_option("--region", check.region, "comma-separated vertex ids");
  c->add_option("--ball", check.ball, "LABEL:HOPS graph ball");
  c->add_option("--bfs", check.bfs, "LABEL:COUNT breadth-first region");
  c->add_option("--part", check.part, "max-principle part A or B");
  c->add_option("--lambda", check.lambda);
  c->add_option("--tol", check.tol);
  c->add_option("--seed", check.seed);
  c->add_option("--t-grid", check.t_grid, "comma-separated times");
  c->add_option("--out", check.out, "report file (default stdout)");

  ExperimentArgs exp;
  auto* e = app.add_subcommand("experiment", "Run one experiment suite");
  e->add_option("name", exp.name, "experiment name")->required();
  e->add_option("--space", exp.space, "space file");
  e->add_option("--family", exp.families, "named family (repeatable)");
  e->add_option("--trials", exp.trials, "trials or configurations");
  e->add_option("--workers", exp.workers);
  e->add_option("--lambda", exp.lambdas, "lambda values (repeatable)");
  e->add_option("--seed", exp.seed);
  e->add_option("--t-grid", exp.t_grid, "comma-separated times");
  e->add_option("--param", exp.params, "KEY=VALUE extra parameter (repeatable)");
  e->add_option("--out", exp.out, "bundle directory");

  std::string config_path, run_out;
  auto* r = app.add_subcommand("run", "Run a config file and write its bundle");
  r->add_option("config", config_path, "config file")->required();
  r->add_option("--out", run_out, "bundle directory (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*g) return do_gen(gen);
    if (*c) return do_check(check);
    if (*e) return do_experiment(exp);
    if (*r) return run_config_file(config_path, run_out);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return kUsage;
  } catch (const FormatError& err) {
    std::cerr << "format error: " << err.what() << "\n";
    return kUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return kUsage;
}
