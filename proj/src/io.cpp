#include "defectlab/io.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include <json.hpp>

#include "defectlab/errors.hpp"
#include "defectlab/report.hpp"

namespace defectlab {

namespace {

using nlohmann::json;

// Character iterator that counts the newlines it has stepped over.
class LineCountingIterator {
 public:
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  LineCountingIterator(const char* p, int* line) : p_(p), line_(line) {}
  reference operator*() const { return *p_; }
  LineCountingIterator& operator++() {
    if (*p_ == '\n') ++*line_;
    ++p_;
    return *this;
  }
  LineCountingIterator operator++(int) {
    auto copy = *this;
    ++*this;
    return copy;
  }
  bool operator==(const LineCountingIterator& o) const { return p_ == o.p_; }
  bool operator!=(const LineCountingIterator& o) const { return p_ != o.p_; }

 private:
  const char* p_;
  int* line_;
};

struct Located {
  json doc;
  std::map<std::string, std::vector<int>> lines;  // section -> element start lines
};

Located parse_located(const std::string& text) {
  int line = 1;
  Located out;
  std::string section;
  auto callback = [&](int depth, json::parse_event_t event, json& parsed) {
    if (event == json::parse_event_t::key && depth == 1) section = parsed.get<std::string>();
    if (event == json::parse_event_t::object_start && depth == 2) out.lines[section].push_back(line);
    return true;
  };
  try {
    out.doc = json::parse(LineCountingIterator(text.data(), &line),
                          LineCountingIterator(text.data() + text.size(), &line), callback);
  } catch (const json::parse_error& e) {
    throw FormatError(e.what(), line);
  }
  return out;
}

std::string id_of(const json& v, int line, const char* what) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned()) return std::to_string(v.get<long long>());
  throw FormatError(std::string(what) + " must be a string or integer", line);
}

double number_of(const json& obj, const char* key, int line) {
  if (!obj.contains(key)) throw FormatError(std::string("missing field '") + key + "'", line);
  const json& v = obj.at(key);
  if (!v.is_number()) throw FormatError(std::string("field '") + key + "' must be a number", line);
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw FormatError(std::string("field '") + key + "' must be finite", line);
  return d;
}

}  // namespace

WeightedSpace read_space_string(const std::string& text) {
  const Located loc = parse_located(text);
  const json& doc = loc.doc;
  if (!doc.is_object()) throw FormatError("space file must be a JSON object", 1);
  if (!doc.contains("vertices") || !doc.at("vertices").is_array()) {
    throw FormatError("missing array 'vertices'", 1);
  }
  auto line_of = [&](const std::string& section, std::size_t i) {
    auto it = loc.lines.find(section);
    return it != loc.lines.end() && i < it->second.size() ? it->second[i] : 0;
  };

  SpaceData data;
  std::map<std::string, std::size_t> ids;
  const json& vertices = doc.at("vertices");
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const int line = line_of("vertices", i);
    const json& v = vertices[i];
    if (!v.is_object()) throw FormatError("vertex entries must be objects", line);
    if (!v.contains("id")) throw FormatError("missing field 'id'", line);
    const std::string id = id_of(v.at("id"), line, "vertex id");
    if (!ids.emplace(id, i).second) throw FormatError("duplicate vertex id '" + id + "'", line);
    const double m = number_of(v, "measure", line);
    if (!(m > 0.0)) throw FormatError("measure of vertex '" + id + "' must be positive", line);
    data.labels.push_back(id);
    data.measure.push_back(m);
    if (v.contains("coords")) {
      if (!v.at("coords").is_array()) throw FormatError("'coords' must be an array", line);
      std::vector<double> c;
      for (const auto& x : v.at("coords")) {
        if (!x.is_number()) throw FormatError("coordinates must be numbers", line);
        c.push_back(x.get<double>());
      }
      if (!data.coords.empty() && data.coords.front().size() != c.size()) {
        throw FormatError("coordinate dimension differs from the first vertex", line);
      }
      if (data.coords.size() != i) throw FormatError("either all or no vertices carry coords", line);
      data.coords.push_back(std::move(c));
    } else if (!data.coords.empty()) {
      throw FormatError("either all or no vertices carry coords", line);
    }
    if (v.contains("annotation")) {
      if (!v.at("annotation").is_string()) throw FormatError("'annotation' must be a string", line);
      data.annotations[i] = v.at("annotation").get<std::string>();
    }
  }

  auto endpoint = [&](const json& e, const char* key, int line) {
    if (!e.contains(key)) throw FormatError(std::string("missing field '") + key + "'", line);
    const std::string id = id_of(e.at(key), line, key);
    auto it = ids.find(id);
    if (it == ids.end()) throw FormatError("unknown vertex id '" + id + "'", line);
    return it->second;
  };

  if (doc.contains("edges")) {
    if (!doc.at("edges").is_array()) throw FormatError("'edges' must be an array", 1);
    std::map<std::pair<std::size_t, std::size_t>, int> seen;
    const json& edges = doc.at("edges");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const int line = line_of("edges", i);
      const json& e = edges[i];
      if (!e.is_object()) throw FormatError("edge entries must be objects", line);
      const std::size_t a = endpoint(e, "a", line), b = endpoint(e, "b", line);
      const double w = number_of(e, "weight", line);
      if (a == b) throw FormatError("self-loop at '" + data.labels[a] + "'", line);
      if (w < 0.0) throw FormatError("negative conductance", line);
      auto [it, fresh] = seen.emplace(std::minmax(a, b), line);
      if (!fresh) throw FormatError("duplicate edge (first given on line " + std::to_string(it->second) + ")", line);
      data.edges.push_back({a, b, w});
    }
  }

  if (doc.contains("metric")) {
    if (!doc.at("metric").is_array()) throw FormatError("'metric' must be an array", 1);
    const json& metric = doc.at("metric");
    for (std::size_t i = 0; i < metric.size(); ++i) {
      const int line = line_of("metric", i);
      const json& e = metric[i];
      if (!e.is_object()) throw FormatError("metric entries must be objects", line);
      const std::size_t a = endpoint(e, "a", line), b = endpoint(e, "b", line);
      const double d = number_of(e, "d", line);
      if (d < 0.0) throw FormatError("negative distance", line);
      if (a == b && d != 0.0) throw FormatError("distance of a vertex to itself must be 0", line);
      data.metric.push_back({a, b, d});
    }
  }

  try {
    WeightedSpace space(std::move(data));
    if (space.has_explicit_metric()) {
      if (auto bad = space.metric_violation()) throw FormatError("metric: " + *bad, line_of("metric", 0));
    }
    return space;
  } catch (const DomainError& e) {
    throw FormatError(e.what());
  }
}

WeightedSpace read_space(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_space_string(buf.str());
}

WeightedSpace read_space_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open space file '" + path + "'");
  try {
    return read_space(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_space(std::ostream& out, const WeightedSpace& space) {
  out << "{\n  \"vertices\": [\n";
  for (std::size_t x = 0; x < space.size(); ++x) {
    out << "    {\"id\": " << json(space.label(x)).dump() << ", \"measure\": " << format_sci(space.measure(x));
    if (space.has_coords()) {
      out << ", \"coords\": [";
      const auto c = space.coords(x);
      for (std::size_t k = 0; k < c.size(); ++k) out << (k ? ", " : "") << format_sci(c[k]);
      out << "]";
    }
    if (auto it = space.annotations().find(x); it != space.annotations().end()) {
      out << ", \"annotation\": " << json(it->second).dump();
    }
    out << "}" << (x + 1 < space.size() ? "," : "") << "\n";
  }
  out << "  ],\n  \"edges\": [\n";
  const auto& edges = space.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    out << "    {\"a\": " << json(space.label(edges[i].a)).dump() << ", \"b\": " << json(space.label(edges[i].b)).dump()
        << ", \"weight\": " << format_sci(edges[i].weight) << "}" << (i + 1 < edges.size() ? "," : "") << "\n";
  }
  out << "  ]";
  if (space.has_explicit_metric()) {
    out << ",\n  \"metric\": [\n";
    bool first = true;
    for (std::size_t x = 0; x < space.size(); ++x) {
      for (std::size_t y = x + 1; y < space.size(); ++y) {
        out << (first ? "" : ",\n") << "    {\"a\": " << json(space.label(x)).dump()
            << ", \"b\": " << json(space.label(y)).dump() << ", \"d\": " << format_sci(space.distance(x, y)) << "}";
        first = false;
      }
    }
    out << "\n  ]";
  }
  out << "\n}\n";
}

void write_space_file(const std::string& path, const WeightedSpace& space) {
  std::ofstream out(path);
  if (!out) throw ResourceError("cannot write '" + path + "'");
  write_space(out, space);
}

Field read_field(std::istream& in, const WeightedSpace& space) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
  Field f = Field::Zero(static_cast<Eigen::Index>(space.size()));
  if (doc.is_array()) {
    if (doc.size() != space.size()) {
      throw FormatError("field has " + std::to_string(doc.size()) + " values, space has " +
                        std::to_string(space.size()) + " vertices");
    }
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (!doc[i].is_number()) throw FormatError("value " + std::to_string(i) + " is not a number");
      f[static_cast<Eigen::Index>(i)] = doc[i].get<double>();
    }
    return f;
  }
  if (!doc.is_object()) throw FormatError("field must be an array or an object keyed by vertex id");
  std::vector<bool> seen(space.size(), false);
  for (const auto& [key, value] : doc.items()) {
    const auto x = space.index_of(key);
    if (!x) throw FormatError("unknown vertex '" + key + "'");
    if (!value.is_number()) throw FormatError("value for '" + key + "' is not a number");
    f[static_cast<Eigen::Index>(*x)] = value.get<double>();
    seen[*x] = true;
  }
  for (std::size_t x = 0; x < space.size(); ++x) {
    if (!seen[x]) throw FormatError("no value for vertex '" + space.label(x) + "'");
  }
  return f;
}

Field read_field_file(const std::string& path, const WeightedSpace& space) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read '" + path + "'");
  return read_field(in, space);
}

}  // namespace defectlab
