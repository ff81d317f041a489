#include "defectlab/space.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "defectlab/errors.hpp"

namespace defectlab {

namespace {

void require_size(const WeightedSpace& space, const Field& f, const char* what) {
  if (static_cast<std::size_t>(f.size()) != space.size()) {
    std::ostringstream os;
    os << what << ": field has " << f.size() << " values, space has " << space.size() << " vertices";
    throw DomainError(os.str());
  }
}

}  // namespace

WeightedSpace::WeightedSpace(SpaceData data) {
  const std::size_t n = data.measure.size();
  if (n == 0) throw DomainError("space must have at least one vertex");

  measure_.resize(static_cast<Eigen::Index>(n));
  for (std::size_t x = 0; x < n; ++x) {
    const double m = data.measure[x];
    if (!(m > 0.0) || !std::isfinite(m)) {
      throw DomainError("measure of vertex " + std::to_string(x) + " must be positive and finite");
    }
    measure_[static_cast<Eigen::Index>(x)] = m;
  }

  if (data.labels.empty()) {
    labels_.reserve(n);
    for (std::size_t x = 0; x < n; ++x) labels_.push_back(std::to_string(x));
  } else if (data.labels.size() != n) {
    throw DomainError("label count does not match vertex count");
  } else {
    labels_ = std::move(data.labels);
  }
  for (std::size_t x = 0; x < n; ++x) {
    if (!label_index_.emplace(labels_[x], x).second) {
      throw DomainError("duplicate vertex id '" + labels_[x] + "'");
    }
  }

  // Merge edges into canonical (a<b) form; a repeated pair is an error since
  // the conductance is a function of the unordered pair.
  std::map<std::pair<std::size_t, std::size_t>, double> canon;
  for (const auto& e : data.edges) {
    if (e.a >= n || e.b >= n) throw DomainError("edge endpoint out of range");
    if (e.a == e.b) throw DomainError("self-loop at vertex " + labels_[e.a] + ": conductance must vanish on the diagonal");
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw DomainError("edge " + labels_[e.a] + "-" + labels_[e.b] + " has negative or non-finite weight");
    }
    const auto key = std::minmax(e.a, e.b);
    if (!canon.emplace(key, e.weight).second) {
      throw DomainError("duplicate edge " + labels_[key.first] + "-" + labels_[key.second]);
    }
  }
  std::vector<std::size_t> count(n, 0);
  for (const auto& [key, w] : canon) {
    if (w == 0.0) continue;
    edges_.push_back({key.first, key.second, w});
    ++count[key.first];
    ++count[key.second];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t x = 0; x < n; ++x) offsets_[x + 1] = offsets_[x] + count[x];
  adjacency_.resize(offsets_[n]);
  degree_.assign(n, 0.0);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) {
    adjacency_[fill[e.a]++] = {e.b, e.weight};
    adjacency_[fill[e.b]++] = {e.a, e.weight};
    degree_[e.a] += e.weight;
    degree_[e.b] += e.weight;
  }

  if (!data.coords.empty()) {
    if (data.coords.size() != n) throw DomainError("coords must be given for every vertex or none");
    const std::size_t dim = data.coords.front().size();
    for (const auto& c : data.coords) {
      if (c.size() != dim || dim == 0) throw DomainError("coords must share one positive dimension");
    }
    coords_ = std::move(data.coords);
  }

  if (!data.metric.empty()) {
    explicit_metric_ = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n),
                                                 std::numeric_limits<double>::quiet_NaN());
    explicit_metric_.diagonal().setZero();
    for (const auto& e : data.metric) {
      if (e.a >= n || e.b >= n) throw DomainError("metric entry out of range");
      if (!(e.distance >= 0.0)) throw DomainError("metric entries must be nonnegative");
      explicit_metric_(static_cast<Eigen::Index>(e.a), static_cast<Eigen::Index>(e.b)) = e.distance;
      explicit_metric_(static_cast<Eigen::Index>(e.b), static_cast<Eigen::Index>(e.a)) = e.distance;
    }
    if (explicit_metric_.hasNaN()) throw DomainError("explicit metric must cover every vertex pair");
  }
  annotations_ = std::move(data.annotations);
}

double WeightedSpace::conductance(std::size_t x, std::size_t y) const {
  for (const auto& nb : neighbors(x)) {
    if (nb.vertex == y) return nb.weight;
  }
  return 0.0;
}

std::optional<std::size_t> WeightedSpace::index_of(const std::string& label) const {
  auto it = label_index_.find(label);
  if (it == label_index_.end()) return std::nullopt;
  return it->second;
}

double WeightedSpace::distance(std::size_t x, std::size_t y) const {
  if (explicit_metric_.size() > 0) {
    return explicit_metric_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
  }
  if (coords_.empty()) throw DomainError("space has no metric");
  double s = 0.0;
  for (std::size_t k = 0; k < coords_[x].size(); ++k) {
    const double d = coords_[x][k] - coords_[y][k];
    s += d * d;
  }
  return std::sqrt(s);
}

std::optional<std::string> WeightedSpace::metric_violation(std::size_t max_vertices, double tol) const {
  if (!has_metric() || size() > max_vertices) return std::nullopt;
  const std::size_t n = size();
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      const double dxy = distance(x, y);
      if (std::abs(dxy - distance(y, x)) > tol) return "asymmetric at (" + labels_[x] + "," + labels_[y] + ")";
      if ((x == y) != (dxy <= 0.0)) return "zero distance iff equal fails at (" + labels_[x] + "," + labels_[y] + ")";
      for (std::size_t z = 0; z < n; ++z) {
        if (dxy > distance(x, z) + distance(z, y) + tol) {
          return "triangle inequality fails at (" + labels_[x] + "," + labels_[y] + "," + labels_[z] + ")";
        }
      }
    }
  }
  return std::nullopt;
}

Eigen::MatrixXd WeightedSpace::generator_matrix() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t x = 0; x < size(); ++x) {
    const auto xi = static_cast<Eigen::Index>(x);
    const double m = measure(x);
    h(xi, xi) = degree(x) / m;
    for (const auto& nb : neighbors(x)) h(xi, static_cast<Eigen::Index>(nb.vertex)) = -nb.weight / m;
  }
  return h;
}

// ---------------------------------------------------------------- Region

Region::Region(const WeightedSpace& space, std::vector<std::size_t> members) : space_(&space) {
  if (members.empty()) throw DomainError("region must have at least one member");
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  if (members.back() >= space.size()) throw DomainError("region member out of range");
  members_ = std::move(members);
  local_.assign(space.size(), -1);
  for (std::size_t i = 0; i < members_.size(); ++i) local_[members_[i]] = static_cast<long>(i);

  std::vector<char> on_boundary(space.size(), 0);
  for (std::size_t x : members_) {
    bool inner = true;
    for (const auto& nb : space.neighbors(x)) {
      if (local_[nb.vertex] < 0) {
        inner = false;
        on_boundary[nb.vertex] = 1;
      }
    }
    if (inner) interior_.push_back(x);
  }
  for (std::size_t y = 0; y < space.size(); ++y) {
    if (on_boundary[y]) boundary_.push_back(y);
  }
}

std::vector<std::size_t> Region::boundary_adjacent() const {
  std::vector<std::size_t> out;
  for (std::size_t x : members_) {
    if (!is_interior(x)) out.push_back(x);
  }
  return out;
}

bool Region::is_interior(std::size_t x) const {
  return std::binary_search(interior_.begin(), interior_.end(), x);
}

std::optional<std::size_t> Region::local_index(std::size_t x) const {
  if (x >= local_.size() || local_[x] < 0) return std::nullopt;
  return static_cast<std::size_t>(local_[x]);
}

Field Region::restrict(const Field& ambient) const {
  require_size(*space_, ambient, "restrict");
  Field out(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) out[static_cast<Eigen::Index>(i)] = ambient[static_cast<Eigen::Index>(members_[i])];
  return out;
}

Field Region::extend_by_zero(const Field& local) const {
  return extend(local, Field::Zero(static_cast<Eigen::Index>(space_->size())));
}

Field Region::extend(const Field& local, const Field& outside) const {
  if (static_cast<std::size_t>(local.size()) != size()) throw DomainError("local field size does not match region");
  require_size(*space_, outside, "extend");
  Field out = outside;
  for (std::size_t i = 0; i < size(); ++i) out[static_cast<Eigen::Index>(members_[i])] = local[static_cast<Eigen::Index>(i)];
  return out;
}

Eigen::MatrixXd Region::restricted_generator() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < size(); ++i) {
    const std::size_t x = members_[i];
    const double m = space_->measure(x);
    const auto ii = static_cast<Eigen::Index>(i);
    h(ii, ii) = space_->degree(x) / m;
    for (const auto& nb : space_->neighbors(x)) {
      if (local_[nb.vertex] >= 0) h(ii, local_[nb.vertex]) = -nb.weight / m;
    }
  }
  return h;
}

Eigen::SparseMatrix<double> Region::symmetrized_generator(double shift) const {
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t i = 0; i < size(); ++i) {
    const std::size_t x = members_[i];
    const auto ii = static_cast<Eigen::Index>(i);
    trips.emplace_back(ii, ii, space_->degree(x) / space_->measure(x) + shift);
    for (const auto& nb : space_->neighbors(x)) {
      if (local_[nb.vertex] >= 0) {
        trips.emplace_back(ii, local_[nb.vertex],
                           -nb.weight / std::sqrt(space_->measure(x) * space_->measure(nb.vertex)));
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::SparseMatrix<double> s(n, n);
  s.setFromTriplets(trips.begin(), trips.end());
  return s;
}

Eigen::MatrixXd Region::symmetrized_generator_dense(double shift) const {
  return Eigen::MatrixXd(symmetrized_generator(shift));
}

Field Region::apply_restricted(const Field& local) const {
  if (static_cast<std::size_t>(local.size()) != size()) throw DomainError("local field size does not match region");
  Field out(local.size());
  for (std::size_t i = 0; i < size(); ++i) {
    const std::size_t x = members_[i];
    const double fx = local[static_cast<Eigen::Index>(i)];
    double s = space_->degree(x) * fx;
    for (const auto& nb : space_->neighbors(x)) {
      if (local_[nb.vertex] >= 0) s -= nb.weight * local[local_[nb.vertex]];
    }
    out[static_cast<Eigen::Index>(i)] = s / space_->measure(x);
  }
  return out;
}

Region Region::closure() const {
  std::vector<std::size_t> all = members_;
  all.insert(all.end(), boundary_.begin(), boundary_.end());
  return Region(*space_, std::move(all));
}

Region Region::dilate(std::size_t hops) const {
  Region r = *this;
  for (std::size_t k = 0; k < hops; ++k) r = r.closure();
  return r;
}

Region make_region(const WeightedSpace& space, std::vector<std::size_t> members) {
  return Region(space, std::move(members));
}

Region whole_space(const WeightedSpace& space) {
  std::vector<std::size_t> all(space.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return Region(space, std::move(all));
}

Region ball_region(const WeightedSpace& space, std::size_t center, std::size_t hops) {
  if (center >= space.size()) throw DomainError("ball center out of range");
  return Region(space, {center}).dilate(hops);
}

Region bfs_region(const WeightedSpace& space, std::size_t center, std::size_t count) {
  if (center >= space.size()) throw DomainError("bfs center out of range");
  if (count == 0) throw DomainError("region must have at least one member");
  std::vector<char> seen(space.size(), 0);
  std::deque<std::size_t> queue{center};
  seen[center] = 1;
  std::vector<std::size_t> out;
  while (!queue.empty() && out.size() < count) {
    const std::size_t x = queue.front();
    queue.pop_front();
    out.push_back(x);
    for (const auto& nb : space.neighbors(x)) {
      if (!seen[nb.vertex]) {
        seen[nb.vertex] = 1;
        queue.push_back(nb.vertex);
      }
    }
  }
  return Region(space, std::move(out));
}

// ---------------------------------------------------------------- forms

double energy(const WeightedSpace& space, const Field& f, const Field& g) {
  require_size(space, f, "energy");
  require_size(space, g, "energy");
  double s = 0.0;
  for (const auto& e : space.edges()) {
    const auto a = static_cast<Eigen::Index>(e.a);
    const auto b = static_cast<Eigen::Index>(e.b);
    s += e.weight * (f[a] - f[b]) * (g[a] - g[b]);
  }
  return s;
}

double shifted_energy(const WeightedSpace& space, const Field& f, double lambda) {
  return energy(space, f, f) + lambda * inner(space, f, f);
}

Field apply_generator(const WeightedSpace& space, const Field& f) {
  require_size(space, f, "apply_generator");
  Field out(f.size());
  for (std::size_t x = 0; x < space.size(); ++x) {
    const double fx = f[static_cast<Eigen::Index>(x)];
    double s = 0.0;
    for (const auto& nb : space.neighbors(x)) s += nb.weight * (fx - f[static_cast<Eigen::Index>(nb.vertex)]);
    out[static_cast<Eigen::Index>(x)] = s / space.measure(x);
  }
  return out;
}

double inner(const WeightedSpace& space, const Field& u, const Field& v) {
  require_size(space, u, "inner");
  require_size(space, v, "inner");
  return (u.array() * v.array() * space.measure().array()).sum();
}

Field energy_measure(const WeightedSpace& space, const Field& f, const Field& g) {
  require_size(space, f, "energy_measure");
  require_size(space, g, "energy_measure");
  Field out(f.size());
  for (std::size_t x = 0; x < space.size(); ++x) {
    const auto xi = static_cast<Eigen::Index>(x);
    double s = 0.0;
    for (const auto& nb : space.neighbors(x)) {
      const auto y = static_cast<Eigen::Index>(nb.vertex);
      s += nb.weight * (f[xi] - f[y]) * (g[xi] - g[y]);
    }
    out[xi] = s / (2.0 * space.measure(x));
  }
  return out;
}

std::vector<std::vector<std::size_t>> connected_components(const WeightedSpace& space) {
  std::vector<char> seen(space.size(), 0);
  std::vector<std::vector<std::size_t>> comps;
  for (std::size_t s = 0; s < space.size(); ++s) {
    if (seen[s]) continue;
    std::vector<std::size_t> comp;
    std::deque<std::size_t> queue{s};
    seen[s] = 1;
    while (!queue.empty()) {
      const std::size_t x = queue.front();
      queue.pop_front();
      comp.push_back(x);
      for (const auto& nb : space.neighbors(x)) {
        if (!seen[nb.vertex]) {
          seen[nb.vertex] = 1;
          queue.push_back(nb.vertex);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

CheckReport irreducibility_check(const WeightedSpace& space) {
  CheckReport r;
  r.name = "irreducibility";
  r.method = Method::Graph;
  const auto comps = connected_components(space);
  r.details["components"] = comps.size();
  r.details["componentSizes"] = nlohmann::json::array();
  for (const auto& c : comps) r.details["componentSizes"].push_back(c.size());
  // One violation unit per extra component; the witness is the first vertex
  // not reachable from vertex 0.
  r.observe(static_cast<double>(comps.size()) - 1.0,
            comps.size() > 1 ? std::optional<std::size_t>(comps[1].front()) : std::nullopt);
  r.tolerance = 0.0;
  r.finalize();
  return r;
}

CheckReport spectral_gap_check(const Region& region, double tol) {
  CheckReport r;
  r.name = "spectral-gap";
  r.method = Method::Spectral;
  r.tolerance = 0.0;
  r.details["threshold"] = tol;
  const Eigen::MatrixXd s = region.symmetrized_generator_dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigensolver failed in spectral_gap_check");
  double lambda_min = eig.eigenvalues()[0];
  if (region.boundary().empty()) {
    // The region is a union of components: constants there are harmonic.
    r.degenerate = true;
    lambda_min = 0.0;
    r.notes.push_back("region has no vertex boundary: kernel contains the constants");
  }
  r.details["lambdaMin"] = lambda_min;
  // Strict constraint lambda_min > threshold.
  r.worst_violation = tol - lambda_min;
  r.pass = lambda_min > tol;
  return r;
}

double default_tolerance(const Field& f) {
  return 1e-9 * (1.0 + (f.size() > 0 ? f.cwiseAbs().maxCoeff() : 0.0));
}

}  // namespace defectlab
