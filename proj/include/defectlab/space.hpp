#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "defectlab/report.hpp"

namespace defectlab {

// Values indexed by vertex. Fields on a Region are indexed by the region's
// local member order; fields on a space by vertex index.
using Field = Eigen::VectorXd;

struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
  double weight = 0.0;
};

struct MetricEntry {
  std::size_t a = 0;
  std::size_t b = 0;
  double distance = 0.0;
};

struct Neighbor {
  std::size_t vertex = 0;
  double weight = 0.0;
};

// Raw construction data; WeightedSpace validates it.
struct SpaceData {
  std::vector<std::string> labels;  // empty => "0", "1", ...
  std::vector<double> measure;
  std::vector<Edge> edges;
  std::vector<std::vector<double>> coords;  // empty or one tuple per vertex
  std::vector<MetricEntry> metric;          // empty or all unordered pairs
  std::map<std::size_t, std::string> annotations;
};

// Finite vertex set with a positive measure and symmetric conductances.
// Immutable after construction.
class WeightedSpace {
 public:
  explicit WeightedSpace(SpaceData data);

  std::size_t size() const { return measure_.size(); }
  double measure(std::size_t x) const { return measure_[static_cast<Eigen::Index>(x)]; }
  const Eigen::VectorXd& measure() const { return measure_; }
  double total_measure() const { return measure_.sum(); }

  std::span<const Neighbor> neighbors(std::size_t x) const {
    return {adjacency_.data() + offsets_[x], offsets_[x + 1] - offsets_[x]};
  }
  // Total conductance at x.
  double degree(std::size_t x) const { return degree_[x]; }
  double conductance(std::size_t x, std::size_t y) const;
  const std::vector<Edge>& edges() const { return edges_; }

  const std::string& label(std::size_t x) const { return labels_[x]; }
  std::optional<std::size_t> index_of(const std::string& label) const;
  const std::map<std::size_t, std::string>& annotations() const { return annotations_; }

  bool has_coords() const { return !coords_.empty(); }
  std::span<const double> coords(std::size_t x) const { return coords_[x]; }
  const std::vector<std::vector<double>>& all_coords() const { return coords_; }

  // Explicit metric entries, or Euclidean distance on coords when only
  // coords are present.
  bool has_metric() const { return has_coords() || explicit_metric_.size() > 0; }
  bool has_explicit_metric() const { return explicit_metric_.size() > 0; }
  double distance(std::size_t x, std::size_t y) const;

  // Exhaustive triple scan; returns a description of the first failure.
  // Spaces above `max_vertices` are skipped (returns nullopt).
  std::optional<std::string> metric_violation(std::size_t max_vertices = 500,
                                              double tol = 1e-12) const;

  // Dense generator H(x,y) = -w(x,y)/m(x), H(x,x) = deg(x)/m(x).
  Eigen::MatrixXd generator_matrix() const;

 private:
  std::vector<std::string> labels_;
  std::map<std::string, std::size_t> label_index_;
  Eigen::VectorXd measure_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
  std::vector<double> degree_;
  std::vector<std::vector<double>> coords_;
  Eigen::MatrixXd explicit_metric_;
  std::map<std::size_t, std::string> annotations_;
};

// Vertex subset U with derived interior (no conductance to non-members) and
// vertex boundary (non-members adjacent to U). Holds a pointer to its space,
// which must outlive it.
class Region {
 public:
  Region(const WeightedSpace& space, std::vector<std::size_t> members);

  const WeightedSpace& space() const { return *space_; }
  std::size_t size() const { return members_.size(); }
  const std::vector<std::size_t>& members() const { return members_; }
  const std::vector<std::size_t>& interior() const { return interior_; }
  const std::vector<std::size_t>& boundary() const { return boundary_; }
  // Members with at least one neighbor outside the region.
  std::vector<std::size_t> boundary_adjacent() const;

  bool contains(std::size_t x) const { return local_[x] >= 0; }
  bool is_interior(std::size_t x) const;
  std::optional<std::size_t> local_index(std::size_t x) const;
  bool is_whole_space() const { return members_.size() == space_->size(); }

  Field restrict(const Field& ambient) const;
  Field extend_by_zero(const Field& local) const;
  // Local values on members, `outside` elsewhere.
  Field extend(const Field& local, const Field& outside) const;

  // Principal submatrix of H on members (Dirichlet condition outside).
  Eigen::MatrixXd restricted_generator() const;
  // D^{1/2} (H^U + shift) D^{-1/2}, symmetric with nonpositive off-diagonals.
  Eigen::SparseMatrix<double> symmetrized_generator(double shift = 0.0) const;
  Eigen::MatrixXd symmetrized_generator_dense(double shift = 0.0) const;
  // (H^U f)(x) for a local field, zero extension outside.
  Field apply_restricted(const Field& local) const;

  // Members plus vertex boundary.
  Region closure() const;
  // Adds `hops` layers of vertex boundary.
  Region dilate(std::size_t hops) const;

 private:
  const WeightedSpace* space_;
  std::vector<std::size_t> members_;
  std::vector<long> local_;
  std::vector<std::size_t> interior_;
  std::vector<std::size_t> boundary_;
};

Region make_region(const WeightedSpace& space, std::vector<std::size_t> members);
Region whole_space(const WeightedSpace& space);
// Graph ball of `hops` steps around a vertex.
Region ball_region(const WeightedSpace& space, std::size_t center, std::size_t hops);
// BFS from `center` until `count` members are collected.
Region bfs_region(const WeightedSpace& space, std::size_t center, std::size_t count);

// E(f,g) = 1/2 sum_{x,y} w(x,y)(f(x)-f(y))(g(x)-g(y)).
double energy(const WeightedSpace& space, const Field& f, const Field& g);
inline double energy(const WeightedSpace& space, const Field& f) { return energy(space, f, f); }
// E(f,f) + lambda <f,f>_m
double shifted_energy(const WeightedSpace& space, const Field& f, double lambda);

// (Hf)(x) = (1/m(x)) sum_y w(x,y)(f(x)-f(y)).
Field apply_generator(const WeightedSpace& space, const Field& f);
// <u,v>_m
double inner(const WeightedSpace& space, const Field& u, const Field& v);

// Per-vertex density of the energy measure:
// Gamma(f,g)(x) = (1/(2 m(x))) sum_y w(x,y)(f(x)-f(y))(g(x)-g(y)).
Field energy_measure(const WeightedSpace& space, const Field& f, const Field& g);

// Connectivity of the conductance graph.
CheckReport irreducibility_check(const WeightedSpace& space);
// Connected components as vertex lists, in order of smallest vertex.
std::vector<std::vector<std::size_t>> connected_components(const WeightedSpace& space);

// Smallest eigenvalue of H^U; passes iff it exceeds `tol`. A region covering
// a whole connected space is flagged degenerate (constants in the kernel).
CheckReport spectral_gap_check(const Region& region, double tol = 1e-9);

// 1e-9 * (1 + |f|_inf)
double default_tolerance(const Field& f);

}  // namespace defectlab
