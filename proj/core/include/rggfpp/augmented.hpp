#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rggfpp/fpp.hpp"
#include "rggfpp/geometry.hpp"
#include "rggfpp/percolation.hpp"
#include "rggfpp/shortest_paths.hpp"

namespace rggfpp {

/// The base graph plus the lattice tZ^d. Each lattice point u is joined to
/// every base vertex in u + [-t/2, t/2)^d and to its 2d axis neighbors; all
/// such extra edges cost kappa * t.
///
/// Vertex ids: base vertices keep their ids 0..n-1, lattice points follow.
/// The lattice covers every cell that meets the simulation box, so each
/// base vertex has exactly one extra edge. The graph borrows the base graph
/// and passage times; both must outlive it.
class AugmentedGraph {
 public:
  const GeometricGraph& base() const { return *base_; }
  const PassageTimeField& field() const { return *field_; }
  double spacing() const { return spacing_; }
  double kappa() const { return kappa_; }
  double extra_weight() const { return kappa_ * spacing_; }
  int dim() const { return base_->cloud().dim(); }

  std::size_t num_base() const { return base_->num_vertices(); }
  std::size_t num_lattice() const { return num_lattice_; }
  std::size_t num_vertices() const { return num_base() + num_lattice_; }
  bool is_lattice(VertexId v) const { return v >= num_base(); }

  /// Lattice coordinates z (point = t * z) of a lattice vertex.
  std::vector<long long> lattice_coords(VertexId v) const;
  /// Lattice vertex with coordinates z, or kNoVertex outside the lattice range.
  VertexId lattice_vertex(std::span<const long long> z) const;
  /// The lattice point at the origin.
  VertexId origin() const;
  /// Lattice cell u + [-t/2, t/2)^d containing x, as lattice coordinates.
  std::vector<long long> cell_coords(std::span<const double> x) const;
  /// The extra-edge partner of base vertex v.
  VertexId cell_vertex(VertexId base_vertex) const { return base_cell_[base_vertex]; }

  Point position(VertexId v) const;

  /// q^t(x): nearest vertex of V^t; a lattice point wins exact ties.
  VertexId nearest(std::span<const double> x) const;

  template <class Fn>
  void for_each_neighbor(VertexId u, Fn&& fn) const {
    for_each_edge(u, [&](VertexId v, double w, bool) { fn(v, w); });
  }

  /// fn(v, weight, is_extra).
  template <class Fn>
  void for_each_edge(VertexId u, Fn&& fn) const {
    const double extra = extra_weight();
    if (!is_lattice(u)) {
      const auto nbrs = base_->neighbors(u);
      const auto edges = base_->incident_edges(u);
      for (std::size_t k = 0; k < nbrs.size(); ++k) fn(nbrs[k], field_->weights[edges[k]], false);
      fn(base_cell_[u], extra, true);
      return;
    }
    const std::size_t slot = u - num_base();
    std::size_t rem = slot;
    for (int i = dim() - 1; i >= 0; --i) {
      const auto zi = static_cast<long long>(rem % static_cast<std::size_t>(extent_));
      rem /= static_cast<std::size_t>(extent_);
      const std::size_t stride = strides_[i];
      if (zi > 0) fn(static_cast<VertexId>(u - stride), extra, true);
      if (zi + 1 < extent_) fn(static_cast<VertexId>(u + stride), extra, true);
    }
    for (std::size_t k = member_start_[slot]; k < member_start_[slot + 1]; ++k) fn(members_[k], extra, true);
  }

  friend AugmentedGraph build_augmented(const GeometricGraph&, const PassageTimeField&, double, double);

 private:
  AugmentedGraph() = default;

  const GeometricGraph* base_ = nullptr;
  const PassageTimeField* field_ = nullptr;
  double spacing_ = 1.0;
  double kappa_ = 1.0;
  long long z_min_ = 0;
  long long extent_ = 0;
  std::size_t num_lattice_ = 0;
  std::vector<std::size_t> strides_;
  std::vector<VertexId> base_cell_;
  std::vector<std::size_t> member_start_;
  std::vector<VertexId> members_;
};

/// Requires spacing >= 1 and kappa > 1.
AugmentedGraph build_augmented(const GeometricGraph& graph, const PassageTimeField& field, double spacing,
                               double kappa);

struct AugmentedPath {
  double time = 0.0;
  std::vector<VertexId> vertices;

  std::size_t hops() const { return vertices.empty() ? 0 : vertices.size() - 1; }
};

/// Sum of augmented weights along a vertex sequence. Throws on a non-edge.
double augmented_path_weight(const AugmentedGraph& aug, std::span<const VertexId> path);

/// T^t(x, y) between q^t(x) and q^t(y). Always finite: the lattice connects everything.
AugmentedPath t_passage_time(const AugmentedGraph& aug, std::span<const double> x, std::span<const double> y);

/// Shortest path from u to v using only extra edges: u to its cell point if u
/// is a base vertex, an axis-ordered lattice walk, then down to v.
std::vector<VertexId> lattice_only_path(const AugmentedGraph& aug, VertexId u, VertexId v);

/// (sqrt(d)/t) * ||u - v|| + d.
double lattice_hop_bound(const AugmentedGraph& aug, VertexId u, VertexId v);

/// ceil(K' * ||x||) with K' = 3 d kappa / delta.
std::size_t hop_budget_for(int dim, double kappa, double delta, double x_norm);

struct TruncatedQuery {
  Point target;
  std::size_t hop_budget = 0;
  double value = 0.0;
  std::vector<VertexId> witness;
  /// True when the hop-layered program ran (the unconstrained optimum was too long).
  bool used_layered_program = false;
};

struct TruncationOptions {
  /// Skip the unconstrained shortcut and always run the layered program.
  bool force_layered = false;
};

/// Y_{t,x}: least augmented passage time from the origin lattice point to
/// q^t(x) over paths with at most `hop_budget` edges. Throws BudgetInfeasible
/// when the budget is below the lattice-only hop count.
///
/// If an unconstrained optimum already fits the budget it is the answer.
/// Otherwise a hop-indexed program relaxes only vertices improved in the
/// previous layer, pruning states whose cost plus the exact remaining
/// distance cannot beat the best feasible path.
TruncatedQuery truncated_time(const AugmentedGraph& aug, std::span<const double> x, std::size_t hop_budget,
                              const TruncationOptions& options = {});

/// Same, reusing a full shortest-path tree rooted at aug.origin().
TruncatedQuery truncated_time(const AugmentedGraph& aug, const ShortestPathTree& from_origin,
                              std::span<const double> x, std::size_t hop_budget, const TruncationOptions& options = {});

/// Boxes z*t + [-t/2, t/2)^d.
class BoxDecomposition {
 public:
  BoxDecomposition(int dim, double spacing);
  int dim() const { return dim_; }
  double spacing() const { return spacing_; }
  std::vector<long long> box_of(std::span<const double> x) const;

 private:
  int dim_;
  double spacing_;
};

/// Distinct boxes that contain a path vertex or are crossed by a path segment.
/// `coords` holds the path's corner points, `dim` doubles each.
std::size_t box_crossings(std::span<const double> coords, const BoxDecomposition& boxes);

/// (3^d + 1) * ((3d + K' r) ||x|| / t + 1).
double box_crossing_bound(int dim, double k_prime, double radius, double x_norm, double spacing);

/// l-infinity diameter of every component (0 for singletons).
std::vector<double> component_linf_diameters(const PointCloud& cloud, const ComponentLabeling& labels);

struct ExcursionCheck {
  double passage_time = 0.0;
  double lower_bound = 0.0;
  double cluster_diameter = 0.0;
  bool holds = false;
};

/// Checks sum tau^t >= kappa t / (2t + b) * ||x_n - x_0||_inf for a path whose
/// endpoints lie in the giant component and whose interior avoids it.
/// Throws NotAnExcursion otherwise.
ExcursionCheck finite_cluster_hop_check(const AugmentedGraph& aug, const ComponentLabeling& labels,
                                        std::span<const double> linf_diameters, std::span<const VertexId> path);

/// Maximal sub-paths of `path` that leave the giant component and come back.
std::vector<std::vector<VertexId>> extract_excursions(const AugmentedGraph& aug, const ComponentLabeling& labels,
                                                      std::span<const VertexId> path);

/// Counters for the structural assertions.
struct StructuralTally {
  std::size_t hop_checks = 0, hop_violations = 0;
  std::size_t y_bound_checks = 0, y_bound_violations = 0;
  std::size_t box_checks = 0, box_violations = 0;
  std::size_t excursion_checks = 0, excursion_violations = 0;

  std::size_t violations() const { return hop_violations + y_bound_violations + box_violations + excursion_violations; }
  StructuralTally& operator+=(const StructuralTally& o);
};

struct DiscrepancyRow {
  double x_norm = 0.0;
  double spacing = 0.0;
  double kappa = 0.0;
  bool y_ne_tt = false;
  bool tt_ne_t = false;
  double qshift_gap = 0.0;
  std::size_t hop_budget = 0;
  std::size_t y_hops = 0;
};

struct DiscrepancyOptions {
  double delta = 0.1;
  /// Overrides the ceil(K'||x||) rule when set.
  std::optional<std::size_t> fixed_budget;
};

/// For each spacing t and each target x (t in [1, ||x||] is required for the
/// Y bounds; other pairs are skipped): compares Y_{t,x}, T^t(o, q^t(x)),
/// T^t(q(o), q(x)) and T(x), and runs the structural assertions on the paths
/// involved. Rows are ordered by (t, target).
std::vector<DiscrepancyRow> discrepancy_rates(const GeometricGraph& graph, const ComponentLabeling& labels,
                                              const PassageTimeField& field, std::span<const Point> targets,
                                              std::span<const double> spacings, double kappa,
                                              const DiscrepancyOptions& options, StructuralTally& tally);

}  // namespace rggfpp
