#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rggfpp/geometry.hpp"
#include "rggfpp/percolation.hpp"
#include "rggfpp/random.hpp"
#include "rggfpp/shortest_paths.hpp"

namespace rggfpp {

/// Standard normal upper quantile at 1e-12, used for the default log-normal cap.
inline constexpr double kLogNormalCapZ = 7.034483825301131;

/// Law of the i.i.d. edge passage times. Only laws with strictly positive
/// support and finite exponential moments can be constructed.
class PassageDistribution {
 public:
  enum class Kind { kExponential, kUniformShifted, kLogNormal, kConstant };

  static PassageDistribution exponential(double rate);
  /// Uniform on (a, b), 0 < a < b.
  static PassageDistribution uniform_shifted(double a, double b);
  /// exp(N(mu, sigma^2)) truncated above at `cap`. The default cap is the
  /// 1 - 1e-12 quantile. An infinite cap is rejected.
  static PassageDistribution lognormal(double mu, double sigma, std::optional<double> cap = std::nullopt);
  /// Degenerate law at `value` > 0.
  static PassageDistribution constant(double value);

  /// Parses "exponential(rate)", "uniform(a,b)", "lognormal(mu,sigma[,cap])"
  /// or "constant(c)". Throws DistributionRejected.
  static PassageDistribution parse(std::string_view spec);

  Kind kind() const { return kind_; }
  double param(int i) const { return params_[i]; }
  /// Draws one passage time; always > 0.
  double sample(RandomStream& rng) const;
  double mean() const;
  std::string describe() const;

 private:
  PassageDistribution(Kind kind, double p0, double p1, double p2) : kind_(kind), params_{p0, p1, p2} {}

  Kind kind_;
  double params_[3];
};

/// One passage time per canonical edge of a graph.
struct PassageTimeField {
  std::vector<double> weights;
  /// Key drawn from the caller's stream; all block substreams derive from it.
  std::uint64_t seed_lineage = 0;

  double weight(EdgeId e) const { return weights[e]; }
};

/// Weights are drawn edge by edge in canonical order. Edge {u,v}, u < v,
/// takes its value from the substream of the sampling block containing u.
PassageTimeField sample_weights(const GeometricGraph& graph, const PassageDistribution& dist, RandomStream& rng);

/// Graph + weights adapter for dijkstra().
class WeightedView {
 public:
  WeightedView(const GeometricGraph& graph, const PassageTimeField& field) : graph_(&graph), field_(&field) {}
  std::size_t num_vertices() const { return graph_->num_vertices(); }
  template <class Fn>
  void for_each_neighbor(VertexId u, Fn&& fn) const {
    const auto nbrs = graph_->neighbors(u);
    const auto edges = graph_->incident_edges(u);
    for (std::size_t k = 0; k < nbrs.size(); ++k) fn(nbrs[k], field_->weights[edges[k]]);
  }

 private:
  const GeometricGraph* graph_;
  const PassageTimeField* field_;
};

/// A minimizing path q0..qn in the giant component.
struct Geodesic {
  std::vector<VertexId> vertices;
  double total_time = 0.0;

  std::size_t hops() const { return vertices.empty() ? 0 : vertices.size() - 1; }
  /// Polyline corner coordinates, `dim` doubles per vertex.
  std::vector<double> polyline(const PointCloud& cloud) const;
};

/// Sum of edge weights along consecutive vertices. Throws std::invalid_argument
/// if two consecutive vertices are not adjacent.
double path_weight(const GeometricGraph& graph, const PassageTimeField& field, std::span<const VertexId> path);

struct FirstPassage {
  double time = 0.0;
  Geodesic geodesic;
};

/// T(x, y) = T(q(x), q(y)) with one minimizing path. Throws NoGiantComponent.
FirstPassage first_passage_time(const GeometricGraph& graph, const ComponentLabeling& labels,
                                const PassageTimeField& field, std::span<const double> x, std::span<const double> y);

/// Vertex-to-vertex variant; nullopt when u and v are disconnected. The search
/// runs from the smaller id, so the time is exactly symmetric in u and v.
std::optional<FirstPassage> first_passage_between(const GeometricGraph& graph, const PassageTimeField& field,
                                                  VertexId u, VertexId v);

/// Exact single-source times from q(x) over the giant component.
ShortestPathTree fpt_all_from(const GeometricGraph& graph, const ComponentLabeling& labels,
                              const PassageTimeField& field, std::span<const double> x,
                              const DijkstraLimits& limits = {});

/// Vertex-level surrogate of the growth set H_t around `center`.
struct GrowthSet {
  double threshold = 0.0;
  std::vector<VertexId> members;
  /// Largest s such that every giant vertex in the open ball B(center, s) is
  /// a member; capped at outer_radius when every giant vertex is a member.
  double inner_radius = 0.0;
  /// Smallest s with all members inside the closed ball B(center, s).
  double outer_radius = 0.0;
};

/// `times` are first-passage times from `center` (+inf when unreached).
GrowthSet growth_set(const PointCloud& cloud, const ComponentLabeling& labels, std::span<const double> times, double t,
                     VertexId center);

/// CSV polyline "step,vertex,x0,...,x{d-1}".
void write_geodesic_csv(std::ostream& out, const PointCloud& cloud, const Geodesic& geodesic);

}  // namespace rggfpp
