#include "rggfpp/augmented.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

#include "rggfpp/errors.hpp"

namespace rggfpp {

namespace {

// Index z of the half-open cell z*t + [-t/2, t/2) containing c.
long long cell_index(double c, double t) {
  auto z = static_cast<long long>(std::floor(c / t + 0.5));
  const double zt = static_cast<double>(z) * t;
  if (c < zt - 0.5 * t) --z;
  else if (c >= zt + 0.5 * t) ++z;
  return z;
}

double linf_distance(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return std::sqrt(s);
}

}  // namespace

// ---------------------------------------------------------------------------
// AugmentedGraph

AugmentedGraph build_augmented(const GeometricGraph& graph, const PassageTimeField& field, double spacing,
                               double kappa) {
  if (!(spacing >= 1.0) || !std::isfinite(spacing)) throw std::invalid_argument("spacing t must be >= 1");
  if (!(kappa > 1.0) || !std::isfinite(kappa)) throw std::invalid_argument("kappa must be > 1");
  if (field.weights.size() != graph.num_edges()) throw std::invalid_argument("passage times do not match the graph");

  AugmentedGraph aug;
  aug.base_ = &graph;
  aug.field_ = &field;
  aug.spacing_ = spacing;
  aug.kappa_ = kappa;

  const PointCloud& cloud = graph.cloud();
  const int d = cloud.dim();
  const double half = cloud.domain().half();
  const auto z_max = static_cast<long long>(std::floor(half / spacing + 0.5));
  aug.z_min_ = static_cast<long long>(std::floor(-half / spacing - 0.5)) + 1;
  aug.extent_ = z_max - aug.z_min_ + 1;

  aug.strides_.assign(d, 1);
  for (int i = d - 2; i >= 0; --i) aug.strides_[i] = aug.strides_[i + 1] * static_cast<std::size_t>(aug.extent_);
  aug.num_lattice_ = aug.strides_[0] * static_cast<std::size_t>(aug.extent_);
  if (graph.num_vertices() + aug.num_lattice_ >= kNoVertex)
    throw std::length_error("augmented graph too large for 32-bit vertex ids");

  const std::size_t n = graph.num_vertices();
  aug.base_cell_.resize(n);
  std::vector<std::size_t> counts(aug.num_lattice_ + 1, 0);
  for (std::size_t v = 0; v < n; ++v) {
    const auto z = aug.cell_coords(cloud.point(static_cast<VertexId>(v)));
    const VertexId lv = aug.lattice_vertex(z);
    aug.base_cell_[v] = lv;
    ++counts[lv - n + 1];
  }
  for (std::size_t s = 0; s < aug.num_lattice_; ++s) counts[s + 1] += counts[s];
  aug.member_start_ = counts;
  aug.members_.resize(n);
  for (std::size_t v = 0; v < n; ++v) aug.members_[counts[aug.base_cell_[v] - n]++] = static_cast<VertexId>(v);
  return aug;
}

std::vector<long long> AugmentedGraph::lattice_coords(VertexId v) const {
  if (!is_lattice(v) || v >= num_vertices()) throw std::out_of_range("not a lattice vertex");
  std::vector<long long> z(dim());
  std::size_t rem = v - num_base();
  for (int i = dim() - 1; i >= 0; --i) {
    z[i] = z_min_ + static_cast<long long>(rem % static_cast<std::size_t>(extent_));
    rem /= static_cast<std::size_t>(extent_);
  }
  return z;
}

VertexId AugmentedGraph::lattice_vertex(std::span<const long long> z) const {
  std::size_t slot = 0;
  for (int i = 0; i < dim(); ++i) {
    const long long k = z[i] - z_min_;
    if (k < 0 || k >= extent_) return kNoVertex;
    slot += static_cast<std::size_t>(k) * strides_[i];
  }
  return static_cast<VertexId>(num_base() + slot);
}

VertexId AugmentedGraph::origin() const {
  const std::vector<long long> zero(dim(), 0);
  return lattice_vertex(zero);
}

std::vector<long long> AugmentedGraph::cell_coords(std::span<const double> x) const {
  std::vector<long long> z(dim());
  for (int i = 0; i < dim(); ++i) z[i] = std::clamp(cell_index(x[i], spacing_), z_min_, z_min_ + extent_ - 1);
  return z;
}

Point AugmentedGraph::position(VertexId v) const {
  if (!is_lattice(v)) {
    const auto p = base_->cloud().point(v);
    return Point(p.begin(), p.end());
  }
  const auto z = lattice_coords(v);
  Point p(dim());
  for (int i = 0; i < dim(); ++i) p[i] = static_cast<double>(z[i]) * spacing_;
  return p;
}

VertexId AugmentedGraph::nearest(std::span<const double> x) const {
  std::vector<long long> z(dim());
  double lattice_d2 = 0.0;
  for (int i = 0; i < dim(); ++i) {
    z[i] = std::clamp(static_cast<long long>(std::floor(x[i] / spacing_ + 0.5)), z_min_, z_min_ + extent_ - 1);
    const double diff = static_cast<double>(z[i]) * spacing_ - x[i];
    lattice_d2 += diff * diff;
  }
  const VertexId lattice = lattice_vertex(z);
  if (base_->cloud().empty()) return lattice;
  const VertexId b = closest_vertex_qbar(base_->cloud(), x);
  return squared_distance(base_->cloud().point(b), x) < lattice_d2 ? b : lattice;
}

double augmented_path_weight(const AugmentedGraph& aug, std::span<const VertexId> path) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    double w = kUnreached;
    aug.for_each_neighbor(path[i], [&](VertexId v, double weight) {
      if (v == path[i + 1]) w = std::min(w, weight);
    });
    if (w == kUnreached) throw std::invalid_argument("path uses a non-edge of the augmented graph");
    total += w;
  }
  return total;
}

AugmentedPath t_passage_time(const AugmentedGraph& aug, std::span<const double> x, std::span<const double> y) {
  const VertexId src = aug.nearest(x);
  const VertexId dst = aug.nearest(y);
  DijkstraLimits limits;
  limits.target = dst;
  const auto tree = dijkstra(aug, src, limits);
  return {tree.dist[dst], tree.path_to(dst)};
}

std::vector<VertexId> lattice_only_path(const AugmentedGraph& aug, VertexId u, VertexId v) {
  std::vector<VertexId> path{u};
  if (u == v) return path;
  const VertexId start = aug.is_lattice(u) ? u : aug.cell_vertex(u);
  const VertexId stop = aug.is_lattice(v) ? v : aug.cell_vertex(v);
  if (start != u) path.push_back(start);
  auto z = aug.lattice_coords(start);
  const auto goal = aug.lattice_coords(stop);
  for (int i = 0; i < aug.dim(); ++i) {
    while (z[i] != goal[i]) {
      z[i] += z[i] < goal[i] ? 1 : -1;
      path.push_back(aug.lattice_vertex(z));
    }
  }
  if (stop != v) path.push_back(v);
  return path;
}

double lattice_hop_bound(const AugmentedGraph& aug, VertexId u, VertexId v) {
  const int d = aug.dim();
  return std::sqrt(static_cast<double>(d)) / aug.spacing() * distance(aug.position(u), aug.position(v)) + d;
}

std::size_t hop_budget_for(int dim, double kappa, double delta, double x_norm) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  const double k_prime = 3.0 * dim * kappa / delta;
  return static_cast<std::size_t>(std::ceil(k_prime * x_norm));
}

// ---------------------------------------------------------------------------
// Truncated passage time

namespace {

struct Improvement {
  std::size_t layer;
  VertexId pred;
  std::size_t previous;  // earlier improvement of the same vertex, or kNone
};

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Hop-indexed program: after layer k, value[v] is the least cost of a walk
// o -> v with at most k edges (restricted to states that survive pruning).
std::optional<std::pair<double, std::vector<VertexId>>> layered_program(const AugmentedGraph& aug, VertexId source,
                                                                       VertexId target, std::size_t budget,
                                                                       double upper_bound) {
  DijkstraLimits none;
  const auto to_target = dijkstra(aug, target, none);
  const std::vector<double>& lower = to_target.dist;
  const double cutoff = upper_bound * (1.0 + 1e-12);

  const std::size_t n = aug.num_vertices();
  std::vector<double> value(n, kUnreached);
  std::vector<std::size_t> head(n, kNone);
  std::vector<Improvement> log;
  std::vector<std::size_t> stamp(n, kNone);
  std::vector<std::pair<VertexId, double>> frontier{{source, 0.0}}, next;
  value[source] = 0.0;

  for (std::size_t layer = 1; layer <= budget && !frontier.empty(); ++layer) {
    next.clear();
    for (const auto& [u, cost] : frontier) {
      aug.for_each_neighbor(u, [&](VertexId v, double w) {
        const double cand = cost + w;
        if (cand >= value[v] || cand + lower[v] > cutoff) return;
        value[v] = cand;
        if (head[v] != kNone && log[head[v]].layer == layer) {
          log[head[v]].pred = u;
        } else {
          log.push_back({layer, u, head[v]});
          head[v] = log.size() - 1;
        }
        if (stamp[v] != layer) {
          stamp[v] = layer;
          next.emplace_back(v, 0.0);
        }
      });
    }
    for (auto& entry : next) entry.second = value[entry.first];
    frontier.swap(next);
  }
  if (value[target] == kUnreached) return std::nullopt;

  std::vector<VertexId> path{target};
  VertexId v = target;
  std::size_t layer = budget;
  while (v != source || layer > 0) {
    std::size_t rec = head[v];
    while (rec != kNone && log[rec].layer > layer) rec = log[rec].previous;
    if (rec == kNone) break;  // v holds its layer-0 value: v == source
    layer = log[rec].layer - 1;
    v = log[rec].pred;
    path.push_back(v);
  }
  std::reverse(path.begin(), path.end());
  return std::make_pair(value[target], std::move(path));
}

}  // namespace

TruncatedQuery truncated_time(const AugmentedGraph& aug, const ShortestPathTree& from_origin,
                              std::span<const double> x, std::size_t hop_budget, const TruncationOptions& options) {
  const VertexId o = aug.origin();
  if (from_origin.source != o) throw std::invalid_argument("shortest-path tree is not rooted at the origin");
  const VertexId target = aug.nearest(x);
  const auto fallback = lattice_only_path(aug, o, target);
  if (fallback.size() - 1 > hop_budget)
    throw BudgetInfeasible("hop budget " + std::to_string(hop_budget) + " is below the lattice-only path length " +
                           std::to_string(fallback.size() - 1));

  TruncatedQuery q;
  q.target.assign(x.begin(), x.end());
  q.hop_budget = hop_budget;
  if (!options.force_layered && from_origin.reached(target) && from_origin.hops[target] <= hop_budget) {
    q.value = from_origin.dist[target];
    q.witness = from_origin.path_to(target);
    return q;
  }

  q.used_layered_program = true;
  const double fallback_cost = augmented_path_weight(aug, fallback);
  const auto best = layered_program(aug, o, target, hop_budget, fallback_cost);
  if (best && best->first <= fallback_cost) {
    q.value = best->first;
    q.witness = best->second;
  } else {
    q.value = fallback_cost;
    q.witness = fallback;
  }
  return q;
}

TruncatedQuery truncated_time(const AugmentedGraph& aug, std::span<const double> x, std::size_t hop_budget,
                              const TruncationOptions& options) {
  const VertexId o = aug.origin();
  DijkstraLimits limits;
  if (!options.force_layered) limits.target = aug.nearest(x);
  return truncated_time(aug, dijkstra(aug, o, limits), x, hop_budget, options);
}

// ---------------------------------------------------------------------------
// Boxes

BoxDecomposition::BoxDecomposition(int dim, double spacing) : dim_(dim), spacing_(spacing) {
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw std::invalid_argument("box spacing must be positive");
}

std::vector<long long> BoxDecomposition::box_of(std::span<const double> x) const {
  std::vector<long long> z(dim_);
  for (int i = 0; i < dim_; ++i) z[i] = cell_index(x[i], spacing_);
  return z;
}

std::size_t box_crossings(std::span<const double> coords, const BoxDecomposition& boxes) {
  const auto d = static_cast<std::size_t>(boxes.dim());
  const std::size_t n = coords.size() / d;
  const double t = boxes.spacing();
  std::set<std::vector<long long>> seen;
  for (std::size_t k = 0; k < n; ++k) seen.insert(boxes.box_of(coords.subspan(k * d, d)));

  std::vector<double> t_max(d), t_delta(d);
  std::vector<int> step(d);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const auto a = coords.subspan(k * d, d);
    const auto b = coords.subspan((k + 1) * d, d);
    auto z = boxes.box_of(a);
    const auto goal = boxes.box_of(b);
    long long limit = static_cast<long long>(d) + 2;
    for (std::size_t i = 0; i < d; ++i) {
      limit += std::abs(goal[i] - z[i]);
      const double delta = b[i] - a[i];
      if (delta == 0.0) {
        step[i] = 0;
        t_max[i] = t_delta[i] = kUnreached;
        continue;
      }
      step[i] = delta > 0.0 ? 1 : -1;
      const double boundary = (static_cast<double>(z[i]) + 0.5 * step[i]) * t;
      t_max[i] = (boundary - a[i]) / delta;
      t_delta[i] = t / std::abs(delta);
    }
    // Axis stepping; an exact corner crossing advances all tied axes at once.
    for (long long guard = 0; z != goal && guard < limit; ++guard) {
      const double m = *std::min_element(t_max.begin(), t_max.end());
      if (m == kUnreached) break;
      for (std::size_t i = 0; i < d; ++i) {
        if (t_max[i] == m && z[i] != goal[i]) {
          z[i] += step[i];
          t_max[i] += t_delta[i];
        } else if (t_max[i] == m) {
          t_max[i] = kUnreached;
        }
      }
      seen.insert(z);
    }
  }
  return seen.size();
}

double box_crossing_bound(int dim, double k_prime, double radius, double x_norm, double spacing) {
  return (std::pow(3.0, dim) + 1.0) * ((3.0 * dim + k_prime * radius) * x_norm / spacing + 1.0);
}

// ---------------------------------------------------------------------------
// Excursions through finite clusters

std::vector<double> component_linf_diameters(const PointCloud& cloud, const ComponentLabeling& labels) {
  const int d = cloud.dim();
  const std::size_t c = labels.sizes.size();
  std::vector<double> lo(c * d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(c * d, -std::numeric_limits<double>::infinity());
  for (std::size_t v = 0; v < cloud.size(); ++v) {
    const auto p = cloud.point(static_cast<VertexId>(v));
    const std::size_t base = static_cast<std::size_t>(labels.label[v]) * d;
    for (int i = 0; i < d; ++i) {
      lo[base + i] = std::min(lo[base + i], p[i]);
      hi[base + i] = std::max(hi[base + i], p[i]);
    }
  }
  std::vector<double> out(c, 0.0);
  for (std::size_t k = 0; k < c; ++k)
    for (int i = 0; i < d; ++i) out[k] = std::max(out[k], hi[k * d + i] - lo[k * d + i]);
  return out;
}

ExcursionCheck finite_cluster_hop_check(const AugmentedGraph& aug, const ComponentLabeling& labels,
                                        std::span<const double> linf_diameters, std::span<const VertexId> path) {
  auto in_giant = [&](VertexId v) { return !aug.is_lattice(v) && labels.in_giant(v); };
  if (path.size() < 3) throw NotAnExcursion("an excursion needs at least one interior vertex");
  if (!in_giant(path.front()) || !in_giant(path.back()))
    throw NotAnExcursion("excursion endpoints must lie in the giant component");
  ExcursionCheck out;
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    const VertexId v = path[i];
    if (in_giant(v)) throw NotAnExcursion("excursion interior touches the giant component");
    if (!aug.is_lattice(v)) out.cluster_diameter = std::max(out.cluster_diameter, linf_diameters[labels.label[v]]);
  }
  out.passage_time = augmented_path_weight(aug, path);
  const double t = aug.spacing();
  const double span = linf_distance(aug.position(path.front()), aug.position(path.back()));
  out.lower_bound = aug.kappa() * t / (2.0 * t + out.cluster_diameter) * span;
  out.holds = out.passage_time >= out.lower_bound * (1.0 - 1e-12);
  return out;
}

std::vector<std::vector<VertexId>> extract_excursions(const AugmentedGraph& aug, const ComponentLabeling& labels,
                                                      std::span<const VertexId> path) {
  auto in_giant = [&](VertexId v) { return !aug.is_lattice(v) && labels.in_giant(v); };
  std::vector<std::vector<VertexId>> out;
  std::size_t i = 0;
  while (i + 1 < path.size()) {
    if (!in_giant(path[i]) || in_giant(path[i + 1])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < path.size() && !in_giant(path[j])) ++j;
    if (j == path.size()) break;
    out.emplace_back(path.begin() + static_cast<std::ptrdiff_t>(i), path.begin() + static_cast<std::ptrdiff_t>(j) + 1);
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Discrepancies

StructuralTally& StructuralTally::operator+=(const StructuralTally& o) {
  hop_checks += o.hop_checks;
  hop_violations += o.hop_violations;
  y_bound_checks += o.y_bound_checks;
  y_bound_violations += o.y_bound_violations;
  box_checks += o.box_checks;
  box_violations += o.box_violations;
  excursion_checks += o.excursion_checks;
  excursion_violations += o.excursion_violations;
  return *this;
}

std::vector<DiscrepancyRow> discrepancy_rates(const GeometricGraph& graph, const ComponentLabeling& labels,
                                              const PassageTimeField& field, std::span<const Point> targets,
                                              std::span<const double> spacings, double kappa,
                                              const DiscrepancyOptions& options, StructuralTally& tally) {
  const PointCloud& cloud = graph.cloud();
  const int d = cloud.dim();
  const Point o_point(d, 0.0);
  const VertexId q_o = closest_vertex_q(graph, labels, o_point);
  const auto base_tree = dijkstra(WeightedView(graph, field), q_o);
  const auto diameters = component_linf_diameters(cloud, labels);
  const double k_prime = 3.0 * d * kappa / options.delta;

  auto check_excursions = [&](const AugmentedGraph& aug, std::span<const VertexId> path) {
    for (const auto& exc : extract_excursions(aug, labels, path)) {
      ++tally.excursion_checks;
      if (!finite_cluster_hop_check(aug, labels, diameters, exc).holds) ++tally.excursion_violations;
    }
  };

  std::vector<DiscrepancyRow> rows;
  for (double t : spacings) {
    const AugmentedGraph aug = build_augmented(graph, field, t, kappa);
    const VertexId o = aug.origin();
    const auto from_o = dijkstra(aug, o);
    const auto from_q_o = dijkstra(aug, q_o);
    const BoxDecomposition boxes(d, t);

    for (const Point& x : targets) {
      const double x_norm = norm(x);
      const VertexId qt_x = aug.nearest(x);
      const VertexId q_x = closest_vertex_q(graph, labels, x);

      const auto lattice_path = lattice_only_path(aug, o, qt_x);
      ++tally.hop_checks;
      if (static_cast<double>(lattice_path.size() - 1) > lattice_hop_bound(aug, o, qt_x)) ++tally.hop_violations;

      const std::size_t budget = options.fixed_budget ? *options.fixed_budget : hop_budget_for(d, kappa, options.delta, x_norm);
      const auto y = truncated_time(aug, from_o, x, budget);

      if (x_norm >= 1.0 && t >= 1.0 && t <= x_norm) {
        ++tally.y_bound_checks;
        if (y.value > 3.0 * d * kappa * x_norm) ++tally.y_bound_violations;
        std::vector<double> poly;
        for (VertexId v : y.witness) {
          const Point p = aug.position(v);
          poly.insert(poly.end(), p.begin(), p.end());
        }
        ++tally.box_checks;
        if (static_cast<double>(box_crossings(poly, boxes)) > box_crossing_bound(d, k_prime, graph.radius(), x_norm, t))
          ++tally.box_violations;
      }
      check_excursions(aug, y.witness);
      const auto tt_path = from_q_o.path_to(q_x);
      check_excursions(aug, tt_path);

      DiscrepancyRow row;
      row.x_norm = x_norm;
      row.spacing = t;
      row.kappa = kappa;
      row.y_ne_tt = y.value != from_o.dist[qt_x];
      row.tt_ne_t = from_q_o.dist[q_x] != base_tree.dist[q_x];
      row.qshift_gap = std::abs(from_o.dist[qt_x] - from_q_o.dist[q_x]);
      row.hop_budget = budget;
      row.y_hops = y.witness.size() - 1;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace rggfpp
