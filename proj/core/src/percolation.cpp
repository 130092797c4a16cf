#include "rggfpp/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rggfpp/errors.hpp"

namespace rggfpp {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

// Shell search around the clamped cell of x. Cells at Chebyshev index
// distance k hold only points at distance >= (k-1)*h, so once the best
// distance is below k*h no later shell can match or beat it.
template <class PointFn, class IdFn, class KeepFn>
std::optional<std::pair<VertexId, double>> shell_search(const CellGrid& grid, std::span<const double> x,
                                                        PointFn&& point_of, IdFn&& id_of, KeepFn&& keep) {
  const int d = grid.dim();
  std::vector<int> center(d);
  for (int i = 0; i < d; ++i) center[i] = grid.axis_cell(i, x[i]);
  double best2 = std::numeric_limits<double>::infinity();
  VertexId best_id = 0;
  bool found = false;
  const double h = grid.cell_side();
  for (int k = 0;; ++k) {
    const bool inside = grid.for_each_cell_in_shell(center, k, [&](std::size_t c) {
      for (VertexId slot : grid.items(c)) {
        const VertexId id = id_of(slot);
        if (!keep(id)) continue;
        const double d2 = squared_distance(point_of(slot), x);
        if (d2 < best2 || (d2 == best2 && id < best_id)) {
          best2 = d2;
          best_id = id;
          found = true;
        }
      }
    });
    if (!inside) break;
    if (found && std::sqrt(best2) < k * h) break;
  }
  if (!found) return std::nullopt;
  return std::make_pair(best_id, std::sqrt(best2));
}

}  // namespace

std::size_t ComponentLabeling::second_size() const {
  std::size_t best = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c)
    if (!giant || c != *giant) best = std::max(best, sizes[c]);
  return best;
}

ComponentLabeling components(const GeometricGraph& graph) {
  const std::size_t n = graph.num_vertices();
  DisjointSets sets(n);
  for (std::size_t e = 0; e < graph.num_edges(); ++e)
    sets.unite(graph.edge_source(static_cast<EdgeId>(e)), graph.edge_target(static_cast<EdgeId>(e)));

  ComponentLabeling out;
  out.label.assign(n, 0);
  constexpr ComponentId kUnset = std::numeric_limits<ComponentId>::max();
  std::vector<ComponentId> root_label(n, kUnset);
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t root = sets.find(v);
    if (root_label[root] == kUnset) {
      root_label[root] = static_cast<ComponentId>(out.sizes.size());
      out.sizes.push_back(0);
    }
    out.label[v] = root_label[root];
    ++out.sizes[out.label[v]];
  }
  for (std::size_t c = 0; c < out.sizes.size(); ++c)
    if (!out.giant || out.sizes[c] > out.sizes[*out.giant]) out.giant = static_cast<ComponentId>(c);
  return out;
}

NearestVertexIndex::NearestVertexIndex(const PointCloud& cloud, std::vector<VertexId> members, double cell_side)
    : cloud_(&cloud), members_(std::move(members)) {
  const int d = cloud.dim();
  coords_.reserve(members_.size() * d);
  for (VertexId v : members_) {
    const auto p = cloud.point(v);
    coords_.insert(coords_.end(), p.begin(), p.end());
  }
  grid_ = CellGrid(cloud.domain(), std::min(cell_side, cloud.domain().side()), coords_);
}

std::optional<std::pair<VertexId, double>> NearestVertexIndex::nearest(std::span<const double> x) const {
  if (members_.empty()) return std::nullopt;
  const std::size_t d = static_cast<std::size_t>(cloud_->dim());
  return shell_search(
      grid_, x, [&](VertexId slot) { return std::span<const double>(coords_.data() + slot * d, d); },
      [&](VertexId slot) { return members_[slot]; }, [](VertexId) { return true; });
}

VertexId closest_vertex_qbar(const PointCloud& cloud, std::span<const double> x) {
  if (cloud.empty()) throw NoVertices();
  const auto hit = shell_search(
      cloud.grid(), x, [&](VertexId v) { return cloud.point(v); }, [](VertexId v) { return v; },
      [](VertexId) { return true; });
  return hit->first;
}

VertexId closest_vertex_q(const GeometricGraph& graph, const ComponentLabeling& labels, std::span<const double> x) {
  if (!labels.giant || labels.giant_size() == 0) throw NoGiantComponent();
  const PointCloud& cloud = graph.cloud();
  const auto hit = shell_search(
      cloud.grid(), x, [&](VertexId v) { return cloud.point(v); }, [](VertexId v) { return v; },
      [&](VertexId v) { return labels.in_giant(v); });
  return hit->first;
}

std::optional<std::size_t> chemical_distance(const GeometricGraph& graph, VertexId u, VertexId v) {
  const std::size_t n = graph.num_vertices();
  if (u >= n || v >= n) throw std::out_of_range("vertex id out of range");
  if (u == v) return 0;
  constexpr std::size_t kUnseen = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> hops(n, kUnseen);
  std::vector<VertexId> frontier{u}, next;
  hops[u] = 0;
  std::size_t level = 0;
  while (!frontier.empty()) {
    ++level;
    next.clear();
    for (VertexId a : frontier) {
      for (VertexId b : graph.neighbors(a)) {
        if (hops[b] != kUnseen) continue;
        hops[b] = level;
        if (b == v) return level;
        next.push_back(b);
      }
    }
    frontier.swap(next);
  }
  return std::nullopt;
}

HoleScan hole_diameter(const GeometricGraph& graph, const ComponentLabeling& labels, double scan_box_side,
                       double resolution) {
  if (!(resolution > 0.0)) throw std::invalid_argument("resolution must be positive");
  if (!(scan_box_side > 0.0)) throw std::invalid_argument("scan box side must be positive");
  if (!labels.giant || labels.giant_size() == 0) throw NoGiantComponent();
  const PointCloud& cloud = graph.cloud();
  const double r = graph.radius();
  std::vector<VertexId> giant;
  giant.reserve(labels.giant_size());
  for (std::size_t v = 0; v < cloud.size(); ++v)
    if (labels.in_giant(static_cast<VertexId>(v))) giant.push_back(static_cast<VertexId>(v));
  const NearestVertexIndex index(cloud, std::move(giant), r);

  const int d = cloud.dim();
  const auto per_axis = static_cast<long long>(std::ceil(scan_box_side / resolution - 1e-9));
  std::vector<long long> idx(d, 0);
  Point c(d), best_center(d);
  double best = -1.0;
  while (true) {
    for (int i = 0; i < d; ++i)
      c[i] = std::min(0.5 * scan_box_side, -0.5 * scan_box_side + (static_cast<double>(idx[i]) + 0.5) * resolution);
    const double dist = index.nearest(c)->second;
    const double hole = std::max(0.0, dist - r);
    if (hole > best) {
      best = hole;
      best_center = c;
    }
    int axis = d - 1;
    while (axis >= 0 && idx[axis] == per_axis - 1) {
      idx[axis] = 0;
      --axis;
    }
    if (axis < 0) break;
    ++idx[axis];
  }
  return HoleScan{resolution, 2.0 * best, best_center};
}

}  // namespace rggfpp
