#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "rggfpp/augmented.hpp"
#include "rggfpp/fpp.hpp"
#include "rggfpp/geometry.hpp"
#include "rggfpp/percolation.hpp"
#include "rggfpp/random.hpp"

namespace oracle {

using rggfpp::Point;
using rggfpp::VertexId;

inline double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// O(n^2) adjacency: u ~ v iff 0 < |u - v| < r.
inline std::vector<std::vector<VertexId>> brute_adjacency(const rggfpp::PointCloud& cloud, double r) {
  const auto n = static_cast<VertexId>(cloud.size());
  std::vector<std::vector<VertexId>> adj(n);
  const double r2 = r * r;
  for (VertexId u = 0; u < n; ++u) {
    const auto pu = cloud.point(u);
    for (VertexId v = u + 1; v < n; ++v) {
      const auto pv = cloud.point(v);
      double s = 0.0;
      for (std::size_t i = 0; i < pu.size(); ++i) s += (pu[i] - pv[i]) * (pu[i] - pv[i]);
      if (s > 0.0 && s < r2) {
        adj[u].push_back(v);
        adj[v].push_back(u);
      }
    }
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

// BFS flood labels over an explicit adjacency, ids by smallest member.
inline std::vector<int> bfs_labels(const std::vector<std::vector<VertexId>>& adj) {
  std::vector<int> label(adj.size(), -1);
  int next = 0;
  for (VertexId s = 0; s < adj.size(); ++s) {
    if (label[s] >= 0) continue;
    std::queue<VertexId> q;
    q.push(s);
    label[s] = next;
    while (!q.empty()) {
      const VertexId u = q.front();
      q.pop();
      for (VertexId v : adj[u])
        if (label[v] < 0) {
          label[v] = next;
          q.push(v);
        }
    }
    ++next;
  }
  return label;
}

// Linear scan argmin over vertices accepted by `keep`, smallest id on ties.
template <class Keep>
VertexId linear_nearest(const rggfpp::PointCloud& cloud, std::span<const double> x, Keep&& keep) {
  VertexId best = rggfpp::kNoVertex;
  double best_d = std::numeric_limits<double>::infinity();
  for (VertexId v = 0; v < cloud.size(); ++v) {
    if (!keep(v)) continue;
    const double d = dist(cloud.point(v), x);
    if (d < best_d) {
      best_d = d;
      best = v;
    }
  }
  return best;
}

struct WeightedEdge {
  VertexId to;
  double w;
};
using WeightedAdjacency = std::vector<std::vector<WeightedEdge>>;

struct BestPath {
  double value = std::numeric_limits<double>::infinity();
  std::vector<VertexId> path;
};

// Depth-first enumeration of simple paths s -> t with at most max_hops
// edges. Partial paths already no cheaper than the best are cut, which is
// exact for positive weights.
inline BestPath enumerate_paths(const WeightedAdjacency& adj, VertexId s, VertexId t,
                                std::size_t max_hops = std::numeric_limits<std::size_t>::max()) {
  BestPath best;
  if (s == t) {
    best.value = 0.0;
    best.path = {s};
    return best;
  }
  std::vector<char> on_path(adj.size(), 0);
  std::vector<VertexId> path{s};
  on_path[s] = 1;
  std::function<void(VertexId, double)> dfs = [&](VertexId u, double cost) {
    if (path.size() - 1 >= max_hops) return;
    for (const auto& e : adj[u]) {
      if (on_path[e.to]) continue;
      const double c = cost + e.w;
      if (c >= best.value) continue;
      path.push_back(e.to);
      if (e.to == t) {
        best.value = c;
        best.path = path;
      } else {
        on_path[e.to] = 1;
        dfs(e.to, c);
        on_path[e.to] = 0;
      }
      path.pop_back();
    }
  };
  dfs(s, 0.0);
  return best;
}

inline WeightedAdjacency base_adjacency(const rggfpp::GeometricGraph& g, const rggfpp::PassageTimeField& f) {
  WeightedAdjacency adj(g.num_vertices());
  for (rggfpp::EdgeId e = 0; e < g.num_edges(); ++e) {
    adj[g.edge_source(e)].push_back({g.edge_target(e), f.weights[e]});
    adj[g.edge_target(e)].push_back({g.edge_source(e), f.weights[e]});
  }
  return adj;
}

// Augmented adjacency rebuilt from the definition: base edges, lattice axis
// neighbours at distance t, and base vertex to the lattice point whose
// half-open cell u + [-t/2, t/2)^d holds it.
inline WeightedAdjacency augmented_adjacency(const rggfpp::AugmentedGraph& aug) {
  const auto& g = aug.base();
  WeightedAdjacency adj = base_adjacency(g, aug.field());
  adj.resize(aug.num_vertices());
  const double t = aug.spacing();
  const double w = aug.kappa() * t;
  const int d = aug.dim();
  for (VertexId u = static_cast<VertexId>(aug.num_base()); u < aug.num_vertices(); ++u) {
    const auto zu = aug.lattice_coords(u);
    for (VertexId v = u + 1; v < aug.num_vertices(); ++v) {
      const auto zv = aug.lattice_coords(v);
      long long l1 = 0;
      for (int i = 0; i < d; ++i) l1 += std::llabs(zu[i] - zv[i]);
      if (l1 == 1) {
        adj[u].push_back({v, w});
        adj[v].push_back({u, w});
      }
    }
    for (VertexId b = 0; b < aug.num_base(); ++b) {
      const auto p = g.cloud().point(b);
      bool inside = true;
      for (int i = 0; i < d; ++i) {
        const double lo = zu[i] * t - t / 2, hi = zu[i] * t + t / 2;
        if (!(p[i] >= lo && p[i] < hi)) inside = false;
      }
      if (inside) {
        adj[u].push_back({b, w});
        adj[b].push_back({u, w});
      }
    }
  }
  return adj;
}

inline double path_cost(const WeightedAdjacency& adj, std::span<const VertexId> path) {
  double c = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : adj[path[i]])
      if (e.to == path[i + 1]) best = std::min(best, e.w);
    c += best;
  }
  return c;
}

// Uniform points in [-L/2, L/2]^d, independent of the library sampler.
inline std::vector<Point> uniform_points(int dim, double side, std::size_t n, rggfpp::RandomStream& rng) {
  std::vector<Point> pts(n, Point(dim));
  for (auto& p : pts)
    for (auto& c : p) c = (rng.uniform01() - 0.5) * side;
  return pts;
}

}  // namespace oracle
