#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "rggfpp/geometry.hpp"

namespace rggfpp {

inline constexpr VertexId kNoVertex = std::numeric_limits<VertexId>::max();
inline constexpr double kUnreached = std::numeric_limits<double>::infinity();

/// Single-source shortest-path tree. Vertices that were not settled carry
/// dist = +inf and pred = kNoVertex.
struct ShortestPathTree {
  VertexId source = kNoVertex;
  std::vector<double> dist;
  std::vector<VertexId> pred;
  std::vector<std::uint32_t> hops;
  /// Vertices in the order they were settled (source first).
  std::vector<VertexId> settle_order;

  bool reached(VertexId v) const { return dist[v] != kUnreached; }
  /// Vertex sequence source -> v. Empty if v was not reached.
  std::vector<VertexId> path_to(VertexId v) const;
};

struct DijkstraLimits {
  /// Stop once this vertex is settled.
  VertexId target = kNoVertex;
  /// Stop once the next vertex to settle is farther than this.
  double max_distance = std::numeric_limits<double>::infinity();
};

/// Lazy-deletion binary-heap Dijkstra over any graph exposing
/// `num_vertices()` and `for_each_neighbor(u, fn(v, weight))`. Weights must be
/// non-negative. Heap ties pop the smaller vertex id first and equal-length
/// predecessors resolve to the smaller id, so the tree is deterministic.
template <class WeightedGraph>
ShortestPathTree dijkstra(const WeightedGraph& graph, VertexId source, const DijkstraLimits& limits = {}) {
  const std::size_t n = graph.num_vertices();
  ShortestPathTree tree;
  tree.source = source;
  tree.dist.assign(n, kUnreached);
  tree.pred.assign(n, kNoVertex);
  tree.hops.assign(n, 0);
  std::vector<char> settled(n, 0);

  using Entry = std::pair<double, VertexId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  tree.dist[source] = 0.0;
  heap.emplace(0.0, source);
  bool truncated = false;
  while (!heap.empty()) {
    const auto [du, u] = heap.top();
    heap.pop();
    if (settled[u] || du > tree.dist[u]) continue;
    if (du > limits.max_distance) {
      truncated = true;
      break;
    }
    settled[u] = 1;
    tree.settle_order.push_back(u);
    if (u == limits.target) {
      truncated = true;
      break;
    }
    graph.for_each_neighbor(u, [&](VertexId v, double w) {
      if (settled[v]) return;
      const double nd = du + w;
      if (nd < tree.dist[v]) {
        tree.dist[v] = nd;
        tree.pred[v] = u;
        tree.hops[v] = tree.hops[u] + 1;
        heap.emplace(nd, v);
      } else if (nd == tree.dist[v] && u < tree.pred[v]) {
        tree.pred[v] = u;
        tree.hops[v] = tree.hops[u] + 1;
      }
    });
  }
  if (truncated) {
    for (std::size_t v = 0; v < n; ++v) {
      if (!settled[v]) {
        tree.dist[v] = kUnreached;
        tree.pred[v] = kNoVertex;
        tree.hops[v] = 0;
      }
    }
  }
  return tree;
}

}  // namespace rggfpp
