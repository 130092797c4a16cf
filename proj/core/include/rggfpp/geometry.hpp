#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "rggfpp/random.hpp"

namespace rggfpp {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;
using Point = std::vector<double>;

/// Side length of the sampling blocks. Each block draws its points from its
/// own substream.
inline constexpr double kSamplingBlockSide = 16.0;

/// The closed box [-L/2, L/2]^d.
class BoxDomain {
 public:
  BoxDomain(int dim, double side);

  int dim() const { return dim_; }
  double side() const { return side_; }
  double half() const { return 0.5 * side_; }
  double volume() const;
  bool contains(std::span<const double> x) const;

 private:
  int dim_;
  double side_;
};

/// Uniform cell index over a box. Cell of coordinate c along an axis is
/// floor((c + L/2) / h), clamped into range so the upper face is included.
class CellGrid {
 public:
  CellGrid() = default;
  CellGrid(const BoxDomain& domain, double cell_side, std::span<const double> coords);

  double cell_side() const { return cell_side_; }
  int dim() const { return static_cast<int>(counts_.size()); }
  std::span<const int> counts() const { return counts_; }
  std::size_t num_cells() const { return cell_start_.empty() ? 0 : cell_start_.size() - 1; }

  int axis_cell(int axis, double coord) const;
  std::size_t flat_index(std::span<const int> cell) const;
  std::size_t cell_of(std::span<const double> x) const;
  /// Vertex ids in the given cell, ascending.
  std::span<const VertexId> items(std::size_t flat_cell) const;

  /// Visits every cell in the axis-aligned index range [lo, hi] (inclusive,
  /// already clamped) in lexicographic order.
  template <class Fn>
  void for_each_cell_in_range(std::span<const int> lo, std::span<const int> hi, Fn&& fn) const {
    const int d = dim();
    std::vector<int> cur(lo.begin(), lo.end());
    for (int i = 0; i < d; ++i)
      if (lo[i] > hi[i]) return;
    while (true) {
      fn(flat_index(cur));
      int axis = d - 1;
      while (axis >= 0 && cur[axis] == hi[axis]) {
        cur[axis] = lo[axis];
        --axis;
      }
      if (axis < 0) return;
      ++cur[axis];
    }
  }

  /// Visits the cells at Chebyshev index distance exactly k from `center`
  /// that lie inside the grid. Returns false if the shell is entirely outside.
  template <class Fn>
  bool for_each_cell_in_shell(std::span<const int> center, int k, Fn&& fn) const {
    const int d = dim();
    std::vector<int> lo(d), hi(d), cur(d);
    bool any = false;
    for (int i = 0; i < d; ++i) {
      lo[i] = std::max(0, center[i] - k);
      hi[i] = std::min(counts_[i] - 1, center[i] + k);
      if (center[i] - k >= 0 || center[i] + k <= counts_[i] - 1) any = true;
    }
    if (!any) return false;
    cur = lo;
    while (true) {
      bool on_shell = false;
      for (int i = 0; i < d; ++i)
        if (cur[i] == center[i] - k || cur[i] == center[i] + k) on_shell = true;
      if (on_shell) fn(flat_index(cur));
      int axis = d - 1;
      while (axis >= 0 && cur[axis] == hi[axis]) {
        cur[axis] = lo[axis];
        --axis;
      }
      if (axis < 0) return true;
      ++cur[axis];
    }
  }

 private:
  double origin_ = 0.0;
  double cell_side_ = 0.0;
  std::vector<int> counts_;
  std::vector<std::size_t> strides_;
  std::vector<std::size_t> cell_start_;
  std::vector<VertexId> items_;
};

class PointCloud;
class GeometricGraph;

/// Homogeneous Poisson sample of the given intensity in the box. The box is
/// tiled by sampling blocks; each block gets a Poisson count and uniform
/// positions from a substream split off `rng`, so ids are block-contiguous.
PointCloud sample_ppp(const BoxDomain& domain, double intensity, RandomStream& rng, double cell_side = 1.0);

/// Cloud holding exactly `pts`, in the given order. Throws std::invalid_argument
/// if any point lies outside the box or has the wrong dimension.
PointCloud inject_points(const BoxDomain& domain, std::span<const Point> pts, double cell_side = 1.0);

/// Builds the radius-r graph with a 3^d stencil over a grid of cell side r.
/// The cloud is re-indexed if its grid uses a different cell side.
GeometricGraph build_rgg(PointCloud cloud, double radius);

/// Sample of points in a box with a grid index. Points are stored flat,
/// `dim` doubles per point, in vertex-id order.
class PointCloud {
 public:
  const BoxDomain& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  double intensity() const { return intensity_; }
  std::size_t size() const { return coords_.size() / static_cast<std::size_t>(domain_.dim()); }
  bool empty() const { return coords_.empty(); }
  std::span<const double> point(VertexId v) const {
    return {coords_.data() + static_cast<std::size_t>(v) * domain_.dim(), static_cast<std::size_t>(domain_.dim())};
  }
  std::span<const double> coords() const { return coords_; }
  const CellGrid& grid() const { return grid_; }

  /// Copy of this cloud indexed with a different cell side.
  PointCloud with_cell_side(double cell_side) const;

  friend PointCloud sample_ppp(const BoxDomain&, double, RandomStream&, double);
  friend PointCloud inject_points(const BoxDomain&, std::span<const Point>, double);

 private:
  PointCloud(BoxDomain domain, double intensity, std::vector<double> coords, double cell_side);

  BoxDomain domain_;
  double intensity_;
  std::vector<double> coords_;
  CellGrid grid_;
};

/// Ids of all points with ||v - x|| <= s, ascending.
std::vector<VertexId> neighbors_within(const PointCloud& cloud, std::span<const double> x, double s);

double squared_distance(std::span<const double> a, std::span<const double> b);
double distance(std::span<const double> a, std::span<const double> b);

/// Random geometric graph: {u,v} is an edge iff 0 < ||u - v|| < r.
/// Adjacency is CSR with per-vertex sorted neighbor lists; every undirected
/// edge also has a canonical id, ordered by (min endpoint, max endpoint).
class GeometricGraph {
 public:
  const PointCloud& cloud() const { return cloud_; }
  double radius() const { return radius_; }
  std::size_t num_vertices() const { return cloud_.size(); }
  std::size_t num_edges() const { return edge_source_.size(); }

  std::span<const VertexId> neighbors(VertexId v) const {
    return {adjacency_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  /// Canonical edge ids, parallel to neighbors(v).
  std::span<const EdgeId> incident_edges(VertexId v) const {
    return {adjacency_edge_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::size_t degree(VertexId v) const { return offsets_[v + 1] - offsets_[v]; }
  VertexId edge_source(EdgeId e) const { return edge_source_[e]; }
  VertexId edge_target(EdgeId e) const { return edge_target_[e]; }

  friend GeometricGraph build_rgg(PointCloud cloud, double radius);

 private:
  GeometricGraph(PointCloud cloud, double radius) : cloud_(std::move(cloud)), radius_(radius) {}

  PointCloud cloud_;
  double radius_;
  std::vector<std::size_t> offsets_;
  std::vector<VertexId> adjacency_;
  std::vector<EdgeId> adjacency_edge_;
  std::vector<VertexId> edge_source_;
  std::vector<VertexId> edge_target_;
};

/// CSV with header "x0,...,x{d-1}", one point per row.
void write_points_csv(std::ostream& out, const PointCloud& cloud);
PointCloud read_points_csv(std::istream& in, const BoxDomain& domain);

}  // namespace rggfpp
