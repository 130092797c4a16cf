#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rggfpp/errors.hpp"
#include "rggfpp/geometry.hpp"

namespace rggfpp {

using ComponentId = std::uint32_t;

/// Connected components of a graph. Component ids are assigned in order of
/// each component's smallest vertex id; the giant is the largest component,
/// ties going to the smallest id.
struct ComponentLabeling {
  std::vector<ComponentId> label;
  std::vector<std::size_t> sizes;
  std::optional<ComponentId> giant;

  bool in_giant(VertexId v) const { return giant && label[v] == *giant; }
  std::size_t giant_size() const { return giant ? sizes[*giant] : 0; }
  /// Size of the largest non-giant component (0 if none).
  std::size_t second_size() const;
};

ComponentLabeling components(const GeometricGraph& graph);

/// Nearest-vertex queries over a subset of a cloud's points. Ties are broken
/// by smallest vertex id.
class NearestVertexIndex {
 public:
  NearestVertexIndex(const PointCloud& cloud, std::vector<VertexId> members, double cell_side);

  bool empty() const { return members_.empty(); }
  /// Nearest member and its distance; nullopt if the index is empty.
  std::optional<std::pair<VertexId, double>> nearest(std::span<const double> x) const;

 private:
  const PointCloud* cloud_;
  std::vector<VertexId> members_;
  std::vector<double> coords_;
  CellGrid grid_;
};

/// q-bar: the closest vertex of the whole cloud. Throws NoVertices on an empty cloud.
VertexId closest_vertex_qbar(const PointCloud& cloud, std::span<const double> x);

/// q: the closest vertex of the giant component. Throws NoGiantComponent.
VertexId closest_vertex_q(const GeometricGraph& graph, const ComponentLabeling& labels, std::span<const double> x);

/// Hop distance; nullopt when u and v lie in different components.
std::optional<std::size_t> chemical_distance(const GeometricGraph& graph, VertexId u, VertexId v);

/// Largest spherical hole in the r-coverage of the giant component, scanned
/// on a grid of pitch `resolution` over the centered box of side `scan_box_side`.
struct HoleScan {
  double resolution = 0.0;
  double diameter = 0.0;
  Point argmax_center;
};

/// For every scan center c the hole radius is (dist(c, giant) - r)^+; the
/// diameter is twice the maximum. The estimate lower-bounds the continuum
/// value and is within resolution * sqrt(d) of it.
HoleScan hole_diameter(const GeometricGraph& graph, const ComponentLabeling& labels, double scan_box_side,
                       double resolution);

}  // namespace rggfpp
