#include "rggfpp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "rggfpp/csv.hpp"

namespace rggfpp {

BoxDomain::BoxDomain(int dim, double side) : dim_(dim), side_(side) {
  if (dim < 2) throw std::invalid_argument("dimension must be at least 2");
  if (!std::isfinite(side) || side <= 0.0) throw std::invalid_argument("box side must be positive and finite");
}

double BoxDomain::volume() const { return std::pow(side_, dim_); }

bool BoxDomain::contains(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) return false;
  const double h = half();
  return std::all_of(x.begin(), x.end(), [h](double c) { return c >= -h && c <= h; });
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

double distance(std::span<const double> a, std::span<const double> b) { return std::sqrt(squared_distance(a, b)); }

// ---------------------------------------------------------------------------
// CellGrid

CellGrid::CellGrid(const BoxDomain& domain, double cell_side, std::span<const double> coords)
    : origin_(-domain.half()), cell_side_(cell_side) {
  if (!(cell_side > 0.0)) throw std::invalid_argument("grid cell side must be positive");
  const int d = domain.dim();
  const double n_axis = std::max(1.0, std::ceil(domain.side() / cell_side));
  if (n_axis > 1e7) throw std::invalid_argument("grid too fine for box");
  counts_.assign(d, static_cast<int>(n_axis));
  strides_.assign(d, 1);
  for (int i = d - 2; i >= 0; --i) strides_[i] = strides_[i + 1] * static_cast<std::size_t>(counts_[i + 1]);
  const std::size_t total = strides_[0] * static_cast<std::size_t>(counts_[0]);

  const std::size_t n = coords.size() / static_cast<std::size_t>(d);
  std::vector<std::size_t> cell(n);
  cell_start_.assign(total + 1, 0);
  for (std::size_t v = 0; v < n; ++v) {
    cell[v] = cell_of(coords.subspan(v * d, d));
    ++cell_start_[cell[v] + 1];
  }
  for (std::size_t c = 0; c < total; ++c) cell_start_[c + 1] += cell_start_[c];
  items_.resize(n);
  std::vector<std::size_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t v = 0; v < n; ++v) items_[fill[cell[v]]++] = static_cast<VertexId>(v);
}

int CellGrid::axis_cell(int axis, double coord) const {
  const double raw = std::floor((coord - origin_) / cell_side_);
  if (raw < 0.0) return 0;
  if (raw >= counts_[axis]) return counts_[axis] - 1;
  return static_cast<int>(raw);
}

std::size_t CellGrid::flat_index(std::span<const int> cell) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < cell.size(); ++i) idx += strides_[i] * static_cast<std::size_t>(cell[i]);
  return idx;
}

std::size_t CellGrid::cell_of(std::span<const double> x) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    idx += strides_[i] * static_cast<std::size_t>(axis_cell(static_cast<int>(i), x[i]));
  return idx;
}

std::span<const VertexId> CellGrid::items(std::size_t flat_cell) const {
  return {items_.data() + cell_start_[flat_cell], cell_start_[flat_cell + 1] - cell_start_[flat_cell]};
}

// ---------------------------------------------------------------------------
// PointCloud

PointCloud::PointCloud(BoxDomain domain, double intensity, std::vector<double> coords, double cell_side)
    : domain_(domain), intensity_(intensity), coords_(std::move(coords)) {
  grid_ = CellGrid(domain_, std::min(cell_side, domain_.side()), coords_);
}

PointCloud PointCloud::with_cell_side(double cell_side) const {
  return PointCloud(domain_, intensity_, coords_, cell_side);
}

PointCloud sample_ppp(const BoxDomain& domain, double intensity, RandomStream& rng, double cell_side) {
  if (!std::isfinite(intensity) || intensity < 0.0)
    throw std::invalid_argument("intensity must be finite and non-negative");
  const int d = domain.dim();
  const int blocks_per_axis = static_cast<int>(std::ceil(domain.side() / kSamplingBlockSide));
  const std::uint64_t base = rng();

  std::vector<double> coords;
  coords.reserve(static_cast<std::size_t>(intensity * domain.volume() * 1.05) * d + 64);
  if (intensity > 0.0) {
    std::vector<int> block(d, 0);
    std::vector<double> lo(d), hi(d);
    std::uint64_t block_index = 0;
    while (true) {
      double vol = 1.0;
      for (int i = 0; i < d; ++i) {
        lo[i] = -domain.half() + block[i] * kSamplingBlockSide;
        hi[i] = std::min(domain.half(), lo[i] + kSamplingBlockSide);
        vol *= hi[i] - lo[i];
      }
      RandomStream stream(mix_seed({base, block_index}));
      std::poisson_distribution<long long> count_dist(intensity * vol);
      const long long count = count_dist(stream);
      for (long long k = 0; k < count; ++k)
        for (int i = 0; i < d; ++i) coords.push_back(std::min(hi[i], lo[i] + (hi[i] - lo[i]) * stream.uniform01()));

      ++block_index;
      int axis = d - 1;
      while (axis >= 0 && block[axis] == blocks_per_axis - 1) {
        block[axis] = 0;
        --axis;
      }
      if (axis < 0) break;
      ++block[axis];
    }
  }
  if (coords.size() / d > std::numeric_limits<VertexId>::max())
    throw std::length_error("point cloud exceeds vertex id range");
  return PointCloud(domain, intensity, std::move(coords), cell_side);
}

PointCloud inject_points(const BoxDomain& domain, std::span<const Point> pts, double cell_side) {
  std::vector<double> coords;
  coords.reserve(pts.size() * domain.dim());
  for (const Point& p : pts) {
    if (!domain.contains(p)) throw std::invalid_argument("injected point outside the domain");
    coords.insert(coords.end(), p.begin(), p.end());
  }
  const double intensity = static_cast<double>(pts.size()) / domain.volume();
  return PointCloud(domain, intensity, std::move(coords), cell_side);
}

std::vector<VertexId> neighbors_within(const PointCloud& cloud, std::span<const double> x, double s) {
  std::vector<VertexId> out;
  if (cloud.empty() || !(s >= 0.0)) return out;
  const CellGrid& grid = cloud.grid();
  const int d = cloud.dim();
  std::vector<int> lo(d), hi(d);
  for (int i = 0; i < d; ++i) {
    lo[i] = grid.axis_cell(i, x[i] - s);
    hi[i] = grid.axis_cell(i, x[i] + s);
  }
  const double s2 = s * s;
  grid.for_each_cell_in_range(lo, hi, [&](std::size_t c) {
    for (VertexId v : grid.items(c))
      if (squared_distance(cloud.point(v), x) <= s2) out.push_back(v);
  });
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// GeometricGraph

GeometricGraph build_rgg(PointCloud cloud, double radius) {
  if (!std::isfinite(radius) || radius <= 0.0) throw std::invalid_argument("radius must be positive and finite");
  if (cloud.grid().cell_side() != std::min(radius, cloud.domain().side())) cloud = cloud.with_cell_side(radius);

  GeometricGraph g(std::move(cloud), radius);
  const PointCloud& pc = g.cloud_;
  const CellGrid& grid = pc.grid();
  const std::size_t n = pc.size();
  const int d = pc.dim();
  const double r2 = radius * radius;

  // Forward lists: for each u, neighbors v > u.
  std::vector<std::size_t> fwd_start(n + 1, 0);
  std::vector<VertexId> fwd;
  fwd.reserve(n * 8);
  std::vector<int> lo(d), hi(d);
  std::vector<VertexId> scratch;
  for (std::size_t u = 0; u < n; ++u) {
    const auto pu = pc.point(static_cast<VertexId>(u));
    for (int i = 0; i < d; ++i) {
      const int c = grid.axis_cell(i, pu[i]);
      lo[i] = std::max(0, c - 1);
      hi[i] = std::min(grid.counts()[i] - 1, c + 1);
    }
    scratch.clear();
    grid.for_each_cell_in_range(lo, hi, [&](std::size_t c) {
      for (VertexId v : grid.items(c))
        if (v > u) {
          const double s2 = squared_distance(pu, pc.point(v));
          if (s2 > 0.0 && s2 < r2) scratch.push_back(v);
        }
    });
    std::sort(scratch.begin(), scratch.end());
    fwd.insert(fwd.end(), scratch.begin(), scratch.end());
    fwd_start[u + 1] = fwd.size();
  }
  if (fwd.size() > std::numeric_limits<EdgeId>::max()) throw std::length_error("edge count exceeds edge id range");

  const std::size_t m = fwd.size();
  g.edge_source_.resize(m);
  g.edge_target_.assign(fwd.begin(), fwd.end());
  g.offsets_.assign(n + 1, 0);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t k = fwd_start[u]; k < fwd_start[u + 1]; ++k) {
      g.edge_source_[k] = static_cast<VertexId>(u);
      ++g.offsets_[u + 1];
      ++g.offsets_[fwd[k] + 1];
    }
  }
  for (std::size_t v = 0; v < n; ++v) g.offsets_[v + 1] += g.offsets_[v];
  g.adjacency_.resize(2 * m);
  g.adjacency_edge_.resize(2 * m);
  std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  // Edges are visited in canonical order, which leaves every list sorted.
  for (std::size_t e = 0; e < m; ++e) {
    const VertexId u = g.edge_source_[e];
    const VertexId v = g.edge_target_[e];
    g.adjacency_[fill[v]] = u;
    g.adjacency_edge_[fill[v]++] = static_cast<EdgeId>(e);
    g.adjacency_[fill[u]] = v;
    g.adjacency_edge_[fill[u]++] = static_cast<EdgeId>(e);
  }
  return g;
}

// ---------------------------------------------------------------------------
// CSV

void write_points_csv(std::ostream& out, const PointCloud& cloud) {
  const int d = cloud.dim();
  for (int i = 0; i < d; ++i) out << (i ? "," : "") << 'x' << i;
  out << '\n';
  for (std::size_t v = 0; v < cloud.size(); ++v) {
    const auto p = cloud.point(static_cast<VertexId>(v));
    for (int i = 0; i < d; ++i) out << (i ? "," : "") << format_double(p[i]);
    out << '\n';
  }
}

PointCloud read_points_csv(std::istream& in, const BoxDomain& domain) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("points CSV is missing its header");
  const auto header = split_csv_line(line);
  if (static_cast<int>(header.size()) != domain.dim()) throw std::invalid_argument("points CSV header has wrong width");
  for (int i = 0; i < domain.dim(); ++i)
    if (header[i] != "x" + std::to_string(i)) throw std::invalid_argument("unexpected points CSV header");
  std::vector<Point> pts;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != domain.dim()) throw std::invalid_argument("points CSV row has wrong width");
    Point p;
    for (const auto& f : fields) p.push_back(parse_double(f));
    pts.push_back(std::move(p));
  }
  return inject_points(domain, pts);
}

}  // namespace rggfpp
