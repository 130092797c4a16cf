#include "rggfpp/fpp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "rggfpp/csv.hpp"
#include "rggfpp/errors.hpp"

namespace rggfpp {

namespace {

// Uniform on the open interval (0, 1).
double open_uniform(RandomStream& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

// ---------------------------------------------------------------------------
// PassageDistribution

PassageDistribution PassageDistribution::exponential(double rate) {
  if (!finite_positive(rate)) throw DistributionRejected("exponential rate must be positive and finite");
  return {Kind::kExponential, rate, 0.0, 0.0};
}

PassageDistribution PassageDistribution::uniform_shifted(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b))
    throw DistributionRejected("uniform bounds must be finite (A2: E[exp(eta*tau)] < inf)");
  if (a <= 0.0)
    throw DistributionRejected("uniform lower bound must be > 0: passage times need support bounded away from "
                               "zero (A1: P(tau = 0) = 0)");
  if (b <= a) throw DistributionRejected("uniform requires a < b");
  return {Kind::kUniformShifted, a, b, 0.0};
}

PassageDistribution PassageDistribution::lognormal(double mu, double sigma, std::optional<double> cap) {
  if (!std::isfinite(mu) || !finite_positive(sigma))
    throw DistributionRejected("lognormal needs finite mu and positive finite sigma");
  const double c = cap.value_or(std::exp(mu + sigma * kLogNormalCapZ));
  if (!std::isfinite(c))
    throw DistributionRejected("untruncated lognormal has no exponential moment (A2: E[exp(eta*tau)] < inf)");
  if (!(c > 0.0)) throw DistributionRejected("lognormal cap must be positive");
  return {Kind::kLogNormal, mu, sigma, c};
}

PassageDistribution PassageDistribution::constant(double value) {
  if (value == 0.0) throw DistributionRejected("constant 0 is an atom at zero (A1: P(tau = 0) = 0)");
  if (!finite_positive(value)) throw DistributionRejected("constant passage time must be positive and finite");
  return {Kind::kConstant, value, 0.0, 0.0};
}

PassageDistribution PassageDistribution::parse(std::string_view spec) {
  std::string s;
  for (char c : spec)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::tolower(c)));
  const auto open = s.find('(');
  if (open == std::string::npos || s.back() != ')')
    throw DistributionRejected("distribution must look like name(args): '" + std::string(spec) + "'");
  const std::string name = s.substr(0, open);
  std::vector<std::string> raw;
  std::string inner = s.substr(open + 1, s.size() - open - 2);
  std::stringstream ss(inner);
  for (std::string item; std::getline(ss, item, ',');) raw.push_back(item);
  std::vector<double> args;
  std::optional<double> cap;
  try {
    for (const auto& item : raw) {
      if (item.rfind("cap=", 0) == 0)
        cap = parse_double(item.substr(4));
      else
        args.push_back(parse_double(item));
    }
  } catch (const std::invalid_argument& e) {
    throw DistributionRejected(std::string("bad distribution argument: ") + e.what());
  }
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi)
      throw DistributionRejected("wrong number of arguments for " + name + "(...)");
  };
  if (name == "exponential" || name == "exp") {
    need(1, 1);
    return exponential(args[0]);
  }
  if (name == "uniform" || name == "uniformshifted" || name == "uniform_shifted") {
    need(2, 2);
    return uniform_shifted(args[0], args[1]);
  }
  if (name == "lognormal") {
    need(2, 3);
    if (args.size() == 3) cap = args[2];
    return lognormal(args[0], args[1], cap);
  }
  if (name == "constant") {
    need(1, 1);
    return constant(args[0]);
  }
  throw DistributionRejected("unknown distribution '" + name + "'");
}

double PassageDistribution::sample(RandomStream& rng) const {
  switch (kind_) {
    case Kind::kExponential:
      return -std::log(open_uniform(rng)) / params_[0];
    case Kind::kUniformShifted:
      while (true) {
        const double x = params_[0] + (params_[1] - params_[0]) * open_uniform(rng);
        if (x > params_[0] && x < params_[1]) return x;
      }
    case Kind::kLogNormal: {
      std::normal_distribution<double> normal(params_[0], params_[1]);
      while (true) {
        const double x = std::exp(normal(rng));
        if (x > 0.0 && x <= params_[2]) return x;
      }
    }
    case Kind::kConstant:
      return params_[0];
  }
  return params_[0];
}

double PassageDistribution::mean() const {
  switch (kind_) {
    case Kind::kExponential:
      return 1.0 / params_[0];
    case Kind::kUniformShifted:
      return 0.5 * (params_[0] + params_[1]);
    case Kind::kLogNormal: {
      // Mean of the truncated law: E[X; X <= c] / P(X <= c).
      const double mu = params_[0], sigma = params_[1];
      const double z = (std::log(params_[2]) - mu) / sigma;
      const double phi_z = 0.5 * std::erfc(-z / std::sqrt(2.0));
      const double phi_shift = 0.5 * std::erfc(-(z - sigma) / std::sqrt(2.0));
      return std::exp(mu + 0.5 * sigma * sigma) * phi_shift / phi_z;
    }
    case Kind::kConstant:
      return params_[0];
  }
  return params_[0];
}

std::string PassageDistribution::describe() const {
  switch (kind_) {
    case Kind::kExponential:
      return "exponential(" + format_double(params_[0]) + ")";
    case Kind::kUniformShifted:
      return "uniform(" + format_double(params_[0]) + "," + format_double(params_[1]) + ")";
    case Kind::kLogNormal:
      return "lognormal(" + format_double(params_[0]) + "," + format_double(params_[1]) +
             ",cap=" + format_double(params_[2]) + ")";
    case Kind::kConstant:
      return "constant(" + format_double(params_[0]) + ")";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Weights

PassageTimeField sample_weights(const GeometricGraph& graph, const PassageDistribution& dist, RandomStream& rng) {
  PassageTimeField field;
  field.seed_lineage = rng();
  field.weights.resize(graph.num_edges());
  const PointCloud& cloud = graph.cloud();
  const BoxDomain& domain = cloud.domain();
  const int d = domain.dim();
  const auto blocks_per_axis = static_cast<std::size_t>(std::ceil(domain.side() / kSamplingBlockSide));
  std::size_t num_blocks = 1;
  for (int i = 0; i < d; ++i) num_blocks *= blocks_per_axis;
  std::vector<std::optional<RandomStream>> streams(num_blocks);

  auto block_of = [&](VertexId v) {
    const auto p = cloud.point(v);
    std::size_t idx = 0;
    for (int i = 0; i < d; ++i) {
      auto b = static_cast<std::size_t>(std::max(0.0, std::floor((p[i] + domain.half()) / kSamplingBlockSide)));
      b = std::min(b, blocks_per_axis - 1);
      idx = idx * blocks_per_axis + b;
    }
    return idx;
  };

  for (std::size_t e = 0; e < graph.num_edges(); ++e) {
    const std::size_t block = block_of(graph.edge_source(static_cast<EdgeId>(e)));
    auto& stream = streams[block];
    if (!stream) stream.emplace(mix_seed({field.seed_lineage, block}));
    field.weights[e] = dist.sample(*stream);
  }
  return field;
}

// ---------------------------------------------------------------------------
// Paths

std::vector<VertexId> ShortestPathTree::path_to(VertexId v) const {
  std::vector<VertexId> path;
  if (v >= dist.size() || !reached(v)) return path;
  for (VertexId cur = v; cur != kNoVertex; cur = pred[cur]) path.push_back(cur);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<double> Geodesic::polyline(const PointCloud& cloud) const {
  std::vector<double> out;
  out.reserve(vertices.size() * cloud.dim());
  for (VertexId v : vertices) {
    const auto p = cloud.point(v);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

double path_weight(const GeometricGraph& graph, const PassageTimeField& field, std::span<const VertexId> path) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto nbrs = graph.neighbors(path[i]);
    const auto it = std::lower_bound(nbrs.begin(), nbrs.end(), path[i + 1]);
    if (it == nbrs.end() || *it != path[i + 1]) throw std::invalid_argument("path uses a non-edge");
    total += field.weight(graph.incident_edges(path[i])[static_cast<std::size_t>(it - nbrs.begin())]);
  }
  return total;
}

std::optional<FirstPassage> first_passage_between(const GeometricGraph& graph, const PassageTimeField& field,
                                                  VertexId u, VertexId v) {
  // Always search from the smaller id so T(u, v) and T(v, u) are the same sum.
  const VertexId s = std::min(u, v), t = std::max(u, v);
  DijkstraLimits limits;
  limits.target = t;
  const auto tree = dijkstra(WeightedView(graph, field), s, limits);
  if (!tree.reached(t)) return std::nullopt;
  FirstPassage out;
  out.time = tree.dist[t];
  out.geodesic.vertices = tree.path_to(t);
  if (s != u) std::reverse(out.geodesic.vertices.begin(), out.geodesic.vertices.end());
  out.geodesic.total_time = out.time;
  return out;
}

FirstPassage first_passage_time(const GeometricGraph& graph, const ComponentLabeling& labels,
                                const PassageTimeField& field, std::span<const double> x, std::span<const double> y) {
  const VertexId qx = closest_vertex_q(graph, labels, x);
  const VertexId qy = closest_vertex_q(graph, labels, y);
  // Both endpoints sit in the giant component, so a path exists.
  return *first_passage_between(graph, field, qx, qy);
}

ShortestPathTree fpt_all_from(const GeometricGraph& graph, const ComponentLabeling& labels,
                              const PassageTimeField& field, std::span<const double> x, const DijkstraLimits& limits) {
  const VertexId qx = closest_vertex_q(graph, labels, x);
  return dijkstra(WeightedView(graph, field), qx, limits);
}

GrowthSet growth_set(const PointCloud& cloud, const ComponentLabeling& labels, std::span<const double> times, double t,
                     VertexId center) {
  GrowthSet out;
  out.threshold = t;
  const auto c = cloud.point(center);
  double outer2 = 0.0;
  double inner2 = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < cloud.size(); ++v) {
    const auto id = static_cast<VertexId>(v);
    if (!labels.in_giant(id)) continue;
    const double d2 = squared_distance(cloud.point(id), c);
    if (times[v] <= t) {
      out.members.push_back(id);
      outer2 = std::max(outer2, d2);
    } else {
      inner2 = std::min(inner2, d2);
    }
  }
  out.outer_radius = std::sqrt(outer2);
  out.inner_radius = std::min(std::sqrt(inner2), out.outer_radius);
  return out;
}

void write_geodesic_csv(std::ostream& out, const PointCloud& cloud, const Geodesic& geodesic) {
  std::vector<std::string> header{"step", "vertex"};
  for (int i = 0; i < cloud.dim(); ++i) header.push_back("x" + std::to_string(i));
  CsvWriter csv(out, header);
  for (std::size_t k = 0; k < geodesic.vertices.size(); ++k) {
    csv.field(static_cast<std::uint64_t>(k)).field(static_cast<std::uint64_t>(geodesic.vertices[k]));
    for (double c : cloud.point(geodesic.vertices[k])) csv.field(c);
    csv.end_row();
  }
}

}  // namespace rggfpp
