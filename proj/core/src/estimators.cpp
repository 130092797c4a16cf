#include "rggfpp/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace rggfpp {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double point_segment_distance(std::span<const double> p, std::span<const double> a, std::span<const double> b) {
  const std::size_t d = p.size();
  double ab2 = 0.0, ap_ab = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double ab = b[i] - a[i];
    ab2 += ab * ab;
    ap_ab += (p[i] - a[i]) * ab;
  }
  const double s = ab2 > 0.0 ? std::clamp(ap_ab / ab2, 0.0, 1.0) : 0.0;
  double dist2 = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = a[i] + s * (b[i] - a[i]) - p[i];
    dist2 += diff * diff;
  }
  return std::sqrt(dist2);
}

double directed_hausdorff(std::span<const double> a, std::span<const double> b, int dim, double pitch) {
  const auto d = static_cast<std::size_t>(dim);
  const std::size_t n = a.size() / d;
  double worst = 0.0;
  Point p(d);
  for (std::size_t k = 0; k < n; ++k) {
    const auto start = a.subspan(k * d, d);
    worst = std::max(worst, distance_to_polyline(start, b, dim));
    if (k + 1 == n) break;
    const auto end = a.subspan((k + 1) * d, d);
    const auto pieces = static_cast<std::size_t>(std::ceil(distance(start, end) / pitch));
    for (std::size_t j = 1; j < pieces; ++j) {
      const double s = static_cast<double>(j) / static_cast<double>(pieces);
      for (std::size_t i = 0; i < d; ++i) p[i] = start[i] + s * (end[i] - start[i]);
      worst = std::max(worst, distance_to_polyline(p, b, dim));
    }
  }
  return worst;
}

void require_tiers(std::size_t n) {
  if (n < kMinFitTiers)
    throw std::invalid_argument("exponent fits need at least " + std::to_string(kMinFitTiers) + " tiers, got " +
                                std::to_string(n));
}

}  // namespace

double angle(std::span<const double> a, std::span<const double> b) {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("angle of a zero vector");
  return std::acos(std::clamp(dot(a, b) / (na * nb), -1.0, 1.0));
}

double distance_to_polyline(std::span<const double> p, std::span<const double> polyline, int dim) {
  const auto d = static_cast<std::size_t>(dim);
  const std::size_t n = polyline.size() / d;
  if (n == 0) throw std::invalid_argument("empty polyline");
  if (n == 1) return distance(p, polyline.subspan(0, d));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < n; ++k)
    best = std::min(best, point_segment_distance(p, polyline.subspan(k * d, d), polyline.subspan((k + 1) * d, d)));
  return best;
}

double hausdorff(std::span<const double> a, std::span<const double> b, int dim, double pitch) {
  if (!(pitch > 0.0)) throw std::invalid_argument("sampling pitch must be positive");
  return std::max(directed_hausdorff(a, b, dim, pitch), directed_hausdorff(b, a, dim, pitch));
}

// ---------------------------------------------------------------------------
// Fits and summaries

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw std::invalid_argument("a line fit needs at least two points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("a line fit needs two distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.n = n;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

LinearFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  require_tiers(x.size());
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("log-log fit needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lx, ly);
}

TierSummary summarize(const TierSample& tier) {
  TierSummary s;
  s.norm = tier.norm;
  s.n = tier.times.size();
  if (s.n == 0) return s;
  s.mean = std::accumulate(tier.times.begin(), tier.times.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double t : tier.times) ss += (t - s.mean) * (t - s.mean);
    s.variance = ss / static_cast<double>(s.n - 1);
    s.std_error = std::sqrt(s.variance / static_cast<double>(s.n));
  }
  return s;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, 0.5);
}

// ---------------------------------------------------------------------------
// Time constant

PhiEstimate estimate_phi(std::span<const TierSample> tiers, RandomStream& rng, std::size_t resamples, double level) {
  if (tiers.empty()) throw std::invalid_argument("no distance tiers");
  for (std::size_t i = 1; i < tiers.size(); ++i)
    if (!(tiers[i - 1].norm < tiers[i].norm)) throw std::invalid_argument("tiers must be sorted ascending");
  const TierSample& top = tiers.back();
  if (top.times.size() < 10)
    throw std::invalid_argument("phi needs at least 10 replicas at the largest tier, got " +
                                std::to_string(top.times.size()));
  PhiEstimate out;
  out.level = level;
  for (const auto& t : tiers) out.tiers.push_back(summarize(t));
  std::vector<double> ratios;
  for (double t : top.times) {
    if (!(t > 0.0)) throw std::invalid_argument("passage times at the top tier must be positive");
    ratios.push_back(top.norm / t);
  }
  const auto n = ratios.size();
  out.n = n;
  out.phi = std::accumulate(ratios.begin(), ratios.end(), 0.0) / static_cast<double>(n);

  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += ratios[pick(rng)];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  out.ci_low = std::min(out.phi, quantile_sorted(means, 0.5 * (1.0 - level)));
  out.ci_high = std::max(out.phi, quantile_sorted(means, 0.5 * (1.0 + level)));
  return out;
}

double phi_band_constant(std::span<const TierSummary> tiers, double phi) {
  double c = 0.0;
  for (const auto& t : tiers) {
    if (!(t.norm > 1.0)) continue;
    const double excess = t.mean * phi / t.norm - 1.0;
    c = std::max(c, excess * std::sqrt(t.norm) / std::log(t.norm));
  }
  return c;
}

double top_tier_drift(std::span<const TierSummary> tiers) {
  if (tiers.size() < 2) throw std::invalid_argument("drift needs two tiers");
  const auto& a = tiers[tiers.size() - 2];
  const auto& b = tiers.back();
  const double diff = b.mean / b.norm - a.mean / a.norm;
  const double se = std::hypot(a.std_error / a.norm, b.std_error / b.norm);
  return se > 0.0 ? std::abs(diff) / se : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
}

// ---------------------------------------------------------------------------
// Variance and tails

VarianceScaling variance_scaling(std::span<const TierSample> tiers, std::size_t min_replicas) {
  require_tiers(tiers.size());
  VarianceScaling out;
  std::vector<double> norms, variances;
  for (const auto& tier : tiers) {
    if (tier.times.size() < min_replicas)
      throw std::invalid_argument("tier " + std::to_string(tier.norm) + " has " + std::to_string(tier.times.size()) +
                                  " replicas, need " + std::to_string(min_replicas));
    if (!(tier.norm > 1.0)) throw std::invalid_argument("variance tiers need ||x|| > 1");
    const auto s = summarize(tier);
    out.rows.push_back({tier.norm, s.variance, s.variance / (tier.norm * std::log(tier.norm))});
    norms.push_back(tier.norm);
    variances.push_back(s.variance);
  }
  out.fit = fit_loglog(norms, variances);
  double lo = out.rows.front().ratio, hi = lo;
  for (const auto& row : out.rows) {
    lo = std::min(lo, row.ratio);
    hi = std::max(hi, row.ratio);
  }
  out.ratio_spread = hi / lo;
  return out;
}

TailCurve moderate_tail(const TierSample& tier, double low_q, double high_q, std::size_t min_replicas) {
  if (tier.times.size() < min_replicas)
    throw std::invalid_argument("tail estimation needs " + std::to_string(min_replicas) + " replicas, got " +
                                std::to_string(tier.times.size()));
  if (!(tier.norm > 0.0)) throw std::invalid_argument("tier norm must be positive");
  if (!(low_q < high_q)) throw std::invalid_argument("tail window must have low < high");
  TailCurve out;
  out.norm = tier.norm;
  const auto s = summarize(tier);
  const double scale = std::sqrt(tier.norm);
  for (double t : tier.times) out.ell.push_back(std::abs(t - s.mean) / scale);
  std::sort(out.ell.begin(), out.ell.end());
  const auto n = static_cast<double>(out.ell.size());
  out.survival.resize(out.ell.size());
  for (std::size_t i = 0; i < out.ell.size(); ++i) {
    const auto first = std::lower_bound(out.ell.begin(), out.ell.end(), out.ell[i]) - out.ell.begin();
    out.survival[i] = (n - static_cast<double>(first)) / n;
  }
  out.window_low = quantile_sorted(out.ell, low_q);
  out.window_high = quantile_sorted(out.ell, high_q);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < out.ell.size(); ++i) {
    if (out.ell[i] < out.window_low || out.ell[i] > out.window_high) continue;
    if (i > 0 && out.ell[i] == out.ell[i - 1]) continue;
    xs.push_back(out.ell[i]);
    ys.push_back(std::log(out.survival[i]));
  }
  out.fit = fit_line(xs, ys);
  return out;
}

double survival_at(const TailCurve& curve, double ell) {
  const auto first = std::lower_bound(curve.ell.begin(), curve.ell.end(), ell) - curve.ell.begin();
  return static_cast<double>(curve.ell.size() - static_cast<std::size_t>(first)) /
         static_cast<double>(curve.ell.size());
}

// ---------------------------------------------------------------------------
// Shape band

ShapeDeviation shape_deviation(const GrowthSet& set, double phi) {
  if (!(phi > 0.0) || !(set.threshold > 0.0)) throw std::invalid_argument("shape deviation needs phi, t > 0");
  ShapeDeviation out;
  out.threshold = set.threshold;
  out.phi_t = phi * set.threshold;
  out.delta_out = set.outer_radius / out.phi_t - 1.0;
  out.delta_in = 1.0 - set.inner_radius / out.phi_t;
  out.max_deviation = std::max(std::abs(out.delta_out), std::abs(out.delta_in));
  return out;
}

ShapeBand shape_band(std::span<const ShapeDeviation> deviations) {
  std::vector<double> thresholds;
  for (const auto& d : deviations) thresholds.push_back(d.threshold);
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  ShapeBand out;
  std::vector<double> medians;
  for (double t : thresholds) {
    std::vector<double> values;
    for (const auto& d : deviations)
      if (d.threshold == t) values.push_back(d.max_deviation);
    out.tiers.push_back({t, median(values), values.size()});
    medians.push_back(out.tiers.back().median_max_deviation);
  }
  out.fit = fit_loglog(thresholds, medians);
  out.strictly_decreasing = true;
  for (std::size_t i = 1; i < medians.size(); ++i)
    if (!(medians[i] < medians[i - 1])) out.strictly_decreasing = false;
  return out;
}

// ---------------------------------------------------------------------------
// Geodesic wandering

WanderRecord wander_record(std::span<const double> polyline, std::span<const double> x, std::span<const double> y,
                           double pitch) {
  const int d = static_cast<int>(x.size());
  WanderRecord out;
  out.x.assign(x.begin(), x.end());
  out.y.assign(y.begin(), y.end());
  out.norm = distance(x, y);
  std::vector<double> segment(out.x);
  segment.insert(segment.end(), y.begin(), y.end());
  out.hausdorff = hausdorff(polyline, segment, d, pitch);
  out.tier = out.norm;
  return out;
}

WanderFit wander_fit(std::span<const WanderRecord> records, double bound_exponent) {
  std::vector<const WanderRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->tier < b->tier; });
  std::vector<std::vector<const WanderRecord*>> groups;
  for (const auto* r : sorted) {
    if (groups.empty() || r->tier != groups.back().front()->tier) groups.emplace_back();
    groups.back().push_back(r);
  }
  std::vector<double> norms, medians;
  for (const auto& g : groups) {
    std::vector<double> values;
    for (const auto* r : g) values.push_back(r->hausdorff);
    norms.push_back(g.front()->tier);
    medians.push_back(median(values));
  }
  WanderFit out;
  out.fit = fit_loglog(norms, medians);
  const auto& top = groups.back();
  out.top_norm = top.front()->tier;
  out.top_n = top.size();
  std::size_t bad = 0;
  for (const auto* r : top)
    if (r->hausdorff > std::pow(r->norm, bound_exponent)) ++bad;
  out.top_violation_fraction = static_cast<double>(bad) / static_cast<double>(top.size());
  return out;
}

// ---------------------------------------------------------------------------
// Geodesic trees

TreeChildren tree_children(const ShortestPathTree& tree) {
  const std::size_t n = tree.pred.size();
  TreeChildren out;
  out.start.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v)
    if (tree.pred[v] != kNoVertex) ++out.start[tree.pred[v] + 1];
  for (std::size_t v = 0; v < n; ++v) out.start[v + 1] += out.start[v];
  out.child.resize(out.start[n]);
  std::vector<std::size_t> fill(out.start.begin(), out.start.end() - 1);
  for (std::size_t v = 0; v < n; ++v)
    if (tree.pred[v] != kNoVertex) out.child[fill[tree.pred[v]]++] = static_cast<VertexId>(v);
  return out;
}

double cone_min_radius(double epsilon) {
  const double psi = 0.25 - 0.5 * epsilon;
  if (!(psi > 0.0) || !(epsilon > 0.0)) throw std::invalid_argument("epsilon must lie in (0, 1/2)");
  return std::pow(3.0, 1.0 / psi);
}

ConeScan cone_scan(const PointCloud& cloud, const ShortestPathTree& tree, const ConeOptions& options) {
  ConeScan out;
  out.scan_radius = options.scan_radius;
  out.min_radius = options.min_radius.value_or(cone_min_radius(options.epsilon));
  const VertexId root = tree.source;
  const auto x = cloud.point(root);
  const int d = cloud.dim();
  const std::size_t n = tree.dist.size();

  std::vector<double> radius(n, kUnreached);
  for (VertexId v : tree.settle_order) radius[v] = distance(cloud.point(v), x);
  std::vector<double> best(n, -1.0);
  std::vector<VertexId> best_q(n, kNoVertex);
  Point a(d), b(d);
  for (VertexId q : tree.settle_order) {
    if (q == root || radius[q] > options.scan_radius) continue;
    const auto pq = cloud.point(q);
    for (int i = 0; i < d; ++i) b[i] = pq[i] - x[i];
    for (VertexId u = tree.pred[q]; u != kNoVertex && u != root; u = tree.pred[u]) {
      if (radius[u] < out.min_radius || radius[u] > options.scan_radius) continue;
      const auto pu = cloud.point(u);
      for (int i = 0; i < d; ++i) a[i] = pu[i] - x[i];
      const double th = angle(a, b);
      if (th > best[u] || (th == best[u] && q < best_q[u])) {
        best[u] = th;
        best_q[u] = q;
      }
    }
  }
  for (std::size_t u = 0; u < n; ++u) {
    if (best[u] < 0.0) continue;
    out.records.push_back({root, static_cast<VertexId>(u), best_q[u], best[u]});
    if (best[u] > std::pow(radius[u], -0.25 + options.epsilon)) {
      out.violators.push_back(static_cast<VertexId>(u));
      out.violation_radius = std::max(out.violation_radius, radius[u]);
    }
  }
  return out;
}

std::vector<RayRecord> ray_directions(const PointCloud& cloud, const ShortestPathTree& tree,
                                      const TreeChildren& children, double inner, double outer) {
  const VertexId root = tree.source;
  const auto x = cloud.point(root);
  const int d = cloud.dim();
  std::vector<RayRecord> out;
  for (std::size_t v = 0; v < tree.dist.size(); ++v) {
    const auto id = static_cast<VertexId>(v);
    if (id == root || !tree.reached(id) || !children.is_leaf(id)) continue;
    const auto p = cloud.point(id);
    const double rad = distance(p, x);
    if (rad < inner || rad > outer) continue;
    RayRecord rec{root, id, Point(d)};
    for (int i = 0; i < d; ++i) rec.direction[i] = (p[i] - x[i]) / rad;
    out.push_back(std::move(rec));
  }
  return out;
}

double direction_gap(std::span<const RayRecord> rays, int dim, RandomStream& rng, std::size_t probes) {
  constexpr double kPi = std::numbers::pi;
  if (dim == 2) {
    if (rays.empty()) return 2.0 * kPi;
    std::vector<double> th;
    for (const auto& r : rays) th.push_back(std::atan2(r.direction[1], r.direction[0]));
    std::sort(th.begin(), th.end());
    double gap = 2.0 * kPi - (th.back() - th.front());
    for (std::size_t i = 1; i < th.size(); ++i) gap = std::max(gap, th[i] - th[i - 1]);
    return gap;
  }
  if (rays.empty()) return kPi;
  std::normal_distribution<double> normal(0.0, 1.0);
  Point probe(dim);
  double worst = 0.0;
  for (std::size_t k = 0; k < probes; ++k) {
    for (auto& c : probe) c = normal(rng);
    double nearest = kPi;
    for (const auto& r : rays) nearest = std::min(nearest, angle(probe, r.direction));
    worst = std::max(worst, nearest);
  }
  return worst;
}

}  // namespace rggfpp
