#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rggfpp/fpp.hpp"
#include "rggfpp/geometry.hpp"
#include "rggfpp/percolation.hpp"
#include "rggfpp/random.hpp"
#include "rggfpp/shortest_paths.hpp"

namespace rggfpp {

/// Fewest tiers an exponent fit accepts.
inline constexpr std::size_t kMinFitTiers = 3;

/// Angle between two nonzero vectors, in [0, pi]. The cosine is clamped to
/// [-1, 1] before arccos.
double angle(std::span<const double> a, std::span<const double> b);

/// Symmetric Hausdorff distance between two polylines given as flat corner
/// coordinates (`dim` doubles per corner). Each direction takes the corners
/// plus points every `pitch` along each segment and measures their exact
/// distance to the other polyline.
double hausdorff(std::span<const double> a, std::span<const double> b, int dim, double pitch);

/// Distance from p to the polyline.
double distance_to_polyline(std::span<const double> p, std::span<const double> polyline, int dim);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
};

/// Ordinary least squares y = intercept + slope * x. Needs two distinct x values.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// OLS of log y against log x over tier-level points. Throws
/// std::invalid_argument with fewer than kMinFitTiers points.
LinearFit fit_loglog(std::span<const double> x, std::span<const double> y);

/// Passage times measured at one distance tier.
struct TierSample {
  double norm = 0.0;
  std::vector<double> times;
};

struct TierSummary {
  double norm = 0.0;
  std::size_t n = 0;
  double mean = 0.0;
  /// Unbiased sample variance.
  double variance = 0.0;
  double std_error = 0.0;
};

TierSummary summarize(const TierSample& tier);

struct PhiEstimate {
  std::vector<TierSummary> tiers;
  /// Mean of ||x|| / T(x) at the largest tier.
  double phi = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  std::size_t n = 0;
};

/// phi-hat and a percentile bootstrap interval. Tiers must be sorted by norm;
/// the largest needs at least 10 samples.
PhiEstimate estimate_phi(std::span<const TierSample> tiers, RandomStream& rng, std::size_t resamples = 1000,
                         double level = 0.95);

/// Smallest C >= 0 with E[T] phi / ||x|| <= 1 + C log||x|| / sqrt||x|| on every
/// tier with ||x|| > 1.
double phi_band_constant(std::span<const TierSummary> tiers, double phi);

/// |E[T]/||x|| difference| between the two largest tiers, in units of the
/// pooled standard error of that difference.
double top_tier_drift(std::span<const TierSummary> tiers);

struct VarianceRow {
  double norm = 0.0;
  double variance = 0.0;
  /// Var T / (||x|| log ||x||).
  double ratio = 0.0;
};

struct VarianceScaling {
  std::vector<VarianceRow> rows;
  LinearFit fit;
  double ratio_spread = 0.0;
};

/// Ratio table and log-log slope of variance against distance. Throws with
/// fewer than kMinFitTiers tiers or fewer than `min_replicas` samples in a tier.
VarianceScaling variance_scaling(std::span<const TierSample> tiers, std::size_t min_replicas = 100);

struct TailCurve {
  double norm = 0.0;
  /// Sorted |T - mean| / sqrt||x||.
  std::vector<double> ell;
  /// survival[i] = #{ell >= ell[i]} / n.
  std::vector<double> survival;
  double window_low = 0.0;
  double window_high = 0.0;
  /// log survival against ell, inside the window.
  LinearFit fit;
};

/// Empirical survival of the centered, sqrt-scaled times. The fit window is
/// [quantile(low_q), quantile(high_q)] of the observed ell values.
TailCurve moderate_tail(const TierSample& tier, double low_q = 0.5, double high_q = 0.95,
                        std::size_t min_replicas = 1000);

/// Survival function of a TailCurve at ell.
double survival_at(const TailCurve& curve, double ell);

/// Type-7 sample quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double q);
double median(std::vector<double> values);

struct ShapeDeviation {
  double threshold = 0.0;
  double phi_t = 0.0;
  double delta_out = 0.0;
  double delta_in = 0.0;
  double max_deviation = 0.0;
};

ShapeDeviation shape_deviation(const GrowthSet& set, double phi);

struct ShapeBandTier {
  double threshold = 0.0;
  double median_max_deviation = 0.0;
  std::size_t n = 0;
};

struct ShapeBand {
  std::vector<ShapeBandTier> tiers;
  /// log median max-deviation against log t.
  LinearFit fit;
  bool strictly_decreasing = false;
};

/// Groups deviations by threshold (ascending) and fits the decay.
ShapeBand shape_band(std::span<const ShapeDeviation> deviations);

struct WanderRecord {
  Point x;
  Point y;
  double hausdorff = 0.0;
  /// ||y - x||.
  double norm = 0.0;
  /// Grouping key for fits; the requested separation. Defaults to norm.
  double tier = 0.0;
};

/// d_H between the geodesic polyline and the segment xy, sampled at `pitch`.
WanderRecord wander_record(std::span<const double> polyline, std::span<const double> x, std::span<const double> y,
                           double pitch);

struct WanderFit {
  LinearFit fit;
  double top_norm = 0.0;
  /// Share of top-tier records with d_H > ||y - x||^bound_exponent.
  double top_violation_fraction = 0.0;
  std::size_t top_n = 0;
};

/// log d_H against log tier over tier medians of d_H.
WanderFit wander_fit(std::span<const WanderRecord> records, double bound_exponent = 0.85);

/// Children lists of a shortest-path tree.
struct TreeChildren {
  std::vector<std::size_t> start;
  std::vector<VertexId> child;

  std::span<const VertexId> of(VertexId v) const { return {child.data() + start[v], start[v + 1] - start[v]}; }
  bool is_leaf(VertexId v) const { return start[v] == start[v + 1]; }
};

TreeChildren tree_children(const ShortestPathTree& tree);

/// 3^{1/psi} with psi = 1/4 - epsilon/2.
double cone_min_radius(double epsilon);

struct ConeRecord {
  VertexId root = 0;
  VertexId through = 0;
  VertexId downstream = 0;
  double angle = 0.0;
};

struct ConeOptions {
  double epsilon = 0.05;
  double scan_radius = 0.0;
  /// Through-vertices closer than this are not checked; defaults to cone_min_radius(epsilon).
  std::optional<double> min_radius;
};

struct ConeScan {
  double scan_radius = 0.0;
  double min_radius = 0.0;
  /// Widest-angle record of every checked through-vertex, by vertex id.
  std::vector<ConeRecord> records;
  /// Through-vertices u with some angle above ||u - x||^{-1/4 + epsilon}.
  std::vector<VertexId> violators;
  /// Largest ||u - x|| over violators, 0 when there are none.
  double violation_radius = 0.0;
};

/// Cone checks in the tree rooted at tree.source, restricted to the ball of
/// radius scan_radius around the root: every u with min_radius <= ||u - x||
/// and every descendant q within the ball.
ConeScan cone_scan(const PointCloud& cloud, const ShortestPathTree& tree, const ConeOptions& options);

struct RayRecord {
  VertexId root = 0;
  VertexId leaf = 0;
  Point direction;
};

/// Unit directions from the root to the tree leaves with inner <= ||v - x|| <= outer.
std::vector<RayRecord> ray_directions(const PointCloud& cloud, const ShortestPathTree& tree,
                                      const TreeChildren& children, double inner, double outer);

/// Largest angular gap between consecutive directions (d = 2), or for d >= 3
/// the largest angle from `probes` random unit vectors to the nearest
/// direction. An empty set gives 2*pi in d = 2 and pi otherwise.
double direction_gap(std::span<const RayRecord> rays, int dim, RandomStream& rng, std::size_t probes = 4096);

}  // namespace rggfpp
