#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "rggfpp/estimators.hpp"
#include "rggfpp/runner.hpp"

using namespace rggfpp;

namespace {

constexpr double kPi = std::numbers::pi;

double dense_directed(const std::vector<double>& a, const std::vector<double>& b, int d, double step) {
  std::vector<Point> pa, pb;
  auto densify = [&](const std::vector<double>& poly, std::vector<Point>& out) {
    const std::size_t n = poly.size() / d;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      Point s(poly.begin() + k * d, poly.begin() + (k + 1) * d);
      Point e(poly.begin() + (k + 1) * d, poly.begin() + (k + 2) * d);
      const auto pieces = static_cast<int>(std::ceil(oracle::dist(s, e) / step)) + 1;
      for (int j = 0; j <= pieces; ++j) {
        Point p(d);
        for (int i = 0; i < d; ++i) p[i] = s[i] + (e[i] - s[i]) * j / pieces;
        out.push_back(p);
      }
    }
    if (n == 1) out.emplace_back(poly.begin(), poly.end());
  };
  densify(a, pa);
  densify(b, pb);
  double worst = 0.0;
  for (const auto& p : pa) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : pb) best = std::min(best, oracle::dist(p, q));
    worst = std::max(worst, best);
  }
  return worst;
}

ShortestPathTree manual_tree(std::vector<VertexId> pred) {
  ShortestPathTree tree;
  tree.source = 0;
  tree.pred = std::move(pred);
  tree.dist.assign(tree.pred.size(), 1.0);
  tree.dist[0] = 0.0;
  tree.hops.assign(tree.pred.size(), 1);
  for (VertexId v = 0; v < tree.pred.size(); ++v) tree.settle_order.push_back(v);
  return tree;
}

PointCloud cloud_of(const std::vector<Point>& pts, double side = 1000.0) {
  return inject_points(BoxDomain(static_cast<int>(pts.front().size()), side), pts);
}

}  // namespace

TEST(Angle, Basics) {
  const std::vector<double> e1{1, 0}, e2{0, 3}, m1{-2, 0};
  EXPECT_DOUBLE_EQ(angle(e1, e2), kPi / 2);
  EXPECT_DOUBLE_EQ(angle(e1, m1), kPi);
  EXPECT_EQ(angle(e1, std::vector<double>{5, 0}), 0.0);
  EXPECT_THROW(angle(e1, std::vector<double>{0, 0}), std::invalid_argument);
  // Nearly parallel vectors whose cosine rounds above 1.
  const std::vector<double> a{0.1 + 0.2, 0.3}, b{0.3, 0.1 + 0.2};
  const double th = angle(a, b);
  EXPECT_FALSE(std::isnan(th));
  EXPECT_GE(th, 0.0);
  RandomStream rng(1);
  for (int k = 0; k < 200; ++k) {
    const std::vector<double> u{rng.uniform01() - 0.5, rng.uniform01() - 0.5, rng.uniform01() - 0.5};
    const std::vector<double> v{rng.uniform01() - 0.5, rng.uniform01() - 0.5, rng.uniform01() - 0.5};
    EXPECT_NEAR(angle(u, v), angle(v, u), 1e-15);
    EXPECT_LE(angle(u, v), kPi);
  }
}

TEST(Hausdorff, FixturesAndDenseOracle) {
  const std::vector<double> seg{0, 0, 10, 0};
  const std::vector<double> tent{0, 0, 5, 1, 10, 0};
  EXPECT_DOUBLE_EQ(hausdorff(tent, seg, 2, 0.5), 1.0);
  EXPECT_EQ(hausdorff(seg, seg, 2, 0.5), 0.0);
  EXPECT_THROW(hausdorff(seg, seg, 2, 0.0), std::invalid_argument);
  EXPECT_DOUBLE_EQ(distance_to_polyline(std::vector<double>{3, 4}, std::vector<double>{0, 0}, 2), 5.0);
  EXPECT_DOUBLE_EQ(distance_to_polyline(std::vector<double>{5, 4}, seg, 2), 4.0);
  EXPECT_DOUBLE_EQ(distance_to_polyline(std::vector<double>{13, 4}, seg, 2), 5.0);

  RandomStream rng(2);
  for (int k = 0; k < 60; ++k) {
    const int d = 2 + k % 2;
    std::vector<double> a, b;
    for (int i = 0; i < d * (2 + k % 4); ++i) a.push_back(rng.uniform01() * 10);
    for (int i = 0; i < d * (2 + k % 3); ++i) b.push_back(rng.uniform01() * 10);
    const double pitch = 0.01;
    const double h = hausdorff(a, b, d, pitch);
    EXPECT_DOUBLE_EQ(h, hausdorff(b, a, d, pitch));
    const double ref = std::max(dense_directed(a, b, d, 0.01), dense_directed(b, a, d, 0.01));
    EXPECT_NEAR(h, ref, 0.02);
    // Sampling only underestimates, and by at most the pitch.
    EXPECT_LE(hausdorff(a, b, d, 1.0), h + 1e-12);
    EXPECT_GE(hausdorff(a, b, d, 1.0), h - 1.0);
  }
}

TEST(Fits, LineAndLogLog) {
  const std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
  const auto f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_EQ(f.n, 4u);
  EXPECT_THROW(fit_line(std::vector<double>{1, 1}, std::vector<double>{1, 2}), std::invalid_argument);

  const std::vector<double> norms{10, 20, 40, 80};
  std::vector<double> power;
  for (double n : norms) power.push_back(3.0 * std::pow(n, 0.6));
  const auto g = fit_loglog(norms, power);
  EXPECT_NEAR(g.slope, 0.6, 1e-12);
  EXPECT_NEAR(std::exp(g.intercept), 3.0, 1e-12);

  EXPECT_THROW(fit_loglog(std::span(norms).first(2), std::span(power).first(2)), std::invalid_argument);
  EXPECT_NO_THROW(fit_loglog(std::span(norms).first(3), std::span(power).first(3)));
  const std::vector<double> bad{1, -1, 2};
  EXPECT_THROW(fit_loglog(std::span(norms).first(3), bad), std::invalid_argument);

  // R^2 from its definition as a squared correlation.
  const std::vector<double> xs{1, 2, 3, 4, 5}, ys{1.1, 1.9, 3.4, 3.8, 5.3};
  double mx = 3, my = 0, sxy = 0, sxx = 0, syy = 0;
  for (double v : ys) my += v / 5;
  for (int i = 0; i < 5; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  EXPECT_NEAR(fit_line(xs, ys).r_squared, sxy * sxy / (sxx * syy), 1e-12);
}

TEST(Summary, QuantilesAndMoments) {
  const std::vector<double> s{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(s, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_sorted(s, 1.0 / 3.0), 2.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.9), 3.7);
  EXPECT_DOUBLE_EQ(median({5, 1, 3}), 3.0);
  EXPECT_THROW(quantile_sorted(std::vector<double>{}, 0.5), std::invalid_argument);

  const auto t = summarize({7.0, {2, 4, 4, 4, 5, 5, 7, 9}});
  EXPECT_EQ(t.n, 8u);
  EXPECT_DOUBLE_EQ(t.mean, 5.0);
  EXPECT_DOUBLE_EQ(t.variance, 32.0 / 7.0);
  EXPECT_DOUBLE_EQ(t.std_error, std::sqrt(32.0 / 7.0 / 8.0));
}

TEST(Phi, EstimateAndInterval) {
  std::vector<TierSample> tiers{{50, {}}, {100, {}}};
  for (int i = 0; i < 20; ++i) {
    tiers[0].times.push_back(40.0);
    tiers[1].times.push_back(80.0);
  }
  RandomStream rng(3);
  const auto flat = estimate_phi(tiers, rng, 200);
  EXPECT_DOUBLE_EQ(flat.phi, 1.25);
  EXPECT_DOUBLE_EQ(flat.ci_low, 1.25);
  EXPECT_DOUBLE_EQ(flat.ci_high, 1.25);
  EXPECT_EQ(flat.n, 20u);
  ASSERT_EQ(flat.tiers.size(), 2u);

  std::normal_distribution<double> noise(80.0, 8.0);
  tiers[1].times.clear();
  for (int i = 0; i < 400; ++i) tiers[1].times.push_back(noise(rng));
  RandomStream a(4), b(4);
  const auto est = estimate_phi(tiers, a, 2000);
  EXPECT_EQ(est.ci_low, estimate_phi(tiers, b, 2000).ci_low);
  double mean = 0, sd = 0;
  for (double t : tiers[1].times) mean += 100.0 / t / 400;
  for (double t : tiers[1].times) sd += (100.0 / t - mean) * (100.0 / t - mean) / 399;
  sd = std::sqrt(sd / 400);
  EXPECT_DOUBLE_EQ(est.phi, mean);
  EXPECT_LE(est.ci_low, est.phi);
  EXPECT_GE(est.ci_high, est.phi);
  EXPECT_NEAR(est.ci_high - est.ci_low, 2 * 1.96 * sd, 0.25 * 2 * 1.96 * sd);

  tiers[1].times.resize(9);
  EXPECT_THROW(estimate_phi(tiers, rng), std::invalid_argument);
  std::swap(tiers[0], tiers[1]);
  tiers[1].times.resize(20, 40.0);
  EXPECT_THROW(estimate_phi(tiers, rng), std::invalid_argument);
}

TEST(Phi, BandConstantAndDrift) {
  std::vector<TierSummary> tiers(2);
  tiers[0] = {100, 10, 110, 0, 1.0};
  tiers[1] = {400, 10, 400, 0, 2.0};
  EXPECT_NEAR(phi_band_constant(tiers, 1.0), 0.1 * 10 / std::log(100.0), 1e-12);
  EXPECT_EQ(phi_band_constant(tiers, 0.5), 0.0);
  EXPECT_NEAR(top_tier_drift(tiers), 0.1 / std::hypot(0.01, 0.005), 1e-9);
  EXPECT_THROW(top_tier_drift(std::span(tiers).first(1)), std::invalid_argument);
}

TEST(Variance, RatiosAndSlope) {
  std::mt19937_64 gen(5);
  std::vector<TierSample> tiers;
  for (double n : {50.0, 100.0, 200.0, 400.0}) {
    std::normal_distribution<double> t(n, std::sqrt(n * std::log(n)));
    TierSample s{n, {}};
    for (int i = 0; i < 4000; ++i) s.times.push_back(t(gen));
    tiers.push_back(std::move(s));
  }
  const auto v = variance_scaling(tiers);
  ASSERT_EQ(v.rows.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(v.rows[i].variance, summarize(tiers[i]).variance);
    EXPECT_NEAR(v.rows[i].ratio, 1.0, 0.1);
  }
  EXPECT_NEAR(v.fit.slope, 1.0 + 1.0 / std::log(141.0), 0.1);
  EXPECT_LT(v.ratio_spread, 1.2);
  EXPECT_THROW(variance_scaling(std::span(tiers).first(2)), std::invalid_argument);
  tiers[2].times.resize(50);
  EXPECT_THROW(variance_scaling(tiers), std::invalid_argument);
}

TEST(Tails, SurvivalCurve) {
  std::mt19937_64 gen(6);
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution sign(0.5);
  TierSample s{100.0, {}};
  for (int i = 0; i < 3000; ++i) s.times.push_back(100.0 + (sign(gen) ? 1 : -1) * 10.0 * e(gen));
  const auto c = moderate_tail(s);
  ASSERT_EQ(c.ell.size(), 3000u);
  EXPECT_TRUE(std::is_sorted(c.ell.begin(), c.ell.end()));
  EXPECT_EQ(survival_at(c, 0.0), 1.0);
  EXPECT_EQ(c.survival.front(), 1.0);
  for (std::size_t i = 1; i < c.survival.size(); ++i) EXPECT_LE(c.survival[i], c.survival[i - 1]);
  for (double ell : {0.3, 1.0, 2.5}) {
    std::size_t count = 0;
    for (double v : c.ell) count += v >= ell;
    EXPECT_DOUBLE_EQ(survival_at(c, ell), count / 3000.0);
  }
  // |T - mean| / 10 is Exp(1): log survival has slope -sqrt(100) / 10 = -1.
  EXPECT_NEAR(c.fit.slope, -1.0, 0.1);
  EXPECT_GT(c.fit.r_squared, 0.95);
  EXPECT_DOUBLE_EQ(c.window_low, quantile_sorted(c.ell, 0.5));
  EXPECT_THROW(moderate_tail(s, 0.5, 0.95, 5000), std::invalid_argument);
  EXPECT_THROW(moderate_tail(s, 0.9, 0.5), std::invalid_argument);
}

TEST(Shape, DeviationAndBand) {
  GrowthSet g;
  g.threshold = 20;
  g.inner_radius = 9;
  g.outer_radius = 12;
  const auto d = shape_deviation(g, 0.5);
  EXPECT_DOUBLE_EQ(d.phi_t, 10.0);
  EXPECT_DOUBLE_EQ(d.delta_out, 0.2);
  EXPECT_DOUBLE_EQ(d.delta_in, 0.1);
  EXPECT_DOUBLE_EQ(d.max_deviation, 0.2);
  EXPECT_THROW(shape_deviation(g, 0.0), std::invalid_argument);

  std::vector<ShapeDeviation> devs;
  for (double t : {200.0, 50.0, 100.0})
    for (double m : {1.0, 2.0, 3.0}) devs.push_back({t, 0, 0, 0, m / std::sqrt(t)});
  const auto band = shape_band(devs);
  ASSERT_EQ(band.tiers.size(), 3u);
  EXPECT_EQ(band.tiers[0].threshold, 50.0);
  EXPECT_EQ(band.tiers[0].n, 3u);
  EXPECT_DOUBLE_EQ(band.tiers[1].median_max_deviation, 2.0 / 10.0);
  EXPECT_NEAR(band.fit.slope, -0.5, 1e-12);
  EXPECT_TRUE(band.strictly_decreasing);
  devs.push_back({200.0, 0, 0, 0, 5.0});
  devs.push_back({200.0, 0, 0, 0, 5.0});
  EXPECT_FALSE(shape_band(devs).strictly_decreasing);
}

TEST(Wander, RecordsAndFit) {
  const std::vector<double> x{0, 0}, y{40, 0};
  const std::vector<double> straight{0, 0, 10, 0.1, 20, -0.1, 40, 0};
  const auto rec = wander_record(straight, x, y, 0.5);
  EXPECT_DOUBLE_EQ(rec.norm, 40.0);
  EXPECT_NEAR(rec.hausdorff, 0.1, 1e-12);
  EXPECT_LE(rec.hausdorff, 2.0 / 8);

  std::vector<WanderRecord> recs;
  for (double n : {40.0, 80.0, 160.0})
    for (double c : {0.5, 1.0, 2.0}) {
      WanderRecord r;
      r.norm = n * 1.01;
      r.tier = n;
      r.hausdorff = c * std::pow(n, 0.6);
      recs.push_back(r);
    }
  recs.back().hausdorff = std::pow(160.0 * 1.01, 0.85) + 1;
  const auto f = wander_fit(recs);
  EXPECT_NEAR(f.fit.slope, 0.6, 1e-12);
  EXPECT_EQ(f.top_norm, 160.0);
  EXPECT_EQ(f.top_n, 3u);
  EXPECT_DOUBLE_EQ(f.top_violation_fraction, 1.0 / 3.0);
}

TEST(Tree, ChildrenLists) {
  const auto tree = manual_tree({kNoVertex, 0, 0, 1, 1, 3});
  const auto ch = tree_children(tree);
  EXPECT_EQ(std::vector<VertexId>(ch.of(0).begin(), ch.of(0).end()), (std::vector<VertexId>{1, 2}));
  EXPECT_EQ(std::vector<VertexId>(ch.of(1).begin(), ch.of(1).end()), (std::vector<VertexId>{3, 4}));
  EXPECT_TRUE(ch.is_leaf(2));
  EXPECT_TRUE(ch.is_leaf(5));
  EXPECT_FALSE(ch.is_leaf(3));
}

TEST(Cone, MinRadius) {
  EXPECT_NEAR(cone_min_radius(0.05), std::pow(3.0, 1.0 / 0.225), 1e-9);
  EXPECT_NEAR(cone_min_radius(0.05), 131.989356, 1e-6);
  EXPECT_THROW(cone_min_radius(0.5), std::invalid_argument);
  EXPECT_THROW(cone_min_radius(0.0), std::invalid_argument);
}

TEST(Cone, HandFixture) {
  const auto cloud = cloud_of({{0, 0}, {100, 0}, {100, 50}, {200, 0}});
  const auto tree = manual_tree({kNoVertex, 0, 1, 1});
  ConeOptions opt;
  opt.min_radius = 0.0;
  opt.scan_radius = 300;
  const auto scan = cone_scan(cloud, tree, opt);
  ASSERT_EQ(scan.records.size(), 1u);
  EXPECT_EQ(scan.records[0].through, 1u);
  EXPECT_EQ(scan.records[0].downstream, 2u);
  EXPECT_NEAR(scan.records[0].angle, std::atan(0.5), 1e-12);
  ASSERT_EQ(scan.violators, std::vector<VertexId>{1});
  EXPECT_DOUBLE_EQ(scan.violation_radius, 100.0);

  opt.scan_radius = 105;
  EXPECT_TRUE(cone_scan(cloud, tree, opt).records.empty());
  opt.scan_radius = 300;
  opt.min_radius = 150;
  EXPECT_TRUE(cone_scan(cloud, tree, opt).records.empty());
}

TEST(Cone, MatchesDescendantEnumeration) {
  ModelSpec m;
  m.side = 120;
  const auto inst = make_instance(m, 7, 0);
  VertexId root = 0;
  while (!inst.labels.in_giant(root)) ++root;
  const auto tree = dijkstra(WeightedView(inst.graph, inst.field), root);
  const auto ch = tree_children(tree);
  const auto& cloud = inst.graph.cloud();
  ConeOptions opt;
  opt.epsilon = 0.05;
  opt.min_radius = 10.0;
  opt.scan_radius = 40.0;
  const auto scan = cone_scan(cloud, tree, opt);
  const auto x = cloud.point(root);
  std::size_t checked = 0, violators = 0;
  for (VertexId u = 0; u < cloud.size(); ++u) {
    const double ru = oracle::dist(cloud.point(u), x);
    if (u == root || !tree.reached(u) || ru < 10.0 || ru > 40.0) continue;
    double worst = -1;
    std::vector<VertexId> stack(ch.of(u).begin(), ch.of(u).end());
    while (!stack.empty()) {
      const VertexId q = stack.back();
      stack.pop_back();
      for (VertexId c : ch.of(q)) stack.push_back(c);
      if (oracle::dist(cloud.point(q), x) > 40.0) continue;
      Point a(2), b(2);
      for (int i = 0; i < 2; ++i) {
        a[i] = cloud.point(u)[i] - x[i];
        b[i] = cloud.point(q)[i] - x[i];
      }
      worst = std::max(worst, std::acos(std::clamp((a[0] * b[0] + a[1] * b[1]) /
                                                       (std::hypot(a[0], a[1]) * std::hypot(b[0], b[1])),
                                                   -1.0, 1.0)));
    }
    if (worst < 0) continue;
    const auto it = std::find_if(scan.records.begin(), scan.records.end(),
                                 [&](const ConeRecord& r) { return r.through == u; });
    ASSERT_NE(it, scan.records.end());
    EXPECT_NEAR(it->angle, worst, 1e-9);
    ++checked;
    violators += worst > std::pow(ru, -0.25 + 0.05);
  }
  EXPECT_EQ(scan.records.size(), checked);
  EXPECT_EQ(scan.violators.size(), violators);
  EXPECT_GT(checked, 50u);
}

TEST(Rays, StarFixtureGaps) {
  const auto cloud = cloud_of({{0, 0}, {10, 0}, {0, 10}, {-10, 0}, {0, -10}, {3, 0}});
  const auto tree = manual_tree({kNoVertex, 5, 0, 0, 0, 0});
  const auto ch = tree_children(tree);
  const auto rays = ray_directions(cloud, tree, ch, 5, 20);
  ASSERT_EQ(rays.size(), 4u);
  for (const auto& r : rays) EXPECT_NEAR(std::hypot(r.direction[0], r.direction[1]), 1.0, 1e-15);
  RandomStream rng(8);
  EXPECT_NEAR(direction_gap(rays, 2, rng), kPi / 2, 1e-12);
  EXPECT_TRUE(ray_directions(cloud, tree, ch, 11, 20).empty());
  EXPECT_DOUBLE_EQ(direction_gap(std::span<const RayRecord>{}, 2, rng), 2 * kPi);
  EXPECT_DOUBLE_EQ(direction_gap(std::span<const RayRecord>{}, 3, rng), kPi);
  std::vector<RayRecord> one{{0, 1, {1, 0}}};
  EXPECT_DOUBLE_EQ(direction_gap(one, 2, rng), 2 * kPi);

  std::vector<RayRecord> axes;
  for (int i = 0; i < 3; ++i)
    for (double s : {-1.0, 1.0}) {
      Point p(3, 0.0);
      p[i] = s;
      axes.push_back({0, 1, p});
    }
  const double g3 = direction_gap(axes, 3, rng, 20000);
  const double exact = std::acos(1.0 / std::sqrt(3.0));
  EXPECT_LE(g3, exact + 1e-12);
  EXPECT_GT(g3, exact - 0.05);
}
