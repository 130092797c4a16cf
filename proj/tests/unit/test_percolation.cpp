#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "rggfpp/percolation.hpp"

using namespace rggfpp;

namespace {

GeometricGraph random_graph(int dim, double side, double r, std::uint64_t seed) {
  RandomStream rng(seed);
  return build_rgg(sample_ppp(BoxDomain(dim, side), 1.0, rng, r), r);
}

GeometricGraph fixture(double side, double r, const std::vector<Point>& pts) {
  return build_rgg(inject_points(BoxDomain(static_cast<int>(pts.empty() ? 2 : pts[0].size()), side), pts, r), r);
}

}  // namespace

TEST(Components, EmptyGraph) {
  const auto g = fixture(10.0, 1.0, {});
  const auto labels = components(g);
  EXPECT_TRUE(labels.label.empty());
  EXPECT_FALSE(labels.giant.has_value());
  EXPECT_EQ(labels.giant_size(), 0u);
  EXPECT_EQ(labels.second_size(), 0u);
}

TEST(Components, TwoClosePoints) {
  const auto g = fixture(10.0, 1.0, {{0.0, 0.0}, {0.5, 0.0}});
  const auto labels = components(g);
  ASSERT_EQ(labels.sizes.size(), 1u);
  EXPECT_EQ(labels.sizes[0], 2u);
  EXPECT_TRUE(labels.in_giant(0) && labels.in_giant(1));
}

TEST(Components, GiantTieGoesToSmallestId) {
  const auto g = fixture(20.0, 1.0, {{-5.0, 0.0}, {-4.5, 0.0}, {5.0, 0.0}, {5.5, 0.0}, {0.0, 0.0}});
  const auto labels = components(g);
  ASSERT_EQ(labels.sizes.size(), 3u);
  EXPECT_EQ(labels.giant, labels.label[0]);
  EXPECT_EQ(labels.second_size(), 2u);
}

TEST(Components, MatchesBfsOracle) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const double r = 0.9 + 0.15 * static_cast<double>(seed);
    const auto g = random_graph(2, std::sqrt(3000.0), r, seed);
    const auto labels = components(g);
    const auto bfs = oracle::bfs_labels(oracle::brute_adjacency(g.cloud(), r));
    ASSERT_EQ(labels.label.size(), bfs.size());
    // Both number components by first appearance in vertex order.
    for (std::size_t v = 0; v < bfs.size(); ++v) ASSERT_EQ(static_cast<int>(labels.label[v]), bfs[v]);
    std::size_t total = 0, largest = 0;
    for (auto s : labels.sizes) {
      total += s;
      largest = std::max(largest, s);
    }
    EXPECT_EQ(total, g.num_vertices());
    EXPECT_EQ(labels.giant_size(), largest);
  }
}

TEST(ClosestVertex, QbarEdgeCases) {
  const BoxDomain box(2, 10.0);
  EXPECT_THROW(closest_vertex_qbar(inject_points(box, {}), std::vector<double>{0.0, 0.0}), NoVertices);
  const std::vector<Point> one{{1.0, 2.0}};
  const auto single = inject_points(box, one);
  EXPECT_EQ(closest_vertex_qbar(single, std::vector<double>{-4.0, 4.0}), 0u);
  const std::vector<Point> pts{{1.0, 1.0}, {-1.0, -1.0}, {3.0, 0.0}};
  const auto c = inject_points(box, pts);
  EXPECT_EQ(closest_vertex_qbar(c, pts[2]), 2u);
  // Equidistant from 0 and 1.
  EXPECT_EQ(closest_vertex_qbar(c, std::vector<double>{0.0, 0.0}), 0u);
}

TEST(ClosestVertex, QbarMatchesLinearScan) {
  RandomStream rng(12);
  const BoxDomain box(2, 10.0);
  const auto pts = oracle::uniform_points(2, 10.0, 100, rng);
  const auto cloud = inject_points(box, pts);
  for (int q = 0; q < 100; ++q) {
    const Point x{(rng.uniform01() - 0.5) * 12.0, (rng.uniform01() - 0.5) * 12.0};
    EXPECT_EQ(closest_vertex_qbar(cloud, x), oracle::linear_nearest(cloud, x, [](VertexId) { return true; }));
  }
}

TEST(ClosestVertex, QSkipsIsolatedVertex) {
  const auto g = fixture(20.0, 1.0, {{0.2, 0.0}, {5.0, 0.0}, {5.5, 0.0}, {6.0, 0.0}});
  const auto labels = components(g);
  const std::vector<double> o{0.0, 0.0};
  EXPECT_EQ(closest_vertex_qbar(g.cloud(), o), 0u);
  EXPECT_EQ(closest_vertex_q(g, labels, o), 1u);
}

TEST(ClosestVertex, QThrowsWithoutGiant) {
  const auto g = fixture(10.0, 1.0, {});
  EXPECT_THROW(closest_vertex_q(g, components(g), std::vector<double>{0.0, 0.0}), NoGiantComponent);
}

TEST(ClosestVertex, QMatchesRestrictedScan) {
  const auto g = random_graph(2, 60.0, 1.5, 4);
  const auto labels = components(g);
  RandomStream rng(13);
  for (int q = 0; q < 300; ++q) {
    const Point x{(rng.uniform01() - 0.5) * 60.0, (rng.uniform01() - 0.5) * 60.0};
    const VertexId v = closest_vertex_q(g, labels, x);
    EXPECT_TRUE(labels.in_giant(v));
    EXPECT_EQ(v, oracle::linear_nearest(g.cloud(), x, [&](VertexId u) { return labels.in_giant(u); }));
  }
}

TEST(ClosestVertex, QEqualsQbarWhenConnected) {
  const auto g = random_graph(2, 15.0, 6.0, 5);
  const auto labels = components(g);
  ASSERT_EQ(labels.sizes.size(), 1u);
  RandomStream rng(14);
  for (int q = 0; q < 50; ++q) {
    const Point x{(rng.uniform01() - 0.5) * 15.0, (rng.uniform01() - 0.5) * 15.0};
    EXPECT_EQ(closest_vertex_q(g, labels, x), closest_vertex_qbar(g.cloud(), x));
  }
}

TEST(ChemicalDistance, FixturesAndUnreachable) {
  const double r = 1.0;
  std::vector<Point> line;
  for (int i = 0; i < 5; ++i) line.push_back({-1.8 + 0.9 * r * i, 0.0});
  line.push_back({4.0, 4.0});
  const auto g = fixture(10.0, r, line);
  EXPECT_EQ(chemical_distance(g, 2, 2), 0u);
  EXPECT_EQ(chemical_distance(g, 0, 4), 4u);
  EXPECT_FALSE(chemical_distance(g, 0, 5).has_value());
  EXPECT_THROW(chemical_distance(g, 0, 99), std::out_of_range);
}

TEST(ChemicalDistance, MatchesBfsAndTriangleInequality) {
  const auto g = random_graph(2, 40.0, 1.6, 6);
  const auto adj = oracle::brute_adjacency(g.cloud(), 1.6);
  RandomStream rng(15);
  const auto n = static_cast<std::uint64_t>(g.num_vertices());
  for (int k = 0; k < 40; ++k) {
    const auto s = static_cast<VertexId>(rng() % n);
    std::vector<long> hop(n, -1);
    std::queue<VertexId> q;
    q.push(s);
    hop[s] = 0;
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (auto v : adj[u])
        if (hop[v] < 0) {
          hop[v] = hop[u] + 1;
          q.push(v);
        }
    }
    for (int j = 0; j < 20; ++j) {
      const auto t = static_cast<VertexId>(rng() % n);
      const auto d = chemical_distance(g, s, t);
      if (hop[t] < 0)
        EXPECT_FALSE(d.has_value());
      else
        EXPECT_EQ(d, static_cast<std::size_t>(hop[t]));
      const auto m = static_cast<VertexId>(rng() % n);
      const auto a = chemical_distance(g, s, m), b = chemical_distance(g, m, t);
      if (a && b) {
        ASSERT_TRUE(d.has_value());
        EXPECT_LE(*d, *a + *b);
      }
    }
  }
}

TEST(HoleDiameter, RejectsBadInput) {
  const auto g = random_graph(2, 10.0, 2.0, 1);
  const auto labels = components(g);
  EXPECT_THROW(hole_diameter(g, labels, 10.0, 0.0), std::invalid_argument);
  const auto empty = fixture(10.0, 1.0, {});
  EXPECT_THROW(hole_diameter(empty, components(empty), 10.0, 0.5), NoGiantComponent);
}

TEST(HoleDiameter, DenseCoverageIsNearZero) {
  std::vector<Point> grid;
  for (double x = -10.0; x <= 10.0; x += 0.5)
    for (double y = -10.0; y <= 10.0; y += 0.5) grid.push_back({x, y});
  const auto g = fixture(20.0, 2.0, grid);
  const auto labels = components(g);
  const double h = 0.25;
  const auto scan = hole_diameter(g, labels, 20.0, h);
  EXPECT_LE(scan.diameter, 2.0 * h * std::sqrt(2.0));
  EXPECT_GE(scan.diameter, 0.0);
}

TEST(HoleDiameter, SingleVertexMatchesCornerDistance) {
  const double r = 2.0, side = 10.0 * r;
  const auto g = fixture(side, r, {{0.0, 0.0}});
  const auto labels = components(g);
  const double h = 0.5;
  const auto scan = hole_diameter(g, labels, side, h);
  const double expected = 2.0 * (std::sqrt(2.0) * side / 2.0 - r);
  EXPECT_NEAR(scan.diameter, expected, 2.0 * h * std::sqrt(2.0));
  EXPECT_LE(scan.diameter, expected + 1e-9);
  ASSERT_EQ(scan.argmax_center.size(), 2u);
  for (double c : scan.argmax_center) EXPECT_LE(std::abs(c), side / 2.0 + 1e-12);
}

TEST(HoleDiameter, RefinementNeverLosesMoreThanDiscretization) {
  const auto g = random_graph(2, 60.0, 1.4, 7);
  const auto labels = components(g);
  const double coarse = hole_diameter(g, labels, 40.0, 1.0).diameter;
  const double fine = hole_diameter(g, labels, 40.0, 0.25).diameter;
  EXPECT_GE(fine, coarse - 2.0 * 1.0 * std::sqrt(2.0));
}
