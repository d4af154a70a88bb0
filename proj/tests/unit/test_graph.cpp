#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "highair/errors.hpp"
#include "highair/graph.hpp"
#include "oracle.hpp"

using namespace highair::graph;

namespace {

std::vector<GeoPoint> random_points(oracle::Rng& rng, std::size_t n, double extent = 50.0) {
  std::vector<GeoPoint> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({oracle::uniform(rng, 0, extent), oracle::uniform(rng, 0, extent)});
  return pts;
}

std::set<std::pair<std::size_t, std::size_t>> edge_set(const GraphTopology& t) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (const auto& e : t.edges) out.insert({e.src, e.dst});
  return out;
}

WindVector random_wind(oracle::Rng& rng) { return encode_wind(kAllWindDirections[rng() % kAllWindDirections.size()]); }

}  // namespace

TEST(Distance, Examples) {
  EXPECT_EQ(euclid_distance({0, 0}, {3, 4}), 5.0);
  EXPECT_EQ(euclid_distance({2, 7}, {2, 7}), 0.0);
  oracle::Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const GeoPoint a{oracle::uniform(rng, -9, 9), oracle::uniform(rng, -9, 9)};
    const GeoPoint b{oracle::uniform(rng, -9, 9), oracle::uniform(rng, -9, 9)};
    const double dx = a.x_km - b.x_km, dy = a.y_km - b.y_km;
    EXPECT_EQ(euclid_distance(a, b), std::sqrt(dx * dx + dy * dy));
  }
}

TEST(AdaptiveRadius, CollinearExample) {
  const std::vector<GeoPoint> pts = {{0, 0}, {1, 0}, {3, 0}};
  EXPECT_NEAR(adaptive_radius(pts, 1.2), 2.4, 1e-12);
  const std::vector<GeoPoint> two = {{0, 0}, {0, 7.5}};
  EXPECT_EQ(adaptive_radius(two, 1.0), 7.5);
}

TEST(AdaptiveRadius, ScalesWithCoordinates) {
  oracle::Rng rng(2);
  auto pts = random_points(rng, 6);
  const double r = adaptive_radius(pts, 1.3);
  for (auto& p : pts) p = {p.x_km * 2.5, p.y_km * 2.5};
  EXPECT_NEAR(adaptive_radius(pts, 1.3), 2.5 * r, 1e-9);
}

TEST(AdaptiveRadius, RejectsDegenerateInput) {
  const std::vector<GeoPoint> one = {{0, 0}};
  EXPECT_THROW(adaptive_radius(one, 1.2), std::invalid_argument);
  const std::vector<GeoPoint> two = {{0, 0}, {1, 1}};
  EXPECT_THROW(adaptive_radius(two, 0.9), std::invalid_argument);
}

TEST(GeographicSimilarity, Examples) {
  EXPECT_EQ(geographic_similarity({0, 0}, {2, 0}, 10.0), 0.5);
  EXPECT_EQ(geographic_similarity({1, 1}, {1, 1}, 10.0), 0.0);
  EXPECT_EQ(geographic_similarity({0, 0}, {10, 0}, 10.0), 0.0);
}

TEST(Wind, TableVectors) {
  EXPECT_EQ(encode_wind(parse_wind_direction("North")), (WindVector{0, 1}));
  EXPECT_EQ(encode_wind(parse_wind_direction("Southwest")), (WindVector{-1, -1}));
  EXPECT_EQ(encode_wind(parse_wind_direction("No sustained direction")), (WindVector{0, 0}));
  EXPECT_EQ(encode_wind(parse_wind_direction("NE")), (WindVector{1, 1}));
  for (auto d : kAllWindDirections) EXPECT_EQ(parse_wind_direction(wind_code(d)), d);
  EXPECT_THROW(parse_wind_direction("NNE"), std::invalid_argument);
}

TEST(WindSimilarity, Examples) {
  EXPECT_EQ(wind_similarity({0, 0}, {0, 5}, {0, 1}), 1.0);
  EXPECT_EQ(wind_similarity({0, 0}, {0, 5}, {0, -1}), -1.0);
  EXPECT_EQ(wind_similarity({0, 0}, {0, 5}, {1, 0}), 0.0);
  EXPECT_EQ(wind_similarity({0, 0}, {0, 5}, {0, 0}), 0.0);
}

TEST(Topology, TwoPointsTwoEdges) {
  const std::vector<GeoPoint> pts = {{0, 0}, {4, 0}};
  const auto t = build_topology(pts, 1.2);
  ASSERT_EQ(t.edges.size(), 2u);
  EXPECT_EQ(t.edges[0].gs, 0.25);
  EXPECT_EQ(t.edges[1].gs, 0.25);
}

TEST(Topology, CollinearMatchesPairEnumeration) {
  const std::vector<GeoPoint> pts = {{0, 0}, {1, 0}, {3, 0}};
  const auto t = build_topology(pts, 1.2);
  const std::set<std::pair<std::size_t, std::size_t>> want = {{0, 1}, {1, 0}, {1, 2}, {2, 1}};
  EXPECT_EQ(edge_set(t), want);
}

TEST(Topology, SingleNodeLevelGraphIsEdgeless) {
  const std::vector<GeoPoint> one = {{5, 5}};
  const auto t = build_level_graph(one, 1.2, Level::kStation);
  EXPECT_EQ(t.num_nodes(), 1u);
  EXPECT_TRUE(t.edges.empty());
}

TEST(Topology, LambdaOneWarns) {
  std::vector<std::string> seen;
  const auto previous = highair::set_warning_sink([&](const std::string& m) { seen.push_back(m); });
  const std::vector<GeoPoint> pts = {{0, 0}, {1, 0}, {3, 0}};
  build_topology(pts, 1.0);
  highair::set_warning_sink(previous);
  EXPECT_EQ(seen.size(), 1u);
}

TEST(Topology, RandomSetsMatchBruteForceAndKeepDegree) {
  oracle::Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto pts = random_points(rng, 2 + rng() % 10);
    for (double lambda : {1.1, 1.2, 1.5}) {
      const auto t = build_topology(pts, lambda);
      double largest = 0.0;
      for (std::size_t a = 0; a < pts.size(); ++a) {
        double nearest = 1e300;
        for (std::size_t b = 0; b < pts.size(); ++b)
          if (a != b) nearest = std::min(nearest, euclid_distance(pts[a], pts[b]));
        largest = std::max(largest, nearest);
      }
      std::set<std::pair<std::size_t, std::size_t>> want;
      for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t b = 0; b < pts.size(); ++b) {
          const double d = euclid_distance(pts[a], pts[b]);
          if (a != b && d > 0 && d < lambda * largest) want.insert({a, b});
        }
      ASSERT_EQ(edge_set(t), want);
      ASSERT_GE(t.min_out_degree(), 1u);
    }
  }
}

TEST(EdgeWeights, UniformWindIsAntisymmetric) {
  oracle::Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pts = random_points(rng, 2 + rng() % 8);
    auto t = build_topology(pts, 1.3);
    const std::vector<WindVector> winds(pts.size(), random_wind(rng));
    refresh_edge_weights(t, winds);
    for (const auto& e : t.edges) {
      const auto back = std::find_if(t.edges.begin(), t.edges.end(),
                                     [&](const Edge& o) { return o.src == e.dst && o.dst == e.src; });
      ASSERT_NE(back, t.edges.end());
      EXPECT_NEAR(e.ws, -back->ws, 1e-12);
      EXPECT_EQ(e.gs, back->gs);
    }
  }
}

TEST(EdgeWeights, CalmWindZeroesWsOnly) {
  oracle::Rng rng(5);
  const auto pts = random_points(rng, 6);
  auto t = build_topology(pts, 1.2);
  const auto before = t.edges;
  refresh_edge_weights(t, std::vector<WindVector>(pts.size(), WindVector{0, 0}));
  for (std::size_t k = 0; k < t.edges.size(); ++k) {
    EXPECT_EQ(t.edges[k].ws, 0.0);
    EXPECT_EQ(t.edges[k].gs, before[k].gs);
  }
}

TEST(EdgeWeights, RandomWindsMatchPerEdgeRecomputation) {
  oracle::Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pts = random_points(rng, 2 + rng() % 8);
    auto t = build_topology(pts, 1.5);
    std::vector<WindVector> winds;
    for (std::size_t i = 0; i < pts.size(); ++i) winds.push_back(random_wind(rng));
    refresh_edge_weights(t, winds);
    for (const auto& e : t.edges) {
      const double zx = pts[e.dst].x_km - pts[e.src].x_km, zy = pts[e.dst].y_km - pts[e.src].y_km;
      const double wx = winds[e.src].east, wy = winds[e.src].north;
      const double want = (wx == 0 && wy == 0) ? 0.0 : (wx * zx + wy * zy) / (std::hypot(wx, wy) * std::hypot(zx, zy));
      EXPECT_NEAR(e.ws, want, 1e-12);
      EXPECT_GE(e.ws, -1.0);
      EXPECT_LE(e.ws, 1.0);
    }
  }
}

TEST(EdgeWeights, InvariantUnderTranslationAndQuarterTurns) {
  oracle::Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pts = random_points(rng, 5);
    std::vector<WindVector> winds;
    for (std::size_t i = 0; i < pts.size(); ++i) winds.push_back(random_wind(rng));
    auto base = build_topology(pts, 1.3);
    refresh_edge_weights(base, winds);

    std::vector<GeoPoint> moved;
    std::vector<WindVector> turned;
    for (const auto& p : pts) moved.push_back({-p.y_km + 17.0, p.x_km - 4.0});
    for (const auto& w : winds) turned.push_back({-w.north, w.east});
    auto other = build_topology(moved, 1.3);
    refresh_edge_weights(other, turned);
    ASSERT_EQ(edge_set(base), edge_set(other));
    for (std::size_t k = 0; k < base.edges.size(); ++k) {
      EXPECT_NEAR(base.edges[k].gs, other.edges[k].gs, 1e-12);
      EXPECT_NEAR(base.edges[k].ws, other.edges[k].ws, 1e-12);
    }
  }
}

TEST(Topology, EdgeSetGrowsWithLambda) {
  oracle::Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pts = random_points(rng, 2 + rng() % 10);
    auto previous = edge_set(build_topology(pts, 1.05));
    for (double lambda = 1.1; lambda <= 1.51; lambda += 0.1) {
      const auto next = edge_set(build_topology(pts, lambda));
      EXPECT_TRUE(std::includes(next.begin(), next.end(), previous.begin(), previous.end()));
      previous = next;
    }
  }
}
