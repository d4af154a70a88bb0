#include "highair/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "highair/errors.hpp"

namespace highair::graph {

WindVector encode_wind(WindDirection direction) {
  switch (direction) {
    case WindDirection::kNorth: return {0, 1};
    case WindDirection::kNortheast: return {1, 1};
    case WindDirection::kEast: return {1, 0};
    case WindDirection::kSoutheast: return {1, -1};
    case WindDirection::kSouth: return {0, -1};
    case WindDirection::kSouthwest: return {-1, -1};
    case WindDirection::kWest: return {-1, 0};
    case WindDirection::kNorthwest: return {-1, 1};
    case WindDirection::kNone: return {0, 0};
  }
  throw std::invalid_argument("encode_wind: invalid direction");
}

WindDirection parse_wind_direction(std::string_view label) {
  struct Entry {
    std::string_view code, name;
    WindDirection dir;
  };
  static constexpr Entry kTable[] = {
      {"N", "North", WindDirection::kNorth},         {"NE", "Northeast", WindDirection::kNortheast},
      {"E", "East", WindDirection::kEast},           {"SE", "Southeast", WindDirection::kSoutheast},
      {"S", "South", WindDirection::kSouth},         {"SW", "Southwest", WindDirection::kSouthwest},
      {"W", "West", WindDirection::kWest},           {"NW", "Northwest", WindDirection::kNorthwest},
      {"NONE", "No sustained direction", WindDirection::kNone},
  };
  for (const auto& e : kTable)
    if (label == e.code || label == e.name) return e.dir;
  throw std::invalid_argument("unknown wind direction label '" + std::string(label) + "'");
}

std::string_view wind_code(WindDirection direction) {
  switch (direction) {
    case WindDirection::kNorth: return "N";
    case WindDirection::kNortheast: return "NE";
    case WindDirection::kEast: return "E";
    case WindDirection::kSoutheast: return "SE";
    case WindDirection::kSouth: return "S";
    case WindDirection::kSouthwest: return "SW";
    case WindDirection::kWest: return "W";
    case WindDirection::kNorthwest: return "NW";
    case WindDirection::kNone: return "NONE";
  }
  return "NONE";
}

double euclid_distance(GeoPoint a, GeoPoint b) {
  const double dx = a.x_km - b.x_km;
  const double dy = a.y_km - b.y_km;
  return std::sqrt(dx * dx + dy * dy);
}

double adaptive_radius(std::span<const GeoPoint> points, double lambda) {
  if (points.size() < 2) throw std::invalid_argument("adaptive_radius: need at least 2 points");
  if (!(lambda >= 1.0)) throw std::invalid_argument("adaptive_radius: lambda must be >= 1");
  double largest_nearest = 0.0;
  for (std::size_t a = 0; a < points.size(); ++a) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < points.size(); ++k)
      if (k != a) nearest = std::min(nearest, euclid_distance(points[a], points[k]));
    largest_nearest = std::max(largest_nearest, nearest);
  }
  return lambda * largest_nearest;
}

double geographic_similarity(GeoPoint a, GeoPoint b, double radius) {
  const double d = euclid_distance(a, b);
  return (d > 0.0 && d < radius) ? 1.0 / d : 0.0;
}

double wind_similarity(GeoPoint from, GeoPoint to, WindVector wind_from) {
  const double zx = to.x_km - from.x_km;
  const double zy = to.y_km - from.y_km;
  const double znorm = std::sqrt(zx * zx + zy * zy);
  if (znorm == 0.0) throw std::invalid_argument("wind_similarity: co-located nodes have no direction");
  if (wind_from.is_zero()) return 0.0;
  const double wx = wind_from.east, wy = wind_from.north;
  const double cosine = (wx * zx + wy * zy) / (std::sqrt(wx * wx + wy * wy) * znorm);
  return std::clamp(cosine, -1.0, 1.0);
}

std::size_t GraphTopology::min_out_degree() const {
  std::vector<std::size_t> degree(num_nodes(), 0);
  for (const auto& e : edges) ++degree[e.src];
  return degree.empty() ? 0 : *std::min_element(degree.begin(), degree.end());
}

GraphTopology build_topology(std::span<const GeoPoint> points, double lambda, Level level) {
  GraphTopology topo;
  topo.level = level;
  topo.radius = adaptive_radius(points, lambda);
  if (lambda == 1.0) {
    warn("lambda = 1: the node attaining the largest nearest-neighbour distance may end up isolated");
  }
  topo.locations.assign(points.begin(), points.end());
  topo.node_ids.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) topo.node_ids[i] = i;
  for (std::size_t a = 0; a < points.size(); ++a) {
    for (std::size_t b = a + 1; b < points.size(); ++b) {
      const double gs = geographic_similarity(points[a], points[b], topo.radius);
      if (gs == 0.0) continue;
      topo.edges.push_back({a, b, gs, 0.0});
      topo.edges.push_back({b, a, gs, 0.0});
    }
  }
  return topo;
}

GraphTopology build_level_graph(std::span<const GeoPoint> points, double lambda, Level level) {
  if (points.size() >= 2) return build_topology(points, lambda, level);
  if (!(lambda >= 1.0)) throw std::invalid_argument("build_level_graph: lambda must be >= 1");
  GraphTopology topo;
  topo.level = level;
  topo.locations.assign(points.begin(), points.end());
  topo.node_ids.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) topo.node_ids[i] = i;
  return topo;
}

void refresh_edge_weights(GraphTopology& topology, std::span<const WindVector> winds) {
  if (winds.size() != topology.num_nodes()) {
    throw std::invalid_argument("refresh_edge_weights: have winds for " + std::to_string(winds.size()) +
                                " of " + std::to_string(topology.num_nodes()) + " nodes");
  }
  for (auto& e : topology.edges) {
    e.ws = wind_similarity(topology.locations[e.src], topology.locations[e.dst], winds[e.src]);
  }
}

}  // namespace highair::graph
