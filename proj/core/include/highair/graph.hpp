#pragma once

// City- and station-level graph construction: static geographic similarity
// (1/d inside an adaptive radius) and per-slot wind-direction similarity.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace highair::graph {

// Local planar coordinates in kilometers relative to a dataset-wide origin.
struct GeoPoint {
  double x_km = 0.0;  // east
  double y_km = 0.0;  // north

  bool operator==(const GeoPoint&) const = default;
};

// Direction the wind blows toward.
enum class WindDirection { kNorth, kNortheast, kEast, kSoutheast, kSouth, kSouthwest, kWest, kNorthwest, kNone };

inline constexpr std::array<WindDirection, 9> kAllWindDirections = {
    WindDirection::kNorth, WindDirection::kNortheast, WindDirection::kEast,
    WindDirection::kSoutheast, WindDirection::kSouth, WindDirection::kSouthwest,
    WindDirection::kWest, WindDirection::kNorthwest, WindDirection::kNone};

struct WindVector {
  int east = 0;
  int north = 0;

  bool operator==(const WindVector&) const = default;
  bool is_zero() const { return east == 0 && north == 0; }
};

WindVector encode_wind(WindDirection direction);
// Accepts full names ("Northeast", "No sustained direction") and CSV codes ("NE", "NONE").
WindDirection parse_wind_direction(std::string_view label);
// Short CSV code, e.g. "SW".
std::string_view wind_code(WindDirection direction);

double euclid_distance(GeoPoint a, GeoPoint b);
// lambda times the largest nearest-neighbour distance. Needs >= 2 points and lambda >= 1.
double adaptive_radius(std::span<const GeoPoint> points, double lambda);
// 1/d for 0 < d < radius, else 0.
double geographic_similarity(GeoPoint a, GeoPoint b, double radius);
// Cosine between wind_a and the displacement from a to b; 0 for calm wind.
double wind_similarity(GeoPoint from, GeoPoint to, WindVector wind_from);

enum class Level { kCity, kStation };

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  double gs = 0.0;  // static, symmetric
  double ws = 0.0;  // dynamic: wind at src vs direction src -> dst
};

struct GraphTopology {
  Level level = Level::kStation;
  std::vector<std::size_t> node_ids;
  std::vector<GeoPoint> locations;
  std::vector<Edge> edges;
  double radius = 0.0;

  std::size_t num_nodes() const { return locations.size(); }
  std::size_t min_out_degree() const;
};

// Directed edges both ways for every pair with 0 < d < R_h. Warns when lambda == 1.
GraphTopology build_topology(std::span<const GeoPoint> points, double lambda, Level level = Level::kStation);
// Like build_topology, but a single node yields an edgeless graph instead of an error.
GraphTopology build_level_graph(std::span<const GeoPoint> points, double lambda, Level level);

// Sets ws on every edge from the wind at each node for one time slot.
void refresh_edge_weights(GraphTopology& topology, std::span<const WindVector> winds);

}  // namespace highair::graph
