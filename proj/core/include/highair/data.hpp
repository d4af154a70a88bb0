#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "highair/graph.hpp"

namespace highair::data {

inline constexpr std::size_t kPoiDim = 5;      // residential, park, mountain, water, industrial
inline constexpr std::size_t kWeatherDim = 5;  // temperature, humidity, rainfall, wind_speed, pressure
inline constexpr std::array<std::string_view, kPoiDim> kPoiColumns = {"residential", "park", "mountain", "water",
                                                                     "industrial"};
inline constexpr std::array<std::string_view, kWeatherDim> kWeatherColumns = {"temperature", "humidity", "rainfall",
                                                                             "wind_speed", "pressure"};

using Poi = std::array<double, kPoiDim>;
using WeatherVec = std::array<double, kWeatherDim>;

// Hours since 1970-01-01T00:00Z.
using Hour = std::int64_t;

Hour parse_timestamp(std::string_view text);
std::string format_timestamp(Hour hour);  // "YYYY-MM-DDTHH:00:00Z"

struct StationRecord {
  std::string station_id;
  std::string city_id;
  double latitude = 0.0;
  double longitude = 0.0;
  Poi poi{};
  graph::GeoPoint location;  // projected km
};

struct City {
  std::string city_id;
  std::vector<std::size_t> stations;  // indices into Dataset::stations
  graph::GeoPoint location;           // mean of member station locations
};

// Equirectangular projection around a reference latitude/longitude.
struct Projection {
  double ref_lat = 0.0;
  double ref_lon = 0.0;

  graph::GeoPoint project(double lat, double lon) const;
  std::pair<double, double> unproject(graph::GeoPoint p) const;  // (lat, lon)
};

struct CityWeather {
  std::array<std::vector<double>, kWeatherDim> fields;  // [field][t], NaN = missing
  std::vector<int> wind;                                // WindDirection as int, -1 = missing
};

struct TimeSeriesFrame {
  std::vector<Hour> timestamps;            // strictly increasing, 1 h apart
  std::vector<std::vector<double>> aqi;    // [station][t], NaN = missing
  std::vector<CityWeather> weather;        // [city]

  std::size_t length() const { return timestamps.size(); }
  graph::WindDirection wind_at(std::size_t city, std::size_t t) const;
};

// Stations are ordered by (city_id, station_id) and cities by city_id, so the
// result does not depend on input row order.
struct Dataset {
  std::vector<StationRecord> stations;
  std::vector<City> cities;
  std::vector<std::size_t> station_city;  // city index per station
  Projection projection;
  TimeSeriesFrame frame;

  std::size_t city_index(const std::string& city_id) const;
};

struct CsvSources {
  std::istream& stations;
  std::istream& poi;
  std::istream& aqi;
  std::istream& weather;
};

// Reads stations.csv, poi.csv, aqi.csv and weather.csv. Missing cells are
// left as NaN; call interpolate_missing before windowing.
Dataset ingest(CsvSources sources);
Dataset ingest(const std::filesystem::path& directory);

// Linear in time, nearest-valid at the ends, previous label for wind. Throws
// DataError when a series is empty or more than `max_missing_fraction` missing.
void interpolate_missing(TimeSeriesFrame& frame, double max_missing_fraction = 0.2);

// One sample: slots t - tau_in + 1 .. t as inputs, t + 1 .. t + tau_out as targets.
struct SampleWindow {
  std::size_t t = 0;
  std::size_t tau_in = 0;
  std::size_t tau_out = 0;
  std::vector<std::vector<double>> aqi_in;      // [station][tau_in]
  std::vector<std::vector<double>> aqi_target;  // [station][tau_out]
  std::vector<std::vector<WeatherVec>> weather;  // [city][tau_in + tau_out]
  std::vector<std::vector<graph::WindDirection>> wind;  // [city][tau_in + tau_out]

  std::size_t first_slot() const { return t + 1 - tau_in; }
  std::size_t last_target_slot() const { return t + tau_out; }
};

// The window whose last input slot is t; needs t + tau_out inside the frame.
SampleWindow window_at(const TimeSeriesFrame& frame, std::size_t t, std::size_t tau_in, std::size_t tau_out);
std::size_t window_count(std::size_t frame_length, std::size_t tau_in, std::size_t tau_out);
std::vector<SampleWindow> make_windows(const TimeSeriesFrame& frame, std::size_t tau_in, std::size_t tau_out);

struct SplitFractions {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

SplitSizes split_sizes(std::size_t count, SplitFractions fractions);

struct Splits {
  std::vector<SampleWindow> train;
  std::vector<SampleWindow> val;
  std::vector<SampleWindow> test;
};

// Windows are ordered by target end and cut sequentially.
Splits split_chronological(std::vector<SampleWindow> windows, SplitFractions fractions);

// z-score statistics fitted on the training split only.
struct NormStats {
  static constexpr double kStdFloor = 1e-8;

  double aqi_mean = 0.0;
  double aqi_std = 1.0;
  WeatherVec weather_mean{};
  WeatherVec weather_std{1, 1, 1, 1, 1};
  Poi poi_mean{};
  Poi poi_std{1, 1, 1, 1, 1};

  double normalize_aqi(double v) const { return (v - aqi_mean) / aqi_std; }
  double denormalize_aqi(double z) const { return z * aqi_std + aqi_mean; }
  double normalize_weather(std::size_t field, double v) const {
    return (v - weather_mean[field]) / weather_std[field];
  }
  double normalize_poi(std::size_t field, double v) const { return (v - poi_mean[field]) / poi_std[field]; }

  nlohmann::json to_json() const;
  static NormStats from_json(const nlohmann::json& j);
};

// AQI and weather statistics over the distinct frame slots the training
// windows cover; POI statistics over stations. Constant features get the
// std floor and a warning.
NormStats fit_norm(std::span<const SampleWindow> train, std::span<const StationRecord> stations);

}  // namespace highair::data
