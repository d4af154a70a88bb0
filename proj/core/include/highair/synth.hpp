#pragma once

// Seedable synthetic corpus: a latent pollution field per station advected
// between stations along the wind, written in the ingest CSV schema.
//
//   A_s(t+1) = max(0, decay * A_s(t) + sum_{s'} adv(s' -> s) A_{s'}(t) + emission_s(t) + noise)
//
// adv(s' -> s) = advection * w(s' -> s) / sum_{s''} w(s' -> s''), with
// w(s' -> s) = max(0, cos(wind, displacement s' -> s)) / distance, so each
// source hands out at most `advection` of its load per hour.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "highair/data.hpp"
#include "highair/graph.hpp"

namespace highair::synth {

struct Pulse {
  std::size_t city = 0;
  std::size_t start = 0;  // hour index
  std::size_t duration = 1;
  double magnitude = 0.0;  // added to every station's emission in the city
  std::optional<std::size_t> station;  // global station index; confines the pulse to one station

  bool operator==(const Pulse&) const = default;
};

struct SynthSpec {
  std::size_t cities = 4;
  std::size_t stations_per_city = 3;
  std::size_t hours = 2000;
  std::string layout = "line";  // line | grid
  double city_spacing_km = 60.0;
  double station_spread_km = 8.0;
  // none | steady-<direction> | rotating | random
  std::string wind = "rotating";
  std::size_t wind_period = 24;  // hours per direction (rotating) or per draw (random)
  double decay = 0.8;
  double advection = 0.15;
  double emission = 5.0;
  double noise = 1.0;
  double initial = 50.0;
  std::vector<Pulse> pulses;
  // Random pulses: per hour and per listed city, start one with this probability.
  std::vector<std::size_t> pulse_cities;
  double pulse_rate = 0.0;
  // Same, per hour and per station, for pulses confined to one station.
  double station_pulse_rate = 0.0;
  std::size_t pulse_duration = 6;
  double pulse_magnitude = 40.0;
  std::string start = "2024-01-01T00:00:00Z";

  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are a ValidationError.
  static SynthSpec from_json(const nlohmann::json& j);
};

struct SynthStation {
  std::string station_id;
  std::string city_id;
  std::size_t city = 0;
  graph::GeoPoint location;
  double latitude = 0.0;
  double longitude = 0.0;
  data::Poi poi{};
  double emission = 0.0;  // base emission per hour
};

struct SynthCorpus {
  SynthSpec spec;
  std::uint64_t seed = 0;
  std::vector<std::string> city_ids;
  std::vector<SynthStation> stations;
  std::vector<data::Hour> timestamps;
  std::vector<graph::WindDirection> wind;  // shared by all cities, one per hour
  std::vector<std::vector<data::WeatherVec>> weather;  // [city][t]
  std::vector<Pulse> pulses;  // explicit plus realized random pulses
  std::vector<std::vector<double>> aqi;  // [station][t]

  nlohmann::json manifest() const;
};

// Per-hour transfer weights adv[src][dst] for one wind direction.
std::vector<std::vector<double>> advection_matrix(const std::vector<graph::GeoPoint>& locations,
                                                  graph::WindDirection wind, double advection);

SynthCorpus generate(const SynthSpec& spec, std::uint64_t seed);

void write_csv(const SynthCorpus& corpus, std::ostream& stations, std::ostream& poi, std::ostream& aqi,
               std::ostream& weather);
// stations.csv, poi.csv, aqi.csv, weather.csv and manifest.json.
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& directory);
// Round-trips the CSV text through ingest, exactly as a written corpus would load.
data::Dataset to_dataset(const SynthCorpus& corpus);

}  // namespace highair::synth
