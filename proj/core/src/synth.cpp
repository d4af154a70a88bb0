#include "highair/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "highair/errors.hpp"
#include "highair/nn.hpp"

namespace highair::synth {
namespace {

using nlohmann::json;
constexpr double kPi = 3.14159265358979323846;
constexpr double kRefLat = 30.0;
constexpr double kRefLon = 120.0;

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("synth spec key '") + key + "': " + e.what());
  }
}

std::string id(const char* fmt, std::size_t a, std::size_t b = 0) {
  char buf[32];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

graph::WindDirection steady_direction(const std::string& regime) {
  std::string label = regime.substr(std::string("steady-").size());
  std::string upper = label;
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char ch) { return std::toupper(ch); });
  for (auto dir : graph::kAllWindDirections) {
    if (dir == graph::WindDirection::kNone) continue;
    std::string name(graph::wind_code(dir));
    if (upper == name) return dir;
  }
  static const std::pair<const char*, graph::WindDirection> kNames[] = {
      {"north", graph::WindDirection::kNorth},         {"northeast", graph::WindDirection::kNortheast},
      {"east", graph::WindDirection::kEast},           {"southeast", graph::WindDirection::kSoutheast},
      {"south", graph::WindDirection::kSouth},         {"southwest", graph::WindDirection::kSouthwest},
      {"west", graph::WindDirection::kWest},           {"northwest", graph::WindDirection::kNorthwest}};
  std::string lower = label;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
  for (const auto& [name, dir] : kNames)
    if (lower == name) return dir;
  throw ValidationError("unknown steady wind direction '" + label + "'");
}

json pulse_json(const Pulse& p) {
  json j = {{"city", p.city}, {"start", p.start}, {"duration", p.duration}, {"magnitude", p.magnitude}};
  if (p.station) j["station"] = *p.station;
  return j;
}

double normal(std::mt19937_64& rng) {
  // Box-Muller on the portable uniform.
  const double u1 = 1.0 - nn::uniform01(rng);
  const double u2 = nn::uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

}  // namespace

// ---- spec ------------------------------------------------------------------

void SynthSpec::validate() const {
  if (cities == 0 || stations_per_city == 0) throw ValidationError("synth: need at least one city and one station");
  if (hours < 2) throw ValidationError("synth: hours must be >= 2");
  if (layout != "line" && layout != "grid") throw ValidationError("synth: layout must be 'line' or 'grid'");
  if (!(city_spacing_km > 0.0) || !(station_spread_km > 0.0)) throw ValidationError("synth: spacings must be positive");
  if (wind != "none" && wind != "rotating" && wind != "random" && wind.rfind("steady-", 0) != 0) {
    throw ValidationError("synth: wind must be none, rotating, random or steady-<direction>");
  }
  if (wind.rfind("steady-", 0) == 0) steady_direction(wind);
  if (wind_period == 0) throw ValidationError("synth: wind_period must be positive");
  if (decay < 0.0 || advection < 0.0 || emission < 0.0 || noise < 0.0 || initial < 0.0) {
    throw ValidationError("synth: decay, advection, emission, noise and initial must be non-negative");
  }
  if (pulse_rate < 0.0 || pulse_rate > 1.0) throw ValidationError("synth: pulse_rate must lie in [0, 1]");
  if (station_pulse_rate < 0.0 || station_pulse_rate > 1.0) {
    throw ValidationError("synth: station_pulse_rate must lie in [0, 1]");
  }
  if (pulse_duration == 0) throw ValidationError("synth: pulse_duration must be positive");
  for (const auto& p : pulses) {
    if (p.city >= cities) throw ValidationError("synth: pulse city " + std::to_string(p.city) + " out of range");
    if (p.duration == 0) throw ValidationError("synth: pulse duration must be positive");
    if (p.station && (*p.station >= cities * stations_per_city || *p.station / stations_per_city != p.city)) {
      throw ValidationError("synth: pulse station " + std::to_string(*p.station) + " is not in city " +
                            std::to_string(p.city));
    }
  }
  for (auto c : pulse_cities)
    if (c >= cities) throw ValidationError("synth: pulse city " + std::to_string(c) + " out of range");
  try {
    data::parse_timestamp(start);
  } catch (const DataError& e) {
    throw ValidationError(std::string("synth: start: ") + e.what());
  }
}

json SynthSpec::to_json() const {
  json p = json::array();
  for (const auto& x : pulses) p.push_back(pulse_json(x));
  return {{"cities", cities},
          {"stations_per_city", stations_per_city},
          {"hours", hours},
          {"layout", layout},
          {"city_spacing_km", city_spacing_km},
          {"station_spread_km", station_spread_km},
          {"wind", wind},
          {"wind_period", wind_period},
          {"decay", decay},
          {"advection", advection},
          {"emission", emission},
          {"noise", noise},
          {"initial", initial},
          {"pulses", p},
          {"pulse_cities", pulse_cities},
          {"pulse_rate", pulse_rate},
          {"station_pulse_rate", station_pulse_rate},
          {"pulse_duration", pulse_duration},
          {"pulse_magnitude", pulse_magnitude},
          {"start", start}};
}

SynthSpec SynthSpec::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("synth spec must be a JSON object");
  SynthSpec s;
  const auto known = s.to_json();
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ValidationError("unknown synth spec key '" + key + "'");
  read_key(j, "cities", s.cities);
  read_key(j, "stations_per_city", s.stations_per_city);
  read_key(j, "hours", s.hours);
  read_key(j, "layout", s.layout);
  read_key(j, "city_spacing_km", s.city_spacing_km);
  read_key(j, "station_spread_km", s.station_spread_km);
  read_key(j, "wind", s.wind);
  read_key(j, "wind_period", s.wind_period);
  read_key(j, "decay", s.decay);
  read_key(j, "advection", s.advection);
  read_key(j, "emission", s.emission);
  read_key(j, "noise", s.noise);
  read_key(j, "initial", s.initial);
  read_key(j, "pulse_cities", s.pulse_cities);
  read_key(j, "pulse_rate", s.pulse_rate);
  read_key(j, "station_pulse_rate", s.station_pulse_rate);
  read_key(j, "pulse_duration", s.pulse_duration);
  read_key(j, "pulse_magnitude", s.pulse_magnitude);
  read_key(j, "start", s.start);
  if (j.contains("pulses")) {
    if (!j.at("pulses").is_array()) throw ValidationError("synth spec 'pulses' must be an array");
    for (const auto& p : j.at("pulses")) {
      Pulse x;
      read_key(p, "city", x.city);
      read_key(p, "start", x.start);
      read_key(p, "duration", x.duration);
      read_key(p, "magnitude", x.magnitude);
      if (p.contains("station")) {
        std::size_t station = 0;
        read_key(p, "station", station);
        x.station = station;
      }
      s.pulses.push_back(x);
    }
  }
  s.validate();
  return s;
}

// ---- generation ------------------------------------------------------------

std::vector<std::vector<double>> advection_matrix(const std::vector<graph::GeoPoint>& locations,
                                                  graph::WindDirection wind, double advection) {
  const std::size_t n = locations.size();
  const graph::WindVector v = graph::encode_wind(wind);
  std::vector<std::vector<double>> adv(n, std::vector<double>(n, 0.0));
  if (v.is_zero()) return adv;
  for (std::size_t src = 0; src < n; ++src) {
    double total = 0.0;
    for (std::size_t dst = 0; dst < n; ++dst) {
      if (dst == src) continue;
      const double cos = graph::wind_similarity(locations[src], locations[dst], v);
      adv[src][dst] = std::max(0.0, cos) / graph::euclid_distance(locations[src], locations[dst]);
      total += adv[src][dst];
    }
    for (std::size_t dst = 0; dst < n; ++dst) adv[src][dst] = total > 0.0 ? advection * adv[src][dst] / total : 0.0;
  }
  return adv;
}

SynthCorpus generate(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  SynthCorpus corpus;
  corpus.spec = spec;
  corpus.seed = seed;

  const std::size_t C = spec.cities, T = spec.hours;
  const auto cols = spec.layout == "grid" ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(C)))) : C;
  const data::Projection projection{kRefLat, kRefLon};
  for (std::size_t c = 0; c < C; ++c) {
    corpus.city_ids.push_back(id("C%02zu", c));
    const graph::GeoPoint center{static_cast<double>(c % cols) * spec.city_spacing_km,
                                 static_cast<double>(c / cols) * spec.city_spacing_km};
    for (std::size_t k = 0; k < spec.stations_per_city; ++k) {
      SynthStation st;
      st.station_id = id("C%02zu-S%02zu", c, k);
      st.city_id = corpus.city_ids.back();
      st.city = c;
      st.location = {center.x_km + spec.station_spread_km * (2.0 * nn::uniform01(rng) - 1.0),
                     center.y_km + spec.station_spread_km * (2.0 * nn::uniform01(rng) - 1.0)};
      std::tie(st.latitude, st.longitude) = projection.unproject(st.location);
      for (double& p : st.poi) p = static_cast<double>(rng() % 5);
      st.emission = spec.emission * (0.5 + 0.25 * st.poi[4] + 0.1 * st.poi[0]);
      corpus.stations.push_back(st);
    }
  }

  const data::Hour start = data::parse_timestamp(spec.start);
  static constexpr graph::WindDirection kCompass[] = {
      graph::WindDirection::kNorth, graph::WindDirection::kNortheast, graph::WindDirection::kEast,
      graph::WindDirection::kSoutheast, graph::WindDirection::kSouth, graph::WindDirection::kSouthwest,
      graph::WindDirection::kWest, graph::WindDirection::kNorthwest};
  graph::WindDirection current = graph::WindDirection::kNone;
  for (std::size_t t = 0; t < T; ++t) {
    corpus.timestamps.push_back(start + static_cast<data::Hour>(t));
    if (spec.wind == "none") {
      current = graph::WindDirection::kNone;
    } else if (spec.wind == "rotating") {
      current = kCompass[(t / spec.wind_period) % 8];
    } else if (spec.wind == "random") {
      if (t % spec.wind_period == 0) current = kCompass[rng() % 8];
    } else {
      current = steady_direction(spec.wind);
    }
    corpus.wind.push_back(current);
  }

  corpus.weather.assign(C, std::vector<data::WeatherVec>(T));
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < T; ++t) {
      const double hour_of_day = static_cast<double>((start + static_cast<data::Hour>(t)) % 24);
      const double day = 2.0 * kPi * hour_of_day / 24.0;
      const double week = 2.0 * kPi * static_cast<double>(t) / 168.0;
      auto& w = corpus.weather[c][t];
      w[0] = 15.0 + 8.0 * std::sin(day) + normal(rng);
      w[1] = std::clamp(60.0 + 15.0 * std::cos(day) + 3.0 * normal(rng), 0.0, 100.0);
      w[2] = std::max(0.0, normal(rng) - 1.5) * 2.0;
      w[3] = corpus.wind[t] == graph::WindDirection::kNone ? 0.5 + 0.3 * std::abs(normal(rng))
                                                           : 3.0 + std::abs(normal(rng));
      w[4] = 1013.0 + 4.0 * std::sin(week) + 0.5 * normal(rng);
    }
  }

  corpus.pulses = spec.pulses;
  if (spec.pulse_rate > 0.0) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t c : spec.pulse_cities) {
        if (nn::uniform01(rng) < spec.pulse_rate) corpus.pulses.push_back({c, t, spec.pulse_duration, spec.pulse_magnitude, std::nullopt});
      }
    }
  }
  if (spec.station_pulse_rate > 0.0) {
    const std::size_t n = C * spec.stations_per_city;
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t s = 0; s < n; ++s) {
        if (nn::uniform01(rng) < spec.station_pulse_rate) {
          corpus.pulses.push_back({s / spec.stations_per_city, t, spec.pulse_duration, spec.pulse_magnitude, s});
        }
      }
    }
  }

  const std::size_t S = corpus.stations.size();
  std::vector<graph::GeoPoint> locations;
  for (const auto& st : corpus.stations) locations.push_back(st.location);
  std::vector<std::vector<std::vector<double>>> adv(graph::kAllWindDirections.size());
  std::vector<std::vector<double>> extra(T, std::vector<double>(S, 0.0));
  for (const auto& p : corpus.pulses) {
    for (std::size_t t = p.start; t < std::min(T, p.start + p.duration); ++t) {
      if (p.station) {
        extra[t][*p.station] += p.magnitude;
      } else {
        for (std::size_t s = 0; s < S; ++s)
          if (corpus.stations[s].city == p.city) extra[t][s] += p.magnitude;
      }
    }
  }

  corpus.aqi.assign(S, std::vector<double>(T, 0.0));
  std::vector<double> a(S, spec.initial), next(S);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) corpus.aqi[s][t] = a[s];
    if (t + 1 == T) break;
    auto& m = adv[static_cast<std::size_t>(corpus.wind[t])];
    if (m.empty()) m = advection_matrix(locations, corpus.wind[t], spec.advection);
    for (std::size_t s = 0; s < S; ++s) {
      double v = spec.decay * a[s];
      for (std::size_t src = 0; src < S; ++src) v += m[src][s] * a[src];
      v += corpus.stations[s].emission + extra[t][s];
      v += spec.noise * normal(rng);
      next[s] = std::max(0.0, v);
    }
    a.swap(next);
  }
  return corpus;
}

json SynthCorpus::manifest() const {
  json st = json::array();
  for (const auto& s : stations) {
    st.push_back({{"station_id", s.station_id},
                  {"city_id", s.city_id},
                  {"x_km", s.location.x_km},
                  {"y_km", s.location.y_km},
                  {"lat", s.latitude},
                  {"lon", s.longitude},
                  {"poi", s.poi},
                  {"emission", s.emission}});
  }
  json p = json::array();
  for (const auto& x : pulses) p.push_back(pulse_json(x));
  return {{"spec", spec.to_json()}, {"seed", seed}, {"cities", city_ids}, {"stations", st}, {"pulses", p}};
}

void write_csv(const SynthCorpus& corpus, std::ostream& stations, std::ostream& poi, std::ostream& aqi,
               std::ostream& weather) {
  stations << "station_id,city_id,lat,lon\n";
  for (const auto& s : corpus.stations)
    stations << s.station_id << ',' << s.city_id << ',' << num(s.latitude) << ',' << num(s.longitude) << '\n';

  poi << "station_id,residential,park,mountain,water,industrial\n";
  for (const auto& s : corpus.stations) {
    poi << s.station_id;
    for (double v : s.poi) poi << ',' << static_cast<int>(v);
    poi << '\n';
  }

  aqi << "station_id,timestamp,aqi\n";
  for (std::size_t s = 0; s < corpus.stations.size(); ++s)
    for (std::size_t t = 0; t < corpus.timestamps.size(); ++t)
      aqi << corpus.stations[s].station_id << ',' << data::format_timestamp(corpus.timestamps[t]) << ','
          << num(corpus.aqi[s][t]) << '\n';

  weather << "city_id,timestamp,temperature,humidity,rainfall,wind_speed,wind_direction,pressure\n";
  for (std::size_t c = 0; c < corpus.city_ids.size(); ++c) {
    for (std::size_t t = 0; t < corpus.timestamps.size(); ++t) {
      const auto& w = corpus.weather[c][t];
      weather << corpus.city_ids[c] << ',' << data::format_timestamp(corpus.timestamps[t]) << ',' << num(w[0]) << ','
              << num(w[1]) << ',' << num(w[2]) << ',' << num(w[3]) << ',' << graph::wind_code(corpus.wind[t]) << ','
              << num(w[4]) << '\n';
    }
  }
}

void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  auto open = [&](const char* name) {
    std::ofstream out(directory / name);
    if (!out) throw DataError("cannot write " + (directory / name).string());
    return out;
  };
  auto stations = open("stations.csv");
  auto poi = open("poi.csv");
  auto aqi = open("aqi.csv");
  auto weather = open("weather.csv");
  write_csv(corpus, stations, poi, aqi, weather);
  auto manifest = open("manifest.json");
  manifest << corpus.manifest().dump(2) << '\n';
}

data::Dataset to_dataset(const SynthCorpus& corpus) {
  std::stringstream stations, poi, aqi, weather;
  write_csv(corpus, stations, poi, aqi, weather);
  data::Dataset ds = data::ingest(data::CsvSources{stations, poi, aqi, weather});
  data::interpolate_missing(ds.frame);
  return ds;
}

}  // namespace highair::synth
