#include "highair/data.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "highair/errors.hpp"

namespace highair::data {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPi = 3.14159265358979323846;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

class CsvTable {
 public:
  CsvTable(std::istream& in, std::string name) : name_(std::move(name)) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(name_ + ": empty file");
    header_ = split(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      auto cells = split(line);
      if (cells.size() != header_.size()) {
        throw DataError(name_ + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                        " fields, header has " + std::to_string(header_.size()));
      }
      rows_.push_back(std::move(cells));
      line_numbers_.push_back(line_no);
    }
  }

  std::size_t column(std::string_view col) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
      if (header_[i] == col) return i;
    throw DataError(name_ + ": missing column '" + std::string(col) + "'");
  }

  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::string where(std::size_t row) const { return name_ + " line " + std::to_string(line_numbers_[row]); }

 private:
  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string_view rest(line);
    while (true) {
      const auto pos = rest.find(',');
      out.emplace_back(trim(rest.substr(0, pos)));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    return out;
  }

  std::string name_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> line_numbers_;
};

bool is_missing(std::string_view s) { return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null"; }

double parse_number(const std::string& s, const std::string& where) {
  if (is_missing(s)) return kNaN;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(where + ": '" + s + "' is not a number");
  }
}

void fill_series(std::vector<double>& series, double max_missing_fraction, const std::string& label) {
  const std::size_t n = series.size();
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isnan(series[i])) valid.push_back(i);
  if (valid.empty()) throw DataError(label + ": series has no valid values");
  const double missing = static_cast<double>(n - valid.size()) / static_cast<double>(n);
  if (missing > max_missing_fraction) {
    throw DataError(label + ": " + std::to_string(n - valid.size()) + " of " + std::to_string(n) +
                    " values missing, data too sparse to interpolate");
  }
  for (std::size_t i = 0; i < valid.front(); ++i) series[i] = series[valid.front()];
  for (std::size_t i = valid.back() + 1; i < n; ++i) series[i] = series[valid.back()];
  for (std::size_t k = 0; k + 1 < valid.size(); ++k) {
    const std::size_t a = valid[k], b = valid[k + 1];
    for (std::size_t i = a + 1; i < b; ++i) {
      const double w = static_cast<double>(i - a) / static_cast<double>(b - a);
      series[i] = series[a] + w * (series[b] - series[a]);
    }
  }
}

}  // namespace

// ---- timestamps ------------------------------------------------------------

Hour parse_timestamp(std::string_view text) {
  text = trim(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  const std::string buf(text);
  const int got = std::sscanf(buf.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &mo, &d, &sep, &h, &mi, &s);
  if (got < 6 || (sep != 'T' && sep != ' ')) throw DataError("bad timestamp '" + buf + "', expected ISO 8601");
  const std::size_t tail = buf.find_first_of("Z+-", 10);
  if (tail != std::string::npos && buf.substr(tail) != "Z" && buf.substr(tail) != "+00:00") {
    throw DataError("timestamp '" + buf + "' is not UTC");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 59) {
    throw DataError("invalid timestamp '" + buf + "'");
  }
  if (mi != 0 || s != 0) throw DataError("timestamp '" + buf + "' is not on an hourly cadence");
  return static_cast<Hour>(sys_days{ymd}.time_since_epoch().count()) * 24 + h;
}

std::string format_timestamp(Hour hour) {
  using namespace std::chrono;
  const auto days_since = static_cast<int>(hour >= 0 ? hour / 24 : (hour - 23) / 24);
  const int h = static_cast<int>(hour - static_cast<Hour>(days_since) * 24);
  const year_month_day ymd{sys_days{days{days_since}}};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:00:00Z", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), h);
  return buf;
}

// ---- projection ------------------------------------------------------------

graph::GeoPoint Projection::project(double lat, double lon) const {
  const double cos_lat = std::cos(ref_lat * kPi / 180.0);
  return {(lon - ref_lon) * cos_lat * 111.32, (lat - ref_lat) * 110.57};
}

std::pair<double, double> Projection::unproject(graph::GeoPoint p) const {
  const double cos_lat = std::cos(ref_lat * kPi / 180.0);
  return {ref_lat + p.y_km / 110.57, ref_lon + p.x_km / (111.32 * cos_lat)};
}

graph::WindDirection TimeSeriesFrame::wind_at(std::size_t city, std::size_t t) const {
  const int code = weather.at(city).wind.at(t);
  if (code < 0) throw DataError("wind direction missing at slot " + std::to_string(t));
  return static_cast<graph::WindDirection>(code);
}

std::size_t Dataset::city_index(const std::string& city_id) const {
  for (std::size_t i = 0; i < cities.size(); ++i)
    if (cities[i].city_id == city_id) return i;
  throw DataError("unknown city_id '" + city_id + "'");
}

// ---- ingest ----------------------------------------------------------------

Dataset ingest(CsvSources sources) {
  Dataset ds;

  const CsvTable stations(sources.stations, "stations.csv");
  {
    const auto c_id = stations.column("station_id"), c_city = stations.column("city_id");
    const auto c_lat = stations.column("lat"), c_lon = stations.column("lon");
    std::set<std::string> seen;
    for (std::size_t r = 0; r < stations.rows().size(); ++r) {
      const auto& row = stations.rows()[r];
      StationRecord rec;
      rec.station_id = row[c_id];
      rec.city_id = row[c_city];
      rec.latitude = parse_number(row[c_lat], stations.where(r));
      rec.longitude = parse_number(row[c_lon], stations.where(r));
      if (rec.station_id.empty() || rec.city_id.empty()) throw DataError(stations.where(r) + ": empty id");
      if (!seen.insert(rec.station_id).second) {
        throw DataError(stations.where(r) + ": duplicate station_id '" + rec.station_id + "'");
      }
      if (!(rec.latitude >= -90.0 && rec.latitude <= 90.0) || !(rec.longitude >= -180.0 && rec.longitude <= 180.0)) {
        throw DataError(stations.where(r) + ": latitude/longitude out of range");
      }
      ds.stations.push_back(std::move(rec));
    }
  }
  if (ds.stations.empty()) throw DataError("stations.csv: no stations");
  std::sort(ds.stations.begin(), ds.stations.end(), [](const StationRecord& a, const StationRecord& b) {
    return std::tie(a.city_id, a.station_id) < std::tie(b.city_id, b.station_id);
  });

  std::unordered_map<std::string, std::size_t> station_index;
  for (std::size_t i = 0; i < ds.stations.size(); ++i) {
    station_index[ds.stations[i].station_id] = i;
    if (ds.cities.empty() || ds.cities.back().city_id != ds.stations[i].city_id) {
      ds.cities.push_back(City{ds.stations[i].city_id, {}, {}});
    }
    ds.cities.back().stations.push_back(i);
    ds.station_city.push_back(ds.cities.size() - 1);
  }
  std::unordered_map<std::string, std::size_t> city_index;
  for (std::size_t c = 0; c < ds.cities.size(); ++c) city_index[ds.cities[c].city_id] = c;

  double lat_sum = 0.0, lon_sum = 0.0;
  for (const auto& s : ds.stations) {
    lat_sum += s.latitude;
    lon_sum += s.longitude;
  }
  const auto n_st = static_cast<double>(ds.stations.size());
  ds.projection = {lat_sum / n_st, lon_sum / n_st};
  for (auto& s : ds.stations) s.location = ds.projection.project(s.latitude, s.longitude);
  for (auto& city : ds.cities) {
    double x = 0.0, y = 0.0;
    for (std::size_t i : city.stations) {
      x += ds.stations[i].location.x_km;
      y += ds.stations[i].location.y_km;
    }
    const auto n = static_cast<double>(city.stations.size());
    city.location = {x / n, y / n};
  }

  const CsvTable poi(sources.poi, "poi.csv");
  {
    const auto c_id = poi.column("station_id");
    std::array<std::size_t, kPoiDim> cols{};
    for (std::size_t k = 0; k < kPoiDim; ++k) cols[k] = poi.column(kPoiColumns[k]);
    std::vector<bool> have(ds.stations.size(), false);
    for (std::size_t r = 0; r < poi.rows().size(); ++r) {
      const auto& row = poi.rows()[r];
      const auto it = station_index.find(row[c_id]);
      if (it == station_index.end()) throw DataError(poi.where(r) + ": unknown station_id '" + row[c_id] + "'");
      if (have[it->second]) throw DataError(poi.where(r) + ": duplicate station_id '" + row[c_id] + "'");
      have[it->second] = true;
      for (std::size_t k = 0; k < kPoiDim; ++k) {
        const double v = parse_number(row[cols[k]], poi.where(r));
        if (!(v >= 0.0)) throw DataError(poi.where(r) + ": POI counts must be non-negative");
        ds.stations[it->second].poi[k] = v;
      }
    }
    for (std::size_t i = 0; i < have.size(); ++i)
      if (!have[i]) throw DataError("poi.csv: no row for station '" + ds.stations[i].station_id + "'");
  }

  const CsvTable aqi(sources.aqi, "aqi.csv");
  const CsvTable weather(sources.weather, "weather.csv");
  const auto a_id = aqi.column("station_id"), a_ts = aqi.column("timestamp"), a_v = aqi.column("aqi");
  const auto w_city = weather.column("city_id"), w_ts = weather.column("timestamp");
  const auto w_dir = weather.column("wind_direction");
  std::array<std::size_t, kWeatherDim> w_cols{};
  for (std::size_t k = 0; k < kWeatherDim; ++k) w_cols[k] = weather.column(kWeatherColumns[k]);

  std::vector<Hour> aqi_hours(aqi.rows().size()), weather_hours(weather.rows().size());
  Hour lo = std::numeric_limits<Hour>::max(), hi = std::numeric_limits<Hour>::min();
  auto parse_hour = [&](const std::string& text, const std::string& where) {
    try {
      return parse_timestamp(text);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  };
  for (std::size_t r = 0; r < aqi.rows().size(); ++r) {
    aqi_hours[r] = parse_hour(aqi.rows()[r][a_ts], aqi.where(r));
    lo = std::min(lo, aqi_hours[r]);
    hi = std::max(hi, aqi_hours[r]);
  }
  for (std::size_t r = 0; r < weather.rows().size(); ++r) {
    weather_hours[r] = parse_hour(weather.rows()[r][w_ts], weather.where(r));
    lo = std::min(lo, weather_hours[r]);
    hi = std::max(hi, weather_hours[r]);
  }
  if (aqi.rows().empty()) throw DataError("aqi.csv: no rows");
  if (weather.rows().empty()) throw DataError("weather.csv: no rows");

  const auto length = static_cast<std::size_t>(hi - lo + 1);
  TimeSeriesFrame& frame = ds.frame;
  frame.timestamps.resize(length);
  std::iota(frame.timestamps.begin(), frame.timestamps.end(), lo);
  frame.aqi.assign(ds.stations.size(), std::vector<double>(length, kNaN));
  frame.weather.resize(ds.cities.size());
  for (auto& cw : frame.weather) {
    for (auto& f : cw.fields) f.assign(length, kNaN);
    cw.wind.assign(length, -1);
  }

  std::vector<std::vector<bool>> aqi_seen(ds.stations.size(), std::vector<bool>(length, false));
  for (std::size_t r = 0; r < aqi.rows().size(); ++r) {
    const auto& row = aqi.rows()[r];
    const auto it = station_index.find(row[a_id]);
    if (it == station_index.end()) throw DataError(aqi.where(r) + ": unknown station_id '" + row[a_id] + "'");
    const auto t = static_cast<std::size_t>(aqi_hours[r] - lo);
    if (aqi_seen[it->second][t]) {
      throw DataError(aqi.where(r) + ": duplicate reading for station '" + row[a_id] + "' at " + row[a_ts]);
    }
    aqi_seen[it->second][t] = true;
    frame.aqi[it->second][t] = parse_number(row[a_v], aqi.where(r));
  }

  std::vector<std::vector<bool>> weather_seen(ds.cities.size(), std::vector<bool>(length, false));
  for (std::size_t r = 0; r < weather.rows().size(); ++r) {
    const auto& row = weather.rows()[r];
    const auto it = city_index.find(row[w_city]);
    if (it == city_index.end()) throw DataError(weather.where(r) + ": unknown city_id '" + row[w_city] + "'");
    const auto t = static_cast<std::size_t>(weather_hours[r] - lo);
    if (weather_seen[it->second][t]) {
      throw DataError(weather.where(r) + ": duplicate weather for city '" + row[w_city] + "' at " + row[w_ts]);
    }
    weather_seen[it->second][t] = true;
    auto& cw = frame.weather[it->second];
    for (std::size_t k = 0; k < kWeatherDim; ++k) cw.fields[k][t] = parse_number(row[w_cols[k]], weather.where(r));
    if (!is_missing(row[w_dir])) {
      try {
        cw.wind[t] = static_cast<int>(graph::parse_wind_direction(row[w_dir]));
      } catch (const std::invalid_argument& e) {
        throw DataError(weather.where(r) + ": " + e.what());
      }
    }
  }
  for (std::size_t c = 0; c < ds.cities.size(); ++c) {
    if (std::none_of(weather_seen[c].begin(), weather_seen[c].end(), [](bool b) { return b; })) {
      throw DataError("weather.csv: no rows for city '" + ds.cities[c].city_id +
                      "' referenced by stations.csv (unknown city_id)");
    }
  }
  return ds;
}

Dataset ingest(const std::filesystem::path& directory) {
  auto open = [&](const char* name) {
    std::ifstream in(directory / name);
    if (!in) throw DataError("cannot open '" + (directory / name).string() + "'");
    return in;
  };
  auto stations = open("stations.csv");
  auto poi = open("poi.csv");
  auto aqi = open("aqi.csv");
  auto weather = open("weather.csv");
  return ingest(CsvSources{stations, poi, aqi, weather});
}

// ---- interpolation ---------------------------------------------------------

void interpolate_missing(TimeSeriesFrame& frame, double max_missing_fraction) {
  for (std::size_t s = 0; s < frame.aqi.size(); ++s) {
    fill_series(frame.aqi[s], max_missing_fraction, "aqi series " + std::to_string(s));
  }
  for (std::size_t c = 0; c < frame.weather.size(); ++c) {
    auto& cw = frame.weather[c];
    for (std::size_t k = 0; k < kWeatherDim; ++k) {
      fill_series(cw.fields[k], max_missing_fraction,
                  "weather " + std::string(kWeatherColumns[k]) + " of city " + std::to_string(c));
    }
    auto& wind = cw.wind;
    const auto first = std::find_if(wind.begin(), wind.end(), [](int v) { return v >= 0; });
    if (first == wind.end()) throw DataError("wind_direction of city " + std::to_string(c) + " has no valid values");
    const auto missing = static_cast<std::size_t>(std::count(wind.begin(), wind.end(), -1));
    if (static_cast<double>(missing) / static_cast<double>(wind.size()) > max_missing_fraction) {
      throw DataError("wind_direction of city " + std::to_string(c) + ": data too sparse to interpolate");
    }
    int previous = *first;
    for (int& v : wind) {
      if (v < 0) v = previous;
      previous = v;
    }
  }
}

// ---- windows and splits ----------------------------------------------------

std::size_t window_count(std::size_t frame_length, std::size_t tau_in, std::size_t tau_out) {
  if (tau_in == 0 || tau_out == 0) throw ValidationError("tau_in and tau_out must be positive");
  if (frame_length < tau_in + tau_out) return 0;
  return frame_length - (tau_in + tau_out) + 1;
}

SampleWindow window_at(const TimeSeriesFrame& frame, std::size_t t, std::size_t tau_in, std::size_t tau_out) {
  if (tau_in == 0 || tau_out == 0) throw ValidationError("tau_in and tau_out must be positive");
  if (t + 1 < tau_in) throw DataError("window at slot " + std::to_string(t) + " needs " + std::to_string(tau_in) + " input hours");
  if (t + tau_out >= frame.length()) {
    throw DataError("window at slot " + std::to_string(t) + " needs future data through slot " +
                    std::to_string(t + tau_out) + " but the frame ends at " + std::to_string(frame.length() - 1));
  }
  const std::size_t span = tau_in + tau_out;
  const std::size_t start = t + 1 - tau_in;
  SampleWindow w;
  w.tau_in = tau_in;
  w.tau_out = tau_out;
  w.t = t;
  for (const auto& series : frame.aqi) {
    w.aqi_in.emplace_back(series.begin() + static_cast<std::ptrdiff_t>(start),
                          series.begin() + static_cast<std::ptrdiff_t>(start + tau_in));
    w.aqi_target.emplace_back(series.begin() + static_cast<std::ptrdiff_t>(start + tau_in),
                              series.begin() + static_cast<std::ptrdiff_t>(start + span));
  }
  for (std::size_t c = 0; c < frame.weather.size(); ++c) {
    const auto& cw = frame.weather[c];
    std::vector<WeatherVec> wv(span);
    std::vector<graph::WindDirection> dirs(span);
    for (std::size_t i = 0; i < span; ++i) {
      for (std::size_t f = 0; f < kWeatherDim; ++f) wv[i][f] = cw.fields[f][start + i];
      dirs[i] = frame.wind_at(c, start + i);
    }
    w.weather.push_back(std::move(wv));
    w.wind.push_back(std::move(dirs));
  }
  return w;
}

std::vector<SampleWindow> make_windows(const TimeSeriesFrame& frame, std::size_t tau_in, std::size_t tau_out) {
  const std::size_t count = window_count(frame.length(), tau_in, tau_out);
  if (count == 0) {
    throw DataError("frame of " + std::to_string(frame.length()) + " hours is shorter than tau_in + tau_out = " +
                    std::to_string(tau_in + tau_out));
  }
  for (const auto& series : frame.aqi)
    if (std::any_of(series.begin(), series.end(), [](double v) { return std::isnan(v); }))
      throw DataError("make_windows: frame still has missing AQI values; interpolate first");

  std::vector<SampleWindow> windows;
  windows.reserve(count);
  for (std::size_t k = 0; k < count; ++k) windows.push_back(window_at(frame, k + tau_in - 1, tau_in, tau_out));
  return windows;
}

SplitSizes split_sizes(std::size_t count, SplitFractions f) {
  const double total = f.train + f.val + f.test;
  if (f.train < 0 || f.val < 0 || f.test < 0 || std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("split fractions must be non-negative and sum to 1");
  }
  SplitSizes s;
  s.train = static_cast<std::size_t>(std::llround(f.train * static_cast<double>(count)));
  s.val = static_cast<std::size_t>(std::llround(f.val * static_cast<double>(count)));
  s.train = std::min(s.train, count);
  s.val = std::min(s.val, count - s.train);
  s.test = count - s.train - s.val;
  return s;
}

Splits split_chronological(std::vector<SampleWindow> windows, SplitFractions fractions) {
  std::stable_sort(windows.begin(), windows.end(), [](const SampleWindow& a, const SampleWindow& b) {
    return a.last_target_slot() < b.last_target_slot();
  });
  const SplitSizes sizes = split_sizes(windows.size(), fractions);
  Splits out;
  auto it = std::make_move_iterator(windows.begin());
  out.train.assign(it, it + static_cast<std::ptrdiff_t>(sizes.train));
  it += static_cast<std::ptrdiff_t>(sizes.train);
  out.val.assign(it, it + static_cast<std::ptrdiff_t>(sizes.val));
  it += static_cast<std::ptrdiff_t>(sizes.val);
  out.test.assign(it, std::make_move_iterator(windows.end()));
  return out;
}

// ---- normalization ---------------------------------------------------------

nlohmann::json NormStats::to_json() const {
  return {{"aqi_mean", aqi_mean},       {"aqi_std", aqi_std},   {"weather_mean", weather_mean},
          {"weather_std", weather_std}, {"poi_mean", poi_mean}, {"poi_std", poi_std}};
}

NormStats NormStats::from_json(const nlohmann::json& j) {
  NormStats s;
  s.aqi_mean = j.at("aqi_mean").get<double>();
  s.aqi_std = j.at("aqi_std").get<double>();
  s.weather_mean = j.at("weather_mean").get<WeatherVec>();
  s.weather_std = j.at("weather_std").get<WeatherVec>();
  s.poi_mean = j.at("poi_mean").get<Poi>();
  s.poi_std = j.at("poi_std").get<Poi>();
  return s;
}

namespace {

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  std::pair<double, double> mean_std(const std::string& label) const {
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
    double sd = std::sqrt(var);
    if (sd < NormStats::kStdFloor) {
      warn("feature '" + label + "' is constant on the training split; std floored at 1e-8");
      sd = NormStats::kStdFloor;
    }
    return {mean, sd};
  }
};

}  // namespace

NormStats fit_norm(std::span<const SampleWindow> train, std::span<const StationRecord> stations) {
  if (train.empty()) throw DataError("fit_norm: empty training split");
  // Each frame slot contributes once even though windows overlap.
  std::map<std::size_t, std::pair<const SampleWindow*, std::size_t>> slots;
  for (const auto& w : train) {
    for (std::size_t i = 0; i < w.tau_in + w.tau_out; ++i) slots.try_emplace(w.first_slot() + i, &w, i);
  }
  Moments aqi;
  std::array<Moments, kWeatherDim> weather;
  for (const auto& [slot, ref] : slots) {
    const auto& [w, i] = ref;
    for (std::size_t s = 0; s < w->aqi_in.size(); ++s) {
      aqi.add(i < w->tau_in ? w->aqi_in[s][i] : w->aqi_target[s][i - w->tau_in]);
    }
    for (const auto& city : w->weather)
      for (std::size_t f = 0; f < kWeatherDim; ++f) weather[f].add(city[i][f]);
  }
  NormStats stats;
  std::tie(stats.aqi_mean, stats.aqi_std) = aqi.mean_std("aqi");
  for (std::size_t f = 0; f < kWeatherDim; ++f) {
    std::tie(stats.weather_mean[f], stats.weather_std[f]) = weather[f].mean_std(std::string(kWeatherColumns[f]));
  }
  if (!stations.empty()) {
    for (std::size_t k = 0; k < kPoiDim; ++k) {
      Moments m;
      for (const auto& s : stations) m.add(s.poi[k]);
      // Constant POI categories are floored silently.
      const double mean = m.sum / static_cast<double>(m.n);
      const double sd = std::sqrt(std::max(0.0, m.sum_sq / static_cast<double>(m.n) - mean * mean));
      stats.poi_mean[k] = mean;
      stats.poi_std[k] = std::max(sd, NormStats::kStdFloor);
    }
  }
  return stats;
}

}  // namespace highair::data
