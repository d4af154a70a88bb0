#include "highair/hierarchy.hpp"

#include <algorithm>
#include <array>

#include "highair/errors.hpp"

namespace highair::model {
namespace {

using graph::kAllWindDirections;
constexpr std::size_t kWindStates = kAllWindDirections.size();

// ws for one edge under each of the nine wind codes.
std::array<double, kWindStates> ws_table(graph::GeoPoint from, graph::GeoPoint to) {
  std::array<double, kWindStates> table{};
  for (std::size_t k = 0; k < kWindStates; ++k) {
    table[k] = graph::wind_similarity(from, to, graph::encode_wind(kAllWindDirections[k]));
  }
  return table;
}

ad::Tensor message_round(ad::Tape& tape, const MessagePassParams& params, const ad::Tensor& x,
                         const EdgeBatch& edges, const ad::Tensor* u_rows) {
  const ad::Tensor msg_in =
      ad::concat(tape, {ad::gather_rows(tape, x, edges.src), ad::gather_rows(tape, x, edges.dst), edges.features}, 1);
  const ad::Tensor messages = nn::fnn_forward(tape, params.message, msg_in);
  const ad::Tensor r = ad::segment_mean(tape, messages, edges.dst, x.rows());
  const ad::Tensor update_in = u_rows ? ad::concat(tape, {r, x, *u_rows}, 1) : ad::concat(tape, {r, x}, 1);
  return nn::fnn_forward(tape, params.update, update_in);
}

}  // namespace

// ---- ablation --------------------------------------------------------------

Ablation Ablation::parse(std::span<const std::string> flags) {
  Ablation a;
  for (const auto& f : flags) {
    if (f == "weather") {
      a.no_weather = true;
    } else if (f == "poi") {
      a.no_poi = true;
    } else if (f == "hierarchy") {
      a.no_hierarchy = true;
    } else if (f == "city-lstm" || f == "city_lstm") {
      a.no_city_lstm = true;
    } else if (f == "dynamic") {
      a.no_dynamic = true;
    } else {
      throw ValidationError("unknown ablation '" + f + "' (expected weather|poi|hierarchy|city-lstm|dynamic)");
    }
  }
  a.validate();
  return a;
}

std::vector<std::string> Ablation::names() const {
  std::vector<std::string> out;
  if (no_weather) out.emplace_back("weather");
  if (no_poi) out.emplace_back("poi");
  if (no_hierarchy) out.emplace_back("hierarchy");
  if (no_city_lstm) out.emplace_back("city-lstm");
  if (no_dynamic) out.emplace_back("dynamic");
  return out;
}

std::string Ablation::label() const {
  if (!any()) return "full";
  std::string out;
  for (const auto& n : names()) out += (out.empty() ? "wo-" : "+wo-") + n;
  return out;
}

void Ablation::validate() const {
  if (no_hierarchy && no_city_lstm) {
    throw ValidationError("ablations 'hierarchy' and 'city-lstm' contradict: without the city level there is no city LSTM to remove");
  }
}

// ---- parameters ------------------------------------------------------------

HierarchyParams make_hierarchy_params(const ModelDims& dims, nn::Rng& rng) {
  using nn::Activation;
  const std::size_t h = dims.lstm_hidden, g = dims.gnn_hidden, attr = dims.station_attr_dim();
  HierarchyParams p;
  p.city_lstm = nn::make_lstm(1, h, rng);
  p.city_proj = nn::make_fnn({1, h}, {Activation::kLinear}, rng);
  p.city.message = nn::make_fnn({2 * h + dims.edge_dim(), g}, {Activation::kTanh}, rng);
  p.city.update = nn::make_fnn({g + h, g}, {Activation::kTanh}, rng);
  p.lower_update = nn::make_fnn({g, dims.lu_dim}, {Activation::kTanh}, rng);
  p.station.message = nn::make_fnn({2 * attr + dims.edge_dim(), g}, {Activation::kTanh}, rng);
  p.station.update = nn::make_fnn({g + attr + dims.global_dim(), g}, {Activation::kTanh}, rng);
  return p;
}

void register_hierarchy_params(nn::ParamSet& set, const HierarchyParams& p, const ModelDims& dims) {
  if (!dims.ablation.no_hierarchy) {
    if (dims.ablation.no_city_lstm) {
      set.add_fnn("city_proj", p.city_proj);
    } else {
      set.add_lstm("city_lstm", p.city_lstm);
    }
    set.add_fnn("city_msg_fnn", p.city.message);
    set.add_fnn("city_update_fnn", p.city.update);
    set.add_fnn("lu_fnn", p.lower_update);
  }
  set.add_fnn("station_msg_fnn", p.station.message);
  set.add_fnn("station_update_fnn", p.station.update);
}

// ---- layout ----------------------------------------------------------------

HierarchyLayout HierarchyLayout::build(const data::Dataset& dataset, double lambda, const data::NormStats& norm) {
  HierarchyLayout layout;
  layout.num_cities = dataset.cities.size();
  layout.num_stations = dataset.stations.size();
  layout.station_city = dataset.station_city;
  std::vector<graph::GeoPoint> city_points;
  for (std::size_t c = 0; c < dataset.cities.size(); ++c) {
    const auto& city = dataset.cities[c];
    if (city.stations.empty()) throw ValidationError("city '" + city.city_id + "' has no stations");
    layout.city_stations.push_back(city.stations);
    city_points.push_back(city.location);
    std::vector<graph::GeoPoint> pts;
    for (std::size_t s : city.stations) pts.push_back(dataset.stations[s].location);
    auto topo = graph::build_level_graph(pts, lambda, graph::Level::kStation);
    for (const auto& e : topo.edges) {
      layout.station_edges.push_back({city.stations[e.src], city.stations[e.dst], e.gs, 0.0});
    }
    layout.station_graphs.push_back(std::move(topo));
  }
  layout.city_graph = graph::build_level_graph(city_points, lambda, graph::Level::kCity);
  for (const auto& s : dataset.stations) {
    data::Poi p{};
    for (std::size_t k = 0; k < data::kPoiDim; ++k) p[k] = norm.normalize_poi(k, s.poi[k]);
    layout.poi.push_back(p);
  }
  return layout;
}

// ---- batching --------------------------------------------------------------

BatchInputs make_batch(const HierarchyLayout& layout, const data::NormStats& norm, const ModelDims& dims,
                       std::span<const data::SampleWindow* const> windows) {
  if (windows.empty()) throw std::invalid_argument("make_batch: no windows");
  const std::size_t B = windows.size(), C = layout.num_cities, S = layout.num_stations;
  const std::size_t tau_in = windows[0]->tau_in, tau_out = windows[0]->tau_out;
  const std::size_t W = data::kWeatherDim, A = dims.station_attr_dim(), E = dims.edge_dim();
  const Ablation& abl = dims.ablation;
  for (const auto* w : windows) {
    if (w->tau_in != tau_in || w->tau_out != tau_out) throw std::invalid_argument("make_batch: mixed window lengths");
    if (w->aqi_in.size() != S || w->weather.size() != C || w->wind.size() != C) {
      throw DataError("make_batch: window does not match the dataset layout");
    }
  }

  std::vector<std::array<double, kWindStates>> city_ws, station_ws;
  for (const auto& e : layout.city_graph.edges) {
    city_ws.push_back(ws_table(layout.city_graph.locations[e.src], layout.city_graph.locations[e.dst]));
  }
  for (std::size_t k = 0; k < layout.station_edges.size(); ++k) {
    const auto& e = layout.station_edges[k];
    const std::size_t c = layout.station_city[e.src];
    const auto& topo = layout.station_graphs[c];
    const auto& cs = layout.city_stations[c];
    const auto local = [&](std::size_t s) { return static_cast<std::size_t>(std::find(cs.begin(), cs.end(), s) - cs.begin()); };
    station_ws.push_back(ws_table(topo.locations[local(e.src)], topo.locations[local(e.dst)]));
  }

  BatchInputs batch;
  batch.batch = B;
  batch.num_cities = C;
  batch.num_stations = S;
  batch.station_city_rows.resize(B * S);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t s = 0; s < S; ++s) batch.station_city_rows[b * S + s] = b * C + layout.station_city[s];

  auto weather_row = [&](const data::SampleWindow& w, std::size_t c, std::size_t i, double* out) {
    for (std::size_t f = 0; f < W; ++f) out[f] = abl.no_weather ? 0.0 : norm.normalize_weather(f, w.weather[c][i][f]);
  };

  for (std::size_t i = 0; i < tau_in; ++i) {
    SlotInputs slot;
    std::vector<double> city_aqi(B * C), attr(B * S * A), weather(B * C * W), wind;
    if (abl.no_dynamic) wind.assign(B * C * 2, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
      const auto& w = *windows[b];
      for (std::size_t c = 0; c < C; ++c) {
        double sum = 0.0;
        for (std::size_t s : layout.city_stations[c]) sum += w.aqi_in[s][i];
        city_aqi[b * C + c] = norm.normalize_aqi(sum / static_cast<double>(layout.city_stations[c].size()));
        weather_row(w, c, i, &weather[(b * C + c) * W]);
        if (abl.no_dynamic && !abl.no_weather) {
          const auto v = graph::encode_wind(w.wind[c][i]);
          wind[(b * C + c) * 2] = v.east;
          wind[(b * C + c) * 2 + 1] = v.north;
        }
      }
      for (std::size_t s = 0; s < S; ++s) {
        double* row = &attr[(b * S + s) * A];
        row[0] = norm.normalize_aqi(w.aqi_in[s][i]);
        for (std::size_t k = 0; k < data::kPoiDim; ++k) row[1 + k] = abl.no_poi ? 0.0 : layout.poi[s][k];
      }
    }
    slot.city_aqi = ad::Tensor::from({B * C, 1}, std::move(city_aqi));
    slot.station_attr = ad::Tensor::from({B * S, A}, std::move(attr));
    slot.city_weather = ad::Tensor::from({B * C, W}, std::move(weather));
    if (abl.no_dynamic) slot.city_wind = ad::Tensor::from({B * C, 2}, std::move(wind));

    auto fill_edges = [&](const std::vector<graph::Edge>& edges, const std::vector<std::array<double, kWindStates>>& ws,
                          std::size_t nodes, const auto& wind_city_of, EdgeBatch& out) {
      std::vector<double> feat;
      feat.reserve(B * edges.size() * E);
      for (std::size_t b = 0; b < B; ++b) {
        const auto& w = *windows[b];
        for (std::size_t k = 0; k < edges.size(); ++k) {
          out.src.push_back(b * nodes + edges[k].src);
          out.dst.push_back(b * nodes + edges[k].dst);
          feat.push_back(edges[k].gs);
          if (!abl.no_dynamic) {
            const auto dir = static_cast<std::size_t>(w.wind[wind_city_of(edges[k].src)][i]);
            feat.push_back(ws[k][dir]);
          }
        }
      }
      out.features = ad::Tensor::from({out.src.size(), E}, std::move(feat));
    };
    if (!abl.no_hierarchy) {
      fill_edges(layout.city_graph.edges, city_ws, C, [](std::size_t c) { return c; }, slot.city_edges);
    }
    fill_edges(layout.station_edges, station_ws, S, [&](std::size_t s) { return layout.station_city[s]; },
               slot.station_edges);
    batch.slots.push_back(std::move(slot));
  }

  std::vector<double> last(B * S), targets(B * S * tau_out);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& w = *windows[b];
    for (std::size_t s = 0; s < S; ++s) {
      last[b * S + s] = norm.normalize_aqi(w.aqi_in[s][tau_in - 1]);
      for (std::size_t k = 0; k < tau_out; ++k) targets[(b * S + s) * tau_out + k] = norm.normalize_aqi(w.aqi_target[s][k]);
    }
  }
  batch.last_aqi = ad::Tensor::from({B * S, 1}, std::move(last));
  batch.targets = ad::Tensor::from({B * S, tau_out}, std::move(targets));

  for (std::size_t k = 0; k < tau_out; ++k) {
    std::vector<double> fw(B * S * W);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t s = 0; s < S; ++s) weather_row(*windows[b], layout.station_city[s], tau_in + k, &fw[(b * S + s) * W]);
    batch.future_weather.push_back(ad::Tensor::from({B * S, W}, std::move(fw)));
  }
  return batch;
}

BatchInputs make_batch(const HierarchyLayout& layout, const data::NormStats& norm, const ModelDims& dims,
                       const data::SampleWindow& window) {
  const data::SampleWindow* ptr = &window;
  return make_batch(layout, norm, dims, std::span<const data::SampleWindow* const>(&ptr, 1));
}

// ---- per-slot operations ---------------------------------------------------

nn::LstmState upper_delivery_step(ad::Tape& tape, const HierarchyParams& params, const ModelDims& dims,
                                  const ad::Tensor& city_aqi, const nn::LstmState& state) {
  if (dims.ablation.no_city_lstm) return {nn::fnn_forward(tape, params.city_proj, city_aqi), state.c};
  return nn::lstm_step(tape, params.city_lstm, city_aqi, state);
}

ad::Tensor message_pass_city(ad::Tape& tape, const MessagePassParams& params, const ad::Tensor& x,
                             const EdgeBatch& edges) {
  return message_round(tape, params, x, edges, nullptr);
}

ad::Tensor lower_update(ad::Tape& tape, const nn::FnnParams& lu, const ad::Tensor& city_x, const ad::Tensor& weather,
                        const ad::Tensor& wind) {
  const ad::Tensor lu_vec = nn::fnn_forward(tape, lu, city_x);
  if (wind.size() == 0) return ad::concat(tape, {weather, lu_vec}, 1);
  return ad::concat(tape, {weather, lu_vec, wind}, 1);
}

ad::Tensor message_pass_station(ad::Tape& tape, const MessagePassParams& params, const ad::Tensor& x,
                                const EdgeBatch& edges, const ad::Tensor& u_rows) {
  return message_round(tape, params, x, edges, &u_rows);
}

std::vector<ad::Tensor> encode_window(ad::Tape& tape, const HierarchyParams& params, const ModelDims& dims,
                                      const BatchInputs& batch) {
  const std::size_t city_rows = batch.batch * batch.num_cities;
  nn::LstmState city_state = nn::lstm_zero_state(params.city_lstm, city_rows);
  std::vector<ad::Tensor> sequence;
  sequence.reserve(batch.tau_in());
  for (const auto& slot : batch.slots) {
    ad::Tensor u_city;
    if (dims.ablation.no_hierarchy) {
      const ad::Tensor zero_lu = ad::Tensor::zeros({city_rows, dims.lu_dim});
      u_city = slot.city_wind.size() == 0 ? ad::concat(tape, {slot.city_weather, zero_lu}, 1)
                                          : ad::concat(tape, {slot.city_weather, zero_lu, slot.city_wind}, 1);
    } else {
      city_state = upper_delivery_step(tape, params, dims, slot.city_aqi, city_state);
      const ad::Tensor city_x = message_pass_city(tape, params.city, city_state.h, slot.city_edges);
      u_city = lower_update(tape, params.lower_update, city_x, slot.city_weather, slot.city_wind);
    }
    const ad::Tensor u_rows = ad::gather_rows(tape, u_city, batch.station_city_rows);
    sequence.push_back(message_pass_station(tape, params.station, slot.station_attr, slot.station_edges, u_rows));
  }
  return sequence;
}

}  // namespace highair::model
