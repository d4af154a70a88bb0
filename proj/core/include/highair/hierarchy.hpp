#pragma once

// Per-slot hierarchical encoding: city LSTM (upper delivery), city-level
// message passing, lower updating into each station graph's global
// attribute, and station-level message passing.
//
// Everything runs on a batch of windows at once. Rows are window-major:
// city row = b * num_cities + c, station row = b * num_stations + s.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "highair/data.hpp"
#include "highair/graph.hpp"
#include "highair/nn.hpp"
#include "highair/tensor.hpp"

namespace highair::model {

struct Ablation {
  bool no_weather = false;
  bool no_poi = false;
  bool no_hierarchy = false;
  bool no_city_lstm = false;
  bool no_dynamic = false;

  // Flag names: weather, poi, hierarchy, city-lstm (or city_lstm), dynamic.
  static Ablation parse(std::span<const std::string> flags);
  std::vector<std::string> names() const;
  // Short label such as "full" or "wo-dynamic+wo-poi".
  std::string label() const;
  // Throws ValidationError for contradictory combinations.
  void validate() const;
  bool any() const { return no_weather || no_poi || no_hierarchy || no_city_lstm || no_dynamic; }

  bool operator==(const Ablation&) const = default;
};

struct ModelDims {
  std::size_t gnn_hidden = 32;
  std::size_t lstm_hidden = 64;
  std::size_t lu_dim = 32;
  Ablation ablation;

  std::size_t station_attr_dim() const { return 1 + data::kPoiDim; }
  std::size_t edge_dim() const { return ablation.no_dynamic ? 1 : 2; }
  std::size_t wind_dim() const { return ablation.no_dynamic ? 2 : 0; }
  std::size_t global_dim() const { return data::kWeatherDim + lu_dim + wind_dim(); }
};

// One message FNN (rho) and one update FNN (phi1 or phi2).
struct MessagePassParams {
  nn::FnnParams message;
  nn::FnnParams update;
};

struct HierarchyParams {
  nn::LstmParams city_lstm;  // shared by all cities
  nn::FnnParams city_proj;   // replaces city_lstm when ablated
  MessagePassParams city;
  nn::FnnParams lower_update;  // shared by all cities
  MessagePassParams station;
};

HierarchyParams make_hierarchy_params(const ModelDims& dims, nn::Rng& rng);
// Registers only the tensors the ablated pipeline actually uses.
void register_hierarchy_params(nn::ParamSet& set, const HierarchyParams& params, const ModelDims& dims);

// Static graph structure and per-station constants of one dataset.
struct HierarchyLayout {
  std::size_t num_cities = 0;
  std::size_t num_stations = 0;
  std::vector<std::size_t> station_city;
  std::vector<std::vector<std::size_t>> city_stations;
  graph::GraphTopology city_graph;
  std::vector<graph::GraphTopology> station_graphs;  // per city, local node ids
  // Station edges of all cities with global station indices.
  std::vector<graph::Edge> station_edges;
  std::vector<data::Poi> poi;  // normalized

  static HierarchyLayout build(const data::Dataset& dataset, double lambda, const data::NormStats& norm);

  std::size_t city_edge_count() const { return city_graph.edges.size(); }
  std::size_t station_edge_count() const { return station_edges.size(); }
};

struct EdgeBatch {
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
  ad::Tensor features;  // [E x edge_dim]: gs, then ws unless ablated
};

struct SlotInputs {
  ad::Tensor city_aqi;      // [B*C x 1] normalized mean of station AQI
  ad::Tensor station_attr;  // [B*S x 1+poi]: normalized AQI, normalized POI
  ad::Tensor city_weather;  // [B*C x weather]
  ad::Tensor city_wind;     // [B*C x 2], only used when no_dynamic
  EdgeBatch city_edges;
  EdgeBatch station_edges;
};

struct BatchInputs {
  std::size_t batch = 0;
  std::size_t num_cities = 0;
  std::size_t num_stations = 0;
  std::vector<std::size_t> station_city_rows;  // [B*S] -> city row
  std::vector<SlotInputs> slots;               // tau_in
  std::vector<ad::Tensor> future_weather;      // tau_out x [B*S x weather]
  ad::Tensor last_aqi;                         // [B*S x 1]
  ad::Tensor targets;                          // [B*S x tau_out], normalized

  std::size_t tau_in() const { return slots.size(); }
  std::size_t tau_out() const { return future_weather.size(); }
};

BatchInputs make_batch(const HierarchyLayout& layout, const data::NormStats& norm, const ModelDims& dims,
                       std::span<const data::SampleWindow* const> windows);
BatchInputs make_batch(const HierarchyLayout& layout, const data::NormStats& norm, const ModelDims& dims,
                       const data::SampleWindow& window);

// Advances the shared city LSTM one slot on the per-city mean AQI; h is the
// city node attribute. With no_city_lstm the attribute is a projection of the
// mean AQI and the state is passed through.
nn::LstmState upper_delivery_step(ad::Tape& tape, const HierarchyParams& params, const ModelDims& dims,
                                  const ad::Tensor& city_aqi, const nn::LstmState& state);

// r_a = mean over in-edges (s -> a) of message([x_s | x_a | e]); returns update([r_a | x_a]).
ad::Tensor message_pass_city(ad::Tape& tape, const MessagePassParams& params, const ad::Tensor& x,
                             const EdgeBatch& edges);

// u = [weather | lower_update(x') | wind?]. `wind` may be empty.
ad::Tensor lower_update(ad::Tape& tape, const nn::FnnParams& lu, const ad::Tensor& city_x,
                        const ad::Tensor& weather, const ad::Tensor& wind);

// As message_pass_city, then update([r | x | u]) with u already gathered to station rows.
ad::Tensor message_pass_station(ad::Tape& tape, const MessagePassParams& params, const ad::Tensor& x,
                                const EdgeBatch& edges, const ad::Tensor& u_rows);

// x' for every station at every input slot (tau_in tensors of [B*S x gnn_hidden]).
std::vector<ad::Tensor> encode_window(ad::Tape& tape, const HierarchyParams& params, const ModelDims& dims,
                                      const BatchInputs& batch);

}  // namespace highair::model
