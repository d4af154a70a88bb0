#pragma once

// Encoder-decoder forecaster on top of the hierarchical encoder, its loss,
// the training loop and checkpoint round-trips.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "highair/data.hpp"
#include "highair/hierarchy.hpp"
#include "highair/nn.hpp"
#include "highair/tensor.hpp"

namespace highair::model {

struct TrainConfig {
  std::size_t tau_in = 24;
  std::size_t tau_out = 12;
  double lambda = 1.2;
  std::size_t gnn_hidden = 32;
  std::size_t lstm_hidden = 64;
  std::size_t lu_dim = 32;
  std::size_t batch_size = 128;
  std::size_t epochs = 300;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  data::SplitFractions split;
  Ablation ablation;
  // Cities whose stations are scored; empty means all.
  std::vector<std::string> eval_cities;
  // Restrict the training loss to eval_cities as well.
  bool loss_on_eval_cities = false;

  ModelDims dims() const;
  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are a ValidationError.
  static TrainConfig from_json(const nlohmann::json& j);
};

struct ModelParams {
  ModelDims dims;
  HierarchyParams hierarchy;
  nn::LstmParams encoder;
  nn::LstmParams decoder;  // input: [previous forecast | weather]
  nn::FnnParams head;
  nn::ParamSet set;  // everything the configured pipeline trains
};

ModelParams init_model_params(const ModelDims& dims, std::uint64_t seed);

// Normalized forecasts [B*S x tau_out] for a prepared batch.
ad::Tensor forecast_batch(ad::Tape& tape, const ModelParams& params, const BatchInputs& batch);

// Mean squared error over rows and horizons in normalized units. A non-empty
// `row_mask` (one 0/1 entry per row) restricts the mean to selected rows.
ad::Tensor loss(ad::Tape& tape, const ad::Tensor& preds, const ad::Tensor& targets,
                std::span<const double> row_mask = {});

struct ForecastResult {
  std::size_t window_t = 0;
  std::vector<std::vector<double>> aqi;  // [station][tau_out], raw AQI units
};

ForecastResult forecast(const ModelParams& params, const HierarchyLayout& layout, const data::NormStats& norm,
                        const data::SampleWindow& window);
std::vector<ForecastResult> predict(const ModelParams& params, const HierarchyLayout& layout,
                                    const data::NormStats& norm, std::span<const data::SampleWindow> windows,
                                    std::size_t batch_size = 128);

// Windows, splits, normalization and graphs for one config and dataset.
struct PreparedData {
  data::Splits splits;
  data::NormStats norm;
  HierarchyLayout layout;
  std::vector<bool> eval_station;  // per station
};

PreparedData prepare(const TrainConfig& config, const data::Dataset& dataset);
// Same, with normalization statistics taken from a checkpoint.
PreparedData prepare(const TrainConfig& config, const data::Dataset& dataset, const data::NormStats& norm);
std::vector<bool> eval_station_mask(const data::Dataset& dataset, std::span<const std::string> eval_cities);

inline constexpr std::size_t kLogHorizons[] = {1, 3, 6, 12};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::vector<std::optional<double>> val_mae;  // one per kLogHorizons entry; empty beyond tau_out
  double val_score = 0.0;                      // mean val MAE over all horizons 1..tau_out
  double wall_seconds = 0.0;
};

struct TrainResult {
  ModelParams params;  // best-validation parameters
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
};

// Mini-batch Adam on the squared-error loss; keeps the parameters of the
// epoch with the lowest validation score. Throws NumericalError on a
// non-finite loss.
TrainResult train(const TrainConfig& config, const PreparedData& prepared);

// Mean absolute error per horizon 1..tau_out over masked stations, raw units.
std::vector<double> horizon_mae(std::span<const ForecastResult> preds, std::span<const data::SampleWindow> windows,
                                const std::vector<bool>& station_mask);

void write_train_log(std::ostream& out, std::span<const EpochLog> log);

nlohmann::json checkpoint_manifest(const TrainConfig& config, const data::NormStats& norm);
void save_model(const std::filesystem::path& path, const TrainConfig& config, const data::NormStats& norm,
                const ModelParams& params);

struct LoadedModel {
  TrainConfig config;
  data::NormStats norm;
  ModelParams params;
};
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace highair::model
