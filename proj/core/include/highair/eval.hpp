#pragma once

// Horizon metrics, the historical-average baseline, the experiment runner,
// the lambda sweep and report emission (CSV plus SVG).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "highair/data.hpp"
#include "highair/forecaster.hpp"
#include "highair/synth.hpp"

namespace highair::eval {

// Over aligned flat arrays. Throws ValidationError when empty or misaligned.
double mae(std::span<const double> preds, std::span<const double> targets);
double rmse(std::span<const double> preds, std::span<const double> targets);

// Predictions and targets at horizon k (1-based) over the masked stations.
struct HorizonSlice {
  std::vector<double> preds;
  std::vector<double> targets;
};
HorizonSlice slice_horizon(std::span<const model::ForecastResult> preds, std::span<const data::SampleWindow> windows,
                           std::size_t k, const std::vector<bool>& station_mask);
double mae(std::span<const model::ForecastResult> preds, std::span<const data::SampleWindow> windows, std::size_t k,
           const std::vector<bool>& station_mask);
double rmse(std::span<const model::ForecastResult> preds, std::span<const data::SampleWindow> windows, std::size_t k,
            const std::vector<bool>& station_mask);

struct HorizonMetrics {
  std::vector<std::size_t> horizons;
  std::vector<double> mae;
  std::vector<double> rmse;
  std::vector<std::string> cities;          // scored cities
  std::vector<std::vector<double>> city_mae;   // [city][horizon]
  std::vector<std::vector<double>> city_rmse;  // [city][horizon]
  std::size_t samples = 0;                     // window x station pairs per horizon

  double mean_mae() const;
};

// {1, 3, 6, 12} restricted to 1..tau_out.
std::vector<std::size_t> report_horizons(std::size_t tau_out);

HorizonMetrics compute_metrics(const data::Dataset& dataset, std::span<const model::ForecastResult> preds,
                               std::span<const data::SampleWindow> windows, const std::vector<bool>& station_mask,
                               std::span<const std::size_t> horizons);

// Mean of series[target - period * j], j >= 1, over indices <= history_end.
// Returns nullopt when no such observation exists.
std::optional<double> ha_value(std::span<const double> series, std::size_t history_end, std::size_t target,
                               std::size_t period = 168);

// HA forecasts for each window; same-phase gaps fall back to the station's
// training mean with one aggregated warning.
std::vector<model::ForecastResult> ha_baseline(const data::TimeSeriesFrame& frame,
                                               std::span<const data::SampleWindow> windows, std::size_t history_end,
                                               std::size_t period = 168);

// Last slot observed by the training windows.
std::size_t training_history_end(std::span<const data::SampleWindow> train);

// ---- experiments -----------------------------------------------------------

struct DataSource {
  std::optional<std::filesystem::path> directory;
  std::optional<synth::SynthSpec> synth;
  std::uint64_t synth_seed = 0;

  data::Dataset load() const;
};

struct ExperimentConfig {
  model::TrainConfig train;
  DataSource data;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  bool include_ha = true;
  // One entry per trained variant; an empty list is the full model.
  std::vector<std::vector<std::string>> variants = {{}};

  // {"train": {...}, "data_dir": "...", or "synth": {"spec": {...}, "seed": n},
  //  "seeds": [...], "include_ha": bool, "variants": [[], ["dynamic"], ...]}
  // A relative data_dir is resolved against `base`.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
  nlohmann::json to_json() const;
};

struct MethodResult {
  std::string method;  // "highair", "highair-wo-dynamic", "ha", ...
  std::vector<std::uint64_t> seeds;
  std::vector<HorizonMetrics> per_seed;
  HorizonMetrics mean;  // per-cell mean over seeds
  std::vector<std::vector<model::EpochLog>> logs;  // per seed; empty for HA
};

struct ExperimentReport {
  nlohmann::json config;
  std::vector<std::size_t> horizons;
  std::vector<MethodResult> methods;

  const MethodResult& method(const std::string& name) const;
};

using ProgressFn = std::function<void(const std::string&)>;

ExperimentReport run_experiment(const ExperimentConfig& config, const data::Dataset& dataset,
                                const ProgressFn& progress = {});

// method,seed,horizon,mae,rmse,samples ("mean" rows follow the seeds).
void write_metrics_csv(std::ostream& out, const ExperimentReport& report);
void write_city_csv(std::ostream& out, const ExperimentReport& report);
// metrics.csv, per_city.csv, mae_by_horizon.svg, config.json and per-run training logs.
void write_report(const ExperimentReport& report, const std::filesystem::path& directory);

// ---- lambda sweep ----------------------------------------------------------

struct LambdaRow {
  double lambda = 0.0;
  double val_mae = 0.0;  // mean over horizons and seeds
  std::size_t city_edges = 0;
  std::vector<std::size_t> station_edges;  // per city
};

struct LambdaSweep {
  std::vector<std::string> cities;
  std::vector<LambdaRow> rows;
};

// "a:b:step" (inclusive) or a comma-separated list.
std::vector<double> parse_lambda_values(const std::string& text);

// Edge counts only, no training.
LambdaRow lambda_edges(const data::Dataset& dataset, double lambda);
LambdaSweep lambda_sweep(const ExperimentConfig& config, const data::Dataset& dataset, std::span<const double> values,
                         const ProgressFn& progress = {});
void write_lambda_csv(std::ostream& out, const LambdaSweep& sweep);
void write_lambda_report(const LambdaSweep& sweep, const std::filesystem::path& directory);

// ---- charts ----------------------------------------------------------------

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Self-contained SVG line chart.
std::string render_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                              std::span<const ChartSeries> series);

// Fixed six-decimal formatting used in every report.
std::string format_metric(double value);

}  // namespace highair::eval
