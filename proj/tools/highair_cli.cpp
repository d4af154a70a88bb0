#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "highair/data.hpp"
#include "highair/errors.hpp"
#include "highair/eval.hpp"
#include "highair/forecaster.hpp"
#include "highair/synth.hpp"

namespace fs = std::filesystem;
using namespace highair;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kValidation = 2, kData = 3, kNumerical = 4 };

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

data::Dataset load_dataset(const fs::path& dir) {
  data::Dataset ds = data::ingest(dir);
  data::interpolate_missing(ds.frame);
  return ds;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void progress(const std::string& msg) { std::cerr << msg << '\n'; }

int cmd_synth(const fs::path& spec_path, std::uint64_t seed, const fs::path& out) {
  const auto spec = synth::SynthSpec::from_json(read_json(spec_path));
  const auto corpus = synth::generate(spec, seed);
  synth::write_corpus(corpus, out);
  std::cout << "wrote " << corpus.stations.size() << " stations x " << corpus.timestamps.size() << " hours to "
            << out.string() << '\n';
  return kOk;
}

int cmd_train(const fs::path& config_path, const fs::path& data_dir, const fs::path& out,
              const std::vector<std::string>& ablate) {
  auto config = model::TrainConfig::from_json(read_json(config_path));
  if (!ablate.empty()) {
    auto flags = config.ablation.names();
    flags.insert(flags.end(), ablate.begin(), ablate.end());
    config.ablation = model::Ablation::parse(flags);
  }
  const auto dataset = load_dataset(data_dir);
  const auto prepared = model::prepare(config, dataset);
  const auto result = model::train(config, prepared);
  fs::create_directories(out);
  model::save_model(out / "model.ckpt", config, prepared.norm, result.params);
  auto log = open_out(out / "train_log.csv");
  model::write_train_log(log, result.log);
  std::cout << "trained " << config.epochs << " epochs; best epoch " << result.best_epoch << "; checkpoint "
            << (out / "model.ckpt").string() << '\n';
  return kOk;
}

int cmd_forecast(const fs::path& ckpt, const fs::path& data_dir, const std::string& at, const fs::path& out) {
  const auto loaded = model::load_model(ckpt);
  const auto dataset = load_dataset(data_dir);
  const data::Hour hour = data::parse_timestamp(at);
  const auto& ts = dataset.frame.timestamps;
  if (ts.empty() || hour < ts.front() || hour > ts.back()) throw DataError("--at " + at + " is outside the data range");
  const auto t = static_cast<std::size_t>(hour - ts.front());
  const auto window = data::window_at(dataset.frame, t, loaded.config.tau_in, loaded.config.tau_out);
  const auto layout = model::HierarchyLayout::build(dataset, loaded.config.lambda, loaded.norm);
  const auto result = model::forecast(loaded.params, layout, loaded.norm, window);
  auto csv = open_out(out);
  csv << "station_id,city_id,issued_at,target_time,horizon,aqi\n";
  for (std::size_t s = 0; s < dataset.stations.size(); ++s) {
    for (std::size_t k = 0; k < result.aqi[s].size(); ++k) {
      csv << dataset.stations[s].station_id << ',' << dataset.stations[s].city_id << ',' << data::format_timestamp(hour)
          << ',' << data::format_timestamp(hour + static_cast<data::Hour>(k + 1)) << ',' << k + 1 << ','
          << eval::format_metric(result.aqi[s][k]) << '\n';
    }
  }
  return kOk;
}

int cmd_evaluate(const fs::path& ckpt, const fs::path& data_dir, const std::string& split, const fs::path& out) {
  const auto loaded = model::load_model(ckpt);
  const auto dataset = load_dataset(data_dir);
  const auto prepared = model::prepare(loaded.config, dataset, loaded.norm);
  const std::vector<data::SampleWindow>* windows = nullptr;
  if (split == "train") windows = &prepared.splits.train;
  if (split == "val") windows = &prepared.splits.val;
  if (split == "test") windows = &prepared.splits.test;
  if (!windows) throw ValidationError("--split must be train, val or test");
  if (windows->empty()) throw DataError("the " + split + " split is empty");
  const auto preds = model::predict(loaded.params, prepared.layout, prepared.norm, *windows, loaded.config.batch_size);
  const auto horizons = eval::report_horizons(loaded.config.tau_out);
  const auto m = eval::compute_metrics(dataset, preds, *windows, prepared.eval_station, horizons);
  auto csv = open_out(out);
  csv << "scope,horizon,mae,rmse,samples\n";
  for (std::size_t i = 0; i < horizons.size(); ++i)
    csv << "all," << horizons[i] << ',' << eval::format_metric(m.mae[i]) << ',' << eval::format_metric(m.rmse[i])
        << ',' << m.samples << '\n';
  for (std::size_t c = 0; c < m.cities.size(); ++c)
    for (std::size_t i = 0; i < horizons.size(); ++i)
      csv << m.cities[c] << ',' << horizons[i] << ',' << eval::format_metric(m.city_mae[c][i]) << ','
          << eval::format_metric(m.city_rmse[c][i]) << ",\n";
  std::cout << "mean MAE over horizons: " << eval::format_metric(m.mean_mae()) << '\n';
  return kOk;
}

int cmd_experiment(const fs::path& config_path, const fs::path& out) {
  const auto config = eval::ExperimentConfig::from_json(read_json(config_path), config_path.parent_path());
  fs::create_directories(out);
  std::ofstream log(out / "experiment.log");
  auto report_progress = [&](const std::string& msg) {
    log << msg << std::endl;
    progress(msg);
  };
  const auto dataset = config.data.load();
  const auto report = eval::run_experiment(config, dataset, report_progress);
  eval::write_report(report, out);
  eval::write_metrics_csv(std::cout, report);
  return kOk;
}

int cmd_sweep(const fs::path& config_path, const std::string& values, const fs::path& out) {
  const auto config = eval::ExperimentConfig::from_json(read_json(config_path), config_path.parent_path());
  const auto lambdas = eval::parse_lambda_values(values);
  const auto dataset = config.data.load();
  const auto sweep = eval::lambda_sweep(config, dataset, lambdas, progress);
  eval::write_lambda_report(sweep, out);
  eval::write_lambda_csv(std::cout, sweep);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"highair: hierarchical graph air-quality forecaster"};
  app.require_subcommand(1);

  fs::path spec, out, config, data_dir, ckpt;
  std::uint64_t seed = 0;
  std::vector<std::string> ablate;
  std::string at, split = "test", values = "1.0:1.5:0.1";

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth_cmd->add_option("--spec", spec, "Synthetic spec JSON")->required();
  synth_cmd->add_option("--seed", seed, "Generator seed")->required();
  synth_cmd->add_option("--out", out, "Output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", config, "Train config JSON")->required();
  train_cmd->add_option("--data", data_dir, "Data directory")->required();
  train_cmd->add_option("--out", out, "Output directory")->required();
  train_cmd->add_option("--ablate", ablate, "weather|poi|hierarchy|city-lstm|dynamic (repeatable)");

  auto* forecast_cmd = app.add_subcommand("forecast", "Forecast from one time slot");
  forecast_cmd->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  forecast_cmd->add_option("--data", data_dir, "Data directory")->required();
  forecast_cmd->add_option("--at", at, "Last observed hour, ISO 8601")->required();
  forecast_cmd->add_option("--out", out, "Output CSV")->required();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a checkpoint on a split");
  evaluate_cmd->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  evaluate_cmd->add_option("--data", data_dir, "Data directory")->required();
  evaluate_cmd->add_option("--split", split, "train|val|test")->capture_default_str();
  evaluate_cmd->add_option("--out", out, "Output CSV")->required();

  auto* experiment_cmd = app.add_subcommand("experiment", "Train, evaluate and report over seeds and variants");
  experiment_cmd->add_option("--config", config, "Experiment config JSON")->required();
  experiment_cmd->add_option("--out", out, "Report directory")->required();

  auto* sweep_cmd = app.add_subcommand("sweep-lambda", "Validation MAE and edge counts across lambda");
  sweep_cmd->add_option("--config", config, "Experiment config JSON")->required();
  sweep_cmd->add_option("--values", values, "start:stop:step or comma list")->capture_default_str();
  sweep_cmd->add_option("--out", out, "Report directory")->default_val("lambda_sweep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*synth_cmd) return cmd_synth(spec, seed, out);
    if (*train_cmd) return cmd_train(config, data_dir, out, ablate);
    if (*forecast_cmd) return cmd_forecast(ckpt, data_dir, at, out);
    if (*evaluate_cmd) return cmd_evaluate(ckpt, data_dir, split, out);
    if (*experiment_cmd) return cmd_experiment(config, out);
    if (*sweep_cmd) return cmd_sweep(config, values, out);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
