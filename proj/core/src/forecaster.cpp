#include "highair/forecaster.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "highair/errors.hpp"

namespace highair::model {
namespace {

using nlohmann::json;

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config key '") + key + "': " + e.what());
  }
}

ModelParams clone_params(const ModelParams& src) {
  ModelParams copy = init_model_params(src.dims, 0);
  copy.set.copy_values_from(src.set);
  return copy;
}

std::vector<const data::SampleWindow*> pointers(std::span<const data::SampleWindow> windows, std::size_t begin,
                                                std::size_t end) {
  std::vector<const data::SampleWindow*> out;
  for (std::size_t i = begin; i < end; ++i) out.push_back(&windows[i]);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

// ---- config ----------------------------------------------------------------

ModelDims TrainConfig::dims() const {
  ModelDims d;
  d.gnn_hidden = gnn_hidden;
  d.lstm_hidden = lstm_hidden;
  d.lu_dim = lu_dim;
  d.ablation = ablation;
  return d;
}

void TrainConfig::validate() const {
  if (tau_in == 0 || tau_out == 0) throw ValidationError("tau_in and tau_out must be positive");
  if (gnn_hidden == 0 || lstm_hidden == 0 || lu_dim == 0) throw ValidationError("hidden sizes must be positive");
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be positive");
  if (!(lambda >= 1.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be >= 1");
  data::split_sizes(100, split);
  ablation.validate();
}

json TrainConfig::to_json() const {
  return {{"tau_in", tau_in},
          {"tau_out", tau_out},
          {"lambda", lambda},
          {"gnn_hidden", gnn_hidden},
          {"lstm_hidden", lstm_hidden},
          {"lu_dim", lu_dim},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"learning_rate", learning_rate},
          {"seed", seed},
          {"split", {split.train, split.val, split.test}},
          {"ablations", ablation.names()},
          {"eval_cities", eval_cities},
          {"loss_on_eval_cities", loss_on_eval_cities}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  static const std::set<std::string> known = {"tau_in",      "tau_out", "lambda",        "gnn_hidden",
                                              "lstm_hidden", "lu_dim",  "batch_size",    "epochs",
                                              "learning_rate", "seed",  "split",         "ablations",
                                              "eval_cities", "loss_on_eval_cities"};
  if (!j.is_object()) throw ValidationError("train config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ValidationError("unknown train config key '" + key + "'");
  }
  TrainConfig c;
  read_key(j, "tau_in", c.tau_in);
  read_key(j, "tau_out", c.tau_out);
  read_key(j, "lambda", c.lambda);
  read_key(j, "gnn_hidden", c.gnn_hidden);
  read_key(j, "lstm_hidden", c.lstm_hidden);
  read_key(j, "lu_dim", c.lu_dim);
  read_key(j, "batch_size", c.batch_size);
  read_key(j, "epochs", c.epochs);
  read_key(j, "learning_rate", c.learning_rate);
  read_key(j, "seed", c.seed);
  read_key(j, "eval_cities", c.eval_cities);
  read_key(j, "loss_on_eval_cities", c.loss_on_eval_cities);
  if (j.contains("split")) {
    std::vector<double> s;
    read_key(j, "split", s);
    if (s.size() != 3) throw ValidationError("split must have three fractions");
    c.split = {s[0], s[1], s[2]};
  }
  if (j.contains("ablations")) {
    std::vector<std::string> flags;
    read_key(j, "ablations", flags);
    c.ablation = Ablation::parse(flags);
  }
  c.validate();
  return c;
}

// ---- parameters and forward ------------------------------------------------

ModelParams init_model_params(const ModelDims& dims, std::uint64_t seed) {
  nn::Rng rng(seed);
  ModelParams p;
  p.dims = dims;
  p.hierarchy = make_hierarchy_params(dims, rng);
  p.encoder = nn::make_lstm(dims.gnn_hidden, dims.lstm_hidden, rng);
  p.decoder = nn::make_lstm(1 + data::kWeatherDim, dims.lstm_hidden, rng);
  p.head = nn::make_fnn({dims.lstm_hidden, 1}, {nn::Activation::kLinear}, rng);
  register_hierarchy_params(p.set, p.hierarchy, dims);
  p.set.add_lstm("encoder_lstm", p.encoder);
  p.set.add_lstm("decoder_lstm", p.decoder);
  p.set.add_fnn("output_head", p.head);
  return p;
}

ad::Tensor forecast_batch(ad::Tape& tape, const ModelParams& params, const BatchInputs& batch) {
  const std::vector<ad::Tensor> sequence = encode_window(tape, params.hierarchy, params.dims, batch);
  const std::size_t rows = batch.batch * batch.num_stations;
  nn::LstmState state = nn::lstm_unroll(tape, params.encoder, sequence, nn::lstm_zero_state(params.encoder, rows));
  ad::Tensor previous = batch.last_aqi;
  std::vector<ad::Tensor> outputs;
  for (const auto& weather : batch.future_weather) {
    state = nn::lstm_step(tape, params.decoder, ad::concat(tape, {previous, weather}, 1), state);
    previous = nn::fnn_forward(tape, params.head, state.h);
    outputs.push_back(previous);
  }
  return ad::concat(tape, std::span<const ad::Tensor>(outputs), 1);
}

ad::Tensor loss(ad::Tape& tape, const ad::Tensor& preds, const ad::Tensor& targets, std::span<const double> row_mask) {
  if (preds.shape() != targets.shape() || preds.ndim() != 2) {
    throw ShapeError("loss: preds " + ad::shape_to_string(preds.shape()) + " vs targets " +
                     ad::shape_to_string(targets.shape()));
  }
  const std::size_t rows = preds.rows(), horizons = preds.cols();
  ad::Tensor diff = ad::sub(tape, preds, targets);
  double counted = static_cast<double>(rows);
  if (!row_mask.empty()) {
    if (row_mask.size() != rows) {
      throw ShapeError("loss: mask of " + std::to_string(row_mask.size()) + " rows for preds " +
                       ad::shape_to_string(preds.shape()));
    }
    std::vector<double> m(rows * horizons);
    for (std::size_t r = 0; r < rows; ++r) std::fill_n(m.begin() + r * horizons, horizons, row_mask[r]);
    diff = ad::mul(tape, diff, ad::Tensor::from({rows, horizons}, std::move(m)));
    counted = std::accumulate(row_mask.begin(), row_mask.end(), 0.0);
    if (counted <= 0.0) throw ValidationError("loss: mask selects no rows");
  }
  const ad::Tensor sq = ad::sum_all(tape, ad::mul(tape, diff, diff));
  return ad::scale(tape, sq, 1.0 / (static_cast<double>(horizons) * counted));
}

// ---- inference -------------------------------------------------------------

std::vector<ForecastResult> predict(const ModelParams& params, const HierarchyLayout& layout,
                                    const data::NormStats& norm, std::span<const data::SampleWindow> windows,
                                    std::size_t batch_size) {
  if (batch_size == 0) throw ValidationError("predict: batch_size must be positive");
  std::vector<ForecastResult> out;
  out.reserve(windows.size());
  ad::Tape tape(false);
  for (std::size_t begin = 0; begin < windows.size(); begin += batch_size) {
    const std::size_t end = std::min(windows.size(), begin + batch_size);
    for (std::size_t i = begin; i < end; ++i) {
      for (const auto& series : windows[i].weather) {
        if (series.size() < windows[i].tau_in + windows[i].tau_out) {
          throw DataError("forecast: window t=" + std::to_string(windows[i].t) + " lacks future weather");
        }
      }
    }
    const auto ptrs = pointers(windows, begin, end);
    const BatchInputs batch = make_batch(layout, norm, params.dims, ptrs);
    const ad::Tensor pred = forecast_batch(tape, params, batch);
    const std::size_t S = layout.num_stations, K = batch.tau_out();
    for (std::size_t b = 0; b < ptrs.size(); ++b) {
      ForecastResult r;
      r.window_t = ptrs[b]->t;
      r.aqi.assign(S, std::vector<double>(K));
      for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t k = 0; k < K; ++k) {
          const double v = norm.denormalize_aqi(pred.at(b * S + s, k));
          if (!std::isfinite(v)) {
            throw NumericalError("non-finite forecast for window t=" + std::to_string(r.window_t) + ", station " +
                                 std::to_string(s));
          }
          r.aqi[s][k] = v;
        }
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

ForecastResult forecast(const ModelParams& params, const HierarchyLayout& layout, const data::NormStats& norm,
                        const data::SampleWindow& window) {
  return predict(params, layout, norm, std::span<const data::SampleWindow>(&window, 1), 1).front();
}

// ---- training --------------------------------------------------------------

std::vector<bool> eval_station_mask(const data::Dataset& dataset, std::span<const std::string> eval_cities) {
  std::vector<bool> mask(dataset.stations.size(), eval_cities.empty());
  for (const auto& id : eval_cities) {
    const std::size_t c = dataset.city_index(id);
    for (std::size_t s : dataset.cities[c].stations) mask[s] = true;
  }
  return mask;
}

PreparedData prepare(const TrainConfig& config, const data::Dataset& dataset) {
  config.validate();
  PreparedData p;
  p.splits = data::split_chronological(data::make_windows(dataset.frame, config.tau_in, config.tau_out), config.split);
  p.norm = data::fit_norm(p.splits.train, dataset.stations);
  p.layout = HierarchyLayout::build(dataset, config.lambda, p.norm);
  p.eval_station = eval_station_mask(dataset, config.eval_cities);
  return p;
}

PreparedData prepare(const TrainConfig& config, const data::Dataset& dataset, const data::NormStats& norm) {
  config.validate();
  PreparedData p;
  p.splits = data::split_chronological(data::make_windows(dataset.frame, config.tau_in, config.tau_out), config.split);
  p.norm = norm;
  p.layout = HierarchyLayout::build(dataset, config.lambda, p.norm);
  p.eval_station = eval_station_mask(dataset, config.eval_cities);
  return p;
}

std::vector<double> horizon_mae(std::span<const ForecastResult> preds, std::span<const data::SampleWindow> windows,
                                const std::vector<bool>& station_mask) {
  if (preds.size() != windows.size() || preds.empty()) throw ValidationError("horizon_mae: empty or misaligned input");
  const std::size_t K = windows[0].tau_out;
  std::vector<double> sum(K, 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t s = 0; s < station_mask.size(); ++s) {
      if (!station_mask[s]) continue;
      for (std::size_t k = 0; k < K; ++k) sum[k] += std::abs(preds[i].aqi[s][k] - windows[i].aqi_target[s][k]);
      if (i == 0) ++count;
    }
  }
  if (count == 0) throw ValidationError("horizon_mae: no stations selected");
  for (double& v : sum) v /= static_cast<double>(count * preds.size());
  return sum;
}

TrainResult train(const TrainConfig& config, const PreparedData& prepared) {
  config.validate();
  const auto& train_windows = prepared.splits.train;
  if (train_windows.empty()) throw DataError("train: empty training split");
  if (train_windows.front().tau_in != config.tau_in || train_windows.front().tau_out != config.tau_out) {
    throw ValidationError("train: prepared windows do not match tau_in/tau_out");
  }

  TrainResult result;
  result.params = init_model_params(config.dims(), config.seed);
  ModelParams& params = result.params;
  ModelParams best = clone_params(params);
  double best_score = std::numeric_limits<double>::infinity();

  nn::Adam adam({config.learning_rate, 0.9, 0.999, 1e-8});
  std::mt19937_64 shuffle_rng(config.seed ^ 0x5eedULL);
  std::vector<std::size_t> order(train_windows.size());
  std::iota(order.begin(), order.end(), 0);

  const std::size_t S = prepared.layout.num_stations;
  std::vector<double> station_weight(S, 1.0);
  if (config.loss_on_eval_cities) {
    for (std::size_t s = 0; s < S; ++s) station_weight[s] = prepared.eval_station[s] ? 1.0 : 0.0;
  }

  ad::Tape tape;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::vector<const data::SampleWindow*> ptrs;
      for (std::size_t i = begin; i < end; ++i) ptrs.push_back(&train_windows[order[i]]);
      const BatchInputs batch = make_batch(prepared.layout, prepared.norm, params.dims, ptrs);
      std::vector<double> mask;
      if (config.loss_on_eval_cities) {
        for (std::size_t b = 0; b < ptrs.size(); ++b) mask.insert(mask.end(), station_weight.begin(), station_weight.end());
      }
      tape.reset();
      const ad::Tensor l = loss(tape, forecast_batch(tape, params, batch), batch.targets, mask);
      const double value = l.item();
      if (!std::isfinite(value)) {
        throw NumericalError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batches) + " (first window t=" + std::to_string(ptrs.front()->t) + ")");
      }
      tape.backward(l);
      adam.step(params.set);
      loss_sum += value;
      ++batches;
    }
    tape.reset();

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(batches);
    const auto& val = prepared.splits.val;
    if (!val.empty()) {
      const auto preds = predict(params, prepared.layout, prepared.norm, val, config.batch_size);
      const auto mae = horizon_mae(preds, val, prepared.eval_station);
      for (std::size_t h : kLogHorizons) {
        entry.val_mae.push_back(h <= mae.size() ? std::optional<double>(mae[h - 1]) : std::nullopt);
      }
      entry.val_score = std::accumulate(mae.begin(), mae.end(), 0.0) / static_cast<double>(mae.size());
    } else {
      entry.val_mae.assign(std::size(kLogHorizons), std::nullopt);
      entry.val_score = entry.train_loss;
    }
    entry.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (entry.val_score < best_score) {
      best_score = entry.val_score;
      best.set.copy_values_from(params.set);
      result.best_epoch = epoch;
    }
    result.log.push_back(std::move(entry));
  }
  if (result.best_epoch > 0) params.set.copy_values_from(best.set);
  return result;
}

void write_train_log(std::ostream& out, std::span<const EpochLog> log) {
  out << "epoch,train_loss,val_mae_1h,val_mae_3h,val_mae_6h,val_mae_12h,wall_seconds\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << format_double(e.train_loss);
    for (const auto& v : e.val_mae) out << ',' << (v ? format_double(*v) : "");
    out << ',' << format_double(e.wall_seconds) << '\n';
  }
}

// ---- checkpoints -----------------------------------------------------------

nlohmann::json checkpoint_manifest(const TrainConfig& config, const data::NormStats& norm) {
  const json cfg = config.to_json();
  return {{"model", "highair"},
          {"config", cfg},
          {"config_hash", nn::config_hash(cfg)},
          {"seed", config.seed},
          {"norm", norm.to_json()}};
}

void save_model(const std::filesystem::path& path, const TrainConfig& config, const data::NormStats& norm,
                const ModelParams& params) {
  nn::write_checkpoint(path, checkpoint_manifest(config, norm), params.set);
}

LoadedModel load_model(const std::filesystem::path& path) {
  const nn::Checkpoint ckpt = nn::read_checkpoint(path);
  const json& m = ckpt.manifest;
  if (!m.contains("config") || !m.contains("norm")) throw DataError("checkpoint manifest lacks config or norm");
  LoadedModel loaded;
  loaded.config = TrainConfig::from_json(m.at("config"));
  if (m.contains("config_hash") && m.at("config_hash").get<std::uint64_t>() != nn::config_hash(m.at("config"))) {
    throw DataError("checkpoint config_hash does not match its config");
  }
  loaded.norm = data::NormStats::from_json(m.at("norm"));
  loaded.params = init_model_params(loaded.config.dims(), loaded.config.seed);
  nn::load_into(ckpt, loaded.params.set);
  return loaded;
}

}  // namespace highair::model
