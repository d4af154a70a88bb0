#include "highair/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "highair/errors.hpp"

namespace highair::eval {
namespace {

using nlohmann::json;

void check_aligned(std::span<const double> preds, std::span<const double> targets, const char* what) {
  if (preds.empty()) throw ValidationError(std::string(what) + ": empty evaluation set");
  if (preds.size() != targets.size()) {
    throw ValidationError(std::string(what) + ": " + std::to_string(preds.size()) + " predictions vs " +
                          std::to_string(targets.size()) + " targets");
  }
}

std::string method_name(const model::Ablation& ablation) {
  return ablation.any() ? "highair-" + ablation.label() : "highair";
}

HorizonMetrics mean_over_seeds(std::span<const HorizonMetrics> runs) {
  HorizonMetrics out = runs.front();
  const auto n = static_cast<double>(runs.size());
  auto average = [&](auto member) {
    auto& dst = out.*member;
    for (std::size_t i = 0; i < dst.size(); ++i) {
      double sum = 0.0;
      for (const auto& r : runs) sum += (r.*member)[i];
      dst[i] = sum / n;
    }
  };
  average(&HorizonMetrics::mae);
  average(&HorizonMetrics::rmse);
  for (std::size_t c = 0; c < out.cities.size(); ++c) {
    for (std::size_t h = 0; h < out.horizons.size(); ++h) {
      double sm = 0.0, sr = 0.0;
      for (const auto& r : runs) {
        sm += r.city_mae[c][h];
        sr += r.city_rmse[c][h];
      }
      out.city_mae[c][h] = sm / n;
      out.city_rmse[c][h] = sr / n;
    }
  }
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_metric(double value) { return fmt("%.6f", value); }

// ---- metrics ---------------------------------------------------------------

double mae(std::span<const double> preds, std::span<const double> targets) {
  check_aligned(preds, targets, "mae");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += std::abs(preds[i] - targets[i]);
  return sum / static_cast<double>(preds.size());
}

double rmse(std::span<const double> preds, std::span<const double> targets) {
  check_aligned(preds, targets, "rmse");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += (preds[i] - targets[i]) * (preds[i] - targets[i]);
  return std::sqrt(sum / static_cast<double>(preds.size()));
}

HorizonSlice slice_horizon(std::span<const model::ForecastResult> preds, std::span<const data::SampleWindow> windows,
                           std::size_t k, const std::vector<bool>& station_mask) {
  if (preds.size() != windows.size()) throw ValidationError("metrics: predictions and windows differ in count");
  HorizonSlice slice;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (k == 0 || k > windows[i].tau_out) {
      throw ValidationError("metrics: horizon " + std::to_string(k) + " outside 1.." +
                            std::to_string(windows[i].tau_out));
    }
    for (std::size_t s = 0; s < station_mask.size(); ++s) {
      if (!station_mask[s]) continue;
      slice.preds.push_back(preds[i].aqi.at(s).at(k - 1));
      slice.targets.push_back(windows[i].aqi_target.at(s).at(k - 1));
    }
  }
  return slice;
}

double mae(std::span<const model::ForecastResult> preds, std::span<const data::SampleWindow> windows, std::size_t k,
           const std::vector<bool>& station_mask) {
  const auto slice = slice_horizon(preds, windows, k, station_mask);
  return mae(slice.preds, slice.targets);
}

double rmse(std::span<const model::ForecastResult> preds, std::span<const data::SampleWindow> windows, std::size_t k,
            const std::vector<bool>& station_mask) {
  const auto slice = slice_horizon(preds, windows, k, station_mask);
  return rmse(slice.preds, slice.targets);
}

double HorizonMetrics::mean_mae() const {
  double sum = 0.0;
  for (double v : mae) sum += v;
  return mae.empty() ? 0.0 : sum / static_cast<double>(mae.size());
}

std::vector<std::size_t> report_horizons(std::size_t tau_out) {
  std::vector<std::size_t> out;
  for (std::size_t h : model::kLogHorizons)
    if (h <= tau_out) out.push_back(h);
  return out;
}

HorizonMetrics compute_metrics(const data::Dataset& dataset, std::span<const model::ForecastResult> preds,
                               std::span<const data::SampleWindow> windows, const std::vector<bool>& station_mask,
                               std::span<const std::size_t> horizons) {
  HorizonMetrics m;
  m.horizons.assign(horizons.begin(), horizons.end());
  for (std::size_t k : horizons) {
    const auto slice = slice_horizon(preds, windows, k, station_mask);
    m.mae.push_back(mae(slice.preds, slice.targets));
    m.rmse.push_back(rmse(slice.preds, slice.targets));
    m.samples = slice.preds.size();
  }
  for (const auto& city : dataset.cities) {
    std::vector<bool> mask(station_mask.size(), false);
    bool any = false;
    for (std::size_t s : city.stations) {
      mask[s] = station_mask[s];
      any = any || mask[s];
    }
    if (!any) continue;
    m.cities.push_back(city.city_id);
    std::vector<double> cm, cr;
    for (std::size_t k : horizons) {
      const auto slice = slice_horizon(preds, windows, k, mask);
      cm.push_back(mae(slice.preds, slice.targets));
      cr.push_back(rmse(slice.preds, slice.targets));
    }
    m.city_mae.push_back(std::move(cm));
    m.city_rmse.push_back(std::move(cr));
  }
  return m;
}

// ---- historical average ----------------------------------------------------

std::optional<double> ha_value(std::span<const double> series, std::size_t history_end, std::size_t target,
                               std::size_t period) {
  if (period == 0) throw ValidationError("ha: period must be positive");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t back = period; back <= target; back += period) {
    const std::size_t idx = target - back;
    if (idx > history_end || idx >= series.size()) continue;
    sum += series[idx];
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

std::size_t training_history_end(std::span<const data::SampleWindow> train) {
  if (train.empty()) throw DataError("ha: empty training split");
  std::size_t end = 0;
  for (const auto& w : train) end = std::max(end, w.last_target_slot());
  return end;
}

std::vector<model::ForecastResult> ha_baseline(const data::TimeSeriesFrame& frame,
                                               std::span<const data::SampleWindow> windows, std::size_t history_end,
                                               std::size_t period) {
  const std::size_t S = frame.aqi.size();
  std::vector<double> fallback(S, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    const std::size_t n = std::min(history_end + 1, frame.aqi[s].size());
    if (n == 0) throw DataError("ha: empty training history");
    double sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) sum += frame.aqi[s][t];
    fallback[s] = sum / static_cast<double>(n);
  }
  std::size_t fallbacks = 0;
  std::vector<model::ForecastResult> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    model::ForecastResult r;
    r.window_t = w.t;
    r.aqi.assign(S, std::vector<double>(w.tau_out));
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t k = 1; k <= w.tau_out; ++k) {
        const auto v = ha_value(frame.aqi[s], history_end, w.t + k, period);
        if (!v) ++fallbacks;
        r.aqi[s][k - 1] = v.value_or(fallback[s]);
      }
    }
    out.push_back(std::move(r));
  }
  if (fallbacks > 0) {
    warn("ha: " + std::to_string(fallbacks) + " forecasts had no same-phase history; used the training mean");
  }
  return out;
}

// ---- experiment config -----------------------------------------------------

data::Dataset DataSource::load() const {
  if (directory) {
    data::Dataset ds = data::ingest(*directory);
    data::interpolate_missing(ds.frame);
    return ds;
  }
  if (synth) return synth::to_dataset(synth::generate(*synth, synth_seed));
  throw ValidationError("experiment config needs either data_dir or synth");
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::filesystem::path& base) {
  static const std::set<std::string> known = {"train", "data_dir", "synth", "seeds", "include_ha", "variants"};
  if (!j.is_object()) throw ValidationError("experiment config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ValidationError("unknown experiment config key '" + key + "'");
  ExperimentConfig c;
  try {
    if (j.contains("train")) c.train = model::TrainConfig::from_json(j.at("train"));
    if (j.contains("data_dir")) {
      std::filesystem::path dir = j.at("data_dir").get<std::string>();
      c.data.directory = dir.is_relative() && !base.empty() ? base / dir : dir;
    }
    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      c.data.synth = synth::SynthSpec::from_json(s.at("spec"));
      c.data.synth_seed = s.value("seed", std::uint64_t{0});
    }
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("include_ha")) c.include_ha = j.at("include_ha").get<bool>();
    if (j.contains("variants")) c.variants = j.at("variants").get<std::vector<std::vector<std::string>>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("experiment config: ") + e.what());
  }
  if (c.data.directory && c.data.synth) throw ValidationError("experiment config: give data_dir or synth, not both");
  if (!c.data.directory && !c.data.synth) throw ValidationError("experiment config: data_dir or synth is required");
  if (c.seeds.empty()) throw ValidationError("experiment config: seeds must not be empty");
  for (const auto& v : c.variants) model::Ablation::parse(v);
  return c;
}

json ExperimentConfig::to_json() const {
  json j = {{"train", train.to_json()}, {"seeds", seeds}, {"include_ha", include_ha}, {"variants", variants}};
  if (data.directory) j["data_dir"] = data.directory->generic_string();
  if (data.synth) j["synth"] = {{"spec", data.synth->to_json()}, {"seed", data.synth_seed}};
  return j;
}

// ---- experiment ------------------------------------------------------------

const MethodResult& ExperimentReport::method(const std::string& name) const {
  for (const auto& m : methods)
    if (m.method == name) return m;
  throw std::out_of_range("no method '" + name + "' in report");
}

ExperimentReport run_experiment(const ExperimentConfig& config, const data::Dataset& dataset,
                                const ProgressFn& progress) {
  auto say = [&](const std::string& msg) {
    if (progress) progress(msg);
  };
  ExperimentReport report;
  report.config = config.to_json();
  report.horizons = report_horizons(config.train.tau_out);

  const model::PreparedData prepared = model::prepare(config.train, dataset);
  const auto& test = prepared.splits.test;
  if (test.empty()) throw DataError("experiment: empty test split");
  say("windows: train " + std::to_string(prepared.splits.train.size()) + ", val " +
      std::to_string(prepared.splits.val.size()) + ", test " + std::to_string(test.size()));

  for (const auto& flags : config.variants) {
    model::TrainConfig cfg = config.train;
    cfg.ablation = model::Ablation::parse(flags);
    MethodResult result;
    result.method = method_name(cfg.ablation);
    for (std::uint64_t seed : config.seeds) {
      cfg.seed = seed;
      say("training " + result.method + " seed " + std::to_string(seed));
      model::TrainResult trained = model::train(cfg, prepared);
      const auto preds = model::predict(trained.params, prepared.layout, prepared.norm, test, cfg.batch_size);
      result.seeds.push_back(seed);
      result.per_seed.push_back(compute_metrics(dataset, preds, test, prepared.eval_station, report.horizons));
      result.logs.push_back(std::move(trained.log));
      say(result.method + " seed " + std::to_string(seed) + " test mean MAE " +
          format_metric(result.per_seed.back().mean_mae()));
    }
    result.mean = mean_over_seeds(result.per_seed);
    report.methods.push_back(std::move(result));
  }

  if (config.include_ha) {
    const std::size_t history_end = training_history_end(prepared.splits.train);
    const auto preds = ha_baseline(dataset.frame, test, history_end);
    MethodResult ha;
    ha.method = "ha";
    const HorizonMetrics m = compute_metrics(dataset, preds, test, prepared.eval_station, report.horizons);
    for (std::uint64_t seed : config.seeds) {
      ha.seeds.push_back(seed);
      ha.per_seed.push_back(m);
      ha.logs.emplace_back();
    }
    ha.mean = mean_over_seeds(ha.per_seed);
    say("ha test mean MAE " + format_metric(ha.mean.mean_mae()));
    report.methods.push_back(std::move(ha));
  }
  return report;
}

void write_metrics_csv(std::ostream& out, const ExperimentReport& report) {
  out << "method,seed,horizon,mae,rmse,samples\n";
  for (const auto& m : report.methods) {
    auto rows = [&](const std::string& seed, const HorizonMetrics& h) {
      for (std::size_t i = 0; i < h.horizons.size(); ++i) {
        out << m.method << ',' << seed << ',' << h.horizons[i] << ',' << format_metric(h.mae[i]) << ','
            << format_metric(h.rmse[i]) << ',' << h.samples << '\n';
      }
    };
    for (std::size_t s = 0; s < m.seeds.size(); ++s) rows(std::to_string(m.seeds[s]), m.per_seed[s]);
    rows("mean", m.mean);
  }
}

void write_city_csv(std::ostream& out, const ExperimentReport& report) {
  out << "method,seed,city,horizon,mae,rmse\n";
  for (const auto& m : report.methods) {
    auto rows = [&](const std::string& seed, const HorizonMetrics& h) {
      for (std::size_t c = 0; c < h.cities.size(); ++c) {
        for (std::size_t i = 0; i < h.horizons.size(); ++i) {
          out << m.method << ',' << seed << ',' << h.cities[c] << ',' << h.horizons[i] << ','
              << format_metric(h.city_mae[c][i]) << ',' << format_metric(h.city_rmse[c][i]) << '\n';
        }
      }
    };
    for (std::size_t s = 0; s < m.seeds.size(); ++s) rows(std::to_string(m.seeds[s]), m.per_seed[s]);
    rows("mean", m.mean);
  }
}

void write_report(const ExperimentReport& report, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  {
    auto out = open_out(directory / "metrics.csv");
    write_metrics_csv(out, report);
  }
  {
    auto out = open_out(directory / "per_city.csv");
    write_city_csv(out, report);
  }
  {
    auto out = open_out(directory / "config.json");
    out << report.config.dump(2) << '\n';
  }
  std::vector<ChartSeries> series;
  for (const auto& m : report.methods) {
    ChartSeries s{m.method, {}, m.mean.mae};
    for (std::size_t h : m.mean.horizons) s.x.push_back(static_cast<double>(h));
    series.push_back(std::move(s));
    for (std::size_t i = 0; i < m.logs.size(); ++i) {
      if (m.logs[i].empty()) continue;
      auto out = open_out(directory / ("train_log_" + m.method + "_seed" + std::to_string(m.seeds[i]) + ".csv"));
      model::write_train_log(out, m.logs[i]);
    }
  }
  auto out = open_out(directory / "mae_by_horizon.svg");
  out << render_line_chart("Test MAE by horizon", "horizon (h)", "MAE", series);
}

// ---- lambda sweep ----------------------------------------------------------

std::vector<double> parse_lambda_values(const std::string& text) {
  std::vector<double> values;
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ValidationError("bad lambda value '" + s + "'");
    }
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw ValidationError("lambda range must be start:stop:step");
    const double a = number(parts[0]), b = number(parts[1]), step = number(parts[2]);
    if (!(step > 0.0) || b < a) throw ValidationError("lambda range needs step > 0 and stop >= start");
    const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) values.push_back(std::round((a + static_cast<double>(i) * step) * 1e9) / 1e9);
  } else {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) values.push_back(number(p));
  }
  if (values.empty()) throw ValidationError("no lambda values");
  for (double v : values)
    if (!(v >= 1.0)) throw ValidationError("lambda values must be >= 1");
  return values;
}

LambdaRow lambda_edges(const data::Dataset& dataset, double lambda) {
  LambdaRow row;
  row.lambda = lambda;
  std::vector<graph::GeoPoint> city_points;
  for (const auto& city : dataset.cities) {
    city_points.push_back(city.location);
    std::vector<graph::GeoPoint> pts;
    for (std::size_t s : city.stations) pts.push_back(dataset.stations[s].location);
    row.station_edges.push_back(graph::build_level_graph(pts, lambda, graph::Level::kStation).edges.size());
  }
  row.city_edges = graph::build_level_graph(city_points, lambda, graph::Level::kCity).edges.size();
  return row;
}

LambdaSweep lambda_sweep(const ExperimentConfig& config, const data::Dataset& dataset, std::span<const double> values,
                         const ProgressFn& progress) {
  LambdaSweep sweep;
  for (const auto& c : dataset.cities) sweep.cities.push_back(c.city_id);
  for (double lambda : values) {
    LambdaRow row = lambda_edges(dataset, lambda);
    model::TrainConfig cfg = config.train;
    cfg.lambda = lambda;
    const model::PreparedData prepared = model::prepare(cfg, dataset);
    if (prepared.splits.val.empty()) throw DataError("lambda sweep: empty validation split");
    double total = 0.0;
    for (std::uint64_t seed : config.seeds) {
      cfg.seed = seed;
      const auto trained = model::train(cfg, prepared);
      const auto preds = model::predict(trained.params, prepared.layout, prepared.norm, prepared.splits.val, cfg.batch_size);
      const auto per_h = model::horizon_mae(preds, prepared.splits.val, prepared.eval_station);
      double sum = 0.0;
      for (double v : per_h) sum += v;
      total += sum / static_cast<double>(per_h.size());
    }
    row.val_mae = total / static_cast<double>(config.seeds.size());
    if (progress) progress("lambda " + fmt("%.2f", lambda) + " val MAE " + format_metric(row.val_mae));
    sweep.rows.push_back(std::move(row));
  }
  return sweep;
}

void write_lambda_csv(std::ostream& out, const LambdaSweep& sweep) {
  out << "lambda,val_mae,city_edges";
  for (const auto& c : sweep.cities) out << ",station_edges_" << c;
  out << '\n';
  for (const auto& r : sweep.rows) {
    out << fmt("%.2f", r.lambda) << ',' << format_metric(r.val_mae) << ',' << r.city_edges;
    for (std::size_t e : r.station_edges) out << ',' << e;
    out << '\n';
  }
}

void write_lambda_report(const LambdaSweep& sweep, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  {
    auto out = open_out(directory / "lambda_sweep.csv");
    write_lambda_csv(out, sweep);
  }
  ChartSeries s{"validation MAE", {}, {}};
  for (const auto& r : sweep.rows) {
    s.x.push_back(r.lambda);
    s.y.push_back(r.val_mae);
  }
  auto out = open_out(directory / "lambda_sweep.svg");
  out << render_line_chart("Validation MAE by lambda", "lambda", "MAE", std::span<const ChartSeries>(&s, 1));
}

// ---- charts ----------------------------------------------------------------

std::string render_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                              std::span<const ChartSeries> series) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};
  constexpr double W = 640, H = 400, L = 70, R = 170, T = 40, B = 50;
  double x0 = 0, x1 = 1, y1 = 1;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (first) {
        x0 = x1 = s.x[i];
        first = false;
      }
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (x1 <= x0) x1 = x0 + 1.0;
  y1 *= 1.1;
  const double pw = W - L - R, ph = H - T - B;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return T + ph - y / y1 * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
      << "</text>\n";
  for (int i = 0; i <= 5; ++i) {
    const double y = y1 * i / 5.0;
    svg << "<line x1=\"" << L << "\" x2=\"" << L + pw << "\" y1=\"" << fmt("%.2f", py(y)) << "\" y2=\""
        << fmt("%.2f", py(y)) << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << L - 6 << "\" y=\"" << fmt("%.2f", py(y) + 4) << "\" text-anchor=\"end\">"
        << fmt("%.2f", y) << "</text>\n";
  }
  std::set<double> ticks;
  for (const auto& s : series) ticks.insert(s.x.begin(), s.x.end());
  for (double x : ticks) {
    svg << "<text x=\"" << fmt("%.2f", px(x)) << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">"
        << fmt("%g", x) << "</text>\n";
  }
  svg << "<line x1=\"" << L << "\" x2=\"" << L << "\" y1=\"" << T << "\" y2=\"" << T + ph << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" x2=\"" << L + pw << "\" y1=\"" << T + ph << "\" y2=\"" << T + ph
      << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << xml_escape(x_label)
      << "</text>\n";
  svg << "<text x=\"16\" y=\"" << T + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << T + ph / 2
      << ")\">" << xml_escape(y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % std::size(kColors)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
      svg << (i ? " " : "") << fmt("%.2f", px(s.x[i])) << ',' << fmt("%.2f", py(s.y[i]));
    svg << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
      svg << "<circle cx=\"" << fmt("%.2f", px(s.x[i])) << "\" cy=\"" << fmt("%.2f", py(s.y[i]))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    const double ly = T + 10 + 18.0 * static_cast<double>(k);
    svg << "<line x1=\"" << L + pw + 12 << "\" x2=\"" << L + pw + 32 << "\" y1=\"" << ly << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << L + pw + 38 << "\" y=\"" << ly + 4 << "\">" << xml_escape(s.name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace highair::eval
