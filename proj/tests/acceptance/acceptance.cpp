// Acceptance suite. Usage: highair_acceptance <AC1..AC9|all>
// Prints one "ACn PASS|FAIL <details>" line per criterion and exits non-zero
// when any selected criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "highair/data.hpp"
#include "highair/errors.hpp"
#include "highair/eval.hpp"
#include "highair/forecaster.hpp"
#include "highair/graph.hpp"
#include "highair/hierarchy.hpp"
#include "highair/synth.hpp"
#include "oracle.hpp"

using namespace highair;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out.precision(precision);
  out << v;
  return out.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "highair_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void progress(const std::string& line) { std::cerr << "  " << line << "\n"; }

// ---- AC1 -------------------------------------------------------------------

Outcome gradient_oracle() {
  const auto start = std::chrono::steady_clock::now();
  const auto dataset = oracle::toy_dataset(2, 2, 60, 5);
  const std::vector<model::Ablation> variants = {
      {}, {.no_city_lstm = true}, {.no_dynamic = true}, {.no_hierarchy = true}};
  std::size_t checked = 0, failures = 0;
  double worst = 0.0;
  std::string where;
  for (const auto& ablation : variants) {
    model::TrainConfig config;
    config.tau_in = 4;
    config.tau_out = 2;
    config.gnn_hidden = 8;
    config.lstm_hidden = 8;
    config.lu_dim = 8;
    config.ablation = ablation;
    const auto prepared = model::prepare(config, dataset);
    const auto params = model::init_model_params(config.dims(), 1);
    std::vector<const data::SampleWindow*> ptrs;
    for (std::size_t i = 0; i < 3; ++i) ptrs.push_back(&prepared.splits.train[i * 5]);
    const auto batch = model::make_batch(prepared.layout, prepared.norm, config.dims(), ptrs);
    const auto check = oracle::check_gradients(
        params.set,
        [&](ad::Tape& tape) { return model::loss(tape, model::forecast_batch(tape, params, batch), batch.targets); },
        1e-5, 1e-4, 1e-8);
    checked += check.checked;
    failures += check.failures;
    if (check.max_rel_error > worst) {
      worst = check.max_rel_error;
      where = ablation.label() + ":" + check.worst;
    }
  }
  const double elapsed = seconds_since(start);
  return {failures == 0 && elapsed < 60.0,
          std::to_string(checked) + " gradient entries, " + std::to_string(failures) + " failures, max rel err " +
              fmt(worst) + " at " + where + ", " + fmt(elapsed, 3) + " s"};
}

// ---- AC2 -------------------------------------------------------------------

Outcome graph_laws() {
  oracle::Rng rng(2024);
  const std::vector<double> lambdas = {1.1, 1.2, 1.5};
  std::map<std::string, std::size_t> violations = {
      {"ws-range", 0}, {"gs-symmetry", 0}, {"antisymmetry", 0}, {"out-degree", 0}, {"monotone", 0}};
  auto random_wind = [&] { return graph::encode_wind(graph::kAllWindDirections[rng() % graph::kAllWindDirections.size()]); };
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng() % 24;
    const double extent = oracle::uniform(rng, 1.0, 500.0);
    std::vector<graph::GeoPoint> pts;
    // Mix of uniform scatter and tight clusters.
    const std::size_t clusters = 1 + rng() % 4;
    std::vector<graph::GeoPoint> centres;
    for (std::size_t c = 0; c < clusters; ++c)
      centres.push_back({oracle::uniform(rng, 0, extent), oracle::uniform(rng, 0, extent)});
    for (std::size_t i = 0; i < n; ++i) {
      if (trial % 2 == 0) {
        pts.push_back({oracle::uniform(rng, 0, extent), oracle::uniform(rng, 0, extent)});
      } else {
        const auto& c = centres[rng() % clusters];
        pts.push_back({c.x_km + oracle::uniform(rng, -0.02, 0.02) * extent,
                       c.y_km + oracle::uniform(rng, -0.02, 0.02) * extent});
      }
    }
    std::set<std::pair<std::size_t, std::size_t>> previous;
    for (double lambda : lambdas) {
      auto t = graph::build_topology(pts, lambda);
      if (t.min_out_degree() < 1) ++violations["out-degree"];
      std::set<std::pair<std::size_t, std::size_t>> edges;
      std::map<std::pair<std::size_t, std::size_t>, const graph::Edge*> by_pair;
      for (const auto& e : t.edges) {
        edges.insert({e.src, e.dst});
        by_pair[{e.src, e.dst}] = &e;
      }
      if (!std::includes(edges.begin(), edges.end(), previous.begin(), previous.end())) ++violations["monotone"];
      previous = edges;

      std::vector<graph::WindVector> winds;
      for (std::size_t i = 0; i < n; ++i) winds.push_back(random_wind());
      graph::refresh_edge_weights(t, winds);
      for (const auto& e : t.edges) {
        if (!(e.ws >= -1.0 && e.ws <= 1.0)) ++violations["ws-range"];
        const auto back = by_pair.find({e.dst, e.src});
        if (back == by_pair.end() || back->second->gs != e.gs) ++violations["gs-symmetry"];
      }

      graph::refresh_edge_weights(t, std::vector<graph::WindVector>(n, random_wind()));
      for (const auto& e : t.edges) {
        const auto back = by_pair.find({e.dst, e.src});
        if (back == by_pair.end() || std::abs(e.ws + back->second->ws) > 1e-12) ++violations["antisymmetry"];
      }
    }
  }
  std::size_t total = 0;
  std::string detail = "1000 point sets x 3 lambdas;";
  for (const auto& [law, count] : violations) {
    total += count;
    detail += " " + law + "=" + std::to_string(count);
  }
  return {total == 0, detail};
}

// ---- AC3 -------------------------------------------------------------------

Outcome straight_line_oracles() {
  constexpr double kTol = 1e-10;
  constexpr int kInstances = 100;
  oracle::Rng rng(3);
  std::map<std::string, double> worst;
  auto record = [&](const std::string& name, double diff) {
    // NaN counts as a failure.
    if (!(diff <= worst[name])) worst[name] = std::isnan(diff) ? std::numeric_limits<double>::infinity() : diff;
  };

  for (int i = 0; i < kInstances; ++i) {
    for (const bool station : {false, true}) {
      nn::Rng init(i);
      const std::size_t nodes = 1 + rng() % 8, d = 1 + rng() % 5, g = 1 + rng() % 6, ed = 1 + rng() % 2;
      const std::size_t ud = station ? 1 + rng() % 6 : 0;
      model::MessagePassParams p{nn::make_fnn({2 * d + ed, g}, {nn::Activation::kTanh}, init),
                                 nn::make_fnn({g + d + ud, g}, {nn::Activation::kTanh}, init)};
      nn::ParamSet set;
      set.add_fnn("m", p.message);
      set.add_fnn("u", p.update);
      oracle::randomize(set, rng, 1.0);
      const auto x = oracle::random_tensor(rng, nodes, d, 2.0);
      const auto edges = oracle::random_edges(rng, nodes, rng() % (nodes * nodes + 1), ed);
      const auto u = oracle::random_tensor(rng, nodes, std::max<std::size_t>(ud, 1));
      const auto um = oracle::from_tensor(u);
      ad::Tape tape;
      const auto got = station ? model::message_pass_station(tape, p, x, edges, u)
                               : model::message_pass_city(tape, p, x, edges);
      const auto want = oracle::message_round(p, oracle::from_tensor(x), edges, station ? &um : nullptr);
      record(station ? "message_pass_station" : "message_pass_city", oracle::max_abs_diff(want, got));
    }

    {
      nn::Rng init(1000 + i);
      const std::size_t rows = 1 + rng() % 6, gdim = 1 + rng() % 6, wdim = data::kWeatherDim, lu_dim = 1 + rng() % 5;
      const bool with_wind = i % 2 == 0;
      const auto lu = nn::make_fnn({gdim, lu_dim}, {nn::Activation::kTanh}, init);
      nn::ParamSet set;
      set.add_fnn("lu", lu);
      oracle::randomize(set, rng, 1.0);
      const auto x = oracle::random_tensor(rng, rows, gdim, 2.0), weather = oracle::random_tensor(rng, rows, wdim);
      const auto wind = oracle::random_tensor(rng, rows, 2);
      const auto wm = oracle::from_tensor(wind);
      ad::Tape tape;
      const auto got = model::lower_update(tape, lu, x, weather, with_wind ? wind : ad::Tensor{});
      const auto want =
          oracle::lower_update(lu, oracle::from_tensor(x), oracle::from_tensor(weather), with_wind ? &wm : nullptr);
      record("lower_update", oracle::max_abs_diff(want, got));
    }

    {
      model::ModelDims dims;
      dims.gnn_hidden = 1 + rng() % 8;
      dims.lstm_hidden = 1 + rng() % 8;
      dims.lu_dim = 1 + rng() % 4;
      dims.ablation.no_city_lstm = i % 3 == 0;
      nn::Rng init(2000 + i);
      const auto p = model::make_hierarchy_params(dims, init);
      nn::ParamSet set;
      model::register_hierarchy_params(set, p, dims);
      oracle::randomize(set, rng, 1.0);
      const std::size_t cities = 1 + rng() % 6, width = dims.lstm_hidden;
      const auto x = oracle::random_tensor(rng, cities, 1, 2.0);
      const auto h = oracle::random_tensor(rng, cities, width), c = oracle::random_tensor(rng, cities, width);
      ad::Tape tape;
      const auto got = model::upper_delivery_step(tape, p, dims, x, {h, c});
      const auto want =
          oracle::upper_delivery(p, dims, oracle::from_tensor(x), {oracle::from_tensor(h), oracle::from_tensor(c)});
      record("upper_delivery_step", std::max(oracle::max_abs_diff(want.h, got.h), oracle::max_abs_diff(want.c, got.c)));
    }

    {
      const std::size_t rows = 1 + rng() % 20, cols = 1 + rng() % 12;
      const auto p = oracle::random_tensor(rng, rows, cols, 3.0), t = oracle::random_tensor(rng, rows, cols, 3.0);
      ad::Tape tape;
      record("loss", std::abs(model::loss(tape, p, t).item() - oracle::loss(oracle::from_tensor(p), oracle::from_tensor(t))));
    }

    {
      std::vector<double> p, t;
      for (std::size_t k = 0, n = 1 + rng() % 200; k < n; ++k) {
        p.push_back(oracle::uniform(rng, 0, 300));
        t.push_back(oracle::uniform(rng, 0, 300));
      }
      record("mae", std::abs(eval::mae(p, t) - oracle::mae(p, t)));
      record("rmse", std::abs(eval::rmse(p, t) - oracle::rmse(p, t)));
    }

    {
      data::TimeSeriesFrame frame;
      const std::size_t S = 1 + rng() % 4, T = 50 + rng() % 400, period = 1 + rng() % 200;
      for (std::size_t t = 0; t < T; ++t) frame.timestamps.push_back(static_cast<data::Hour>(t));
      for (std::size_t s = 0; s < S; ++s) {
        std::vector<double> series;
        for (std::size_t t = 0; t < T; ++t) series.push_back(oracle::uniform(rng, 0, 200));
        frame.aqi.push_back(series);
      }
      const std::size_t tau_in = 1 + rng() % 6, tau_out = 1 + rng() % 6;
      const std::size_t history_end = rng() % (T - tau_out);
      std::vector<data::SampleWindow> windows;
      for (int k = 0; k < 5; ++k) {
        data::SampleWindow w;
        w.tau_in = tau_in;
        w.tau_out = tau_out;
        w.t = tau_in - 1 + rng() % (T - tau_out - tau_in + 1);
        windows.push_back(w);
      }
      const auto previous = set_warning_sink([](const std::string&) {});
      const auto got = eval::ha_baseline(frame, windows, history_end, period);
      set_warning_sink(previous);
      double diff = 0.0;
      for (std::size_t w = 0; w < windows.size(); ++w) {
        for (std::size_t s = 0; s < S; ++s) {
          double mean = 0.0;
          for (std::size_t t = 0; t <= history_end; ++t) mean += frame.aqi[s][t];
          mean /= static_cast<double>(history_end + 1);
          for (std::size_t k = 1; k <= tau_out; ++k) {
            double want = oracle::ha(frame.aqi[s], history_end, windows[w].t + k, period);
            if (std::isnan(want)) want = mean;
            diff = std::max(diff, std::abs(got[w].aqi[s][k - 1] - want));
          }
        }
      }
      record("ha_baseline", diff);
    }
  }

  bool pass = true;
  std::string detail = std::to_string(kInstances) + " instances each, max |diff|:";
  for (const auto& [name, diff] : worst) {
    pass = pass && diff <= kTol;
    detail += " " + name + "=" + fmt(diff, 2);
  }
  return {pass, detail};
}

// ---- AC4 to AC6 ------------------------------------------------------------

struct ExperimentRun {
  eval::ExperimentReport report;
  double seconds = 0.0;
};

ExperimentRun run(const nlohmann::json& j) {
  const auto config = eval::ExperimentConfig::from_json(j);
  const auto dataset = config.data.load();
  const auto start = std::chrono::steady_clock::now();
  auto report = eval::run_experiment(config, dataset, progress);
  return {std::move(report), seconds_since(start)};
}

// Mean test MAE over the given horizons for one seed's metrics.
double mean_over(const eval::HorizonMetrics& m, const std::function<bool(std::size_t)>& keep) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < m.horizons.size(); ++i) {
    if (!keep(m.horizons[i])) continue;
    sum += m.mae[i];
    ++n;
  }
  return sum / static_cast<double>(n);
}

std::string per_seed(const eval::MethodResult& r, const std::function<bool(std::size_t)>& keep) {
  std::string out;
  for (std::size_t i = 0; i < r.per_seed.size(); ++i)
    out += (i ? "," : "") + fmt(mean_over(r.per_seed[i], keep));
  return "[" + out + "]";
}

const nlohmann::json kTrain = {{"tau_in", 12},     {"tau_out", 12}, {"gnn_hidden", 16},
                               {"lstm_hidden", 16}, {"lu_dim", 8},   {"batch_size", 32},
                               {"epochs", 60}};

Outcome synthetic_learnability() {
  const nlohmann::json j = {
      {"train", kTrain},
      {"synth",
       {{"spec", {{"cities", 4}, {"stations_per_city", 3}, {"hours", 2000}, {"wind", "rotating"}, {"noise", 2.0}}},
        {"seed", 11}}},
      {"seeds", {1, 2, 3}},
      {"include_ha", true}};
  const auto r = run(j);
  const auto all = [](std::size_t) { return true; };
  const double model = mean_over(r.report.method("highair").mean, all);
  const double ha = mean_over(r.report.method("ha").mean, all);
  const double gain = 1.0 - model / ha;
  return {gain >= 0.20 && r.seconds < 600.0,
          "highair MAE " + fmt(model) + " per seed " + per_seed(r.report.method("highair"), all) + " vs HA " +
              fmt(ha) + ", improvement " + fmt(100 * gain, 3) + "% (need >= 20%), " + fmt(r.seconds, 4) +
              " s (limit 600)"};
}

Outcome wind_dominated() {
  auto train = kTrain;
  train["learning_rate"] = 0.01;
  const nlohmann::json j = {
      {"train", train},
      {"synth",
       {{"spec",
         {{"cities", 2}, {"stations_per_city", 4}, {"hours", 1600}, {"wind", "rotating"}, {"wind_period", 6},
          {"decay", 0.3}, {"advection", 0.65}, {"noise", 0.5}, {"emission", 5.0}, {"station_pulse_rate", 0.005},
          {"pulse_duration", 8}, {"pulse_magnitude", 20.0}}},
        {"seed", 5}}},
      {"seeds", {1, 2, 3}},
      {"variants", {nlohmann::json::array(), {"dynamic"}}},
      {"include_ha", true}};
  const auto r = run(j);
  const auto all = [](std::size_t) { return true; };
  const double full = mean_over(r.report.method("highair").mean, all);
  const double flat = mean_over(r.report.method("highair-wo-dynamic").mean, all);
  const double excess = flat / full - 1.0;
  return {excess >= 0.05, "full " + fmt(full) + " " + per_seed(r.report.method("highair"), all) + ", w/o-dynamic " +
                              fmt(flat) + " " + per_seed(r.report.method("highair-wo-dynamic"), all) + ", excess " +
                              fmt(100 * excess, 3) + "% (need >= 5%)"};
}

Outcome cross_city_transport() {
  auto train = kTrain;
  train["learning_rate"] = 0.01;
  train["eval_cities"] = {"C01", "C02"};
  const nlohmann::json j = {
      {"train", train},
      {"synth",
       {{"spec",
         {{"cities", 3}, {"stations_per_city", 3}, {"hours", 1600}, {"city_spacing_km", 30.0}, {"wind", "steady-E"},
          {"decay", 0.3}, {"advection", 0.65}, {"noise", 0.5}, {"emission", 5.0}, {"pulse_cities", {0}},
          {"pulse_rate", 0.02}, {"pulse_duration", 8}, {"pulse_magnitude", 40.0}}},
        {"seed", 5}}},
      {"seeds", {1, 2, 3}},
      {"variants", {nlohmann::json::array(), {"hierarchy"}}},
      {"include_ha", true}};
  const auto r = run(j);
  const auto late = [](std::size_t h) { return h >= 3; };
  const double full = mean_over(r.report.method("highair").mean, late);
  const double flat = mean_over(r.report.method("highair-wo-hierarchy").mean, late);
  const double excess = flat / full - 1.0;
  return {excess >= 0.05, "horizons >= 3h downwind: full " + fmt(full) + " " +
                              per_seed(r.report.method("highair"), late) + ", w/o-hierarchy " + fmt(flat) + " " +
                              per_seed(r.report.method("highair-wo-hierarchy"), late) + ", excess " +
                              fmt(100 * excess, 3) + "% (need >= 5%)"};
}

// ---- AC7 -------------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(HIGHAIR_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome reproducible_experiment() {
  const auto dir = scratch("ac7");
  const nlohmann::json j = {
      {"train",
       {{"tau_in", 6}, {"tau_out", 3}, {"gnn_hidden", 8}, {"lstm_hidden", 8}, {"lu_dim", 4}, {"batch_size", 32},
        {"epochs", 3}}},
      {"synth", {{"spec", {{"cities", 3}, {"stations_per_city", 2}, {"hours", 400}}}, {"seed", 7}}},
      {"seeds", {1, 2}},
      {"variants", {nlohmann::json::array(), {"dynamic"}}}};
  std::ofstream(dir / "experiment.json") << j.dump(2);
  const auto cfg = (dir / "experiment.json").string();
  const int a = run_cli("experiment --config " + cfg + " --out " + (dir / "a").string(), dir / "a.log");
  const int b = run_cli("experiment --config " + cfg + " --out " + (dir / "b").string(), dir / "b.log");
  if (a != 0 || b != 0)
    return {false, "cli exit codes " + std::to_string(a) + ", " + std::to_string(b)};
  bool same = true;
  std::string detail;
  for (const char* f : {"metrics.csv", "per_city.csv"}) {
    const auto x = slurp(dir / "a" / f), y = slurp(dir / "b" / f);
    const bool eq = !x.empty() && x == y;
    same = same && eq;
    detail += std::string(f) + (eq ? " identical" : " DIFFERS") + " (" + std::to_string(x.size()) + " bytes); ";
  }
  return {same, detail + "two runs of `highair experiment`"};
}

// ---- AC8 -------------------------------------------------------------------

Outcome data_pipeline() {
  std::vector<std::string> failed;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };
  expect(data::window_count(36, 24, 12) == 1, "window_count(36,24,12)");
  expect(data::window_count(40, 24, 12) == 5, "window_count(40,24,12)");
  expect(data::window_count(30, 24, 12) == 0, "window_count(30,24,12)");

  const auto sizes = data::split_sizes(100, {});
  expect(sizes.train == 70 && sizes.val == 10 && sizes.test == 20, "split_sizes(100)");

  auto interp = [](std::vector<double> series) {
    data::TimeSeriesFrame f;
    for (std::size_t t = 0; t < series.size(); ++t) f.timestamps.push_back(static_cast<data::Hour>(t));
    f.aqi = {std::move(series)};
    data::interpolate_missing(f, 1.0);
    return f.aqi[0];
  };
  const double na = std::numeric_limits<double>::quiet_NaN();
  expect(interp({10, na, 30}) == std::vector<double>{10, 20, 30}, "[10,NA,30]");
  expect(interp({10, 20, 30}) == std::vector<double>{10, 20, 30}, "no missing");
  expect(interp({na, 5, na}) == std::vector<double>{5, 5, 5}, "[NA,5,NA]");

  data::NormStats norm;
  norm.aqi_mean = 50;
  norm.aqi_std = 10;
  expect(norm.normalize_aqi(60) == 1.0, "normalize 60");
  oracle::Rng rng(8);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    norm.aqi_mean = oracle::uniform(rng, 0, 200);
    norm.aqi_std = oracle::uniform(rng, 0.1, 80);
    const double x = oracle::uniform(rng, 0, 500);
    worst = std::max(worst, std::abs(norm.denormalize_aqi(norm.normalize_aqi(x)) - x));
  }
  expect(worst <= 1e-12, "round trip");

  // Statistics come from the training windows only.
  data::TimeSeriesFrame frame;
  const std::size_t T = 60;
  for (std::size_t t = 0; t < T; ++t) frame.timestamps.push_back(static_cast<data::Hour>(t));
  frame.aqi = {std::vector<double>(T)};
  for (std::size_t t = 0; t < T; ++t) frame.aqi[0][t] = t < 40 ? 10.0 + static_cast<double>(t % 2) : 1000.0;
  frame.weather.resize(1);
  for (auto& f : frame.weather[0].fields) f.assign(T, 1.0);
  frame.weather[0].wind.assign(T, 0);
  auto splits = data::split_chronological(data::make_windows(frame, 4, 2), {});
  std::set<std::size_t> covered;
  for (const auto& w : splits.train)
    for (std::size_t t = w.first_slot(); t <= w.last_target_slot(); ++t) covered.insert(t);
  double mean = 0.0;
  for (std::size_t t : covered) mean += frame.aqi[0][t];
  mean /= static_cast<double>(covered.size());
  const std::vector<data::StationRecord> stations(1);
  const auto previous = set_warning_sink([](const std::string&) {});
  const auto fitted = data::fit_norm(splits.train, stations);
  set_warning_sink(previous);
  double whole = 0.0;
  for (double v : frame.aqi[0]) whole += v;
  whole /= static_cast<double>(T);
  expect(std::abs(fitted.aqi_mean - mean) < 1e-12 && fitted.aqi_mean < whole - 100.0, "train-only stats");

  std::string detail = "window counts, 70/10/20 split, interpolation examples, round trip max err " + fmt(worst, 2) +
                       ", train-only stats";
  for (const auto& f : failed) detail += "; FAILED " + f;
  return {failed.empty(), detail};
}

// ---- AC9 -------------------------------------------------------------------

Outcome lambda_sweep() {
  const auto dir = scratch("ac9");
  const nlohmann::json j = {
      {"train",
       {{"tau_in", 6}, {"tau_out", 3}, {"gnn_hidden", 8}, {"lstm_hidden", 8}, {"lu_dim", 4}, {"batch_size", 32},
        {"epochs", 10}}},
      {"synth",
       {{"spec", {{"cities", 4}, {"stations_per_city", 3}, {"hours", 600}, {"layout", "grid"}}}, {"seed", 9}}},
      {"seeds", {1}}};
  const auto config = eval::ExperimentConfig::from_json(j);
  const auto dataset = config.data.load();
  const auto values = eval::parse_lambda_values("1.0:1.5:0.1");
  const auto previous = set_warning_sink([](const std::string& m) { std::cerr << "  warning: " << m << "\n"; });
  const auto sweep = eval::lambda_sweep(config, dataset, values, progress);
  set_warning_sink(previous);
  eval::write_lambda_report(sweep, dir);

  bool monotone = sweep.rows.size() == 6;
  std::string edges, curve;
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    const auto& row = sweep.rows[i];
    std::size_t stations = 0;
    for (auto n : row.station_edges) stations += n;
    edges += (i ? "," : "") + std::to_string(row.city_edges) + "/" + std::to_string(stations);
    curve += (i ? "," : "") + fmt(row.lambda, 2) + ":" + fmt(row.val_mae);
    if (i > 0) {
      const auto& prev = sweep.rows[i - 1];
      monotone = monotone && row.city_edges >= prev.city_edges;
      for (std::size_t c = 0; c < row.station_edges.size(); ++c)
        monotone = monotone && row.station_edges[c] >= prev.station_edges[c];
    }
  }
  const bool rendered = fs::file_size(dir / "lambda_sweep.csv") > 0 &&
                        slurp(dir / "lambda_sweep.svg").find("<svg") != std::string::npos;
  return {monotone && rendered, std::to_string(sweep.rows.size()) + " lambdas, city/station edges [" + edges + "]" +
                                    (monotone ? " non-decreasing" : " NOT monotone") + ", report " +
                                    (rendered ? "rendered" : "MISSING") + ", val MAE [" + curve + "]"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1", gradient_oracle},       {"AC2", graph_laws},        {"AC3", straight_line_oracles},
      {"AC4", synthetic_learnability}, {"AC5", wind_dominated},   {"AC6", cross_city_transport},
      {"AC7", reproducible_experiment}, {"AC8", data_pipeline},   {"AC9", lambda_sweep}};
  const std::string which = argc > 1 ? argv[1] : "all";
  bool any = false, ok = true;
  for (const auto& [name, fn] : criteria) {
    if (which != "all" && which != name) continue;
    any = true;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << name << (o.pass ? " PASS " : " FAIL ") << o.detail << std::endl;
    ok = ok && o.pass;
  }
  if (!any) {
    std::cerr << "usage: " << argv[0] << " <AC1..AC9|all>\n";
    return 2;
  }
  return ok ? 0 : 1;
}
