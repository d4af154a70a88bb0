#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "highair/errors.hpp"
#include "highair/eval.hpp"
#include "oracle.hpp"

using namespace highair;
using namespace highair::eval;

namespace {

ExperimentConfig tiny_experiment() {
  ExperimentConfig c;
  c.train.tau_in = 4;
  c.train.tau_out = 3;
  c.train.gnn_hidden = 4;
  c.train.lstm_hidden = 4;
  c.train.lu_dim = 2;
  c.train.batch_size = 32;
  c.train.epochs = 1;
  synth::SynthSpec spec;
  spec.cities = 2;
  spec.stations_per_city = 2;
  spec.hours = 240;
  c.data.synth = spec;
  c.data.synth_seed = 4;
  c.seeds = {7};
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Metrics, Examples) {
  const std::vector<double> p = {3, -4}, t = {0, 0};
  EXPECT_EQ(mae(p, t), 3.5);
  EXPECT_NEAR(rmse(p, t), 3.5355339059327378, 1e-12);
  EXPECT_THROW(mae(std::vector<double>{}, std::vector<double>{}), ValidationError);
  EXPECT_THROW(mae(p, std::vector<double>{1}), ValidationError);
}

TEST(Metrics, MatchLoopOracleAndOrdering) {
  oracle::Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p, t;
    for (std::size_t i = 0, n = 1 + rng() % 30; i < n; ++i) {
      p.push_back(oracle::uniform(rng, -50, 50));
      t.push_back(oracle::uniform(rng, -50, 50));
    }
    EXPECT_NEAR(mae(p, t), oracle::mae(p, t), 1e-10);
    EXPECT_NEAR(rmse(p, t), oracle::rmse(p, t), 1e-10);
    EXPECT_GE(rmse(p, t) + 1e-12, mae(p, t));
  }
}

TEST(HistoricalAverage, PeriodicSeriesIsExact) {
  std::vector<double> series;
  for (std::size_t t = 0; t < 168 * 4; ++t) series.push_back(std::sin(0.3 * static_cast<double>(t % 168)) * 20 + 50);
  for (std::size_t target = 168; target < series.size(); target += 17) {
    const auto v = ha_value(series, target - 1, target);
    ASSERT_TRUE(v.has_value());
    EXPECT_NEAR(*v, series[target], 1e-12);
  }
  const std::vector<double> flat(400, 12.5);
  EXPECT_EQ(*ha_value(flat, 300, 350), 12.5);
  EXPECT_FALSE(ha_value(flat, 300, 100).has_value());
  EXPECT_THROW(ha_value(flat, 300, 350, 0), ValidationError);
}

TEST(HistoricalAverage, MatchesLoopOracle) {
  oracle::Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> series;
    for (int t = 0; t < 200; ++t) series.push_back(oracle::uniform(rng, 0, 100));
    const std::size_t end = rng() % 200, target = rng() % 200, period = 1 + rng() % 40;
    const auto got = ha_value(series, end, target, period);
    const double want = oracle::ha(series, end, target, period);
    if (std::isnan(want)) {
      EXPECT_FALSE(got.has_value());
    } else {
      ASSERT_TRUE(got.has_value());
      EXPECT_NEAR(*got, want, 1e-10);
    }
  }
}

TEST(HistoricalAverage, FallbackUsesTrainingMeanAndWarnsOnce) {
  data::TimeSeriesFrame frame;
  frame.aqi = {{10, 20, 30, 40, 50, 60, 70, 80}};
  for (int t = 0; t < 8; ++t) frame.timestamps.push_back(t);
  data::SampleWindow w;
  w.t = 4;
  w.tau_in = 2;
  w.tau_out = 3;
  std::vector<std::string> seen;
  const auto previous = set_warning_sink([&](const std::string& m) { seen.push_back(m); });
  const auto preds = ha_baseline(frame, std::vector<data::SampleWindow>{w}, 3, 168);
  set_warning_sink(previous);
  EXPECT_EQ(seen.size(), 1u);
  for (double v : preds[0].aqi[0]) EXPECT_EQ(v, 25.0);

  const auto periodic = ha_baseline(frame, std::vector<data::SampleWindow>{w}, 3, 2);
  EXPECT_EQ(periodic[0].aqi[0][0], 30.0);  // slot 5: slots 3 and 1
  EXPECT_EQ(periodic[0].aqi[0][1], 20.0);  // slot 6: slots 2 and 0 (4 is beyond the history)
}

TEST(Horizons, ReportHorizonsClipToTauOut) {
  EXPECT_EQ(report_horizons(12), (std::vector<std::size_t>{1, 3, 6, 12}));
  EXPECT_EQ(report_horizons(4), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(report_horizons(1), (std::vector<std::size_t>{1}));
}

TEST(ExperimentConfig, JsonParsing) {
  const auto j = nlohmann::json::parse(R"({"train": {"tau_in": 4, "tau_out": 3}, "data_dir": "corpus",
                                           "seeds": [3], "variants": [[], ["dynamic"]], "include_ha": false})");
  const auto c = ExperimentConfig::from_json(j, "/base");
  EXPECT_EQ(*c.data.directory, std::filesystem::path("/base/corpus"));
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3}));
  EXPECT_EQ(c.variants.size(), 2u);
  EXPECT_FALSE(c.include_ha);
  EXPECT_EQ(ExperimentConfig::from_json(c.to_json()).to_json(), c.to_json());
  EXPECT_THROW(ExperimentConfig::from_json({{"train", {}}}), ValidationError);
  EXPECT_THROW(ExperimentConfig::from_json({{"data_dir", "x"}, {"seeds", nlohmann::json::array()}}), ValidationError);
  EXPECT_THROW(ExperimentConfig::from_json({{"data_dir", "x"}, {"extra", 1}}), ValidationError);
  EXPECT_THROW(ExperimentConfig::from_json({{"data_dir", "x"}, {"synth", {{"spec", {}}}}}), ValidationError);
}

TEST(Experiment, ReportShapeAndDeterminism) {
  const auto config = tiny_experiment();
  const auto ds = config.data.load();
  const auto a = run_experiment(config, ds), b = run_experiment(config, ds);
  ASSERT_EQ(a.methods.size(), 2u);
  EXPECT_EQ(a.methods[0].method, "highair");
  EXPECT_EQ(a.methods[1].method, "ha");
  EXPECT_EQ(a.horizons, (std::vector<std::size_t>{1, 3}));
  const auto& m = a.method("highair");
  ASSERT_EQ(m.per_seed.size(), 1u);
  EXPECT_EQ(m.mean.mae, m.per_seed[0].mae);
  EXPECT_EQ(m.mean.cities, (std::vector<std::string>{"C00", "C01"}));
  EXPECT_THROW(a.method("lstm"), std::out_of_range);

  std::ostringstream ma, mb, ca, cb;
  write_metrics_csv(ma, a);
  write_metrics_csv(mb, b);
  write_city_csv(ca, a);
  write_city_csv(cb, b);
  EXPECT_EQ(ma.str(), mb.str());
  EXPECT_EQ(ca.str(), cb.str());
  // header + (1 seed + mean) x 2 horizons x 2 methods
  const std::string text = ma.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 9);

  // The HA row, recomputed from its parts.
  const auto prepared = model::prepare(config.train, ds);
  const auto& test = prepared.splits.test;
  const std::size_t end = training_history_end(prepared.splits.train);
  std::vector<double> p, t;
  for (const auto& w : test)
    for (std::size_t s = 0; s < ds.stations.size(); ++s) {
      p.push_back(oracle::ha(ds.frame.aqi[s], end, w.t + 3, 168));
      t.push_back(w.aqi_target[s][2]);
    }
  EXPECT_NEAR(a.method("ha").mean.mae[1], oracle::mae(p, t), 1e-9);
}

TEST(Experiment, WritesReportFiles) {
  auto config = tiny_experiment();
  config.variants = {{}, {"poi"}};
  const auto report = run_experiment(config, config.data.load());
  EXPECT_EQ(report.methods[1].method, "highair-wo-poi");
  const auto dir = std::filesystem::temp_directory_path() / "highair_test_eval_report";
  std::filesystem::remove_all(dir);
  write_report(report, dir);
  for (const char* f : {"metrics.csv", "per_city.csv", "config.json", "mae_by_horizon.svg",
                        "train_log_highair_seed7.csv", "train_log_highair-wo-poi_seed7.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  EXPECT_NE(slurp(dir / "mae_by_horizon.svg").find("<svg"), std::string::npos);
}

TEST(Lambda, ParseValues) {
  const auto r = parse_lambda_values("1.0:1.5:0.1");
  ASSERT_EQ(r.size(), 6u);
  EXPECT_NEAR(r.back(), 1.5, 1e-12);
  EXPECT_EQ(parse_lambda_values("1.2, 1.4"), (std::vector<double>{1.2, 1.4}));
  EXPECT_EQ(parse_lambda_values("1.3"), (std::vector<double>{1.3}));
  EXPECT_THROW(parse_lambda_values("0.5"), ValidationError);
  EXPECT_THROW(parse_lambda_values("1.5:1.0:0.1"), ValidationError);
  EXPECT_THROW(parse_lambda_values("1.0:1.5"), ValidationError);
  EXPECT_THROW(parse_lambda_values("abc"), ValidationError);
  EXPECT_THROW(parse_lambda_values(""), ValidationError);
}

TEST(Lambda, EdgeCountsMatchBruteForceAndGrow) {
  const auto ds = oracle::toy_dataset(4, 4, 10, 5);
  std::size_t previous_city = 0;
  std::vector<std::size_t> previous(4, 0);
  const auto quiet = set_warning_sink([](const std::string&) {});
  for (double lambda : parse_lambda_values("1.0:1.5:0.1")) {
    const auto row = lambda_edges(ds, lambda);
    for (std::size_t c = 0; c < 4; ++c) {
      std::vector<graph::GeoPoint> pts;
      for (std::size_t s : ds.cities[c].stations) pts.push_back(ds.stations[s].location);
      const double radius = graph::adaptive_radius(pts, lambda);
      std::size_t brute = 0;
      for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t b = 0; b < pts.size(); ++b)
          if (a != b && graph::euclid_distance(pts[a], pts[b]) < radius) ++brute;
      EXPECT_EQ(row.station_edges[c], brute);
      EXPECT_GE(row.station_edges[c], previous[c]);
      previous[c] = row.station_edges[c];
    }
    EXPECT_GE(row.city_edges, previous_city);
    previous_city = row.city_edges;
  }
  set_warning_sink(quiet);
}

TEST(Lambda, SweepSingleRowAndWriters) {
  const auto config = tiny_experiment();
  const std::vector<double> values = {1.2};
  const auto sweep = lambda_sweep(config, config.data.load(), values);
  ASSERT_EQ(sweep.rows.size(), 1u);
  EXPECT_GT(sweep.rows[0].val_mae, 0.0);
  std::ostringstream out;
  write_lambda_csv(out, sweep);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "lambda,val_mae,city_edges,station_edges_C00,station_edges_C01");
  const auto dir = std::filesystem::temp_directory_path() / "highair_test_eval_lambda";
  write_lambda_report(sweep, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "lambda_sweep.csv"));
  EXPECT_NE(slurp(dir / "lambda_sweep.svg").find("</svg>"), std::string::npos);
}

TEST(Charts, FormatAndRender) {
  EXPECT_EQ(format_metric(1.5), "1.500000");
  const std::vector<ChartSeries> s = {{"a", {1, 2, 3}, {4, 5, 6}}, {"b<&>", {1, 2}, {1, 1}}};
  const auto svg = render_line_chart("t", "x", "y", s);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("b&lt;&amp;&gt;"), std::string::npos);
  EXPECT_NO_THROW(render_line_chart("empty", "x", "y", {}));
}
