#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "highair/forecaster.hpp"
#include "highair/graph.hpp"
#include "highair/nn.hpp"
#include "highair/synth.hpp"
#include "highair/tensor.hpp"

using namespace highair;

namespace {

ad::Tensor random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, bool requires_grad = false) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = u(rng);
  return ad::Tensor::from({rows, cols}, std::move(v), requires_grad);
}

struct ForecastFixture {
  model::TrainConfig config;
  model::PreparedData prepared;
  model::ModelParams params;
  model::BatchInputs batch;

  explicit ForecastFixture(std::size_t batch_size) {
    synth::SynthSpec spec;
    spec.hours = 600;
    const auto dataset = synth::to_dataset(synth::generate(spec, 1));
    config.tau_in = 12;
    config.tau_out = 12;
    config.gnn_hidden = 16;
    config.lstm_hidden = 16;
    config.lu_dim = 8;
    prepared = model::prepare(config, dataset);
    params = model::init_model_params(config.dims(), 1);
    std::vector<const data::SampleWindow*> ptrs;
    for (std::size_t i = 0; i < batch_size; ++i) ptrs.push_back(&prepared.splits.train[i]);
    batch = model::make_batch(prepared.layout, prepared.norm, config.dims(), ptrs);
  }
};

}  // namespace

static void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto a = random_matrix(rng, n, n), b = random_matrix(rng, n, n);
  ad::Tape tape(false);
  for (auto _ : state) benchmark::DoNotOptimize(ad::matmul(tape, a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(4)->Range(16, 256);

static void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const auto a = random_matrix(rng, n, n, true), b = random_matrix(rng, n, n, true);
  for (auto _ : state) {
    ad::Tape tape;
    tape.backward(ad::sum_all(tape, ad::matmul(tape, a, b)));
  }
}
BENCHMARK(BM_MatmulBackward)->RangeMultiplier(4)->Range(16, 256);

static void BM_LstmStep(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  nn::Rng init(3);
  const auto params = nn::make_lstm(16, 64, init);
  const auto x = random_matrix(rng, rows, 16);
  const auto s = nn::lstm_zero_state(params, rows);
  ad::Tape tape(false);
  for (auto _ : state) benchmark::DoNotOptimize(nn::lstm_step(tape, params, x, s).h);
}
BENCHMARK(BM_LstmStep)->Arg(12)->Arg(384)->Arg(1536);

static void BM_BuildTopology(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<graph::GeoPoint> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(graph::build_topology(pts, 1.2));
}
BENCHMARK(BM_BuildTopology)->Arg(16)->Arg(128);

static void BM_ForecastBatch(benchmark::State& state) {
  const ForecastFixture f(static_cast<std::size_t>(state.range(0)));
  ad::Tape tape(false);
  for (auto _ : state) benchmark::DoNotOptimize(model::forecast_batch(tape, f.params, f.batch));
}
BENCHMARK(BM_ForecastBatch)->Arg(1)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_TrainStep(benchmark::State& state) {
  const ForecastFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    ad::Tape tape;
    tape.backward(model::loss(tape, model::forecast_batch(tape, f.params, f.batch), f.batch.targets));
    f.params.set.zero_grad();
  }
}
BENCHMARK(BM_TrainStep)->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
