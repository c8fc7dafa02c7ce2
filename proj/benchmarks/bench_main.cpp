#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "stablesqf/forecaster.hpp"
#include "stablesqf/metrics.hpp"
#include "stablesqf/splineqf.hpp"
#include "stablesqf/training.hpp"

using namespace stablesqf;

namespace {

SQFConfig bench_model(std::size_t width) {
  SQFConfig c;
  c.lookback = 24;
  c.horizon = 6;
  c.n_blocks = 2;
  c.hidden_width = width;
  return c;
}

std::vector<TrainingSample> random_batch(std::size_t n, const SQFConfig& cfg) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  std::vector<TrainingSample> batch(n);
  for (auto& s : batch) {
    for (auto* w : {&s.lookback, &s.lagged_lookback}) {
      w->resize(cfg.lookback);
      for (auto& v : *w) v = nd(rng);
    }
    for (auto* w : {&s.targets, &s.lagged_targets}) {
      w->resize(cfg.horizon);
      for (auto& v : *w) v = nd(rng);
    }
  }
  return batch;
}

}  // namespace

static void BM_SplineEvalGrid(benchmark::State& state) {
  const auto knots = make_default_knots();
  const SplineQF s(knots, 0.3, std::vector<double>(knots->size(), 1.0));
  const auto grid = QuantileGrid::midpoints(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eval_grid(s, grid.levels()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SplineEvalGrid)->Arg(100)->Arg(1000);

static void BM_CrpsDiscrete(benchmark::State& state) {
  const auto grid = QuantileGrid::midpoints(100);
  std::vector<double> q(grid.levels().begin(), grid.levels().end());
  for (auto _ : state) benchmark::DoNotOptimize(crps_discrete(q, 0.42, grid));
}
BENCHMARK(BM_CrpsDiscrete);

static void BM_Wasserstein(benchmark::State& state) {
  const auto grid = QuantileGrid::midpoints(100);
  std::vector<double> a(grid.levels().begin(), grid.levels().end()), b = a;
  for (auto& v : b) v *= 1.1;
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein_discrete(a, b, grid, 1.0, {WeightKind::Tail}));
}
BENCHMARK(BM_Wasserstein);

static void BM_ForwardBatch(benchmark::State& state) {
  const auto cfg = bench_model(static_cast<std::size_t>(state.range(0)));
  const SQFModel m(cfg, 1);
  const nn::Matrix x = nn::Matrix::Random(static_cast<Eigen::Index>(cfg.lookback), 256);
  for (auto _ : state) benchmark::DoNotOptimize(m.forward(x).outputs.data());
}
BENCHMARK(BM_ForwardBatch)->Arg(64)->Arg(256);

static void BM_ForwardBackward(benchmark::State& state) {
  const auto cfg = bench_model(static_cast<std::size_t>(state.range(0)));
  const SQFModel m(cfg, 1);
  const nn::Matrix x = nn::Matrix::Random(static_cast<Eigen::Index>(cfg.lookback), 256);
  std::vector<double> grads(m.params().size());
  for (auto _ : state) {
    const auto pass = m.forward(x);
    m.backward(pass, nn::Matrix::Ones(pass.outputs.rows(), pass.outputs.cols()), grads);
    benchmark::DoNotOptimize(grads.data());
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(256);

static void BM_CompositeLoss(benchmark::State& state) {
  const auto cfg = bench_model(64);
  const SQFModel m(cfg, 1);
  TrainConfig tc;
  tc.lambda = 0.5;
  const CompositeLoss loss(cfg, tc);
  const auto batch = random_batch(static_cast<std::size_t>(state.range(0)), cfg);
  std::vector<double> grad;
  for (auto _ : state) benchmark::DoNotOptimize(loss(m, batch, &grad).total);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CompositeLoss)->Arg(128)->Arg(512);

BENCHMARK_MAIN();
