#include <benchmark/benchmark.h>

#include "confacq/estimators.hpp"
#include "confacq/rng.hpp"

namespace {

using namespace confacq;

TrainData synthetic_train(int n, int p, std::uint64_t seed) {
  SplitRng rng(seed);
  TrainData d;
  d.x.resize(n, p);
  d.a.resize(n);
  d.t.resize(n);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) d.x(i, j) = rng.normal();
    d.a[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    d.t[i] = rng.bernoulli(0.5) ? 1 : 0;
    d.y[i] = d.x(i, 0) + 2.0 * d.t[i] + 0.3 * rng.normal();
  }
  return d;
}

void BM_FitDr(benchmark::State& state) {
  const auto train = synthetic_train(static_cast<int>(state.range(0)), 26, 7);
  EstimatorConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(fit_estimator(cfg, train, SplitRng(1)));
}
BENCHMARK(BM_FitDr)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_FitGpMulti(benchmark::State& state) {
  const auto train = synthetic_train(static_cast<int>(state.range(0)), 26, 8);
  EstimatorConfig cfg;
  cfg.kind = EstimatorKind::kGpMulti;
  for (auto _ : state) benchmark::DoNotOptimize(fit_estimator(cfg, train, SplitRng(1)));
}
BENCHMARK(BM_FitGpMulti)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_FitAttributeModel(benchmark::State& state) {
  const auto train = synthetic_train(static_cast<int>(state.range(0)), 26, 9);
  for (auto _ : state) {
    AttributeModel model;
    model.fit(train, SplitRng(2));
    benchmark::DoNotOptimize(model);
  }
}
BENCHMARK(BM_FitAttributeModel)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

}  // namespace
