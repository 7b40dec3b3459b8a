#include <benchmark/benchmark.h>

#include "confacq/acquire.hpp"
#include "confacq/rng.hpp"

namespace {

using namespace confacq;

Eigen::MatrixXd random_points(int n, int d, std::uint64_t seed) {
  SplitRng rng(seed);
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

void BM_MmdFull(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto u = random_points(n, 26, 1);
  const auto v = random_points(n / 2, 26, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mmd(u, v, 1.5));
}
BENCHMARK(BM_MmdFull)->Arg(64)->Arg(256)->Arg(512);

// Scoring one candidate against a frozen train set: the inner loop of the
// covariate-balancing strategy.
void BM_ScorerCandidate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto treated = random_points(n / 2, 26, 3);
  const auto control = random_points(n / 2, 26, 4);
  MmdScorer scorer(treated, control, 1.5);
  const Eigen::VectorXd cand = random_points(1, 26, 5).row(0).transpose();
  for (auto _ : state) benchmark::DoNotOptimize(scorer.mmd_with_added(cand, 1));
}
BENCHMARK(BM_ScorerCandidate)->Arg(64)->Arg(256)->Arg(512);

// Equivalent from-scratch recomputation, for the cached-vs-naive gap.
void BM_ScorerCandidateNaive(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto treated = random_points(n / 2, 26, 3);
  const auto control = random_points(n / 2, 26, 4);
  Eigen::MatrixXd with_cand(treated.rows() + 1, treated.cols());
  with_cand.topRows(treated.rows()) = treated;
  with_cand.row(treated.rows()) = random_points(1, 26, 5).row(0);
  for (auto _ : state) benchmark::DoNotOptimize(mmd(with_cand, control, 1.5));
}
BENCHMARK(BM_ScorerCandidateNaive)->Arg(64)->Arg(256)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
