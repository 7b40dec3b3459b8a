#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "confacq/acquire.hpp"
#include "confacq/errors.hpp"
#include "testutil.hpp"

using namespace confacq;
using testutil::make_sample;

namespace {

Eigen::MatrixXd points(std::vector<std::vector<double>> rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

}  // namespace

TEST_SUITE("acquire") {

TEST_CASE("mmd closed form on singletons at unit bandwidth") {
  const Eigen::MatrixXd u = points({{0.0}});
  const Eigen::MatrixXd v = points({{1.0}});
  const double expected = std::sqrt(2.0 - 2.0 * std::exp(-0.5));
  CHECK(std::abs(mmd(u, v, 1.0) - expected) < 1e-10);
  CHECK(std::abs(expected - 0.8871) < 5e-5);  // headline value
}

TEST_CASE("mmd properties: identical sets, symmetry, nonnegativity, empties") {
  SplitRng rng(17);
  Eigen::MatrixXd u(6, 3), v(4, 3);
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (Eigen::Index j = 0; j < 3; ++j) u(i, j) = rng.normal();
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < 3; ++j) v(i, j) = rng.normal();

  CHECK(mmd(u, u, 0.7) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(mmd(u, v, 0.7) == doctest::Approx(mmd(v, u, 0.7)));
  CHECK(mmd(u, v, 0.7) >= 0.0);
  CHECK_THROWS_AS(mmd(Eigen::MatrixXd(0, 3), v, 0.7), DataError);
  // continuity in bandwidth, loosely: nearby bandwidths give nearby values
  CHECK(std::abs(mmd(u, v, 0.7) - mmd(u, v, 0.7 + 1e-7)) < 1e-5);
}

TEST_CASE("mmd agrees with the brute-force oracle on random sets") {
  SplitRng rng(23);
  for (int rep = 0; rep < 5; ++rep) {
    const int nu = 2 + static_cast<int>(rng.below(6));
    const int nv = 1 + static_cast<int>(rng.below(6));
    Eigen::MatrixXd u(nu, 2), v(nv, 2);
    for (Eigen::Index i = 0; i < u.rows(); ++i)
      for (int j = 0; j < 2; ++j) u(i, j) = rng.uniform(-2, 2);
    for (Eigen::Index i = 0; i < v.rows(); ++i)
      for (int j = 0; j < 2; ++j) v(i, j) = rng.uniform(-2, 2);
    const double h = 0.5 + rng.uniform();
    CHECK(mmd(u, v, h) == doctest::Approx(testutil::mmd_bruteforce(u, v, h)).epsilon(1e-12));
  }
}

TEST_CASE("scorer incremental updates equal from-scratch recomputation over 50 steps") {
  SplitRng rng(31);
  std::vector<Eigen::VectorXd> treated_pts, control_pts;
  std::vector<double> treated_w, control_w;
  Eigen::MatrixXd t0(3, 2), c0(3, 2);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) {
      t0(i, j) = rng.normal();
      c0(i, j) = rng.normal();
    }
  for (Eigen::Index i = 0; i < 3; ++i) {
    treated_pts.push_back(t0.row(i).transpose());
    treated_w.push_back(1.0);
    control_pts.push_back(c0.row(i).transpose());
    control_w.push_back(1.0);
  }
  const double h = 1.3;
  MmdScorer scorer(t0, c0, h);

  for (int step = 0; step < 50; ++step) {
    Eigen::VectorXd cand(2);
    cand << rng.uniform(-2, 2), rng.uniform(-2, 2);
    const int arm = step % 2;

    // candidate scoring against the brute-force oracle
    auto u = arm == 1 ? treated_pts : control_pts;
    auto wu = arm == 1 ? treated_w : control_w;
    u.push_back(cand);
    wu.push_back(1.0);
    const auto& v = arm == 1 ? control_pts : treated_pts;
    const auto& wv = arm == 1 ? control_w : treated_w;
    const double oracle = testutil::weighted_mmd_bruteforce(u, wu, v, wv, h);
    CHECK(std::abs(scorer.mmd_with_added(cand, arm) - oracle) < 1e-10);

    // permanently fold the candidate in with a fractional weight (greedy path)
    const double w = 0.25 + 0.5 * rng.uniform();
    scorer.add_weighted(cand, w, arm);
    (arm == 1 ? treated_pts : control_pts).push_back(cand);
    (arm == 1 ? treated_w : control_w).push_back(w);
    const double oracle_now = testutil::weighted_mmd_bruteforce(treated_pts, treated_w,
                                                                control_pts, control_w, h);
    CHECK(std::abs(scorer.current_mmd() - oracle_now) < 1e-10);
  }
}

TEST_CASE("expected_mmd_after_add: degenerate expectation and linearity") {
  const Eigen::MatrixXd treated = points({{0.0, 0.0, 1.0}, {1.0, 0.5, 0.0}});
  const Eigen::MatrixXd control = points({{0.2, -0.3, 0.0}});
  KernelSpec kernel;
  kernel.bandwidth = 0.9;
  Eigen::VectorXd x(2);
  x << 0.4, 0.1;

  Eigen::MatrixXd with_a1(3, 3), with_a0(3, 3);
  with_a1 << treated, Eigen::MatrixXd::Zero(1, 3);
  with_a1.row(2) << x.transpose(), 1.0;
  with_a0 << treated, Eigen::MatrixXd::Zero(1, 3);
  with_a0.row(2) << x.transpose(), 0.0;

  const double m1 = mmd(with_a1, control, 0.9);
  const double m0 = mmd(with_a0, control, 0.9);

  CHECK(expected_mmd_after_add(x, 1, 1.0, treated, control, kernel) == doctest::Approx(m1));
  CHECK(expected_mmd_after_add(x, 1, 0.0, treated, control, kernel) == doctest::Approx(m0));
  CHECK(expected_mmd_after_add(x, 1, 0.5, treated, control, kernel) ==
        doctest::Approx(0.5 * (m0 + m1)));
}

TEST_CASE("expected_mmd_after_add matches brute force for every candidate on a toy world") {
  SplitRng rng(37);
  const int n_train = 12, n_pool = 18;  // 30-sample world
  Eigen::MatrixXd treated(n_train / 2, 3), control(n_train / 2, 3);
  for (Eigen::Index i = 0; i < n_train / 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      treated(i, j) = rng.normal();
      control(i, j) = rng.normal();
    }
    treated(i, 2) = static_cast<double>(rng.below(2));
    control(i, 2) = static_cast<double>(rng.below(2));
  }
  KernelSpec kernel;
  kernel.bandwidth = 1.1;
  for (int c = 0; c < n_pool; ++c) {
    Eigen::VectorXd x(2);
    x << rng.uniform(-2, 2), rng.uniform(-2, 2);
    const int arm = static_cast<int>(rng.below(2));
    const double p = rng.uniform();

    Eigen::MatrixXd own = arm == 1 ? treated : control;
    const Eigen::MatrixXd& other = arm == 1 ? control : treated;
    Eigen::MatrixXd own1(own.rows() + 1, 3), own0(own.rows() + 1, 3);
    own1 << own, Eigen::MatrixXd::Zero(1, 3);
    own0 << own, Eigen::MatrixXd::Zero(1, 3);
    own1.row(own.rows()) << x.transpose(), 1.0;
    own0.row(own.rows()) << x.transpose(), 0.0;
    const double brute =
        arm == 1 ? p * testutil::mmd_bruteforce(own1, other, 1.1) +
                       (1 - p) * testutil::mmd_bruteforce(own0, other, 1.1)
                 : p * testutil::mmd_bruteforce(other, own1, 1.1) +
                       (1 - p) * testutil::mmd_bruteforce(other, own0, 1.1);
    const double fast = expected_mmd_after_add(x, arm, p, treated, control, kernel);
    CHECK(std::abs(fast - brute) < 1e-12);
  }
}

// Worlds for selector tests: x is 1-d, ids s0..s{n-1}.
namespace {

struct SelectorWorld {
  std::vector<Sample> samples;
  DataPartition part;
};

SelectorWorld make_selector_world(const std::vector<std::tuple<double, int, int, double>>& defs,
                                  int n_train) {
  // defs: (x, a, t, y); first n_train entries are train, rest pool.
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < defs.size(); ++i) {
    const auto& [x, a, t, y] = defs[i];
    samples.push_back(make_sample("s" + std::to_string(i), {x}, a, t, y));
  }
  std::vector<int> train, pool;
  for (int i = 0; i < static_cast<int>(defs.size()); ++i)
    (i < n_train ? train : pool).push_back(i);
  DataPartition part = make_partition(samples, train, pool, {});
  return {std::move(samples), std::move(part)};
}

}  // namespace

TEST_CASE("select_random: deterministic, uniform-ish, full-pool permutation") {
  SelectorWorld world = make_selector_world(
      {
          {0.0, 0, 1, 0.0}, {1.0, 1, 0, 0.0},  // train
          {0.1, 0, 0, 0.0}, {0.2, 0, 1, 0.0}, {0.3, 1, 0, 0.0}, {0.4, 1, 1, 0.0},
      },
      2);
  AcquisitionRequest req;
  req.strategy = StrategyKind::kRandom;
  req.batch_size = 2;

  const auto b1 = select_random(world.samples, world.part, req, SplitRng(5));
  const auto b2 = select_random(world.samples, world.part, req, SplitRng(5));
  CHECK(b1 == b2);
  for (int idx : b1) CHECK(world.part.in_pool(idx));
  CHECK(b1[0] != b1[1]);

  req.batch_size = 99;  // clamps to pool size, returns a permutation
  const auto all = select_random(world.samples, world.part, req, SplitRng(6));
  CHECK(all.size() == world.part.pool().size());

  // empirical uniformity of single picks
  std::map<int, int> counts;
  req.batch_size = 1;
  const int reps = 10000;
  for (int s = 0; s < reps; ++s)
    counts[select_random(world.samples, world.part, req, SplitRng(1000 + s))[0]] += 1;
  const double expected = reps / 4.0;
  const double sigma = std::sqrt(reps * 0.25 * 0.75);
  for (const auto& [idx, c] : counts) CHECK(std::abs(c - expected) < 3.0 * sigma);
}

TEST_CASE("oe_score matches the worked example and is argmax-invariant to scaling") {
  CHECK(oe_score(0.3, 2.0, 1.0, 0.0) == doctest::Approx(1.3));
  CHECK(oe_score(0.5, 1.0, 1.0, 1.0) == doctest::Approx(0.0));  // perfect estimator
  // scaling every prediction and outcome by a positive constant preserves order
  const double s1 = oe_score(0.3, 2.0, 1.0, 0.0);
  const double s2 = oe_score(0.7, 4.0, 3.0, 1.0);
  const double c = 17.0;
  CHECK((oe_score(0.3, c * 2.0, c * 1.0, c * 0.0) < oe_score(0.7, c * 4.0, c * 3.0, c * 1.0)) ==
        (s1 < s2));
}

TEST_CASE("select_oe ranks by prediction error") {
  SelectorWorld world = make_selector_world(
      {
          {0.0, 0, 1, 0.0}, {1.0, 1, 1, 0.0}, {0.5, 0, 0, 0.0}, {0.5, 1, 0, 0.0},  // train
          {0.25, 0, 1, 0.0},   // y = 0
          {0.75, 0, 1, 10.0},  // y = 10, prediction stays in [1,2] => larger error
      },
      4);
  AttributeModel cl_a;
  cl_a.fit(assemble_train(world.samples, world.part.train()), SplitRng(2));
  testutil::StubEstimator stub(1.0, 2.0);
  AcquisitionRequest req;
  req.strategy = StrategyKind::kOe;
  req.batch_size = 2;
  const auto batch = select_oe(world.samples, world.part, cl_a, stub, req, SplitRng(3));
  REQUIRE(batch.size() == 2);
  CHECK(batch[0] == 5);  // the far-off outcome ranks first
}

TEST_CASE("select_oe rejects estimators without factual prediction") {
  SelectorWorld world = make_selector_world(
      {{0.0, 0, 1, 0.0}, {1.0, 1, 0, 0.0}, {0.5, 0, 0, 0.0}}, 2);
  AttributeModel cl_a;
  cl_a.fit(assemble_train(world.samples, world.part.train()), SplitRng(2));
  testutil::StubEstimator no_factual(1.0, 2.0, /*factual=*/false);
  AcquisitionRequest req;
  req.strategy = StrategyKind::kOe;
  req.batch_size = 1;
  CHECK_THROWS_AS(select_oe(world.samples, world.part, cl_a, no_factual, req, SplitRng(3)),
                  ConfigError);
}

TEST_CASE("select_uncertainty prefers probabilities near one half") {
  // a ~ Bernoulli(sigmoid(2x)) on train, so the fitted probability rises
  // smoothly with x: the pool midpoint is ambiguous, the extremes are not.
  std::vector<std::tuple<double, int, int, double>> defs;
  SplitRng gen(12);
  const int n_train = 400;
  for (int i = 0; i < n_train; ++i) {
    const double x = gen.uniform(-2, 2);
    const double p = 1.0 / (1.0 + std::exp(-2.0 * x));
    defs.push_back({x, gen.bernoulli(p) ? 1 : 0, i % 2, 0.0});
  }
  defs.push_back({0.0, 0, 0, 0.0});    // ambiguous
  defs.push_back({-1.9, 0, 0, 0.0});   // clearly a=0
  defs.push_back({1.9, 1, 0, 0.0});    // clearly a=1
  SelectorWorld world = make_selector_world(defs, n_train);
  AttributeModel cl_a;
  cl_a.fit(assemble_train(world.samples, world.part.train()), SplitRng(12));
  AcquisitionRequest req;
  req.strategy = StrategyKind::kUncertainty;
  req.batch_size = 1;
  const auto batch = select_uncertainty(world.samples, world.part, cl_a, req, SplitRng(13));
  CHECK(batch[0] == n_train);  // the ambiguous midpoint

  // entropy ranking agrees with |p - 0.5| ranking over a probability grid
  auto entropy = [](double p) {
    if (p == 0.0 || p == 1.0) return 0.0;
    return -p * std::log(p) - (1 - p) * std::log(1 - p);
  };
  for (double p1 = 0.05; p1 <= 0.95; p1 += 0.05)
    for (double p2 = 0.05; p2 <= 0.95; p2 += 0.05) {
      const bool by_distance = std::abs(p1 - 0.5) < std::abs(p2 - 0.5);
      const bool by_entropy = entropy(p1) > entropy(p2);
      if (std::abs(std::abs(p1 - 0.5) - std::abs(p2 - 0.5)) > 1e-12)
        CHECK(by_distance == by_entropy);
    }
}

TEST_CASE("select_cb prefers a duplicate of the treated point over an outlier") {
  // Train: one treated at the origin, one control at the origin (both a=0).
  // Pool: a duplicate of the treated point and a far outlier, both treated.
  SelectorWorld world = make_selector_world(
      {
          {0.0, 0, 1, 0.0},  // treated origin
          {0.0, 0, 0, 0.0},  // control origin
          {0.0, 0, 1, 0.0},  // duplicate candidate
          {5.0, 0, 1, 0.0},  // outlier candidate
      },
      2);
  AttributeModel cl_a;
  cl_a.fit(assemble_train(world.samples, world.part.train()), SplitRng(21));
  AcquisitionRequest req;
  req.strategy = StrategyKind::kCb;
  req.batch_size = 1;
  req.kernel.bandwidth = 1.0;
  const auto batch = select_cb(world.samples, world.part, cl_a, req, SplitRng(22));
  CHECK(batch[0] == 2);

  // beta = |pool| returns the whole pool ordered by score
  req.batch_size = 2;
  const auto all = select_cb(world.samples, world.part, cl_a, req, SplitRng(22));
  CHECK(all == std::vector<int>{2, 3});
}

TEST_CASE("select_cb requires both arms in train") {
  SelectorWorld world = make_selector_world(
      {{0.0, 0, 1, 0.0}, {0.1, 0, 1, 0.0}, {0.2, 0, 0, 0.0}}, 2);
  AttributeModel cl_a;
  cl_a.fit(assemble_train(world.samples, world.part.train()), SplitRng(31));
  AcquisitionRequest req;
  req.strategy = StrategyKind::kCb;
  req.batch_size = 1;
  CHECK_THROWS_AS(select_cb(world.samples, world.part, cl_a, req, SplitRng(32)), FitError);
}

TEST_CASE("greedy cb returns distinct pool ids and matches independent on batch of one") {
  std::vector<std::tuple<double, int, int, double>> defs;
  SplitRng gen(41);
  for (int i = 0; i < 10; ++i)
    defs.push_back({gen.normal(), static_cast<int>(gen.below(2)), i % 2, 0.0});
  for (int i = 0; i < 12; ++i)
    defs.push_back({gen.normal(), 0, static_cast<int>(gen.below(2)), 0.0});
  SelectorWorld world = make_selector_world(defs, 10);
  AttributeModel cl_a;
  cl_a.fit(assemble_train(world.samples, world.part.train()), SplitRng(42));

  AcquisitionRequest greedy;
  greedy.strategy = StrategyKind::kCb;
  greedy.batch_size = 5;
  greedy.kernel.bandwidth = 1.0;
  greedy.scoring_mode = CbScoringMode::kGreedySequential;
  const auto batch = select_cb(world.samples, world.part, cl_a, greedy, SplitRng(43));
  CHECK(batch.size() == 5);
  std::set<int> unique(batch.begin(), batch.end());
  CHECK(unique.size() == batch.size());
  for (int idx : batch) CHECK(world.part.in_pool(idx));

  AcquisitionRequest indep = greedy;
  indep.scoring_mode = CbScoringMode::kIndependent;
  indep.batch_size = 1;
  greedy.batch_size = 1;
  CHECK(select_cb(world.samples, world.part, cl_a, greedy, SplitRng(44)) ==
        select_cb(world.samples, world.part, cl_a, indep, SplitRng(44)));
}

TEST_CASE("batch size below one is rejected, oversized batches clamp") {
  SelectorWorld world = make_selector_world(
      {{0.0, 0, 1, 0.0}, {1.0, 1, 0, 0.0}, {0.5, 0, 0, 0.0}}, 2);
  AcquisitionRequest req;
  req.strategy = StrategyKind::kRandom;
  req.batch_size = 0;
  CHECK_THROWS_AS(select_random(world.samples, world.part, req, SplitRng(3)), ConfigError);
  req.batch_size = 50;
  CHECK(select_random(world.samples, world.part, req, SplitRng(3)).size() == 1);
}

}  // TEST_SUITE
