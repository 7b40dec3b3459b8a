#include <doctest.h>

#include <cmath>

#include "confacq/errors.hpp"
#include "confacq/estimators.hpp"
#include "testutil.hpp"

using namespace confacq;

namespace {

// Linear world with constant effect tau = 2 and a confounded binary attribute.
TrainData linear_world(int n, std::uint64_t seed, double tau = 2.0) {
  SplitRng rng(seed);
  TrainData d;
  const int p = 3;
  d.x.resize(n, p);
  d.a.resize(n);
  d.t.resize(n);
  d.y.resize(n);
  Eigen::VectorXd w(p);
  w << 1.0, -0.5, 0.25;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) d.x(i, j) = rng.normal();
    d.a[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
    const double logit = 0.5 * d.x(i, 0) - 0.3 * d.x(i, 1) + 0.4 * d.a[i];
    d.t[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-logit))) ? 1 : 0;
    d.y[i] = tau * d.t[i] + d.x.row(i).dot(w) + 0.7 * d.a[i] + 0.5 * rng.normal();
  }
  return d;
}

TrainData separable_attribute(int n, std::uint64_t seed) {
  SplitRng rng(seed);
  TrainData d;
  d.x.resize(n, 2);
  d.a.resize(n);
  d.t.resize(n);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    d.x(i, 0) = rng.normal();
    d.x(i, 1) = rng.normal();
    d.a[i] = d.x(i, 0) > 0.0 ? 1.0 : 0.0;
    d.t[i] = i % 2;
    d.y[i] = 0.0;
  }
  return d;
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("attribute model: separable data reaches holdout accuracy >= 0.95") {
  const TrainData train = separable_attribute(400, 51);
  const TrainData holdout = separable_attribute(100, 52);
  AttributeModel model;
  model.fit(train, SplitRng(53));
  const Eigen::VectorXd p = model.predict(holdout.x, holdout.t);
  int correct = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    correct += (p[i] >= 0.5 ? 1.0 : 0.0) == holdout.a[i];
  CHECK(correct >= 95);
  CHECK(model.oob_accuracy() >= 0.95);
}

TEST_CASE("attribute model: independent attribute concentrates near the prior") {
  SplitRng rng(61);
  const int n = 2000;
  TrainData d;
  d.x.resize(n, 3);
  d.a.resize(n);
  d.t.resize(n);
  d.y.resize(n);
  const double prior = 0.35;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) d.x(i, j) = rng.normal();
    d.a[i] = rng.bernoulli(prior) ? 1.0 : 0.0;  // independent of x and t
    d.t[i] = rng.bernoulli(0.5) ? 1 : 0;
    d.y[i] = 0.0;
  }
  AttributeModel model;
  model.fit(d, SplitRng(62));
  const Eigen::VectorXd p = model.predict(d.x, d.t);
  CHECK((p.array() - prior).abs().mean() < 0.1);
}

TEST_CASE("attribute model: single-class train degenerates to the prior") {
  TrainData d;
  d.x = Eigen::MatrixXd::Random(20, 2);
  d.a = Eigen::VectorXd::Ones(20);
  d.t = Eigen::VectorXi::Zero(20);
  d.y = Eigen::VectorXd::Zero(20);
  AttributeModel model;
  model.fit(d, SplitRng(63));
  CHECK(model.degenerate());
  const Eigen::VectorXd p = model.predict(d.x, d.t);
  CHECK(p.minCoeff() == 1.0);
  CHECK(p.maxCoeff() == 1.0);
}

TEST_CASE("attribute model predictions are deterministic after fit") {
  const TrainData train = separable_attribute(200, 71);
  AttributeModel m1, m2;
  m1.fit(train, SplitRng(72));
  m2.fit(train, SplitRng(72));
  CHECK(m1.predict(train.x, train.t) == m2.predict(train.x, train.t));
}

TEST_CASE("linear regressor recovers coefficients") {
  SplitRng rng(81);
  Eigen::MatrixXd x(200, 2);
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    y[i] = 3.0 + 2.0 * x(i, 0) - 1.0 * x(i, 1);
  }
  LinearRegressor reg;
  reg.fit(x, y);
  CHECK((reg.predict(x) - y).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("logistic regressor recovers a logistic boundary") {
  SplitRng rng(91);
  const int n = 4000;
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXi y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    const double p = 1.0 / (1.0 + std::exp(-(0.8 * x(i, 0) - 0.5 * x(i, 1) + 0.2)));
    y[i] = rng.bernoulli(p) ? 1 : 0;
  }
  LogisticRegressor reg;
  reg.fit(x, y);
  const Eigen::VectorXd p = reg.predict_proba(x);
  double err = 0.0;
  for (int i = 0; i < n; ++i) {
    const double truth = 1.0 / (1.0 + std::exp(-(0.8 * x(i, 0) - 0.5 * x(i, 1) + 0.2)));
    err += std::abs(p[i] - truth);
  }
  CHECK(err / n < 0.03);
}

TEST_CASE("shallow net fits a linear map and short-circuits constant targets") {
  SplitRng rng(101);
  Eigen::MatrixXd x(300, 1);
  Eigen::VectorXd y(300);
  for (int i = 0; i < 300; ++i) {
    x(i, 0) = rng.uniform(-2, 2);
    y[i] = 2.0 * x(i, 0) + 1.0;
  }
  ShallowNetRegressor net({32, 0.1, 500}, SplitRng(102));
  net.fit(x, y);
  const double rmse = std::sqrt((net.predict(x) - y).squaredNorm() / 300.0);
  CHECK(rmse < 0.1);

  ShallowNetRegressor flat({32, 0.1, 500}, SplitRng(103));
  flat.fit(x, Eigen::VectorXd::Constant(300, 4.5));
  CHECK((flat.predict(x).array() - 4.5).abs().maxCoeff() < 1e-12);
}

TEST_CASE("gp interpolates training targets as noise goes to zero") {
  // Well-separated inputs keep the kernel matrix benign, so the zero-noise
  // limit is visible down to the jitter floor.
  const int n = 10;
  Eigen::MatrixXd x(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 3.0 * i;
    y[i] = std::cos(x(i, 0));
  }
  GpConfig cfg;
  cfg.noise_var = 0.0;
  cfg.jitter = 1e-8;
  cfg.length_scale = 1.0;
  GpRegressor gp(cfg);
  gp.fit(x, y);
  CHECK((gp.predict_mean(x) - y).cwiseAbs().maxCoeff() < 1e-6);

  // Correlated inputs amplify the jitter but stay near the targets.
  SplitRng rng(111);
  Eigen::MatrixXd xd(20, 1);
  Eigen::VectorXd yd(20);
  for (int i = 0; i < 20; ++i) {
    xd(i, 0) = rng.uniform(-3, 3);
    yd[i] = std::cos(xd(i, 0));
  }
  GpConfig dense;
  dense.noise_var = 0.0;
  dense.jitter = 1e-8;
  GpRegressor gp_dense(dense);
  gp_dense.fit(xd, yd);
  CHECK((gp_dense.predict_mean(xd) - yd).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("gp fits noiseless sin to small train error") {
  Eigen::MatrixXd x(50, 1);
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) {
    x(i, 0) = -3.0 + 6.0 * i / 49.0;
    y[i] = std::sin(x(i, 0));
  }
  GpConfig cfg;
  cfg.noise_var = 1e-6;
  GpRegressor gp(cfg);
  gp.fit(x, y);
  const double rmse = std::sqrt((gp.predict_mean(x) - y).squaredNorm() / 50.0);
  CHECK(rmse < 0.05);
}

TEST_CASE("gp factorization survives duplicate rows via jitter escalation") {
  Eigen::MatrixXd x(6, 1);
  x << 1, 1, 1, 2, 2, 2;  // singular kernel matrix at zero noise
  Eigen::VectorXd y(6);
  y << 1, 1, 1, 2, 2, 2;
  GpConfig cfg;
  cfg.noise_var = 0.0;
  cfg.jitter = 1e-12;
  GpRegressor gp(cfg);
  gp.fit(x, y);
  CHECK(std::isfinite(gp.predict_mean(x)[0]));

  // duplicate rows give an exactly singular kernel matrix; with jitter
  // disallowed the factorization must report failure
  GpConfig capped = cfg;
  capped.jitter = 0.0;
  capped.max_jitter = 0.0;
  GpRegressor doomed(capped);
  CHECK_THROWS_AS(doomed.fit(x, y), FitError);
}

TEST_CASE("mlp regressor learns a smooth nonlinearity") {
  SplitRng rng(121);
  Eigen::MatrixXd x(400, 1);
  Eigen::VectorXd y(400);
  for (int i = 0; i < 400; ++i) {
    x(i, 0) = rng.uniform(-2, 2);
    y[i] = x(i, 0) * x(i, 0);
  }
  MlpRegressor net({{64, 32}, 1e-2, 500, 0.1, 40}, SplitRng(122));
  net.fit(x, y);
  const double rmse = std::sqrt((net.predict(x) - y).squaredNorm() / 400.0);
  CHECK(rmse < 0.25);
}

TEST_CASE("every estimator kind reproduces a constant outcome") {
  SplitRng rng(131);
  TrainData d;
  const int n = 60;
  d.x.resize(n, 2);
  d.a.resize(n);
  d.t.resize(n);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    d.x(i, 0) = rng.normal();
    d.x(i, 1) = rng.normal();
    d.a[i] = static_cast<double>(i % 2);
    d.t[i] = (i / 2) % 2;
    d.y[i] = 7.25;
  }
  for (auto kind : {EstimatorKind::kDr, EstimatorKind::kGpMulti, EstimatorKind::kMlpMulti}) {
    EstimatorConfig cfg;
    cfg.kind = kind;
    const auto model = fit_estimator(cfg, d, SplitRng(132));
    const PotentialOutcomes po = model->predict_potential(d.x, d.a);
    CHECK((po.y0.array() - 7.25).abs().maxCoeff() < 0.01);
    CHECK((po.y1.array() - 7.25).abs().maxCoeff() < 0.01);
    CHECK(std::abs(estimate_ate(*model, d.x, d.a)) < 0.02);
  }
}

TEST_CASE("estimate_ate is the mean effect difference") {
  class FixedEffect final : public Estimator {
   public:
    void fit(const TrainData&) override {}
    PotentialOutcomes predict_potential(const Eigen::MatrixXd& x,
                                        const Eigen::VectorXd&) const override {
      PotentialOutcomes po;
      po.y0 = Eigen::VectorXd::Zero(x.rows());
      po.y1.resize(x.rows());
      for (Eigen::Index i = 0; i < x.rows(); ++i) po.y1[i] = i == 0 ? 1.0 : 3.0;
      return po;
    }
    std::string kind() const override { return "fixed"; }
  };
  FixedEffect model;
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 1);
  const Eigen::VectorXd a = Eigen::VectorXd::Zero(2);
  CHECK(estimate_ate(model, x, a) == doctest::Approx(2.0));

  testutil::StubEstimator same(1.0, 1.0);
  CHECK(estimate_ate(same, x, a) == doctest::Approx(0.0));
}

TEST_CASE("fit_estimator errors name the empty arm") {
  TrainData d;
  d.x = Eigen::MatrixXd::Random(10, 2);
  d.a = Eigen::VectorXd::Zero(10);
  d.t = Eigen::VectorXi::Ones(10);  // no controls
  d.y = Eigen::VectorXd::Zero(10);
  EstimatorConfig cfg;
  cfg.kind = EstimatorKind::kMlpMulti;
  CHECK_THROWS_WITH_AS(fit_estimator(cfg, d, SplitRng(1)), doctest::Contains("t=0"), FitError);
}

TEST_CASE("contract purity: identical fits give identical predictions") {
  const TrainData d = linear_world(150, 141);
  for (auto kind : {EstimatorKind::kDr, EstimatorKind::kGpMulti, EstimatorKind::kMlpMulti}) {
    EstimatorConfig cfg;
    cfg.kind = kind;
    cfg.mlp.max_epochs = 60;
    cfg.dr.outcome_net.epochs = 60;
    cfg.dr.propensity_net.epochs = 60;
    const auto m1 = fit_estimator(cfg, d, SplitRng(142));
    const auto m2 = fit_estimator(cfg, d, SplitRng(142));
    const PotentialOutcomes p1 = m1->predict_potential(d.x, d.a);
    const PotentialOutcomes p2 = m2->predict_potential(d.x, d.a);
    CHECK(p1.y0 == p2.y0);
    CHECK(p1.y1 == p2.y1);
    // and the same call twice on one model
    const PotentialOutcomes p3 = m1->predict_potential(d.x, d.a);
    CHECK(p1.y0 == p3.y0);
  }
}

TEST_CASE("multihead arm isolation is exact") {
  TrainData d = linear_world(120, 151);
  for (auto kind : {EstimatorKind::kGpMulti, EstimatorKind::kMlpMulti}) {
    EstimatorConfig cfg;
    cfg.kind = kind;
    cfg.mlp.max_epochs = 60;
    const auto base = fit_estimator(cfg, d, SplitRng(152));

    TrainData perturbed = d;
    for (Eigen::Index i = 0; i < perturbed.n(); ++i)
      if (perturbed.t[i] == 1) perturbed.y[i] += 100.0;  // wreck the treated arm only
    const auto shifted = fit_estimator(cfg, perturbed, SplitRng(152));

    const PotentialOutcomes po_base = base->predict_potential(d.x, d.a);
    const PotentialOutcomes po_shift = shifted->predict_potential(d.x, d.a);
    CHECK(po_base.y0 == po_shift.y0);      // control head untouched, bit for bit
    CHECK(po_base.y1 != po_shift.y1);
  }
}

TEST_CASE("dr recovers a known constant effect on a linear world") {
  const TrainData d = linear_world(2000, 161);
  EstimatorConfig cfg;  // defaults
  const auto model = fit_estimator(cfg, d, SplitRng(162));
  CHECK(std::abs(estimate_ate(*model, d.x, d.a) - 2.0) < 0.1);

  const auto* dr = dynamic_cast<const DoublyRobustEstimator*>(model.get());
  REQUIRE(dr != nullptr);
  CHECK(std::abs(dr->corrected_ate(d.x, d.a, d.t, d.y) - 2.0) < 0.1);
  const Eigen::VectorXd e = dr->propensity(d.x, d.a);
  CHECK(e.minCoeff() >= 0.01);
  CHECK(e.maxCoeff() <= 0.99);
}

}  // TEST_SUITE
