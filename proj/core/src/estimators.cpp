#include "confacq/estimators.hpp"

#include <algorithm>

#include "confacq/errors.hpp"

namespace confacq {

TrainData assemble_train(const std::vector<Sample>& samples, const std::vector<int>& train_idx) {
  TrainData data;
  const auto n = static_cast<Eigen::Index>(train_idx.size());
  if (n == 0) throw FitError("empty training set");
  const auto p = samples[static_cast<std::size_t>(train_idx[0])].x().size();
  data.x.resize(n, p);
  data.a.resize(n);
  data.t.resize(n);
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Sample& s = samples[static_cast<std::size_t>(train_idx[static_cast<std::size_t>(i)])];
    if (!s.a_observed().has_value())
      throw DataError("train sample '" + s.id() + "' has no acquired attribute value");
    data.x.row(i) = s.x().transpose();
    data.a[i] = static_cast<double>(*s.a_observed());
    data.t[i] = s.t();
    data.y[i] = s.y_factual();
  }
  return data;
}

Eigen::MatrixXd with_attribute(const Eigen::MatrixXd& x, const Eigen::VectorXd& a) {
  if (a.size() != x.rows()) throw DataError("attribute vector length mismatch");
  Eigen::MatrixXd out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()) = a;
  return out;
}

Eigen::VectorXd Estimator::predict_factual(const Eigen::MatrixXd& x, const Eigen::VectorXd& a,
                                           const Eigen::VectorXi& t) const {
  const PotentialOutcomes po = predict_potential(x, a);
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = t[i] == 1 ? po.y1[i] : po.y0[i];
  return out;
}

double estimate_ate(const Estimator& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& a) {
  const PotentialOutcomes po = model.predict_potential(x, a);
  return (po.y1 - po.y0).mean();
}

// ---------------------------------------------------------------------------
// Attribute model
// ---------------------------------------------------------------------------

void AttributeModel::fit(const TrainData& train, SplitRng rng) {
  Eigen::MatrixXd features = with_attribute(train.x, train.t.cast<double>());
  Eigen::VectorXi labels(train.n());
  for (Eigen::Index i = 0; i < train.n(); ++i) labels[i] = static_cast<int>(train.a[i]);
  forest_.fit(features, labels, rng);
}

Eigen::VectorXd AttributeModel::predict(const Eigen::MatrixXd& x,
                                        const Eigen::VectorXi& t) const {
  return forest_.predict_proba(with_attribute(x, t.cast<double>()));
}

// ---------------------------------------------------------------------------
// Doubly robust estimator
// ---------------------------------------------------------------------------

namespace {

std::vector<Eigen::Index> arm_rows(const Eigen::VectorXi& t, int arm) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < t.size(); ++i)
    if (t[i] == arm) rows.push_back(i);
  return rows;
}

void require_both_arms(const Eigen::VectorXi& t, const std::string& kind) {
  for (int arm : {0, 1}) {
    bool found = false;
    for (Eigen::Index i = 0; i < t.size(); ++i)
      if (t[i] == arm) {
        found = true;
        break;
      }
    if (!found)
      throw FitError(kind + ": treatment arm t=" + std::to_string(arm) +
                     " is empty in the training data");
  }
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

Eigen::VectorXd select_rows(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[rows[i]];
  return out;
}

}  // namespace

DoublyRobustEstimator::DoublyRobustEstimator(DrConfig cfg, SplitRng rng)
    : cfg_(cfg), rng_(rng) {
  outcome_factory_ = [this](SplitRng net_rng) -> std::unique_ptr<Regressor> {
    return std::make_unique<ShallowNetRegressor>(cfg_.outcome_net, net_rng);
  };
  propensity_factory_ = [this](SplitRng net_rng) -> std::unique_ptr<ProbClassifier> {
    return std::make_unique<ShallowNetClassifier>(cfg_.propensity_net, net_rng);
  };
}

DoublyRobustEstimator::DoublyRobustEstimator(DrConfig cfg, SplitRng rng,
                                             OutcomeFactory outcome_factory,
                                             PropensityFactory propensity_factory)
    : cfg_(cfg),
      rng_(rng),
      outcome_factory_(std::move(outcome_factory)),
      propensity_factory_(std::move(propensity_factory)) {}

void DoublyRobustEstimator::fit(const TrainData& train) {
  require_both_arms(train.t, kind());
  const Eigen::MatrixXd features = with_attribute(train.x, train.a);
  for (int arm : {0, 1}) {
    const auto rows = arm_rows(train.t, arm);
    head_[arm] = outcome_factory_(rng_.split(arm == 0 ? "outcome0" : "outcome1"));
    head_[arm]->fit(select_rows(features, rows), select_rows(train.y, rows));
  }
  propensity_model_ = propensity_factory_(rng_.split("propensity"));
  propensity_model_->fit(features, train.t);
}

PotentialOutcomes DoublyRobustEstimator::predict_potential(const Eigen::MatrixXd& x,
                                                           const Eigen::VectorXd& a) const {
  if (!head_[0] || !head_[1]) throw std::logic_error("dr: predict before fit");
  const Eigen::MatrixXd features = with_attribute(x, a);
  return {head_[0]->predict(features), head_[1]->predict(features)};
}

Eigen::VectorXd DoublyRobustEstimator::propensity(const Eigen::MatrixXd& x,
                                                  const Eigen::VectorXd& a) const {
  if (!propensity_model_) throw std::logic_error("dr: propensity before fit");
  const double eps = cfg_.propensity_clip;
  Eigen::VectorXd e = propensity_model_->predict_proba(with_attribute(x, a));
  return e.array().min(1.0 - eps).max(eps);
}

double DoublyRobustEstimator::corrected_ate(const Eigen::MatrixXd& x, const Eigen::VectorXd& a,
                                            const Eigen::VectorXi& t,
                                            const Eigen::VectorXd& y) const {
  const PotentialOutcomes po = predict_potential(x, a);
  const Eigen::VectorXd e = propensity(x, a);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double base = po.y1[i] - po.y0[i];
    const double correction = t[i] == 1 ? (y[i] - po.y1[i]) / e[i]
                                        : -(y[i] - po.y0[i]) / (1.0 - e[i]);
    acc += base + correction;
  }
  return acc / static_cast<double>(x.rows());
}

// ---------------------------------------------------------------------------
// Multihead estimators
// ---------------------------------------------------------------------------

void MlpMultiEstimator::fit(const TrainData& train) {
  require_both_arms(train.t, kind());
  const Eigen::MatrixXd features = with_attribute(train.x, train.a);
  for (int arm : {0, 1}) {
    const auto rows = arm_rows(train.t, arm);
    // Each head's stream depends only on its arm, so perturbing the other
    // arm's data cannot change this head's fit.
    head_[arm] = std::make_unique<MlpRegressor>(cfg_, rng_.split(arm == 0 ? "arm0" : "arm1"));
    head_[arm]->fit(select_rows(features, rows), select_rows(train.y, rows));
  }
}

PotentialOutcomes MlpMultiEstimator::predict_potential(const Eigen::MatrixXd& x,
                                                       const Eigen::VectorXd& a) const {
  if (!head_[0] || !head_[1]) throw std::logic_error("mlp_multi: predict before fit");
  const Eigen::MatrixXd features = with_attribute(x, a);
  return {head_[0]->predict(features), head_[1]->predict(features)};
}

void GpMultiEstimator::fit(const TrainData& train) {
  require_both_arms(train.t, kind());
  const Eigen::MatrixXd features = with_attribute(train.x, train.a);
  for (int arm : {0, 1}) {
    const auto rows = arm_rows(train.t, arm);
    head_[arm] = std::make_unique<GpRegressor>(cfg_);
    head_[arm]->fit(select_rows(features, rows), select_rows(train.y, rows));
  }
}

PotentialOutcomes GpMultiEstimator::predict_potential(const Eigen::MatrixXd& x,
                                                      const Eigen::VectorXd& a) const {
  if (!head_[0] || !head_[1]) throw std::logic_error("gp_multi: predict before fit");
  const Eigen::MatrixXd features = with_attribute(x, a);
  return {head_[0]->predict_mean(features), head_[1]->predict_mean(features)};
}

// ---------------------------------------------------------------------------
// Factory
// ---------------------------------------------------------------------------

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kDr: return "dr";
    case EstimatorKind::kGpMulti: return "gp_multi";
    case EstimatorKind::kMlpMulti: return "mlp_multi";
  }
  return "?";
}

EstimatorKind estimator_kind_from_string(const std::string& s) {
  if (s == "dr") return EstimatorKind::kDr;
  if (s == "gp_multi") return EstimatorKind::kGpMulti;
  if (s == "mlp_multi") return EstimatorKind::kMlpMulti;
  throw ConfigError("unknown estimator kind '" + s + "'");
}

std::unique_ptr<Estimator> make_estimator(const EstimatorConfig& cfg, SplitRng rng) {
  switch (cfg.kind) {
    case EstimatorKind::kDr:
      return std::make_unique<DoublyRobustEstimator>(cfg.dr, rng);
    case EstimatorKind::kGpMulti:
      return std::make_unique<GpMultiEstimator>(cfg.gp);
    case EstimatorKind::kMlpMulti:
      return std::make_unique<MlpMultiEstimator>(cfg.mlp, rng);
  }
  throw ConfigError("unhandled estimator kind");
}

std::unique_ptr<Estimator> fit_estimator(const EstimatorConfig& cfg, const TrainData& train,
                                         SplitRng rng) {
  auto model = make_estimator(cfg, rng);
  model->fit(train);
  return model;
}

}  // namespace confacq
