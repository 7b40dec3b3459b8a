#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "confacq/gaussian_process.hpp"
#include "confacq/nets.hpp"
#include "confacq/random_forest.hpp"
#include "confacq/rng.hpp"
#include "confacq/sample.hpp"

namespace confacq {

// Observable training view assembled from train-set samples: covariates,
// acquired attribute, treatment, factual outcome. Never carries ground truth.
struct TrainData {
  Eigen::MatrixXd x;
  Eigen::VectorXd a;
  Eigen::VectorXi t;
  Eigen::VectorXd y;

  Eigen::Index n() const { return x.rows(); }
};

TrainData assemble_train(const std::vector<Sample>& samples, const std::vector<int>& train_idx);

// (x, a) concatenation used as model features throughout.
Eigen::MatrixXd with_attribute(const Eigen::MatrixXd& x, const Eigen::VectorXd& a);

struct PotentialOutcomes {
  Eigen::VectorXd y0;
  Eigen::VectorXd y1;
};

// Anything that fits on (X, A, t, y) and predicts both potential outcomes.
class Estimator {
 public:
  virtual ~Estimator() = default;

  virtual void fit(const TrainData& train) = 0;
  virtual PotentialOutcomes predict_potential(const Eigen::MatrixXd& x,
                                              const Eigen::VectorXd& a) const = 0;
  // Prediction of the factual outcome under the given arm. Estimators that
  // cannot produce it (effect-only models) return false from
  // predicts_factual_outcome and must not be paired with the outcome-error
  // strategy.
  virtual Eigen::VectorXd predict_factual(const Eigen::MatrixXd& x, const Eigen::VectorXd& a,
                                          const Eigen::VectorXi& t) const;
  virtual bool predicts_factual_outcome() const { return true; }
  virtual std::string kind() const = 0;
};

// Plug-in ATE: mean of y1_hat - y0_hat over the given samples.
double estimate_ate(const Estimator& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& a);

// ---------------------------------------------------------------------------
// Attribute model Cl_A: p(A | X, t), a random forest on (x, t).
// ---------------------------------------------------------------------------

class AttributeModel {
 public:
  explicit AttributeModel(RandomForestConfig cfg = {}) : forest_(cfg) {}

  void fit(const TrainData& train, SplitRng rng);
  Eigen::VectorXd predict(const Eigen::MatrixXd& x, const Eigen::VectorXi& t) const;

  double oob_accuracy() const { return forest_.oob_accuracy(); }
  bool degenerate() const { return forest_.degenerate(); }

 private:
  RandomForestClassifier forest_;
};

// ---------------------------------------------------------------------------
// Doubly robust estimator: propensity model e(x, a) plus per-arm outcome
// heads, shallow networks by default. Components are injectable so the
// double-robustness property can be exercised with deliberately misspecified
// halves.
// ---------------------------------------------------------------------------

struct DrConfig {
  ShallowNetConfig outcome_net;
  ShallowNetConfig propensity_net;
  double propensity_clip = 0.01;
};

class DoublyRobustEstimator : public Estimator {
 public:
  using OutcomeFactory = std::function<std::unique_ptr<Regressor>(SplitRng)>;
  using PropensityFactory = std::function<std::unique_ptr<ProbClassifier>(SplitRng)>;

  DoublyRobustEstimator(DrConfig cfg, SplitRng rng);
  DoublyRobustEstimator(DrConfig cfg, SplitRng rng, OutcomeFactory outcome_factory,
                        PropensityFactory propensity_factory);

  void fit(const TrainData& train) override;
  PotentialOutcomes predict_potential(const Eigen::MatrixXd& x,
                                      const Eigen::VectorXd& a) const override;
  std::string kind() const override { return "dr"; }

  // AIPW-corrected ATE over factual data (propensity-weighted residual
  // correction); consistent when either the outcome heads or the propensity
  // model is well specified.
  double corrected_ate(const Eigen::MatrixXd& x, const Eigen::VectorXd& a,
                       const Eigen::VectorXi& t, const Eigen::VectorXd& y) const;

  Eigen::VectorXd propensity(const Eigen::MatrixXd& x, const Eigen::VectorXd& a) const;

 private:
  DrConfig cfg_;
  SplitRng rng_;
  OutcomeFactory outcome_factory_;
  PropensityFactory propensity_factory_;
  std::unique_ptr<Regressor> head_[2];
  std::unique_ptr<ProbClassifier> propensity_model_;
};

// ---------------------------------------------------------------------------
// Multihead estimators: one regressor per arm on (x, a) features. Each head
// sees only its own arm's training data.
// ---------------------------------------------------------------------------

class MlpMultiEstimator : public Estimator {
 public:
  MlpMultiEstimator(MlpConfig cfg, SplitRng rng) : cfg_(cfg), rng_(rng) {}
  void fit(const TrainData& train) override;
  PotentialOutcomes predict_potential(const Eigen::MatrixXd& x,
                                      const Eigen::VectorXd& a) const override;
  std::string kind() const override { return "mlp_multi"; }

 private:
  MlpConfig cfg_;
  SplitRng rng_;
  std::unique_ptr<Regressor> head_[2];
};

class GpMultiEstimator : public Estimator {
 public:
  explicit GpMultiEstimator(GpConfig cfg) : cfg_(cfg) {}
  void fit(const TrainData& train) override;
  PotentialOutcomes predict_potential(const Eigen::MatrixXd& x,
                                      const Eigen::VectorXd& a) const override;
  std::string kind() const override { return "gp_multi"; }

 private:
  GpConfig cfg_;
  std::unique_ptr<GpRegressor> head_[2];
};

// ---------------------------------------------------------------------------
// Factory.
// ---------------------------------------------------------------------------

enum class EstimatorKind { kDr, kGpMulti, kMlpMulti };

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(const std::string& s);

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::kDr;
  DrConfig dr;
  MlpConfig mlp;
  GpConfig gp;
  // Fixed fit stream; absent = derived from the realization stream so paired
  // comparisons and the optimal reference share one fit seed.
  std::optional<std::uint64_t> seed;
};

std::unique_ptr<Estimator> make_estimator(const EstimatorConfig& cfg, SplitRng rng);

// Builds and fits in one step; errors name the offending arm when one side of
// the data is empty.
std::unique_ptr<Estimator> fit_estimator(const EstimatorConfig& cfg, const TrainData& train,
                                         SplitRng rng);

}  // namespace confacq
