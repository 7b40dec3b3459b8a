#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "confacq/rng.hpp"

namespace confacq {

// Small pluggable model interfaces. The doubly robust estimator is assembled
// from one probability model (propensity) and two regressors (per-arm outcome
// heads), which lets tests swap in deliberately misspecified components.

struct Regressor {
  virtual ~Regressor() = default;
  virtual void fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) = 0;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& x) const = 0;
};

struct ProbClassifier {
  virtual ~ProbClassifier() = default;
  virtual void fit(const Eigen::MatrixXd& x, const Eigen::VectorXi& y) = 0;
  virtual Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const = 0;
};

// Ordinary least squares with an intercept and a tiny ridge for conditioning.
class LinearRegressor : public Regressor {
 public:
  explicit LinearRegressor(double ridge = 1e-8) : ridge_(ridge) {}
  void fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) override;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override;

 private:
  double ridge_;
  Eigen::VectorXd coef_;
  double intercept_ = 0.0;
};

// Logistic regression via damped Newton iterations.
class LogisticRegressor : public ProbClassifier {
 public:
  explicit LogisticRegressor(int max_iter = 50, double tol = 1e-8)
      : max_iter_(max_iter), tol_(tol) {}
  void fit(const Eigen::MatrixXd& x, const Eigen::VectorXi& y) override;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const override;

 private:
  int max_iter_;
  double tol_;
  Eigen::VectorXd coef_;
  double intercept_ = 0.0;
};

class ConstantRegressor : public Regressor {
 public:
  void fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) override;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override;

 private:
  double value_ = 0.0;
};

class ConstantClassifier : public ProbClassifier {
 public:
  explicit ConstantClassifier(double fixed = -1.0) : fixed_(fixed) {}
  void fit(const Eigen::MatrixXd& x, const Eigen::VectorXi& y) override;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const override;

 private:
  double fixed_;  // <0 = use the training class frequency
  double value_ = 0.5;
};

// One tanh hidden layer trained by full-batch gradient descent with a fixed
// step. Regression targets are standardized internally; constant targets
// short-circuit to a constant predictor.
struct ShallowNetConfig {
  int hidden = 32;
  double learning_rate = 0.1;
  int epochs = 500;
};

class ShallowNetRegressor : public Regressor {
 public:
  ShallowNetRegressor(ShallowNetConfig cfg, SplitRng rng) : cfg_(cfg), rng_(rng) {}
  void fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) override;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override;

 private:
  ShallowNetConfig cfg_;
  SplitRng rng_;
  Eigen::MatrixXd w1_;
  Eigen::VectorXd b1_, w2_;
  double b2_ = 0.0;
  double y_mean_ = 0.0, y_sd_ = 1.0;
  bool constant_ = false;
};

class ShallowNetClassifier : public ProbClassifier {
 public:
  ShallowNetClassifier(ShallowNetConfig cfg, SplitRng rng) : cfg_(cfg), rng_(rng) {}
  void fit(const Eigen::MatrixXd& x, const Eigen::VectorXi& y) override;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const override;

 private:
  ShallowNetConfig cfg_;
  SplitRng rng_;
  Eigen::MatrixXd w1_;
  Eigen::VectorXd b1_, w2_;
  double b2_ = 0.0;
  bool constant_ = false;
  double prior_ = 0.5;
};

// ReLU feed-forward regressor trained with full-batch Adam and early stopping
// on a held-out slice of the training data.
struct MlpConfig {
  std::vector<int> hidden = {64, 32};
  double learning_rate = 1e-3;
  int max_epochs = 500;
  double validation_fraction = 0.1;
  int patience = 20;
};

class MlpRegressor : public Regressor {
 public:
  MlpRegressor(MlpConfig cfg, SplitRng rng) : cfg_(cfg), rng_(rng) {}
  void fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) override;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override;

 private:
  Eigen::VectorXd forward(const Eigen::MatrixXd& x,
                          const std::vector<Eigen::MatrixXd>& w,
                          const std::vector<Eigen::VectorXd>& b) const;

  MlpConfig cfg_;
  SplitRng rng_;
  std::vector<Eigen::MatrixXd> w_;
  std::vector<Eigen::VectorXd> b_;
  double y_mean_ = 0.0, y_sd_ = 1.0;
  bool constant_ = false;
};

// Xavier-uniform initialization shared by the net implementations.
Eigen::MatrixXd xavier_init(Eigen::Index rows, Eigen::Index cols, SplitRng& rng);

}  // namespace confacq
