#pragma once

#include <Eigen/Dense>

namespace confacq {

// Exact GP regression with an RBF kernel,
//   k(u, v) = signal_var * exp(-|u - v|^2 / (2 * length_scale^2)).
// Unset hyperparameters resolve at fit time: length scale by the median
// heuristic on training inputs, signal variance to var(y), noise variance to
// 0.1 * var(y). Factorization retries with escalating jitter.
struct GpConfig {
  double length_scale = 0.0;   // <=0: median heuristic
  double signal_var = -1.0;    // <0: var(y)
  double noise_var = -1.0;     // <0: 0.1 * var(y)
  double jitter = 1e-8;
  double max_jitter = 1e-2;
  bool optimize = false;       // small marginal-likelihood grid refinement
};

class GpRegressor {
 public:
  explicit GpRegressor(GpConfig cfg = {}) : cfg_(cfg) {}

  void fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
  Eigen::VectorXd predict_mean(const Eigen::MatrixXd& x) const;

  double length_scale() const { return length_scale_; }
  double signal_var() const { return signal_var_; }
  double noise_var() const { return noise_var_; }

 private:
  GpConfig cfg_;
  Eigen::MatrixXd train_x_;
  Eigen::VectorXd alpha_;
  double y_mean_ = 0.0;
  double length_scale_ = 1.0;
  double signal_var_ = 1.0;
  double noise_var_ = 0.1;
  bool constant_ = false;
  bool fitted_ = false;
};

// Median of pairwise Euclidean distances; 1.0 when all points coincide.
double median_pairwise_distance(const Eigen::MatrixXd& x);

}  // namespace confacq
