#include "confacq/nets.hpp"

#include <cmath>
#include <stdexcept>

#include "confacq/errors.hpp"

namespace confacq {

namespace {

// tanh written through exp so Eigen's vectorized pexp kicks in for doubles;
// |x| is capped where exp would saturate anyway.
template <typename Derived>
auto fast_tanh(const Eigen::ArrayBase<Derived>& z) {
  return 1.0 - 2.0 / ((2.0 * z.min(20.0).max(-20.0)).exp() + 1.0);
}

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& z) {
  // Stable in both tails.
  return 0.5 * (1.0 + fast_tanh(0.5 * z));
}

struct TargetScale {
  double mean = 0.0;
  double sd = 1.0;
  bool constant = false;
};

TargetScale scale_targets(const Eigen::VectorXd& y) {
  TargetScale s;
  s.mean = y.mean();
  const double var = (y.array() - s.mean).square().sum() /
                     std::max<double>(1.0, static_cast<double>(y.size() - 1));
  if (var < 1e-24) {
    s.constant = true;
  } else {
    s.sd = std::sqrt(var);
  }
  return s;
}

}  // namespace

Eigen::MatrixXd xavier_init(Eigen::Index rows, Eigen::Index cols, SplitRng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-bound, bound);
  return m;
}

// ---------------------------------------------------------------------------
// Linear / logistic / constant components
// ---------------------------------------------------------------------------

void LinearRegressor::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() == 0 || x.rows() != y.size()) throw FitError("linear regressor: bad shape");
  const auto n = x.rows();
  const auto p = x.cols();
  Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Eigen::VectorXd x_mean = x.colwise().mean().transpose();
  const double ym = y.mean();
  Eigen::VectorXd yc = y.array() - ym;
  Eigen::MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += ridge_ * static_cast<double>(n);
  coef_ = gram.ldlt().solve(xc.transpose() * yc);
  intercept_ = ym - x_mean.dot(coef_);
  (void)p;
}

Eigen::VectorXd LinearRegressor::predict(const Eigen::MatrixXd& x) const {
  if (coef_.size() == 0) throw std::logic_error("linear regressor: predict before fit");
  return (x * coef_).array() + intercept_;
}

void LogisticRegressor::fit(const Eigen::MatrixXd& x, const Eigen::VectorXi& y) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (n == 0 || y.size() != n) throw FitError("logistic regressor: bad shape");
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);  // intercept last
  Eigen::MatrixXd xa(n, p + 1);
  xa.leftCols(p) = x;
  xa.col(p).setOnes();
  const Eigen::VectorXd yd = y.cast<double>();
  for (int it = 0; it < max_iter_; ++it) {
    const Eigen::ArrayXd mu = sigmoid((xa * beta).array());
    const Eigen::ArrayXd w = (mu * (1.0 - mu)).max(1e-10);
    const Eigen::VectorXd grad = xa.transpose() * (mu.matrix() - yd);
    Eigen::MatrixXd hess = xa.transpose() * w.matrix().asDiagonal() * xa;
    hess.diagonal().array() += 1e-8;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    beta -= step;
    if (step.norm() < tol_) break;
  }
  coef_ = beta.head(p);
  intercept_ = beta[p];
}

Eigen::VectorXd LogisticRegressor::predict_proba(const Eigen::MatrixXd& x) const {
  if (coef_.size() == 0 && x.cols() != 0)
    throw std::logic_error("logistic regressor: predict before fit");
  return sigmoid(((x * coef_).array() + intercept_));
}

void ConstantRegressor::fit(const Eigen::MatrixXd&, const Eigen::VectorXd& y) {
  if (y.size() == 0) throw FitError("constant regressor: empty targets");
  value_ = y.mean();
}

Eigen::VectorXd ConstantRegressor::predict(const Eigen::MatrixXd& x) const {
  return Eigen::VectorXd::Constant(x.rows(), value_);
}

void ConstantClassifier::fit(const Eigen::MatrixXd&, const Eigen::VectorXi& y) {
  if (y.size() == 0) throw FitError("constant classifier: empty targets");
  value_ = fixed_ >= 0.0 ? fixed_ : y.cast<double>().mean();
}

Eigen::VectorXd ConstantClassifier::predict_proba(const Eigen::MatrixXd& x) const {
  return Eigen::VectorXd::Constant(x.rows(), value_);
}

// ---------------------------------------------------------------------------
// Shallow nets (doubly robust components)
// ---------------------------------------------------------------------------

void ShallowNetRegressor::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const auto n = x.rows();
  if (n == 0 || y.size() != n) throw FitError("shallow net: bad training shape");
  const TargetScale scale = scale_targets(y);
  y_mean_ = scale.mean;
  y_sd_ = scale.sd;
  constant_ = scale.constant;
  if (constant_) return;
  const Eigen::VectorXd yz = (y.array() - y_mean_) / y_sd_;

  const auto d = x.cols();
  const auto h = static_cast<Eigen::Index>(cfg_.hidden);
  SplitRng init = rng_.split("init");
  w1_ = xavier_init(d, h, init);
  b1_ = Eigen::VectorXd::Zero(h);
  w2_ = xavier_init(h, 1, init).col(0);
  b2_ = 0.0;

  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd hidden(n, h), dz(n, h), grad_w1(d, h);
  Eigen::VectorXd pred(n), delta(n), grad_w2(h), grad_b1(h);
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    hidden.noalias() = x * w1_;
    hidden.rowwise() += b1_.transpose();
    hidden = fast_tanh(hidden.array());
    pred.noalias() = hidden * w2_;
    pred.array() += b2_;
    delta = (pred - yz) * inv_n;
    // Backprop.
    grad_w2.noalias() = hidden.transpose() * delta;
    const double grad_b2 = delta.sum();
    dz.noalias() = delta * w2_.transpose();
    dz.array() *= 1.0 - hidden.array().square();
    grad_w1.noalias() = x.transpose() * dz;
    grad_b1 = dz.colwise().sum();
    w1_ -= cfg_.learning_rate * grad_w1;
    b1_ -= cfg_.learning_rate * grad_b1;
    w2_ -= cfg_.learning_rate * grad_w2;
    b2_ -= cfg_.learning_rate * grad_b2;
  }
}

Eigen::VectorXd ShallowNetRegressor::predict(const Eigen::MatrixXd& x) const {
  if (constant_) return Eigen::VectorXd::Constant(x.rows(), y_mean_);
  if (w1_.size() == 0) throw std::logic_error("shallow net: predict before fit");
  Eigen::MatrixXd hidden = fast_tanh(((x * w1_).rowwise() + b1_.transpose()).array());
  Eigen::VectorXd z = (hidden * w2_).array() + b2_;
  return (z.array() * y_sd_ + y_mean_).matrix();
}

void ShallowNetClassifier::fit(const Eigen::MatrixXd& x, const Eigen::VectorXi& y) {
  const auto n = x.rows();
  if (n == 0 || y.size() != n) throw FitError("shallow net: bad training shape");
  const double mean = y.cast<double>().mean();
  if (mean == 0.0 || mean == 1.0) {
    constant_ = true;
    prior_ = mean;
    return;
  }
  constant_ = false;

  const auto d = x.cols();
  const auto h = static_cast<Eigen::Index>(cfg_.hidden);
  SplitRng init = rng_.split("init");
  w1_ = xavier_init(d, h, init);
  b1_ = Eigen::VectorXd::Zero(h);
  w2_ = xavier_init(h, 1, init).col(0);
  b2_ = 0.0;

  const Eigen::VectorXd yd = y.cast<double>();
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd hidden(n, h), dz(n, h), grad_w1(d, h);
  Eigen::VectorXd prob(n), delta(n), grad_w2(h), grad_b1(h);
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    hidden.noalias() = x * w1_;
    hidden.rowwise() += b1_.transpose();
    hidden = fast_tanh(hidden.array());
    prob.noalias() = hidden * w2_;
    prob = sigmoid(prob.array() + b2_);
    delta = (prob - yd) * inv_n;  // d(logloss)/dz
    grad_w2.noalias() = hidden.transpose() * delta;
    const double grad_b2 = delta.sum();
    dz.noalias() = delta * w2_.transpose();
    dz.array() *= 1.0 - hidden.array().square();
    grad_w1.noalias() = x.transpose() * dz;
    grad_b1 = dz.colwise().sum();
    w1_ -= cfg_.learning_rate * grad_w1;
    b1_ -= cfg_.learning_rate * grad_b1;
    w2_ -= cfg_.learning_rate * grad_w2;
    b2_ -= cfg_.learning_rate * grad_b2;
  }
}

Eigen::VectorXd ShallowNetClassifier::predict_proba(const Eigen::MatrixXd& x) const {
  if (constant_) return Eigen::VectorXd::Constant(x.rows(), prior_);
  if (w1_.size() == 0) throw std::logic_error("shallow net: predict before fit");
  Eigen::MatrixXd hidden = fast_tanh(((x * w1_).rowwise() + b1_.transpose()).array());
  return sigmoid(((hidden * w2_).array() + b2_));
}

// ---------------------------------------------------------------------------
// MLP regressor (multihead estimator component)
// ---------------------------------------------------------------------------

Eigen::VectorXd MlpRegressor::forward(const Eigen::MatrixXd& x,
                                      const std::vector<Eigen::MatrixXd>& w,
                                      const std::vector<Eigen::VectorXd>& b) const {
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l + 1 < w.size(); ++l)
    h = ((h * w[l]).rowwise() + b[l].transpose()).cwiseMax(0.0);
  return ((h * w.back()).rowwise() + b.back().transpose()).col(0);
}

void MlpRegressor::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const auto n = x.rows();
  if (n == 0 || y.size() != n) throw FitError("mlp: bad training shape");
  const TargetScale scale = scale_targets(y);
  y_mean_ = scale.mean;
  y_sd_ = scale.sd;
  constant_ = scale.constant;
  if (constant_) return;
  const Eigen::VectorXd yz = (y.array() - y_mean_) / y_sd_;

  // Validation slice for early stopping (seeded shuffle, last chunk).
  std::vector<int> order(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  SplitRng split_rng = rng_.split("val_split");
  split_rng.shuffle(order);
  const auto n_val = static_cast<Eigen::Index>(
      std::floor(cfg_.validation_fraction * static_cast<double>(n)));
  const bool use_val = n_val >= 1 && n - n_val >= 2;
  const auto n_fit = use_val ? n - n_val : n;
  Eigen::MatrixXd xf(n_fit, x.cols());
  Eigen::VectorXd yf(n_fit);
  Eigen::MatrixXd xv(use_val ? n_val : 0, x.cols());
  Eigen::VectorXd yv(use_val ? n_val : 0);
  for (Eigen::Index i = 0; i < n_fit; ++i) {
    xf.row(i) = x.row(order[static_cast<std::size_t>(i)]);
    yf[i] = yz[order[static_cast<std::size_t>(i)]];
  }
  for (Eigen::Index i = 0; i < (use_val ? n_val : 0); ++i) {
    xv.row(i) = x.row(order[static_cast<std::size_t>(n_fit + i)]);
    yv[i] = yz[order[static_cast<std::size_t>(n_fit + i)]];
  }

  std::vector<Eigen::Index> sizes;
  sizes.push_back(x.cols());
  for (int hdim : cfg_.hidden) sizes.push_back(hdim);
  sizes.push_back(1);
  const std::size_t n_layers = sizes.size() - 1;
  SplitRng init = rng_.split("init");
  w_.clear();
  b_.clear();
  for (std::size_t l = 0; l < n_layers; ++l) {
    w_.push_back(xavier_init(sizes[l], sizes[l + 1], init));
    b_.push_back(Eigen::VectorXd::Zero(sizes[l + 1]));
  }

  // Adam state.
  std::vector<Eigen::MatrixXd> mw(n_layers), vw(n_layers);
  std::vector<Eigen::VectorXd> mb(n_layers), vb(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    mw[l] = Eigen::MatrixXd::Zero(w_[l].rows(), w_[l].cols());
    vw[l] = mw[l];
    mb[l] = Eigen::VectorXd::Zero(b_[l].size());
    vb[l] = mb[l];
  }
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  auto best_w = w_;
  auto best_b = b_;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  const double inv_n = 1.0 / static_cast<double>(n_fit);

  std::vector<Eigen::MatrixXd> acts(n_layers + 1);
  for (int epoch = 1; epoch <= cfg_.max_epochs; ++epoch) {
    acts[0] = xf;
    for (std::size_t l = 0; l + 1 < n_layers; ++l)
      acts[l + 1] = ((acts[l] * w_[l]).rowwise() + b_[l].transpose()).cwiseMax(0.0);
    Eigen::VectorXd pred =
        ((acts[n_layers - 1] * w_.back()).rowwise() + b_.back().transpose()).col(0);
    Eigen::MatrixXd delta = (pred - yf) * inv_n;  // n x 1

    const double corr1 = 1.0 - std::pow(beta1, epoch);
    const double corr2 = 1.0 - std::pow(beta2, epoch);
    for (std::size_t l = n_layers; l-- > 0;) {
      Eigen::MatrixXd grad_w = acts[l].transpose() * delta;
      Eigen::VectorXd grad_b = delta.colwise().sum();
      if (l > 0) {
        Eigen::MatrixXd back = delta * w_[l].transpose();
        delta = back.array() * (acts[l].array() > 0.0).cast<double>();
      }
      mw[l] = beta1 * mw[l] + (1.0 - beta1) * grad_w;
      vw[l] = beta2 * vw[l] + (1.0 - beta2) * grad_w.cwiseProduct(grad_w);
      mb[l] = beta1 * mb[l] + (1.0 - beta1) * grad_b;
      vb[l] = beta2 * vb[l] + (1.0 - beta2) * grad_b.cwiseProduct(grad_b);
      w_[l].array() -= cfg_.learning_rate * (mw[l].array() / corr1) /
                       ((vw[l].array() / corr2).sqrt() + eps);
      b_[l].array() -= cfg_.learning_rate * (mb[l].array() / corr1) /
                       ((vb[l].array() / corr2).sqrt() + eps);
    }

    if (use_val) {
      const Eigen::VectorXd val_pred = forward(xv, w_, b_);
      const double val_loss = (val_pred - yv).squaredNorm() / static_cast<double>(n_val);
      if (val_loss + 1e-12 < best_val) {
        best_val = val_loss;
        best_w = w_;
        best_b = b_;
        since_best = 0;
      } else if (++since_best >= cfg_.patience) {
        break;
      }
    }
  }
  if (use_val) {
    w_ = best_w;
    b_ = best_b;
  }
}

Eigen::VectorXd MlpRegressor::predict(const Eigen::MatrixXd& x) const {
  if (constant_) return Eigen::VectorXd::Constant(x.rows(), y_mean_);
  if (w_.empty()) throw std::logic_error("mlp: predict before fit");
  Eigen::VectorXd z = forward(x, w_, b_);
  return (z.array() * y_sd_ + y_mean_).matrix();
}

}  // namespace confacq
