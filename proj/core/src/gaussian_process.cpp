#include "confacq/gaussian_process.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "confacq/errors.hpp"

namespace confacq {

namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::VectorXd a2 = a.rowwise().squaredNorm();
  const Eigen::VectorXd b2 = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * a * b.transpose();
  d2.colwise() += a2;
  d2.rowwise() += b2.transpose();
  return d2.cwiseMax(0.0);
}

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           double length_scale, double signal_var) {
  Eigen::MatrixXd d2 = squared_distances(a, b);
  return signal_var * (-d2 / (2.0 * length_scale * length_scale)).array().exp();
}

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double applied_jitter = 0.0;
};

Factorization factorize(const Eigen::MatrixXd& k, double noise_var, double jitter,
                        double max_jitter) {
  Factorization f;
  double j = jitter;
  while (true) {
    Eigen::MatrixXd reg = k;
    reg.diagonal().array() += noise_var + j;
    f.llt.compute(reg);
    if (f.llt.info() == Eigen::Success) {
      f.applied_jitter = j;
      return f;
    }
    if (j >= max_jitter)
      throw FitError("gp: kernel factorization failed even at jitter " + std::to_string(j));
    j = std::max(j * 10.0, 1e-12);
  }
}

double log_marginal_likelihood(const Eigen::LLT<Eigen::MatrixXd>& llt,
                               const Eigen::VectorXd& yc, const Eigen::VectorXd& alpha) {
  const auto n = static_cast<double>(yc.size());
  double log_det = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += std::log(l(i, i));
  return -0.5 * yc.dot(alpha) - log_det - 0.5 * n * std::log(2.0 * M_PI);
}

}  // namespace

double median_pairwise_distance(const Eigen::MatrixXd& x) {
  const auto n = x.rows();
  if (n < 2) return 1.0;
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      dists.push_back((x.row(i) - x.row(j)).norm());
  auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  const double med = *mid;
  return med > 0.0 ? med : 1.0;
}

void GpRegressor::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const auto n = x.rows();
  if (n == 0 || y.size() != n) throw FitError("gp: bad training shape");
  y_mean_ = y.mean();
  const double y_var = (y.array() - y_mean_).square().sum() /
                       std::max<double>(1.0, static_cast<double>(n - 1));
  constant_ = y_var < 1e-24;
  fitted_ = true;
  if (constant_) return;

  train_x_ = x;
  length_scale_ = cfg_.length_scale > 0.0 ? cfg_.length_scale : median_pairwise_distance(x);
  signal_var_ = cfg_.signal_var >= 0.0 ? cfg_.signal_var : y_var;
  noise_var_ = cfg_.noise_var >= 0.0 ? cfg_.noise_var : 0.1 * y_var;

  const Eigen::VectorXd yc = y.array() - y_mean_;
  auto solve_for = [&](double ls, double nv, Eigen::VectorXd& alpha_out,
                       Eigen::LLT<Eigen::MatrixXd>& llt_out) {
    const Eigen::MatrixXd k = rbf_kernel(train_x_, train_x_, ls, signal_var_);
    Factorization f = factorize(k, nv, cfg_.jitter, cfg_.max_jitter);
    alpha_out = f.llt.solve(yc);
    llt_out = std::move(f.llt);
  };

  if (!cfg_.optimize) {
    Eigen::LLT<Eigen::MatrixXd> llt;
    solve_for(length_scale_, noise_var_, alpha_, llt);
    return;
  }

  // Coarse marginal-likelihood refinement over multiplicative grids.
  const double ls_factors[] = {0.5, 1.0, 2.0};
  const double nv_factors[] = {0.3, 1.0, 3.0};
  double best_lml = -std::numeric_limits<double>::infinity();
  double best_ls = length_scale_, best_nv = noise_var_;
  const Eigen::VectorXd yc_copy = yc;
  for (double lf : ls_factors) {
    for (double nf : nv_factors) {
      const double ls = length_scale_ * lf;
      const double nv = noise_var_ * nf;
      try {
        Eigen::VectorXd alpha;
        Eigen::LLT<Eigen::MatrixXd> llt;
        solve_for(ls, nv, alpha, llt);
        const double lml = log_marginal_likelihood(llt, yc_copy, alpha);
        if (lml > best_lml) {
          best_lml = lml;
          best_ls = ls;
          best_nv = nv;
        }
      } catch (const FitError&) {
        // skip unfactorizable corner
      }
    }
  }
  length_scale_ = best_ls;
  noise_var_ = best_nv;
  Eigen::LLT<Eigen::MatrixXd> llt;
  solve_for(length_scale_, noise_var_, alpha_, llt);
}

Eigen::VectorXd GpRegressor::predict_mean(const Eigen::MatrixXd& x) const {
  if (!fitted_) throw std::logic_error("gp: predict before fit");
  if (constant_) return Eigen::VectorXd::Constant(x.rows(), y_mean_);
  const Eigen::MatrixXd ks = rbf_kernel(x, train_x_, length_scale_, signal_var_);
  return (ks * alpha_).array() + y_mean_;
}

}  // namespace confacq
