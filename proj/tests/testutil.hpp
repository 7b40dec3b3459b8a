#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "confacq/estimators.hpp"
#include "confacq/sample.hpp"

namespace confacq::testutil {

// Brute-force weighted V-statistic MMD, written independently of the library
// path so the cached implementation has something honest to disagree with.
inline double weighted_mmd_bruteforce(const std::vector<Eigen::VectorXd>& u,
                                      const std::vector<double>& wu,
                                      const std::vector<Eigen::VectorXd>& v,
                                      const std::vector<double>& wv, double h) {
  auto k = [h](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return std::exp(-(a - b).squaredNorm() / (2.0 * h * h));
  };
  double suu = 0.0, svv = 0.0, suv = 0.0, tu = 0.0, tv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    tu += wu[i];
    for (std::size_t j = 0; j < u.size(); ++j) suu += wu[i] * wu[j] * k(u[i], u[j]);
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    tv += wv[i];
    for (std::size_t j = 0; j < v.size(); ++j) svv += wv[i] * wv[j] * k(v[i], v[j]);
  }
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) suv += wu[i] * wv[j] * k(u[i], v[j]);
  const double m2 = suu / (tu * tu) + svv / (tv * tv) - 2.0 * suv / (tu * tv);
  return std::sqrt(std::max(0.0, m2));
}

inline double mmd_bruteforce(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, double h) {
  std::vector<Eigen::VectorXd> pu, pv;
  std::vector<double> wu, wv;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    pu.push_back(u.row(i).transpose());
    wu.push_back(1.0);
  }
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    pv.push_back(v.row(i).transpose());
    wv.push_back(1.0);
  }
  return weighted_mmd_bruteforce(pu, wu, pv, wv, h);
}

// Hand-built samples for small worlds. Truth fields are set explicitly;
// a_observed starts revealed (construction default).
inline Sample make_sample(const std::string& id, std::vector<double> x, int a, int t, double y,
                          double y0 = 0.0, double y1 = 0.0) {
  Eigen::VectorXd vx(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) vx[static_cast<Eigen::Index>(i)] = x[i];
  return Sample(id, std::move(vx), a, t, y, y0, y1);
}

// An estimator stub with a fixed prediction rule, for exercising selector
// arithmetic without a real fit.
class StubEstimator final : public Estimator {
 public:
  // predicts value0 when a = 0 and value1 when a = 1, everywhere
  StubEstimator(double value0, double value1, bool factual = true)
      : value0_(value0), value1_(value1), factual_(factual) {}

  void fit(const TrainData&) override {}
  PotentialOutcomes predict_potential(const Eigen::MatrixXd& x,
                                      const Eigen::VectorXd& a) const override {
    PotentialOutcomes po;
    po.y0.resize(x.rows());
    po.y1.resize(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double v = a[i] == 1.0 ? value1_ : value0_;
      po.y0[i] = v;
      po.y1[i] = v;
    }
    return po;
  }
  bool predicts_factual_outcome() const override { return factual_; }
  std::string kind() const override { return "stub"; }

 private:
  double value0_, value1_;
  bool factual_;
};

}  // namespace confacq::testutil
