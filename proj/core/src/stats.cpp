#include "confacq/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <stdexcept>

#include "confacq/errors.hpp"

namespace confacq {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw DataError("mean of empty vector");
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) throw DataError("variance requires at least 2 values");
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / static_cast<double>(v.size() - 1);
}

MeanCi mean_ci(const std::vector<double>& v) {
  MeanCi ci;
  ci.n = static_cast<int>(v.size());
  ci.mean = mean_of(v);
  if (v.size() >= 2)
    ci.half_width = 1.96 * std::sqrt(sample_variance(v) / static_cast<double>(v.size()));
  return ci;
}

double student_t_cdf(double t, double df) {
  boost::math::students_t dist(df);
  return boost::math::cdf(dist, t);
}

namespace {

double p_from_t(double t, double df, Alternative alternative) {
  switch (alternative) {
    case Alternative::kLess: return student_t_cdf(t, df);
    case Alternative::kGreater: return 1.0 - student_t_cdf(t, df);
    case Alternative::kTwoSided: return 2.0 * (1.0 - student_t_cdf(std::abs(t), df));
  }
  throw std::logic_error("unhandled alternative");
}

double degenerate_p(double delta, Alternative alternative) {
  // No sampling variance at all: the direction of the mean difference decides.
  switch (alternative) {
    case Alternative::kLess: return delta < 0.0 ? 0.0 : 1.0;
    case Alternative::kGreater: return delta > 0.0 ? 0.0 : 1.0;
    case Alternative::kTwoSided: return delta != 0.0 ? 0.0 : 1.0;
  }
  throw std::logic_error("unhandled alternative");
}

}  // namespace

double welch_t_test_p(const std::vector<double>& a, const std::vector<double>& b,
                      Alternative alternative) {
  if (a.size() < 2 || b.size() < 2)
    throw DataError("welch test requires at least 2 values per group");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = sample_variance(a);
  const double vb = sample_variance(b);
  const double delta = mean_of(a) - mean_of(b);
  const double se2 = va / na + vb / nb;
  if (se2 <= 0.0) return degenerate_p(delta, alternative);
  const double t = delta / std::sqrt(se2);
  const double df = se2 * se2 /
                    (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
  return p_from_t(t, df, alternative);
}

double paired_t_test_p(const std::vector<double>& diffs, Alternative alternative) {
  if (diffs.size() < 2) throw DataError("paired test requires at least 2 differences");
  const double n = static_cast<double>(diffs.size());
  const double m = mean_of(diffs);
  const double v = sample_variance(diffs);
  if (v <= 0.0) return degenerate_p(m, alternative);
  const double t = m / std::sqrt(v / n);
  return p_from_t(t, n - 1.0, alternative);
}

}  // namespace confacq
