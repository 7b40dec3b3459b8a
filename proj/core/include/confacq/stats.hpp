#pragma once

#include <vector>

namespace confacq {

double mean_of(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);  // n-1 denominator

// Normal-approximation confidence interval, half_width = z * sd / sqrt(n)
// with z = 1.96 at the default level.
struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
  int n = 0;
};

MeanCi mean_ci(const std::vector<double>& v);

enum class Alternative { kTwoSided, kLess, kGreater };

// Student t CDF with (possibly fractional) degrees of freedom.
double student_t_cdf(double t, double df);

// Welch two-sample t-test. kLess tests mean(a) < mean(b).
double welch_t_test_p(const std::vector<double>& a, const std::vector<double>& b,
                      Alternative alternative);

// One-sample t-test on paired differences. kLess tests mean(d) < 0.
double paired_t_test_p(const std::vector<double>& diffs, Alternative alternative);

}  // namespace confacq
