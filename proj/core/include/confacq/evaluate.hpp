#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "confacq/estimators.hpp"
#include "confacq/sample.hpp"
#include "confacq/stats.hpp"

namespace confacq {

// ---------------------------------------------------------------------------
// Metrics. Effects are per-sample y1 - y0; truth is the noiseless mean.
// ---------------------------------------------------------------------------

// | mean(predicted effect) - mean(true effect) |
double eps_ate(const Eigen::VectorXd& predicted_effect, const Eigen::VectorXd& true_effect);

// mean squared per-sample effect error
double pehe(const Eigen::VectorXd& predicted_effect, const Eigen::VectorXd& true_effect);

struct MetricsRecord {
  int iteration = 0;
  int n_acquired = 0;
  double eps_ate = 0.0;
  double pehe = 0.0;
  double sqrt_pehe = 0.0;
  int n_treated_acquired = 0;
  int n_control_acquired = 0;
};

struct AcquisitionTrace {
  int realization = 0;
  std::string strategy;
  std::string estimator;
  std::vector<MetricsRecord> records;
  std::vector<std::string> acquired_ids;  // acquisition order
  std::vector<int> acquired_arms;         // aligned treatment labels
  double optimal_eps_ate = std::numeric_limits<double>::quiet_NaN();
  double optimal_sqrt_pehe = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  std::string failure;
};

// Evaluation view of the frozen test set; built through the ground-truth
// gateway, never visible to strategies.
struct TestSet {
  Eigen::MatrixXd x;
  Eigen::VectorXd a_true;
  Eigen::VectorXd true_effect;
};

TestSet assemble_test(const std::vector<Sample>& samples, const std::vector<int>& test_idx);

struct TestMetrics {
  double eps_ate = 0.0;
  double pehe = 0.0;
  double sqrt_pehe = 0.0;
};

TestMetrics evaluate_on_test(const Estimator& model, const TestSet& test);

// Reference performance when every attribute value is acquired: fit on
// train + pool with the true attribute everywhere, evaluate on test.
struct OptimalReference {
  double eps_ate = 0.0;
  double sqrt_pehe = 0.0;
};

OptimalReference optimal_reference(const std::vector<Sample>& samples,
                                   const DataPartition& part, const EstimatorConfig& cfg,
                                   SplitRng fit_rng);

// ---------------------------------------------------------------------------
// Sample-efficiency statistics.
// ---------------------------------------------------------------------------

enum class MetricKind { kEpsAte, kSqrtPehe };

// Smallest n_acquired from which the metric stays within (1 + pct) * optimal
// for the rest of the trace; nullopt when never reached. When optimal is
// effectively zero an absolute tolerance of 1e-3 applies instead.
std::optional<int> samples_to_within(const AcquisitionTrace& trace, double optimal,
                                     MetricKind metric, double pct = 0.01);

struct EfficiencySummary {
  std::string strategy;
  std::string estimator;
  int n_traces = 0;
  int n_censored_eps_ate = 0;
  int n_censored_sqrt_pehe = 0;
  MeanCi samples_to_eps_ate;
  MeanCi samples_to_sqrt_pehe;
  bool significantly_best_eps_ate = false;  // one-sided Welch vs every other strategy
  bool significantly_best_sqrt_pehe = false;
};

struct CurvePoint {
  int iteration = 0;
  int n_acquired = 0;
  MeanCi eps_ate;
  MeanCi sqrt_pehe;
};

struct OptimalSummary {
  std::string estimator;
  MeanCi eps_ate;
  MeanCi sqrt_pehe;
};

struct Summary {
  std::vector<OptimalSummary> optimal;                         // Table 1a shape
  std::vector<EfficiencySummary> efficiency;                   // Table 1b shape
  std::map<std::pair<std::string, std::string>, std::vector<CurvePoint>> curves;
  // (estimator, metric, strategy_a, strategy_b) -> one-sided Welch p(a < b)
  std::vector<std::tuple<std::string, std::string, std::string, std::string, double>> pairwise_p;
};

// Aggregates traces grouped by (strategy, estimator). Every group must carry
// at least two successful traces. Censored traces are excluded from the
// efficiency means; their count is reported.
Summary summarize(const std::vector<AcquisitionTrace>& traces, double pct = 0.01);

// ---------------------------------------------------------------------------
// Analysis exports.
// ---------------------------------------------------------------------------

struct PcaProjection {
  Eigen::MatrixXd coords;        // n x 2
  Eigen::Vector2d explained;     // top two eigenvalues (descending)
  std::vector<std::string> ids;
  std::vector<int> arm;
  bool rank_deficient = false;   // second component zeroed
};

// Projects (x, a_observed) of the given samples onto the top two principal
// components. Requires >= 3 samples and >= 2 features. Component signs are
// fixed by making each component's largest-magnitude loading positive.
PcaProjection pca_project(const std::vector<Sample>& samples, const std::vector<int>& idx);

// Cumulative (treated, control) acquisition counts per record.
std::vector<std::pair<int, int>> arm_counts(const AcquisitionTrace& trace);

// ---------------------------------------------------------------------------
// CSV I/O for traces and summaries.
// ---------------------------------------------------------------------------

void write_traces_csv(const std::filesystem::path& path,
                      const std::vector<AcquisitionTrace>& traces);
std::vector<AcquisitionTrace> read_traces_csv(const std::filesystem::path& path);

void write_optimal_csv(const std::filesystem::path& path,
                       const std::vector<AcquisitionTrace>& traces);
// Merges per-realization optimal references back into traces (by realization
// and estimator).
void read_optimal_csv(const std::filesystem::path& path, std::vector<AcquisitionTrace>& traces);

void write_summary_csvs(const std::filesystem::path& dir, const Summary& summary);

}  // namespace confacq
