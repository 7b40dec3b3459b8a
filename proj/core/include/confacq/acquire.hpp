#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "confacq/estimators.hpp"
#include "confacq/rng.hpp"
#include "confacq/sample.hpp"

namespace confacq {

// ---------------------------------------------------------------------------
// Kernel and MMD. Feature rows are (x, a) concatenations; the RBF kernel is
// k(u, v) = exp(-|u - v|^2 / (2 h^2)).
// ---------------------------------------------------------------------------

struct KernelSpec {
  enum class Kind { kRbf };
  Kind kind = Kind::kRbf;
  double bandwidth = 0.0;  // <= 0: median heuristic at resolution time
};

double resolve_bandwidth(const KernelSpec& kernel, const Eigen::MatrixXd& reference_points);

double rbf_kernel_value(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double bandwidth);

// Biased (V-statistic) empirical MMD,
//   sqrt(max(0, mean k(u,u') + mean k(v,v') - 2 mean k(u,v))),
// valid down to singleton sets. Rows of u and v are points.
double mmd(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, double bandwidth);
// Convenience overload; a median-heuristic kernel resolves on the stacked
// points of both sets.
double mmd(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, const KernelSpec& kernel);

// Weighted treated/control kernel-sum cache. Scoring a candidate against a
// frozen train set is O(|train|) instead of O(|train|^2); tentative greedy
// additions fold in as weighted points. Weighted MMD generalizes the
// V-statistic with total-weight normalization.
class MmdScorer {
 public:
  MmdScorer(const Eigen::MatrixXd& treated, const Eigen::MatrixXd& control, double bandwidth);

  double bandwidth() const { return bandwidth_; }
  double current_mmd() const;

  // MMD of (treated + point, control) for arm 1, or (treated, control + point)
  // for arm 0, with the point at unit weight. Does not modify the cache.
  double mmd_with_added(const Eigen::VectorXd& point, int arm) const;

  // Permanently folds a point into an arm with the given weight.
  void add_weighted(const Eigen::VectorXd& point, double weight, int arm);

 private:
  struct Side {
    std::vector<Eigen::VectorXd> points;
    std::vector<double> weights;
    double total_weight = 0.0;
    double self_sum = 0.0;  // sum_ij w_i w_j k(p_i, p_j), diagonal included
  };

  double cross_against(const Side& side, const Eigen::VectorXd& point) const;

  Side sides_[2];  // [0] = control, [1] = treated
  double cross_sum_ = 0.0;
  double bandwidth_;
};

// Exact two-branch expectation over the candidate's binary attribute:
//   p(a=1) * MMD(side + (x,1)) + p(a=0) * MMD(side + (x,0)),
// the candidate joining its own treatment arm. Both arms must be nonempty.
double expected_mmd_after_add(const Eigen::VectorXd& candidate_x, int candidate_t, double p_a1,
                              const Eigen::MatrixXd& treated, const Eigen::MatrixXd& control,
                              const KernelSpec& kernel);

// ---------------------------------------------------------------------------
// Strategies.
// ---------------------------------------------------------------------------

enum class StrategyKind { kRandom, kUncertainty, kCb, kOe };

std::string to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(const std::string& s);

enum class CbScoringMode { kIndependent, kGreedySequential };

struct AcquisitionRequest {
  StrategyKind strategy = StrategyKind::kRandom;
  int batch_size = 10;  // clamped to |pool|
  KernelSpec kernel;                                   // cb only
  CbScoringMode scoring_mode = CbScoringMode::kIndependent;  // cb only
};

// Outcome-error score: absolute gap between the attribute-expected factual
// prediction and the observed outcome.
inline double oe_score(double p_a1, double yhat_a1, double yhat_a0, double y) {
  return std::abs(p_a1 * yhat_a1 + (1.0 - p_a1) * yhat_a0 - y);
}

// (x, a_observed) feature matrices of the current train set, split by arm.
struct ArmFeatures {
  Eigen::MatrixXd treated;
  Eigen::MatrixXd control;
};
ArmFeatures train_arm_features(const std::vector<Sample>& samples,
                               const std::vector<int>& train_idx);

// All selectors return pool indices ordered by selection preference. Ties
// break by a seeded hash of the sample id, so pool ordering is irrelevant.
std::vector<int> select_random(const std::vector<Sample>& samples, const DataPartition& part,
                               const AcquisitionRequest& req, SplitRng rng);

std::vector<int> select_uncertainty(const std::vector<Sample>& samples,
                                    const DataPartition& part, const AttributeModel& cl_a,
                                    const AcquisitionRequest& req, SplitRng rng);

std::vector<int> select_cb(const std::vector<Sample>& samples, const DataPartition& part,
                           const AttributeModel& cl_a, const AcquisitionRequest& req,
                           SplitRng rng);

std::vector<int> select_oe(const std::vector<Sample>& samples, const DataPartition& part,
                           const AttributeModel& cl_a, const Estimator& cl_y,
                           const AcquisitionRequest& req, SplitRng rng);

// Dispatch on req.strategy; cl_y may be null for strategies that ignore it.
std::vector<int> select_batch(const std::vector<Sample>& samples, const DataPartition& part,
                              const AttributeModel& cl_a, const Estimator* cl_y,
                              const AcquisitionRequest& req, SplitRng rng);

}  // namespace confacq
