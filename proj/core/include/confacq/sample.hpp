#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace confacq {

class Oracle;
struct GroundTruth;

// One unit of one realization. Observable state (x, t, factual outcome,
// acquired attribute) is public; simulator ground truth (true attribute and
// noiseless potential outcomes) sits behind GroundTruth so acquisition
// strategies and estimators cannot reach it. The only mutation after
// construction is the oracle filling in a_observed.
class Sample {
 public:
  Sample(std::string id, Eigen::VectorXd x, int a_true, int t, double y_factual,
         double y0_true, double y1_true);

  const std::string& id() const { return id_; }
  const Eigen::VectorXd& x() const { return x_; }
  int t() const { return t_; }
  double y_factual() const { return y_factual_; }
  const std::optional<int>& a_observed() const { return a_observed_; }

 private:
  friend struct GroundTruth;
  friend class Oracle;

  void reveal() { a_observed_ = a_true_; }
  void mask() { a_observed_.reset(); }

  std::string id_;
  Eigen::VectorXd x_;
  int t_;
  double y_factual_;
  std::optional<int> a_observed_;
  int a_true_;
  double y0_true_;
  double y1_true_;
};

// Evaluator/simulator-only access path to hidden fields. Strategy and
// estimator code must not include ground truth in any computation; keeping
// the accessors in one named struct makes that boundary auditable.
struct GroundTruth {
  static int a_true(const Sample& s) { return s.a_true_; }
  static double y0(const Sample& s) { return s.y0_true_; }
  static double y1(const Sample& s) { return s.y1_true_; }
  static void mask(Sample& s) { s.mask(); }
  static void reveal(Sample& s) { s.reveal(); }
};

// Disjoint train / pool / test index sets over one realization's samples.
// Train only grows, pool only shrinks, test is frozen.
class DataPartition {
 public:
  DataPartition(std::vector<int> train, std::vector<int> pool, std::vector<int> test,
                int n_total);

  const std::vector<int>& train() const { return train_; }
  const std::vector<int>& pool() const { return pool_; }
  const std::vector<int>& test() const { return test_; }
  int n_total() const { return n_total_; }

  bool in_pool(int idx) const;

  // Moves indices from pool to train; throws if any index is not in the pool.
  void acquire(const std::vector<int>& indices);

 private:
  std::vector<int> train_;
  std::vector<int> pool_;
  std::vector<int> test_;
  int n_total_;
};

// Uniform split: round(initial_labeled_fraction*n) train, round(test_fraction*n)
// test, remainder pool. Fractions must lie in (0,1) and sum below 1; every set
// must come out nonempty. Pool and test samples get a_observed stripped.
DataPartition partition(std::vector<Sample>& samples, double initial_labeled_fraction,
                        double test_fraction, std::uint64_t seed);

// Assembles a partition from explicit index sets (e.g. an MNAR-selected pool),
// enforcing the same invariants and stripping a_observed outside train.
DataPartition make_partition(std::vector<Sample>& samples, std::vector<int> train,
                             std::vector<int> pool, std::vector<int> test);

}  // namespace confacq
