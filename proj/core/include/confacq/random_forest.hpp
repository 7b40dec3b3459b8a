#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "confacq/rng.hpp"

namespace confacq {

struct RandomForestConfig {
  int n_trees = 100;
  int max_depth = 8;
  int min_samples_split = 2;
  int mtry = 0;  // features sampled per split; 0 = floor(sqrt(p))
};

// Binary classifier: bagged CART trees, Gini splits, leaf-frequency averaged
// probabilities.
class RandomForestClassifier {
 public:
  explicit RandomForestClassifier(RandomForestConfig cfg = {}) : cfg_(cfg) {}

  void fit(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, SplitRng rng);
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const;

  // Out-of-bag accuracy; NaN when no sample was ever out of bag.
  double oob_accuracy() const { return oob_accuracy_; }
  // True when the training data had a single class and the model fell back to
  // the constant class prior.
  bool degenerate() const { return degenerate_; }

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double p1 = 0.0;  // leaf class-1 frequency
  };
  struct Tree {
    std::vector<Node> nodes;
  };

  int build_node(Tree& tree, const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                 std::vector<int>& indices, int begin, int end, int depth, SplitRng& rng);
  double tree_predict(const Tree& tree, const Eigen::RowVectorXd& row) const;

  RandomForestConfig cfg_;
  int resolved_mtry_ = 1;
  std::vector<Tree> trees_;
  bool fitted_ = false;
  bool degenerate_ = false;
  double prior_ = 0.0;
  double oob_accuracy_ = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace confacq
