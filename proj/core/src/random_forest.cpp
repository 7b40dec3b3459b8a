#include "confacq/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "confacq/errors.hpp"
#include "confacq/log.hpp"

namespace confacq {

namespace {

double gini(double n1, double n) {
  if (n <= 0.0) return 0.0;
  const double p = n1 / n;
  return 2.0 * p * (1.0 - p);
}

}  // namespace

void RandomForestClassifier::fit(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                                 SplitRng rng) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (n == 0 || y.size() != n) throw FitError("random forest: bad training shape");
  trees_.clear();
  fitted_ = true;

  const double n1 = static_cast<double>(y.sum());
  prior_ = n1 / static_cast<double>(n);
  if (n1 == 0.0 || n1 == static_cast<double>(n)) {
    degenerate_ = true;
    log::warn("attribute model trained on a single class; using the constant prior " +
              std::to_string(prior_));
    oob_accuracy_ = 1.0;  // the constant prior is exact on this training set
    return;
  }
  degenerate_ = false;

  resolved_mtry_ = cfg_.mtry > 0 ? std::min<int>(cfg_.mtry, static_cast<int>(p))
                                 : std::max(1, static_cast<int>(std::floor(std::sqrt(
                                       static_cast<double>(p)))));

  trees_.resize(static_cast<std::size_t>(cfg_.n_trees));
  // OOB votes: sum of probabilities and counts per sample.
  Eigen::VectorXd oob_sum = Eigen::VectorXd::Zero(n);
  Eigen::VectorXi oob_count = Eigen::VectorXi::Zero(n);

  for (int ti = 0; ti < cfg_.n_trees; ++ti) {
    SplitRng tree_rng = rng.split(static_cast<std::uint64_t>(ti));
    std::vector<int> indices(static_cast<std::size_t>(n));
    std::vector<char> in_bag(static_cast<std::size_t>(n), 0);
    for (auto& idx : indices) {
      idx = static_cast<int>(tree_rng.below(static_cast<std::uint64_t>(n)));
      in_bag[static_cast<std::size_t>(idx)] = 1;
    }
    Tree& tree = trees_[static_cast<std::size_t>(ti)];
    build_node(tree, x, y, indices, 0, static_cast<int>(indices.size()), 0, tree_rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (in_bag[static_cast<std::size_t>(i)]) continue;
      oob_sum[i] += tree_predict(tree, x.row(i));
      oob_count[i] += 1;
    }
  }

  int scored = 0, correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (oob_count[i] == 0) continue;
    ++scored;
    const int pred = oob_sum[i] / oob_count[i] >= 0.5 ? 1 : 0;
    if (pred == y[i]) ++correct;
  }
  oob_accuracy_ = scored > 0 ? static_cast<double>(correct) / scored
                             : std::numeric_limits<double>::quiet_NaN();
}

int RandomForestClassifier::build_node(Tree& tree, const Eigen::MatrixXd& x,
                                       const Eigen::VectorXi& y, std::vector<int>& indices,
                                       int begin, int end, int depth, SplitRng& rng) {
  const int node_id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  const int n_node = end - begin;
  double n1 = 0.0;
  for (int k = begin; k < end; ++k) n1 += y[indices[static_cast<std::size_t>(k)]];
  tree.nodes[static_cast<std::size_t>(node_id)].p1 = n1 / n_node;

  const bool pure = n1 == 0.0 || n1 == static_cast<double>(n_node);
  if (pure || depth >= cfg_.max_depth || n_node < cfg_.min_samples_split) return node_id;

  // Sample mtry distinct candidate features.
  const auto p = static_cast<int>(x.cols());
  std::vector<int> features(static_cast<std::size_t>(p));
  std::iota(features.begin(), features.end(), 0);
  for (int k = 0; k < resolved_mtry_; ++k) {
    const int j = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(p - k)));
    std::swap(features[static_cast<std::size_t>(k)], features[static_cast<std::size_t>(j)]);
  }

  int best_feature = -1;
  double best_threshold = 0.0;
  double best_impurity = gini(n1, n_node);
  std::vector<std::pair<double, int>> values(static_cast<std::size_t>(n_node));
  for (int fk = 0; fk < resolved_mtry_; ++fk) {
    const int f = features[static_cast<std::size_t>(fk)];
    for (int k = 0; k < n_node; ++k) {
      const int idx = indices[static_cast<std::size_t>(begin + k)];
      values[static_cast<std::size_t>(k)] = {x(idx, f), y[idx]};
    }
    std::sort(values.begin(), values.end());
    double left_n1 = 0.0;
    for (int k = 0; k + 1 < n_node; ++k) {
      left_n1 += values[static_cast<std::size_t>(k)].second;
      if (values[static_cast<std::size_t>(k)].first ==
          values[static_cast<std::size_t>(k + 1)].first)
        continue;
      const double left_n = k + 1;
      const double right_n = n_node - left_n;
      const double impurity = (left_n * gini(left_n1, left_n) +
                               right_n * gini(n1 - left_n1, right_n)) /
                              n_node;
      if (impurity + 1e-12 < best_impurity) {
        best_impurity = impurity;
        best_feature = f;
        best_threshold = 0.5 * (values[static_cast<std::size_t>(k)].first +
                                values[static_cast<std::size_t>(k + 1)].first);
      }
    }
  }
  if (best_feature < 0) return node_id;  // no impurity-reducing split found

  auto mid = std::partition(indices.begin() + begin, indices.begin() + end,
                            [&](int idx) { return x(idx, best_feature) <= best_threshold; });
  const int split = static_cast<int>(mid - indices.begin());
  if (split == begin || split == end) return node_id;

  tree.nodes[static_cast<std::size_t>(node_id)].feature = best_feature;
  tree.nodes[static_cast<std::size_t>(node_id)].threshold = best_threshold;
  const int left = build_node(tree, x, y, indices, begin, split, depth + 1, rng);
  tree.nodes[static_cast<std::size_t>(node_id)].left = left;
  const int right = build_node(tree, x, y, indices, split, end, depth + 1, rng);
  tree.nodes[static_cast<std::size_t>(node_id)].right = right;
  return node_id;
}

double RandomForestClassifier::tree_predict(const Tree& tree,
                                            const Eigen::RowVectorXd& row) const {
  int node = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
    node = row[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
  return tree.nodes[static_cast<std::size_t>(node)].p1;
}

Eigen::VectorXd RandomForestClassifier::predict_proba(const Eigen::MatrixXd& x) const {
  if (!fitted_) throw std::logic_error("random forest: predict before fit");
  Eigen::VectorXd out(x.rows());
  if (degenerate_) {
    out.setConstant(prior_);
    return out;
  }
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double acc = 0.0;
    for (const auto& tree : trees_) acc += tree_predict(tree, x.row(i));
    out[i] = acc / static_cast<double>(trees_.size());
  }
  return out;
}

}  // namespace confacq
