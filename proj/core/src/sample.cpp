#include "confacq/sample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "confacq/errors.hpp"
#include "confacq/rng.hpp"

namespace confacq {

Sample::Sample(std::string id, Eigen::VectorXd x, int a_true, int t, double y_factual,
               double y0_true, double y1_true)
    : id_(std::move(id)),
      x_(std::move(x)),
      t_(t),
      y_factual_(y_factual),
      a_observed_(a_true),
      a_true_(a_true),
      y0_true_(y0_true),
      y1_true_(y1_true) {
  if (a_true != 0 && a_true != 1) throw DataError("attribute must be binary");
  if (t != 0 && t != 1) throw DataError("treatment must be binary");
}

DataPartition::DataPartition(std::vector<int> train, std::vector<int> pool,
                             std::vector<int> test, int n_total)
    : train_(std::move(train)), pool_(std::move(pool)), test_(std::move(test)),
      n_total_(n_total) {
  std::sort(train_.begin(), train_.end());
  std::sort(pool_.begin(), pool_.end());
  std::sort(test_.begin(), test_.end());
  std::set<int> all;
  for (const auto* part : {&train_, &pool_, &test_})
    for (int idx : *part) {
      if (idx < 0 || idx >= n_total_) throw DataError("partition index out of range");
      if (!all.insert(idx).second) throw DataError("partition sets overlap");
    }
  if (static_cast<int>(all.size()) != n_total_)
    throw DataError("partition does not cover all samples");
}

bool DataPartition::in_pool(int idx) const {
  return std::binary_search(pool_.begin(), pool_.end(), idx);
}

void DataPartition::acquire(const std::vector<int>& indices) {
  // Validate the whole batch before mutating anything.
  std::vector<int> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw DataError("duplicate sample index in acquisition batch");
  for (int idx : sorted)
    if (!in_pool(idx))
      throw DataError("sample index " + std::to_string(idx) +
                      " is not in the pool (double acquisition?)");
  for (int idx : sorted) {
    pool_.erase(std::lower_bound(pool_.begin(), pool_.end(), idx));
    train_.insert(std::lower_bound(train_.begin(), train_.end(), idx), idx);
  }
}

namespace {

DataPartition finish_partition(std::vector<Sample>& samples, std::vector<int> train,
                               std::vector<int> pool, std::vector<int> test) {
  DataPartition part(std::move(train), std::move(pool), std::move(test),
                     static_cast<int>(samples.size()));
  for (int idx : part.pool()) GroundTruth::mask(samples[static_cast<std::size_t>(idx)]);
  for (int idx : part.test()) GroundTruth::mask(samples[static_cast<std::size_t>(idx)]);
  for (int idx : part.train()) GroundTruth::reveal(samples[static_cast<std::size_t>(idx)]);
  return part;
}

}  // namespace

DataPartition partition(std::vector<Sample>& samples, double initial_labeled_fraction,
                        double test_fraction, std::uint64_t seed) {
  const int n = static_cast<int>(samples.size());
  if (initial_labeled_fraction <= 0.0 || initial_labeled_fraction >= 1.0 ||
      test_fraction <= 0.0 || test_fraction >= 1.0 ||
      initial_labeled_fraction + test_fraction >= 1.0)
    throw ConfigError("partition fractions must lie in (0,1) and sum below 1");
  const int n_train = static_cast<int>(std::llround(initial_labeled_fraction * n));
  const int n_test = static_cast<int>(std::llround(test_fraction * n));
  const int n_pool = n - n_train - n_test;
  if (n_train < 1 || n_test < 1 || n_pool < 1)
    throw ConfigError("partition fractions produce an empty set");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  SplitRng rng(seed);
  rng.shuffle(order);
  std::vector<int> train(order.begin(), order.begin() + n_train);
  std::vector<int> test(order.begin() + n_train, order.begin() + n_train + n_test);
  std::vector<int> pool(order.begin() + n_train + n_test, order.end());
  return finish_partition(samples, std::move(train), std::move(pool), std::move(test));
}

DataPartition make_partition(std::vector<Sample>& samples, std::vector<int> train,
                             std::vector<int> pool, std::vector<int> test) {
  return finish_partition(samples, std::move(train), std::move(pool), std::move(test));
}

}  // namespace confacq
