#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace confacq {

// Splittable counter-based random stream. A stream is identified by a 64-bit
// key; children are derived by mixing a label (or index) into the parent key,
// never by consuming draws. Sibling streams are therefore independent of the
// order in which they are created or used, which keeps paired experiment
// arms reproducible no matter how work is scheduled.
//
// Draws come from xoshiro256** seeded from the key via splitmix64. The
// uniform/normal transforms are implemented here rather than with
// <random> distributions so that byte-identical output does not depend on
// the standard library in use.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed);

  SplitRng split(std::string_view label) const;
  SplitRng split(std::uint64_t index) const;

  std::uint64_t key() const { return key_; }

  std::uint64_t next_u64();
  double uniform();                        // [0, 1)
  double uniform(double lo, double hi);    // [lo, hi)
  double normal();                         // standard normal
  bool bernoulli(double p);
  std::uint64_t below(std::uint64_t n);    // uniform in [0, n), unbiased

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t s_[4];
  double spare_normal_ = 0.0;
  bool has_spare_normal_ = false;

  void reseed_from_key();
};

// Stateless mix of a seed and an arbitrary token; used for order-free
// tie-break keys.
std::uint64_t mix_key(std::uint64_t seed, std::string_view token);

}  // namespace confacq
