#include "confacq/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace confacq {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

SplitRng::SplitRng(std::uint64_t seed) : key_(seed) {
  reseed_from_key();
}

void SplitRng::reseed_from_key() {
  std::uint64_t x = key_;
  for (auto& word : s_) word = splitmix64(x);
  has_spare_normal_ = false;
}

SplitRng SplitRng::split(std::string_view label) const {
  std::uint64_t x = key_ ^ rotl(fnv1a(label), 17);
  return SplitRng(splitmix64(x));
}

SplitRng SplitRng::split(std::uint64_t index) const {
  std::uint64_t x = key_ ^ rotl(index * 0xd1342543de82ef95ULL + 1, 23);
  return SplitRng(splitmix64(x));
}

std::uint64_t SplitRng::next_u64() {
  // xoshiro256**
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double SplitRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SplitRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double SplitRng::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  // Box-Muller on (0,1] uniforms.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  has_spare_normal_ = true;
  return r * std::cos(theta);
}

bool SplitRng::bernoulli(double p) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("bernoulli: p outside [0,1]");
  return uniform() < p;
}

std::uint64_t SplitRng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("below: n must be positive");
  const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

std::uint64_t mix_key(std::uint64_t seed, std::string_view token) {
  std::uint64_t x = seed ^ rotl(fnv1a(token), 31);
  return splitmix64(x);
}

}  // namespace confacq
