#pragma once

// Counter-based random streams. A stream is identified by a 64-bit key; the
// i-th output is a function of (key, i) alone, so streams keyed by tree
// address reproduce the same values in any traversal order.

#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace hypbbm {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Key of a child stream. Distinct tags give unrelated keys.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t tag) noexcept {
  return mix64(parent ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix64(key_ ^ mix64(counter_++)); }

  std::uint64_t key() const noexcept { return key_; }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }
  double normal() { return normal_(*this); }
  double exponential(double rate) { return -std::log(uniform()) / rate; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  // Ziggurat sampler; its output is the same on every platform.
  boost::random::normal_distribution<double> normal_;
};

}  // namespace hypbbm
