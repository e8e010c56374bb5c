#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace dbyz {

/// Subsystems that own disjoint families of random streams.
enum class StreamTag : std::uint64_t {
  Sampling = 1,
  ClientGrad = 2,
  Attack = 3,
  Bucketing = 4,
  ProblemInit = 5,
  Partition = 6,
  Robustness = 7,
  Test = 99,
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based random stream. The value sequence depends only on
/// (seed, tag, a, b); two streams with different keys share no state, so the
/// order in which streams are created or drawn never matters.
///
/// Satisfies UniformRandomBitGenerator, so std distributions can consume it.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0, std::uint64_t b = 0)
      : key_(derive_key(seed, tag, a, b)) {}

  /// A child stream keyed off this stream's key; does not advance this stream.
  RngStream fork(std::uint64_t a, std::uint64_t b = 0) const {
    RngStream child(0, StreamTag::Test);
    child.key_ = derive_key(key_, StreamTag::Test, a, b);
    return child;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    return detail::splitmix64(key_ + 0x9e3779b97f4a7c15ULL * (++counter_));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double normal() {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(*this);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t key() const { return key_; }

 private:
  static std::uint64_t derive_key(std::uint64_t seed, StreamTag tag, std::uint64_t a,
                                  std::uint64_t b) {
    std::uint64_t h = detail::splitmix64(seed);
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(tag));
    h = detail::splitmix64(h ^ a);
    return detail::splitmix64(h ^ (b * 0xd6e8feb86659fd93ULL));
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace dbyz
