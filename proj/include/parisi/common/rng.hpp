#pragma once

// Counter-based random numbers. A Key names an independent stream; the
// i-th variate of a stream is a pure function of (key, i), so results do not
// depend on evaluation order or thread count.

#include <cstdint>

namespace parisi::rng {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

struct Key {
  std::uint64_t value = 0;
};

Key derive(std::uint64_t seed, std::uint64_t stream);
Key derive(Key parent, std::uint64_t stream);

std::uint64_t bits_at(Key key, std::uint64_t index);
/// Uniform on the open interval (0, 1) with 53 random bits.
double uniform_at(Key key, std::uint64_t index);
/// Standard normal by Box-Muller from uniforms 2i and 2i+1.
double normal_at(Key key, std::uint64_t index);

class Stream {
 public:
  explicit Stream(Key key) : key_(key) {}
  Stream(std::uint64_t seed, std::uint64_t stream) : key_(derive(seed, stream)) {}

  double uniform() { return uniform_at(key_, counter_++); }
  double normal() { return normal_at(key_, counter_++); }
  double exponential();
  std::uint64_t below(std::uint64_t n);
  Key key() const { return key_; }

 private:
  Key key_;
  std::uint64_t counter_ = 0;
};

}  // namespace parisi::rng
