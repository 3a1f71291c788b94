#include "parisi/common/rng.hpp"

#include <cmath>
#include <numbers>

namespace parisi::rng {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Key derive(std::uint64_t seed, std::uint64_t stream) {
  return Key{mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL))};
}

Key derive(Key parent, std::uint64_t stream) { return derive(parent.value, stream); }

std::uint64_t bits_at(Key key, std::uint64_t index) {
  return mix64(key.value ^ mix64(index));
}

double uniform_at(Key key, std::uint64_t index) {
  return (static_cast<double>(bits_at(key, index) >> 11) + 0.5) * 0x1.0p-53;
}

double normal_at(Key key, std::uint64_t index) {
  const double u1 = uniform_at(key, 2 * index);
  const double u2 = uniform_at(key, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Stream::exponential() { return -std::log(uniform()); }

std::uint64_t Stream::below(std::uint64_t n) {
  return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
}

}  // namespace parisi::rng
