#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "rted/normal.hpp"

namespace rted {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed in a named namespace, e.g. derive_seed("eval:", 7). Distinct prefixes
/// can never produce the same stream by accident of equal integer seeds.
inline std::uint64_t derive_seed(std::string_view ns, std::uint64_t seed) {
  return splitmix64(fnv1a64(ns) ^ splitmix64(seed));
}

/// Per-item substream: seed xor item index, mixed.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ index);
}

/// mt19937_64 with bit-exact uniform and normal transforms, so a seed yields
/// the same numbers on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_quantile(uniform()); }

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rted
