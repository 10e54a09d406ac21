#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace degenlap {

/// Counter-based generator: the value for (seed, stream, index) is a pure
/// function of its arguments, so parallel consumers draw identical numbers
/// in any order or thread partition.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed * 0x9E3779B97F4A7C15ULL + mix(stream + 0x632BE59BD9B4E019ULL))) {}

  /// Child generator with an independent stream.
  CounterRng split(std::uint64_t stream) const {
    CounterRng child(0);
    child.key_ = mix(key_ ^ mix(stream + 0xD1B54A32D192ED03ULL));
    return child;
  }

  std::uint64_t bits(std::uint64_t index) const { return mix(key_ + mix(index)); }

  /// Uniform in [0, 1).
  double uniform(std::uint64_t index) const {
    return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
  }

  double uniform(std::uint64_t index, double lo, double hi) const {
    return lo + (hi - lo) * uniform(index);
  }

  /// Standard normal via Box-Muller on draws (2 index, 2 index + 1).
  double normal(std::uint64_t index) const {
    const double u1 = 1.0 - uniform(2 * index);
    const double u2 = uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  static std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finalizer
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

} // namespace degenlap
