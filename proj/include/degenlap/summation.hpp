#pragma once

#include <cstddef>
#include <span>

namespace degenlap {

/// Fixed binary-tree sum. The tree depends only on the length, so the result
/// is reproducible for any caller-side partitioning.
inline double pairwise_sum(std::span<const double> v) {
  constexpr std::size_t leaf = 32;
  if (v.size() <= leaf) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

} // namespace degenlap
