#pragma once

#include <vector>

namespace degenlap {

/// Gauss-Legendre rule on [0, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached, thread-safe access to the m-point rule on [0, 1].
const GaussLegendre& gauss_legendre_unit(int m);

} // namespace degenlap
