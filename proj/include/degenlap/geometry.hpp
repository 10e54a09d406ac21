#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "degenlap/errors.hpp"

namespace degenlap {

/// Point in R^n for n in {1,2}. Unused coordinates are zero.
using Point = std::array<double, 2>;

inline double norm(const Point& x) { return std::hypot(x[0], x[1]); }

inline double distance(const Point& x, const Point& y) {
  return std::hypot(x[0] - y[0], x[1] - y[1]);
}

inline Point midpoint(const Point& x, const Point& y) {
  return {0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])};
}

struct BallSpec {
  Point center{0.0, 0.0};
  double radius = 1.0;
};

/// B_{x,y}: centre (x+y)/2, radius |x-y|/2.
inline BallSpec pair_ball(const Point& x, const Point& y) {
  return {midpoint(x, y), 0.5 * distance(x, y)};
}

/// Lebesgue measure of a ball of radius r in R^n.
inline double ball_volume(int dim, double r) {
  return dim == 1 ? 2.0 * r : std::numbers::pi * r * r;
}

/// Axis-aligned box [lo, hi]^n (all axes share the same bounds).
struct Box {
  int dim = 1;
  double lo = -1.0;
  double hi = 1.0;

  double side() const { return hi - lo; }
  double diameter() const { return side() * std::sqrt(static_cast<double>(dim)); }
  Point center() const {
    const double c = 0.5 * (lo + hi);
    return {c, dim == 2 ? c : 0.0};
  }
  bool contains(const Point& x, double slack = 0.0) const {
    for (int d = 0; d < dim; ++d) {
      if (x[d] < lo - slack || x[d] > hi + slack) return false;
    }
    return true;
  }
};

inline bool inside_ball(const BallSpec& b, const Point& x) {
  return distance(b.center, x) < b.radius;
}

} // namespace degenlap
