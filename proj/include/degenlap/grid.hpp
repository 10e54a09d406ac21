#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "degenlap/geometry.hpp"

namespace degenlap {

/// Node-indexed real values on a GridDomain (a discrete function u).
using FieldVector = std::vector<double>;

enum class DomainShape { box, ball };

struct GridConfig {
  int dim = 1;
  double lo = -2.0;
  double hi = 2.0;
  int nodes_per_axis = 8;
  /// Width of the exterior band kept for complement data. Unset means the
  /// collar equals diam(Omega).
  std::optional<double> collar_width;
  DomainShape shape = DomainShape::box;
};

/// Positions with a common cell volume. Grids produce one; tests build small
/// hand-made sets.
struct NodeSet {
  int dim = 1;
  std::vector<Point> points;
  double cell_volume = 1.0;

  std::size_t size() const { return points.size(); }
};

/// Cell-centred uniform grid on a box with the interior mask for Omega.
///
/// Omega is the open box [lo + collar, hi - collar]^n, or its inscribed open
/// ball when shape == ball. Nodes outside Omega carry complement data.
class GridDomain {
public:
  int dim() const { return dim_; }
  const Box& box() const { return box_; }
  int nodes_per_axis() const { return nodes_per_axis_; }
  double spacing() const { return h_; }
  double collar_width() const { return collar_; }
  DomainShape shape() const { return shape_; }
  double cell_volume() const { return dim_ == 1 ? h_ : h_ * h_; }

  std::size_t size() const { return nodes_.points.size(); }
  const Point& node(std::size_t i) const { return nodes_.points[i]; }
  const NodeSet& nodes() const { return nodes_; }

  bool is_interior(std::size_t i) const { return interior_[i] != 0; }
  const std::vector<std::size_t>& interior_indices() const { return interior_idx_; }
  const std::vector<std::size_t>& exterior_indices() const { return exterior_idx_; }

  /// Bounding box of Omega.
  Box omega_box() const { return Box{dim_, box_.lo + collar_, box_.hi - collar_}; }
  bool in_omega(const Point& x) const;
  /// Largest ball centred at the Omega centre contained in Omega.
  BallSpec omega_ball() const;
  /// True if the closed ball lies in Omega (up to a relative slack).
  bool contains_ball(const BallSpec& b) const;

  /// Linear index of the node (ix, iy).
  std::size_t index(int ix, int iy = 0) const {
    return static_cast<std::size_t>(ix) + static_cast<std::size_t>(iy) * nodes_per_axis_;
  }

  /// Node indices inside the open ball.
  std::vector<std::size_t> nodes_in_ball(const BallSpec& b) const;

  friend GridDomain make_grid(const GridConfig& config);

private:
  int dim_ = 1;
  Box box_;
  int nodes_per_axis_ = 0;
  double h_ = 0.0;
  double collar_ = 0.0;
  DomainShape shape_ = DomainShape::box;
  NodeSet nodes_;
  std::vector<char> interior_;
  std::vector<std::size_t> interior_idx_;
  std::vector<std::size_t> exterior_idx_;
};

/// Throws ConfigError on invalid geometry (fewer than 4 nodes per axis,
/// non-positive box, collar swallowing the box, a node at the origin).
GridDomain make_grid(const GridConfig& config);

enum class TestFamily { bump, trig, random_trig };

struct TestFunctionSpec {
  TestFamily family = TestFamily::bump;
  /// trig: all products sin(k_d pi (x_d - a)/L) with 1 <= k_d <= k_max.
  /// random_trig: modes up to k_max.
  int k_max = 3;
  int count = 10;
  std::uint64_t seed = 0;
  /// bump centre/radius; unset means the Omega centre and half-width.
  std::optional<Point> center;
  std::optional<double> radius;
};

/// exp(-1/(1-|x|^2)) on the unit ball, 0 outside.
double bump_profile(double r2);

std::vector<FieldVector> test_functions(const GridDomain& grid, const TestFunctionSpec& spec);

struct MollifierSpec {
  double epsilon = 0.0;
};

/// Convolution with the hat kernel max(0, 1 - |x|/eps), renormalised per node
/// so that constants are reproduced exactly.
FieldVector mollify(const GridDomain& grid, std::span<const double> u, const MollifierSpec& m);

/// CSV with header `x[,y],value`, 17 significant digits.
void write_field_csv(std::ostream& out, const GridDomain& grid, std::span<const double> u);
void write_field_csv(const std::string& path, const GridDomain& grid, std::span<const double> u);
/// Reads a field written by write_field_csv; nodes are matched by position.
FieldVector read_field_csv(const std::string& path, const GridDomain& grid);

/// Centered differences (one-sided at box faces); returns |grad u| per node.
FieldVector gradient_norm(const GridDomain& grid, std::span<const double> u);

} // namespace degenlap
