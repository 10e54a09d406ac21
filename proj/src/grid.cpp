#include "degenlap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "degenlap/errors.hpp"
#include "degenlap/random.hpp"

namespace degenlap {

namespace {

double default_collar(const GridConfig& c) {
  // Solve collar = diam(Omega) with diam(Omega) = k (side - 2 collar).
  const double side = c.hi - c.lo;
  const double k = c.shape == DomainShape::ball ? 1.0 : std::sqrt(static_cast<double>(c.dim));
  return k * side / (1.0 + 2.0 * k);
}

} // namespace

GridDomain make_grid(const GridConfig& config) {
  if (config.dim != 1 && config.dim != 2) throw ConfigError("grid: dimension must be 1 or 2");
  if (!(config.hi > config.lo)) throw ConfigError("grid: box must have positive side");
  if (config.nodes_per_axis < 4) throw ConfigError("grid: nodes_per_axis must be >= 4");
  const double collar = config.collar_width.value_or(default_collar(config));
  if (!(collar >= 0.0)) throw ConfigError("grid: collar_width must be >= 0");
  if (!(2.0 * collar < config.hi - config.lo)) throw ConfigError("grid: collar leaves no interior");

  GridDomain g;
  g.dim_ = config.dim;
  g.box_ = Box{config.dim, config.lo, config.hi};
  g.nodes_per_axis_ = config.nodes_per_axis;
  g.h_ = (config.hi - config.lo) / config.nodes_per_axis;
  g.collar_ = collar;
  g.shape_ = config.shape;
  g.nodes_.dim = config.dim;
  g.nodes_.cell_volume = g.cell_volume();

  const int n = config.nodes_per_axis;
  const int ny = config.dim == 2 ? n : 1;
  auto coord = [&](int i) { return config.lo + (i + 0.5) * g.h_; };
  const double eps = 1e-12 * (config.hi - config.lo);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const Point x{coord(ix), config.dim == 2 ? coord(iy) : 0.0};
      if (std::abs(x[0]) < eps && std::abs(x[1]) < eps) {
        throw ConfigError("grid: a node falls on the origin (use an even node count on origin-symmetric boxes)");
      }
      g.nodes_.points.push_back(x);
    }
  }
  g.interior_.resize(g.nodes_.points.size());
  for (std::size_t i = 0; i < g.nodes_.points.size(); ++i) {
    g.interior_[i] = g.in_omega(g.nodes_.points[i]) ? 1 : 0;
    (g.interior_[i] ? g.interior_idx_ : g.exterior_idx_).push_back(i);
  }
  if (g.interior_idx_.empty()) throw ConfigError("grid: no node lies inside Omega");
  return g;
}

bool GridDomain::in_omega(const Point& x) const {
  const Box om = omega_box();
  if (shape_ == DomainShape::ball) {
    return distance(x, om.center()) < 0.5 * om.side();
  }
  for (int d = 0; d < dim_; ++d) {
    if (!(x[d] > om.lo && x[d] < om.hi)) return false;
  }
  return true;
}

BallSpec GridDomain::omega_ball() const {
  const Box om = omega_box();
  return BallSpec{om.center(), 0.5 * om.side()};
}

bool GridDomain::contains_ball(const BallSpec& b) const {
  const Box om = omega_box();
  const double slack = 1e-12 * box_.side();
  if (shape_ == DomainShape::ball) {
    return distance(b.center, om.center()) + b.radius <= 0.5 * om.side() + slack;
  }
  for (int d = 0; d < dim_; ++d) {
    if (b.center[d] - b.radius < om.lo - slack || b.center[d] + b.radius > om.hi + slack) return false;
  }
  return true;
}

std::vector<std::size_t> GridDomain::nodes_in_ball(const BallSpec& b) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (inside_ball(b, node(i))) out.push_back(i);
  }
  return out;
}

double bump_profile(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

std::vector<FieldVector> test_functions(const GridDomain& grid, const TestFunctionSpec& spec) {
  const Box om = grid.omega_box();
  const std::size_t n = grid.size();
  std::vector<FieldVector> out;

  if (spec.family == TestFamily::bump) {
    const Point c = spec.center.value_or(om.center());
    const double r = spec.radius.value_or(0.5 * om.side());
    if (!(r > 0.0)) throw InvalidArgument("test_functions: bump radius must be positive");
    FieldVector v(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = distance(grid.node(i), c) / r;
      v[i] = bump_profile(d * d);
    }
    out.push_back(std::move(v));
    return out;
  }

  if (spec.k_max < 1) throw InvalidArgument("test_functions: k_max must be >= 1");
  // sin(k pi (x_d - a)/L) inside Omega, zero outside.
  auto mode = [&](std::size_t i, int kx, int ky) {
    const Point& x = grid.node(i);
    if (!grid.in_omega(x)) return 0.0;
    double v = std::sin(kx * std::numbers::pi * (x[0] - om.lo) / om.side());
    if (grid.dim() == 2) v *= std::sin(ky * std::numbers::pi * (x[1] - om.lo) / om.side());
    return v;
  };
  const int ky_max = grid.dim() == 2 ? spec.k_max : 1;

  if (spec.family == TestFamily::trig) {
    for (int ky = 1; ky <= ky_max; ++ky) {
      for (int kx = 1; kx <= spec.k_max; ++kx) {
        FieldVector v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = mode(i, kx, ky);
        out.push_back(std::move(v));
      }
    }
    return out;
  }

  if (spec.count < 1) throw InvalidArgument("test_functions: count must be >= 1");
  const CounterRng rng(spec.seed, 0x7e57);
  for (int f = 0; f < spec.count; ++f) {
    const CounterRng fr = rng.split(static_cast<std::uint64_t>(f));
    FieldVector v(n, 0.0);
    std::uint64_t draw = 0;
    for (int ky = 1; ky <= ky_max; ++ky) {
      for (int kx = 1; kx <= spec.k_max; ++kx) {
        const double a = fr.normal(draw++) / (kx * ky);
        for (std::size_t i = 0; i < n; ++i) v[i] += a * mode(i, kx, ky);
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

FieldVector mollify(const GridDomain& grid, std::span<const double> u, const MollifierSpec& m) {
  const double h = grid.spacing();
  if (!(m.epsilon >= 2.0 * h * (1.0 - 1e-12))) throw InvalidArgument("mollify: epsilon must be >= 2h");
  if (u.size() != grid.size()) throw InvalidArgument("mollify: field size mismatch");
  const int n = grid.nodes_per_axis();
  const int reach = static_cast<int>(std::ceil(m.epsilon / h));
  const int ny = grid.dim() == 2 ? n : 1;
  FieldVector out(u.size());

#pragma omp parallel for schedule(static)
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const std::size_t i = grid.index(ix, iy);
      double mass = 0.0;
      double acc = 0.0;
      const int y0 = grid.dim() == 2 ? std::max(0, iy - reach) : 0;
      const int y1 = grid.dim() == 2 ? std::min(n - 1, iy + reach) : 0;
      for (int jy = y0; jy <= y1; ++jy) {
        for (int jx = std::max(0, ix - reach); jx <= std::min(n - 1, ix + reach); ++jx) {
          const std::size_t j = grid.index(jx, jy);
          const double rho = 1.0 - distance(grid.node(i), grid.node(j)) / m.epsilon;
          if (rho <= 0.0) continue;
          mass += rho;
          acc += rho * u[j];
        }
      }
      out[i] = acc / mass;
    }
  }
  return out;
}

void write_field_csv(std::ostream& out, const GridDomain& grid, std::span<const double> u) {
  if (u.size() != grid.size()) throw InvalidArgument("write_field_csv: field size mismatch");
  out << (grid.dim() == 2 ? "x,y,value\n" : "x,value\n");
  char buf[96];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point& x = grid.node(i);
    if (grid.dim() == 2) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", x[0], x[1], u[i]);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", x[0], u[i]);
    }
    out << buf;
  }
}

void write_field_csv(const std::string& path, const GridDomain& grid, std::span<const double> u) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write_field_csv(out, grid, u);
}

FieldVector read_field_csv(const std::string& path, const GridDomain& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open field CSV '" + path + "'");
  FieldVector u(grid.size(), 0.0);
  std::vector<char> seen(grid.size(), 0);
  const double h = grid.spacing();
  const int n = grid.nodes_per_axis();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double x = 0.0, y = 0.0, v = 0.0;
    if (!(row >> x)) {
      if (line_no == 1) continue;
      throw ConfigError(path + ":" + std::to_string(line_no) + ": malformed row");
    }
    if (grid.dim() == 2 && !(row >> y)) throw ConfigError(path + ":" + std::to_string(line_no) + ": missing y");
    if (!(row >> v) || !std::isfinite(v)) throw ConfigError(path + ":" + std::to_string(line_no) + ": bad value");
    const int ix = static_cast<int>(std::floor((x - grid.box().lo) / h));
    const int iy = grid.dim() == 2 ? static_cast<int>(std::floor((y - grid.box().lo) / h)) : 0;
    if (ix < 0 || ix >= n || iy < 0 || iy >= (grid.dim() == 2 ? n : 1)) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": point outside the grid box");
    }
    const std::size_t i = grid.index(ix, iy);
    u[i] = v;
    seen[i] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw ConfigError(path + ": field does not cover every grid node");
  }
  return u;
}

FieldVector gradient_norm(const GridDomain& grid, std::span<const double> u) {
  const int n = grid.nodes_per_axis();
  const int ny = grid.dim() == 2 ? n : 1;
  const double h = grid.spacing();
  FieldVector out(grid.size());
  auto diff = [&](int i, int lo, int hi, auto at) {
    if (i == lo) return (at(i + 1) - at(i)) / h;
    if (i == hi) return (at(i) - at(i - 1)) / h;
    return (at(i + 1) - at(i - 1)) / (2.0 * h);
  };
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const double gx = diff(ix, 0, n - 1, [&](int k) { return u[grid.index(k, iy)]; });
      double gy = 0.0;
      if (grid.dim() == 2) gy = diff(iy, 0, n - 1, [&](int k) { return u[grid.index(ix, k)]; });
      out[grid.index(ix, iy)] = std::hypot(gx, gy);
    }
  }
  return out;
}

} // namespace degenlap
