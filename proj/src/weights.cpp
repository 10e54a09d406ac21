#include "degenlap/weights.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "degenlap/quadrature.hpp"
#include "degenlap/random.hpp"

namespace degenlap {

namespace {

void check_common(int dim, double p) {
  if (dim != 1 && dim != 2) throw InvalidArgument("weight: dimension must be 1 or 2");
  if (!(p > 1.0)) throw InvalidArgument("weight: p must exceed 1");
}

double sign(double x) { return x < 0.0 ? -1.0 : 1.0; }

// Antiderivative of |t|^gamma, odd and continuous through 0 for gamma > -1.
double power_antiderivative(double t, double gamma) {
  return sign(t) * std::pow(std::abs(t), gamma + 1.0) / (gamma + 1.0);
}

// Angular rule size for balls whose boundary passes close to the origin.
int angular_points(int m, double closeness) {
  const double base = std::max(4.0 * m, 64.0);
  const double boost = closeness > 0.0 ? 64.0 / closeness : 4096.0;
  return static_cast<int>(std::min(4096.0, std::max(base, boost)));
}

// w(B) for |x|^gamma in 2-D: polar coordinates about the origin with the
// radial integral done exactly.
double power_ball_measure_2d(double gamma, const BallSpec& b, int m) {
  const double c = norm(b.center);
  const double r = b.radius;
  const double e = gamma + 2.0;
  if (c == 0.0) return 2.0 * std::numbers::pi * std::pow(r, e) / e;

  if (c < r) {
    // Origin strictly inside: the ray at angle t leaves the ball at
    // rho(t) = c cos t + sqrt(r^2 - c^2 sin^2 t); periodic integrand.
    const int n = angular_points(m, (r - c) / r);
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      const double t = 2.0 * std::numbers::pi * (k + 0.5) / n;
      const double st = std::sin(t);
      const double rho = c * std::cos(t) + std::sqrt(std::max(0.0, r * r - c * c * st * st));
      acc += std::pow(rho, e);
    }
    return acc * (2.0 * std::numbers::pi / n) / e;
  }

  // Origin outside (or on the boundary): rays within the cone |t| <= beta
  // cross the ball between rho_-(t) and rho_+(t). t = beta sin(u) removes
  // the square-root behaviour at the cone edges.
  const double beta = std::asin(std::min(1.0, r / c));
  const auto& gl = gauss_legendre_unit(angular_points(m, (c - r) / r) / 2);
  double acc = 0.0;
  for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
    const double u = std::numbers::pi * (gl.nodes[k] - 0.5);
    const double t = beta * std::sin(u);
    const double st = std::sin(t);
    const double root = std::sqrt(std::max(0.0, r * r - c * c * st * st));
    const double mid = c * std::cos(t);
    const double hi = mid + root;
    const double lo = std::max(0.0, mid - root);
    acc += gl.weights[k] * (std::pow(hi, e) - std::pow(lo, e)) * beta * std::cos(u);
  }
  return acc * std::numbers::pi / e;
}

// Graded Gauss-Legendre for int_0^len f(x0 + dir * t) dt with nodes clustered at t=0.
template <class F>
double graded_segment(const F& f, double x0, double dir, double len, int m) {
  if (len <= 0.0) return 0.0;
  const auto& gl = gauss_legendre_unit(m);
  double acc = 0.0;
  for (int k = 0; k < m; ++k) {
    const double t = gl.nodes[k];
    const double x = x0 + dir * len * t * t;
    acc += gl.weights[k] * f(x) * 2.0 * t;
  }
  return acc * len;
}

double quadrature_1d(const WeightModel& w, double a, double b, int m) {
  auto f = [&](double x) { return w(Point{x, 0.0}); };
  if (a < 0.0 && b > 0.0) {
    return graded_segment(f, 0.0, -1.0, -a, m) + graded_segment(f, 0.0, 1.0, b, m);
  }
  // Grade toward the endpoint closest to the origin.
  if (std::abs(a) <= std::abs(b)) return graded_segment(f, a, 1.0, b - a, m);
  return graded_segment(f, b, -1.0, b - a, m);
}

double quadrature_2d(const WeightModel& w, const BallSpec& b, int m) {
  const auto& gl = gauss_legendre_unit(m);
  const int n_ang = m;
  double acc = 0.0;
  for (int j = 0; j < n_ang; ++j) {
    const double t = 2.0 * std::numbers::pi * (j + 0.5) / n_ang;
    const double ct = std::cos(t);
    const double st = std::sin(t);
    for (int k = 0; k < m; ++k) {
      const double u = gl.nodes[k];
      const double rad = b.radius * u * u;
      const Point z{b.center[0] + rad * ct, b.center[1] + rad * st};
      if (z[0] == 0.0 && z[1] == 0.0) continue;
      // r dr = R^2 u^2 * 2 u du
      acc += gl.weights[k] * w(z) * 2.0 * u * u * u;
    }
  }
  return acc * b.radius * b.radius * (2.0 * std::numbers::pi / n_ang);
}

} // namespace

WeightModel WeightModel::constant(int dim, double p, double value) {
  check_common(dim, p);
  if (!(value > 0.0) || !std::isfinite(value)) throw InvalidArgument("weight: constant must be positive");
  WeightModel w;
  w.kind_ = WeightKind::constant;
  w.dim_ = dim;
  w.p_ = p;
  w.value_ = value;
  return w;
}

WeightModel WeightModel::power(int dim, double p, double gamma) {
  check_common(dim, p);
  if (!(gamma > -dim) || !std::isfinite(gamma)) {
    throw InvalidArgument("weight: power exponent must exceed -n for local integrability");
  }
  WeightModel w;
  w.kind_ = WeightKind::power;
  w.dim_ = dim;
  w.p_ = p;
  w.gamma_ = gamma;
  return w;
}

WeightModel WeightModel::tabulated(int dim, double p, WeightTable table) {
  check_common(dim, p);
  if (table.nodes_per_axis < 1) throw InvalidArgument("weight: empty table");
  std::size_t expected = static_cast<std::size_t>(table.nodes_per_axis);
  if (dim == 2) expected *= static_cast<std::size_t>(table.nodes_per_axis);
  if (table.values.size() != expected) throw InvalidArgument("weight: table size mismatch");
  for (double v : table.values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("weight: tabulated values must be positive");
  }
  table.box.dim = dim;
  WeightModel w;
  w.kind_ = WeightKind::tabulated;
  w.dim_ = dim;
  w.p_ = p;
  w.table_ = std::move(table);
  return w;
}

WeightModel WeightModel::from_csv(const std::string& path, int dim, double p) {
  std::ifstream in(path);
  if (!in) throw ConfigError("weight table: cannot open '" + path + "'");
  std::map<std::pair<double, double>, double> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double x = 0.0, y = 0.0, v = 0.0;
    if (!(row >> x)) {
      if (line_no == 1) continue; // header
      throw ConfigError(path + ":" + std::to_string(line_no) + ": malformed row");
    }
    if (dim == 2 && !(row >> y)) throw ConfigError(path + ":" + std::to_string(line_no) + ": missing y");
    if (!(row >> v)) throw ConfigError(path + ":" + std::to_string(line_no) + ": missing w");
    samples[{dim == 2 ? y : 0.0, x}] = v;
  }
  if (samples.empty()) throw ConfigError("weight table: no samples in '" + path + "'");

  std::vector<double> xs;
  for (const auto& [key, v] : samples) xs.push_back(key.second);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  const int n = static_cast<int>(xs.size());
  if (n < 2) throw ConfigError("weight table: need at least two samples per axis");
  const double h = (xs.back() - xs.front()) / (n - 1);

  WeightTable table;
  table.box = Box{dim, xs.front() - 0.5 * h, xs.back() + 0.5 * h};
  table.nodes_per_axis = n;
  if (samples.size() != static_cast<std::size_t>(dim == 2 ? n * n : n)) {
    throw ConfigError("weight table: samples do not form a full grid");
  }
  for (const auto& [key, v] : samples) table.values.push_back(v); // y-major order == row-major, x fastest
  return tabulated(dim, p, std::move(table));
}

double WeightModel::operator()(const Point& x) const {
  switch (kind_) {
  case WeightKind::constant:
    return value_;
  case WeightKind::power: {
    const double r = dim_ == 1 ? std::abs(x[0]) : norm(x);
    if (r == 0.0) {
      if (gamma_ < 0.0) throw SingularPointError("power weight with negative exponent evaluated at the origin");
      return gamma_ == 0.0 ? 1.0 : 0.0;
    }
    return std::pow(r, gamma_);
  }
  case WeightKind::tabulated: {
    const auto& t = table_;
    const double h = t.box.side() / t.nodes_per_axis;
    const double slack = 1e-12 * t.box.side();
    std::size_t index = 0;
    std::size_t stride = 1;
    for (int d = 0; d < dim_; ++d) {
      if (x[d] < t.box.lo - slack || x[d] > t.box.hi + slack) {
        throw OutOfTableError("tabulated weight evaluated outside its sampled box");
      }
      const int i = std::clamp(static_cast<int>(std::floor((x[d] - t.box.lo) / h)), 0, t.nodes_per_axis - 1);
      index += static_cast<std::size_t>(i) * stride;
      stride *= static_cast<std::size_t>(t.nodes_per_axis);
    }
    return t.values[index];
  }
  }
  return 0.0;
}

WeightModel WeightModel::dual() const {
  const double q = p_ / (p_ - 1.0);
  const double e = 1.0 / (1.0 - p_);
  switch (kind_) {
  case WeightKind::constant:
    return constant(dim_, q, std::pow(value_, e));
  case WeightKind::power: {
    WeightModel w;
    w.kind_ = WeightKind::power;
    w.dim_ = dim_;
    w.p_ = q;
    w.gamma_ = gamma_ * e; // may fall below -n; callers check dual_integrable()
    return w;
  }
  case WeightKind::tabulated: {
    WeightTable t = table_;
    for (double& v : t.values) v = std::pow(v, e);
    return tabulated(dim_, q, std::move(t));
  }
  }
  return *this;
}

bool WeightModel::in_ap_range() const {
  if (kind_ != WeightKind::power) return true;
  return gamma_ > -dim_ && gamma_ < dim_ * (p_ - 1.0);
}

bool WeightModel::dual_integrable() const {
  if (kind_ != WeightKind::power) return true;
  return gamma_ / (1.0 - p_) > -dim_;
}

std::string WeightModel::describe() const {
  std::ostringstream os;
  switch (kind_) {
  case WeightKind::constant:
    os << "constant(" << value_ << ")";
    break;
  case WeightKind::power:
    os << "power(" << gamma_ << ")";
    break;
  case WeightKind::tabulated:
    os << "tabulated(" << table_.nodes_per_axis << ")";
    break;
  }
  return os.str();
}

double eval_weight(const WeightModel& w, const Point& x) { return w(x); }

bool has_closed_form(const WeightModel& w, const BallSpec&) {
  return w.kind() == WeightKind::constant || w.kind() == WeightKind::power;
}

double interval_measure(const WeightModel& w, double a, double b, QuadratureConfig quad) {
  if (b < a) std::swap(a, b);
  switch (w.kind()) {
  case WeightKind::constant:
    return w.value() * (b - a);
  case WeightKind::power:
    return power_antiderivative(b, w.gamma()) - power_antiderivative(a, w.gamma());
  case WeightKind::tabulated:
    return quadrature_1d(w, a, b, quad.m);
  }
  return 0.0;
}

double ball_measure(const WeightModel& w, const BallSpec& b, QuadratureConfig quad) {
  if (!(b.radius > 0.0)) throw InvalidArgument("ball_measure: radius must be positive");
  if (quad.m < 4) throw InvalidArgument("ball_measure: quadrature subdivision must be >= 4");
  if (w.dim() == 1) return interval_measure(w, b.center[0] - b.radius, b.center[0] + b.radius, quad);
  switch (w.kind()) {
  case WeightKind::constant:
    return w.value() * ball_volume(2, b.radius);
  case WeightKind::power:
    return power_ball_measure_2d(w.gamma(), b, quad.m);
  case WeightKind::tabulated:
    return quadrature_2d(w, b, quad.m);
  }
  return 0.0;
}

double ball_measure_quadrature(const WeightModel& w, const BallSpec& b, QuadratureConfig quad) {
  if (!(b.radius > 0.0)) throw InvalidArgument("ball_measure: radius must be positive");
  if (quad.m < 4) throw InvalidArgument("ball_measure: quadrature subdivision must be >= 4");
  if (w.dim() == 1) return quadrature_1d(w, b.center[0] - b.radius, b.center[0] + b.radius, quad.m);
  return quadrature_2d(w, b, quad.m);
}

BallSpec sample_ball(const Box& domain, std::uint64_t seed, long i, const BallSampling& sampling) {
  const double diam = domain.diameter();
  if (i < 0) {
    const int k = static_cast<int>(-i - 1);
    return BallSpec{{0.0, 0.0}, diam * std::pow(0.5, k + 1)};
  }
  const CounterRng rng = CounterRng(seed).split(static_cast<std::uint64_t>(i));
  BallSpec b;
  b.center[0] = rng.uniform(0, domain.lo, domain.hi);
  b.center[1] = domain.dim == 2 ? rng.uniform(1, domain.lo, domain.hi) : 0.0;
  const double lmin = std::log(sampling.min_radius_fraction * diam);
  const double lmax = std::log(diam);
  b.radius = std::exp(rng.uniform(2, lmin, lmax));
  return b;
}

namespace {

template <class F>
double running_max_over_balls(const WeightModel& w, const Box& domain, int samples, std::uint64_t seed,
                              const BallSampling& sampling, double grow, const F& ratio) {
  if (samples < 1) throw InvalidArgument("estimate: samples must be >= 1");
  if (domain.dim != w.dim()) throw InvalidArgument("estimate: domain dimension mismatch");
  // Tabulated weights only exist on their box: shrink balls so grow*B fits.
  auto fitted = [&](BallSpec b) -> BallSpec {
    if (w.kind() != WeightKind::tabulated) return b;
    const auto& tb = w.table().box;
    double room = b.radius * grow;
    for (int d = 0; d < w.dim(); ++d) room = std::min({room, b.center[d] - tb.lo, tb.hi - b.center[d]});
    b.radius = room / grow;
    return b;
  };
  double best = 0.0;
  for (long i = -sampling.origin_family; i < samples; ++i) {
    const BallSpec b = fitted(sample_ball(domain, seed, i, sampling));
    if (b.radius > 0.0) best = std::max(best, ratio(b));
  }
  return best;
}

} // namespace

double ap_estimate(const WeightModel& w, const Box& domain, int samples, std::uint64_t seed,
                   const BallSampling& sampling) {
  if (!w.dual_integrable()) {
    throw NonIntegrableDualError("ap_estimate: dual weight w^{1/(1-p)} is not locally integrable (" +
                                 w.describe() + ", p=" + std::to_string(w.p()) + ")");
  }
  if (samples < 1) throw InvalidArgument("estimate: samples must be >= 1");
  // Jensen is an equality for constants.
  if (w.kind() == WeightKind::constant) return 1.0;
  const WeightModel sigma = w.dual();
  const double p = w.p();
  return running_max_over_balls(w, domain, samples, seed, sampling, 1.0, [&](const BallSpec& b) {
    const double vol = ball_volume(w.dim(), b.radius);
    const double avg_w = ball_measure(w, b, sampling.quad) / vol;
    const double avg_s = ball_measure(sigma, b, sampling.quad) / vol;
    return avg_w * std::pow(avg_s, p - 1.0);
  });
}

double doubling_estimate(const WeightModel& w, const Box& domain, int samples, std::uint64_t seed,
                         const BallSampling& sampling) {
  return running_max_over_balls(w, domain, samples, seed, sampling, 2.0, [&](const BallSpec& b) {
    const BallSpec twice{b.center, 2.0 * b.radius};
    return ball_measure(w, twice, sampling.quad) / ball_measure(w, b, sampling.quad);
  });
}

} // namespace degenlap
