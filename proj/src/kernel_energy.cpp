#include "degenlap/kernel_energy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <shared_mutex>
#include <tuple>
#include <unordered_map>

#include "degenlap/errors.hpp"
#include "degenlap/pair_kernels.hpp"
#include "degenlap/random.hpp"

namespace degenlap {

void EnergySpec::validate() const {
  if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("energy: s must lie in (0,1)");
  if (!(p > 1.0) || !std::isfinite(p)) throw InvalidArgument("energy: p must be > 1");
  if (!(s0 > 0.0 && s0 <= s)) throw InvalidArgument("energy: s0 must lie in (0, s]");
  if (!(lambda > 0.0 && lambda <= Lambda) || !std::isfinite(Lambda)) {
    throw InvalidArgument("energy: need 0 < lambda <= Lambda < inf");
  }
}

KernelMode EnergySpec::resolved_mode(const WeightModel& w) const {
  if (kernel_mode) {
    if (*kernel_mode == KernelMode::power_closed_form && w.kind() != WeightKind::power) {
      throw InvalidArgument("energy: power_closed_form kernel needs a power weight");
    }
    return *kernel_mode;
  }
  return w.kind() == WeightKind::power ? KernelMode::power_closed_form : KernelMode::model;
}

struct Kernel::Cache {
  struct Key {
    long long cx, cy, r;
    bool operator==(const Key&) const = default;
  };
  struct Hash {
    std::size_t operator()(const Key& k) const {
      std::uint64_t h = 0xcbf29ce484222325ULL;
      for (long long v : {k.cx, k.cy, k.r}) {
        h ^= static_cast<std::uint64_t>(v);
        h *= 0x100000001b3ULL;
        h ^= h >> 29;
      }
      return static_cast<std::size_t>(h);
    }
  };

  static long long quantize(double v) { return std::llround(v * 0x1.0p36); }

  std::shared_mutex mutex;
  std::unordered_map<Key, double, Hash> values;
};

Kernel::Kernel(const EnergySpec& spec, const WeightModel& w)
    : spec_(spec), w_(w), mode_(spec.resolved_mode(w)) {
  if (mode_ == KernelMode::custom_multiplier && !spec_.multiplier) {
    const double lo = spec_.lambda;
    const double hi = spec_.Lambda;
    spec_.multiplier = [lo, hi](const Point& x, const Point& y) {
      return lo + (hi - lo) * (0.5 + 0.5 * std::cos(std::numbers::pi * (norm(x) + norm(y))));
    };
  }
  // Constant and 1-D power measures are cheap closed forms; everything else
  // is memoised on the quantised ball.
  const bool cheap = w.kind() == WeightKind::constant || (w.kind() == WeightKind::power && w.dim() == 1);
  use_cache_ = mode_ != KernelMode::power_closed_form && !cheap;
  if (use_cache_) cache_ = std::make_shared<Cache>();
}

double Kernel::cached_ball_measure(const BallSpec& b) const {
  if (!use_cache_) return ball_measure(w_, b, spec_.quad);
  const Cache::Key key{Cache::quantize(b.center[0]), Cache::quantize(b.center[1]), Cache::quantize(b.radius)};
  {
    std::shared_lock lock(cache_->mutex);
    auto it = cache_->values.find(key);
    if (it != cache_->values.end()) return it->second;
  }
  const double v = ball_measure(w_, b, spec_.quad);
  std::unique_lock lock(cache_->mutex);
  cache_->values.emplace(key, v);
  return v;
}

double Kernel::pair_measure(const Point& x, const Point& y) const {
  if (mode_ == KernelMode::power_closed_form) {
    return std::pow(norm(x) + norm(y), w_.gamma()) * std::pow(distance(x, y), w_.dim());
  }
  return cached_ball_measure(pair_ball(x, y));
}

double Kernel::operator()(const Point& x, const Point& y) const {
  const double d = distance(x, y);
  if (d == 0.0) throw CoincidentPointsError("kernel: x and y coincide");
  if (mode_ == KernelMode::power_closed_form) {
    const double g = w_.gamma();
    if (g == 0.0) return std::pow(d, -w_.dim());
    const double ax = norm(x);
    const double ay = norm(y);
    if ((ax == 0.0 || ay == 0.0) && g < 0.0) throw SingularPointError("kernel: power weight singular at the origin");
    return std::pow(ax * ay / (ax + ay), g) * std::pow(d, -w_.dim());
  }
  // Order the pair so the value is symmetric bit for bit.
  const bool swap = std::tie(y[0], y[1]) < std::tie(x[0], x[1]);
  const Point& a = swap ? y : x;
  const Point& b = swap ? x : y;
  const double k = w_(a) * w_(b) / cached_ball_measure(pair_ball(a, b));
  if (mode_ == KernelMode::custom_multiplier) return spec_.multiplier(a, b) * k;
  return k;
}

double kernel_eval(const EnergySpec& spec, const WeightModel& w, const Point& x, const Point& y) {
  spec.validate();
  return Kernel(spec, w)(x, y);
}

namespace {

void check_field(const NodeSet& nodes, std::span<const double> u) {
  if (u.size() != nodes.size()) throw InvalidArgument("field length does not match the node count");
  for (double v : u) {
    if (!std::isfinite(v)) throw InvalidArgument("field has non-finite entries");
  }
}

double finite_energy(double j) {
  if (!std::isfinite(j)) throw NonFiniteEnergyError("energy is not finite");
  return j;
}

inline double pow_p(double t, double p) { return p == 2.0 ? t * t : std::pow(t, p); }

} // namespace

double energy(const EnergySpec& spec, const WeightModel& w, const NodeSet& nodes, std::span<const double> u) {
  spec.validate();
  check_field(nodes, u);
  const PairWeight W(spec, w, nodes);
  const double p = spec.p;
  ErrorSink sink;
  const double upper = pairsum::parallel::upper(nodes.size(), [&](std::size_t i, std::size_t j) {
    const double du = std::abs(u[i] - u[j]);
    if (du == 0.0) return 0.0;
    return sink.run([&] { return pow_p(du, p) * W(i, j); });
  });
  sink.rethrow();
  return finite_energy(spec.c_s() * 2.0 * upper);
}

double energy(const EnergySpec& spec, const WeightModel& w, const GridDomain& grid, std::span<const double> u) {
  return energy(spec, w, grid.nodes(), u);
}

double energy_restricted(const EnergySpec& spec, const WeightModel& w, const NodeSet& nodes,
                         std::span<const double> u, const PairPredicate& M) {
  spec.validate();
  check_field(nodes, u);
  const PairWeight W(spec, w, nodes);
  const double p = spec.p;
  ErrorSink sink;
  const double sum = pairsum::parallel::ordered(nodes.size(), [&](std::size_t i, std::size_t j) {
    const double du = std::abs(u[i] - u[j]);
    if (du == 0.0 || !M(i, j)) return 0.0;
    return sink.run([&] { return pow_p(du, p) * W(i, j); });
  });
  sink.rethrow();
  return finite_energy(spec.c_s() * sum);
}

double energy_restricted(const EnergySpec& spec, const WeightModel& w, const GridDomain& grid,
                         std::span<const double> u, const PairPredicate& M) {
  return energy_restricted(spec, w, grid.nodes(), u, M);
}

PairPredicate complement_excluded(const GridDomain& grid) {
  return [&grid](std::size_t i, std::size_t j) { return grid.is_interior(i) || grid.is_interior(j); };
}

double smoothing_epsilon(double p, std::span<const double> u) {
  if (p >= 2.0) return 0.0;
  double scale = 0.0;
  for (double v : u) scale = std::max(scale, std::abs(v));
  return 1e-10 * (scale > 0.0 ? scale : 1.0);
}

std::vector<double> energy_gradient_rows(const EnergySpec& spec, const WeightModel& w, const NodeSet& nodes,
                                         std::span<const double> u, std::span<const std::size_t> rows) {
  spec.validate();
  check_field(nodes, u);
  for (std::size_t i : rows) {
    if (i >= nodes.size()) throw InvalidArgument("energy_gradient_rows: row index out of range");
  }
  const PairWeight W(spec, w, nodes);
  const double p = spec.p;
  const double eps2 = std::pow(smoothing_epsilon(p, u), 2);
  std::vector<double> g(rows.size());
  ErrorSink sink;
  pairsum::parallel::row_sums(rows, nodes.size(), [&](std::size_t i, std::size_t j) {
    const double t = u[i] - u[j];
    if (t == 0.0) return 0.0;
    const double phi = p == 2.0 ? t : std::pow(t * t + eps2, 0.5 * (p - 2.0)) * t;
    return sink.run([&] { return phi * W(i, j); });
  }, g);
  sink.rethrow();
  const double f = 2.0 * spec.c_s() * p;
  for (double& v : g) v *= f;
  return g;
}

FieldVector energy_gradient(const EnergySpec& spec, const WeightModel& w, const NodeSet& nodes,
                            std::span<const double> u) {
  std::vector<std::size_t> rows(nodes.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return energy_gradient_rows(spec, w, nodes, u, rows);
}

FieldVector energy_gradient(const EnergySpec& spec, const WeightModel& w, const GridDomain& grid,
                            std::span<const double> u) {
  return energy_gradient(spec, w, grid.nodes(), u);
}

double tail(const EnergySpec& spec, const WeightModel& w, const GridDomain& grid, std::span<const double> f,
            const TailQuery& q) {
  spec.validate();
  check_field(grid.nodes(), f);
  if (!(q.rho > 0.0)) throw InvalidArgument("tail: rho must be positive");
  const BallSpec ball{q.center, q.rho};
  if (!grid.contains_ball(ball)) throw QueryOutsideDomainError("tail: B_rho(x0) is not contained in Omega");

  const double sp = spec.s * spec.p;
  const std::size_t n = grid.size();
  std::vector<double> terms(n, 0.0);
  ErrorSink sink;
  pairsum::parallel::for_rows(n, [&](std::size_t i) {
    const Point& x = grid.node(i);
    if (f[i] == 0.0 || inside_ball(ball, x)) return;
    terms[i] = sink.run([&] {
      return std::pow(std::abs(f[i]), spec.p - 1.0) * std::pow(distance(x, q.center), -sp) * w(x) /
             ball_measure(w, pair_ball(x, q.center), spec.quad);
    });
  });
  sink.rethrow();
  const double integral = pairwise_sum(terms) * grid.cell_volume();
  return std::pow((1.0 - spec.s) * std::pow(q.rho, sp) * integral, 1.0 / (spec.p - 1.0));
}

IntweightResult intweight_check(const WeightModel& w, const GridDomain& grid, double alpha, const Point& x,
                                double r, IntweightSide side, QuadratureConfig quad) {
  if (alpha == 0.0) throw InvalidArgument("intweight: alpha must be nonzero");
  if (side == IntweightSide::interior && alpha < 0.0) throw InvalidArgument("intweight: interior needs alpha > 0");
  if (side == IntweightSide::exterior && alpha > 0.0) throw InvalidArgument("intweight: exterior needs alpha < 0");
  if (!(r > 0.0)) throw InvalidArgument("intweight: r must be positive");
  const BallSpec ball{x, r};
  const std::size_t n = grid.size();
  std::vector<double> terms(n, 0.0);
  ErrorSink sink;
  pairsum::parallel::for_rows(n, [&](std::size_t j) {
    const Point& y = grid.node(j);
    const double d = distance(x, y);
    if (d == 0.0) return;
    if ((side == IntweightSide::interior) != inside_ball(ball, y)) return;
    terms[j] = sink.run([&] { return std::pow(d, alpha) * w(y) / ball_measure(w, pair_ball(x, y), quad); });
  });
  sink.rethrow();
  IntweightResult res;
  res.sum = pairwise_sum(terms) * grid.cell_volume();
  res.reference = std::pow(r, alpha) / std::abs(alpha);
  res.ratio = res.sum / res.reference;
  return res;
}

EquivalenceResult ex2_equivalence_check(const WeightModel& w, const Box& domain, int samples, std::uint64_t seed,
                                        QuadratureConfig quad) {
  if (samples < 1) throw InvalidArgument("ex2_equivalence_check: samples must be >= 1");
  if (w.kind() == WeightKind::tabulated) throw InvalidArgument("ex2_equivalence_check: needs a power weight");
  const double gamma = w.kind() == WeightKind::power ? w.gamma() : 0.0;
  const int n = w.dim();
  const CounterRng rng(seed, 0xe2);
  std::vector<double> ratios(static_cast<std::size_t>(samples));
  for (int k = 0; k < samples; ++k) {
    const auto base = static_cast<std::uint64_t>(4 * k);
    Point x{rng.uniform(base, domain.lo, domain.hi), n == 2 ? rng.uniform(base + 1, domain.lo, domain.hi) : 0.0};
    Point y{rng.uniform(base + 2, domain.lo, domain.hi), n == 2 ? rng.uniform(base + 3, domain.lo, domain.hi) : 0.0};
    const double denom = std::pow(norm(x) + norm(y), gamma) * std::pow(distance(x, y), n);
    ratios[static_cast<std::size_t>(k)] = ball_measure(w, pair_ball(x, y), quad) / denom;
  }
  EquivalenceResult res;
  res.samples = samples;
  res.min_ratio = *std::min_element(ratios.begin(), ratios.end());
  res.max_ratio = *std::max_element(ratios.begin(), ratios.end());
  res.spread = res.max_ratio / res.min_ratio;
  return res;
}

} // namespace degenlap
