#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "degenlap/grid.hpp"
#include "degenlap/weights.hpp"

namespace degenlap {

enum class KernelMode { model, power_closed_form, custom_multiplier };

/// Symmetric multiplier m(x, y) with lambda <= m <= Lambda.
using Multiplier = std::function<double(const Point&, const Point&)>;

/// Parameters of the discrete energy J^s_{p,w}.
struct EnergySpec {
  double s = 0.5;
  double p = 2.0;
  double s0 = 0.1;
  double lambda = 1.0;
  double Lambda = 1.0;
  /// Unset: power_closed_form for power weights, model otherwise.
  std::optional<KernelMode> kernel_mode;
  /// Used in custom_multiplier mode. Unset means the default oscillating
  /// multiplier lambda + (Lambda - lambda)(1 + cos(pi(|x| + |y|)))/2.
  Multiplier multiplier;
  QuadratureConfig quad{};

  double c_s() const { return s * (1.0 - s); }
  /// Throws InvalidArgument unless 0 < s0 <= s < 1, p > 1, 0 < lambda <= Lambda.
  void validate() const;
  KernelMode resolved_mode(const WeightModel& w) const;
};

/// k(x, y) for a fixed (spec, weight). Copies share one ball-measure cache.
class Kernel {
public:
  Kernel(const EnergySpec& spec, const WeightModel& w);

  /// Throws CoincidentPointsError when x == y.
  double operator()(const Point& x, const Point& y) const;

  /// The denominator used by the kernel: w(B_{x,y}) in model modes,
  /// (|x|+|y|)^gamma |x-y|^n in power_closed_form mode.
  double pair_measure(const Point& x, const Point& y) const;

  KernelMode mode() const { return mode_; }
  const WeightModel& weight() const { return w_; }

private:
  struct Cache;

  double cached_ball_measure(const BallSpec& b) const;

  EnergySpec spec_;
  WeightModel w_;
  KernelMode mode_;
  bool use_cache_ = false;
  std::shared_ptr<Cache> cache_;
};

double kernel_eval(const EnergySpec& spec, const WeightModel& w, const Point& x, const Point& y);

/// Pair membership test on node indices (i, j).
using PairPredicate = std::function<bool(std::size_t, std::size_t)>;

/// c_s sum_{i != j} (|u_i - u_j| / d_ij^s)^p k_ij h^{2n} over all ordered pairs.
double energy(const EnergySpec& spec, const WeightModel& w, const NodeSet& nodes, std::span<const double> u);
double energy(const EnergySpec& spec, const WeightModel& w, const GridDomain& grid, std::span<const double> u);

/// Same sum restricted to ordered pairs with M(i, j) true.
double energy_restricted(const EnergySpec& spec, const WeightModel& w, const NodeSet& nodes,
                         std::span<const double> u, const PairPredicate& M);
double energy_restricted(const EnergySpec& spec, const WeightModel& w, const GridDomain& grid,
                         std::span<const double> u, const PairPredicate& M);

/// Pairs touching Omega, i.e. (Omega^c x Omega^c)^c.
PairPredicate complement_excluded(const GridDomain& grid);

/// Smoothing parameter for p < 2: 1e-10 times max|u| (or 1e-10 if u == 0); 0 for p >= 2.
double smoothing_epsilon(double p, std::span<const double> u);

/// dJ/du_i with phi_eps(t) = (t^2 + eps^2)^{(p-2)/2} t.
FieldVector energy_gradient(const EnergySpec& spec, const WeightModel& w, const NodeSet& nodes,
                            std::span<const double> u);
FieldVector energy_gradient(const EnergySpec& spec, const WeightModel& w, const GridDomain& grid,
                            std::span<const double> u);
/// dJ/du_i for i in `rows` only, in the order given.
std::vector<double> energy_gradient_rows(const EnergySpec& spec, const WeightModel& w, const NodeSet& nodes,
                                         std::span<const double> u, std::span<const std::size_t> rows);

struct TailQuery {
  Point center{0.0, 0.0};
  double rho = 1.0;
};

/// Nonlocal tail of f about B_rho(x0) over the stored box.
/// Throws QueryOutsideDomainError unless B_rho(x0) lies in Omega.
double tail(const EnergySpec& spec, const WeightModel& w, const GridDomain& grid, std::span<const double> f,
            const TailQuery& q);

enum class IntweightSide { interior, exterior };

struct IntweightResult {
  double sum = 0.0;
  double reference = 0.0;  // r^alpha / |alpha|
  double ratio = 0.0;
};

/// Grid sum of |x-y|^alpha w(y)/w(B_{x,y}) over B_r(x) (interior, alpha > 0)
/// or over the stored box minus B_r(x) (exterior, alpha < 0). Nodes equal to
/// x are skipped.
IntweightResult intweight_check(const WeightModel& w, const GridDomain& grid, double alpha, const Point& x,
                                double r, IntweightSide side, QuadratureConfig quad = {});

struct EquivalenceResult {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double spread = 0.0;  // max / min
  int samples = 0;
};

/// w(B_{x,y}) / ((|x|+|y|)^gamma |x-y|^n) over `samples` seeded pairs drawn
/// uniformly from the domain box.
EquivalenceResult ex2_equivalence_check(const WeightModel& w, const Box& domain, int samples, std::uint64_t seed,
                                        QuadratureConfig quad = {});

/// Pair weight k_ij d_ij^{-sp} vol^2 shared by the energy, gradient and solver.
struct PairWeight {
  const NodeSet* nodes;
  Kernel kernel;
  double sp;
  double vol2;

  PairWeight(const EnergySpec& spec, const WeightModel& w, const NodeSet& n)
      : nodes(&n), kernel(spec, w), sp(spec.s * spec.p), vol2(n.cell_volume * n.cell_volume) {}

  double operator()(std::size_t i, std::size_t j) const {
    const Point& x = nodes->points[i];
    const Point& y = nodes->points[j];
    return kernel(x, y) * std::pow(distance(x, y), -sp) * vol2;
  }
};

} // namespace degenlap
