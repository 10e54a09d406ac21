#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "degenlap/geometry.hpp"

namespace degenlap {

enum class WeightKind { constant, power, tabulated };

/// Samples of a tabulated weight on a cell-centred grid over `box`.
/// Values are stored row-major with the first axis fastest.
struct WeightTable {
  Box box;
  int nodes_per_axis = 0;
  std::vector<double> values;
};

/// A weight w on R^n paired with a Lebesgue exponent p.
///
/// Power weights |x|^gamma are accepted for any gamma > -n (local
/// integrability); membership in A_p additionally needs gamma < n(p-1), see
/// in_ap_range(). Tabulated weights evaluate at the nearest sample.
class WeightModel {
public:
  static WeightModel constant(int dim, double p, double value = 1.0);
  static WeightModel power(int dim, double p, double gamma);
  static WeightModel tabulated(int dim, double p, WeightTable table);

  /// Reads `x[,y],w` rows (optional header) sampled on a uniform cell-centred grid.
  static WeightModel from_csv(const std::string& path, int dim, double p);

  WeightKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double p() const { return p_; }
  double gamma() const { return gamma_; }
  double value() const { return value_; }
  const WeightTable& table() const { return table_; }

  /// w(x). Throws SingularPointError at x = 0 for gamma < 0 and
  /// OutOfTableError outside a tabulated box.
  double operator()(const Point& x) const;

  /// sigma = w^{1/(1-p)}, paired with the conjugate exponent p'.
  WeightModel dual() const;

  bool in_ap_range() const;

  /// False when sigma is not locally integrable.
  bool dual_integrable() const;

  std::string describe() const;

private:
  WeightModel() = default;

  WeightKind kind_ = WeightKind::constant;
  int dim_ = 1;
  double p_ = 2.0;
  double gamma_ = 0.0;
  double value_ = 1.0;
  WeightTable table_;
};

double eval_weight(const WeightModel& w, const Point& x);

struct QuadratureConfig {
  int m = 16;
};

/// True when ball_measure uses an exact or semi-analytic formula for (w, B).
bool has_closed_form(const WeightModel& w, const BallSpec& b);

/// w(B). Closed forms for constant weights, 1-D power weights (antiderivative)
/// and 2-D power weights (polar integration about the origin with exact radial
/// part); quadrature otherwise.
double ball_measure(const WeightModel& w, const BallSpec& b, QuadratureConfig quad = {});

/// Pure quadrature for w(B) regardless of closed forms: graded Gauss-Legendre
/// split at the origin in 1-D, polar about the ball centre in 2-D.
double ball_measure_quadrature(const WeightModel& w, const BallSpec& b, QuadratureConfig quad = {});

/// w([a, b]) for a 1-D weight.
double interval_measure(const WeightModel& w, double a, double b, QuadratureConfig quad = {});

/// Sampling controls for the A_p and doubling estimators.
struct BallSampling {
  /// Smallest sampled radius as a fraction of the domain diameter.
  double min_radius_fraction = 1.0 / 256.0;
  /// Number of origin-centred balls added deterministically.
  int origin_family = 8;
  QuadratureConfig quad{};
};

/// Lower bound for [w]_{A_p}: running max of (avg_B w)(avg_B sigma)^{p-1} over
/// `samples` random balls and a family of origin-centred balls.
/// Throws NonIntegrableDualError when sigma is not locally integrable.
double ap_estimate(const WeightModel& w, const Box& domain, int samples, std::uint64_t seed,
                   const BallSampling& sampling = {});

/// Max observed w(2B)/w(B) over the same ball distribution.
double doubling_estimate(const WeightModel& w, const Box& domain, int samples, std::uint64_t seed,
                         const BallSampling& sampling = {});

/// The i-th sampled ball (i < 0 selects the origin family entry -i-1).
BallSpec sample_ball(const Box& domain, std::uint64_t seed, long i, const BallSampling& sampling);

} // namespace degenlap
