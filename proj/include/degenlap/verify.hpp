#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "degenlap/grid.hpp"
#include "degenlap/kernel_energy.hpp"
#include "degenlap/report.hpp"
#include "degenlap/solver.hpp"
#include "degenlap/weights.hpp"

namespace degenlap {

// Every check returns a finalised report. Conditions with a known band
// (s-stability factor 10, LHS <= RHS, positivity of a fitted exponent) carry
// analytic bands; ratios against unspecified constants are left unbanded and
// receive frozen bands from the calibration file via attach_band.

enum class MeanKind { uniform, weighted, psi };

/// The bounded density used for psi means: psi proportional to 1 - |x - c|/r on B.
std::vector<double> psi_density(const GridDomain& grid, const BallSpec& B);

/// Mean of v over the nodes of B with the chosen weighting.
double ball_mean(const GridDomain& grid, const WeightModel& w, const BallSpec& B, std::span<const double> v,
                 MeanKind kind);

struct PoincareOptions {
  std::vector<double> s_values{0.3, 0.5, 0.7, 0.9, 0.95};
  MeanKind mean = MeanKind::uniform;
  /// s whose ratio normalises the stability factor.
  double s_reference = 0.5;
  double stability_limit = 10.0;
};

/// max_v max_s R(v, s) with R = sum_B |v - <v>|^p w h^n / [(1-s) r^{sp} sum_{BxB} |dv|^p/d^{sp} w w/w(B_{x,y}) h^{2n}].
/// Observed: max_ratio (frozen), s_stability = max_v max_s R(v,s)/R(v,s_ref) (analytic, <= 10).
VerificationReport poincare_check(double p, const WeightModel& w, const GridDomain& grid, const BallSpec& B,
                                  const std::vector<FieldVector>& family, const PoincareOptions& opt = {});

struct SobolevPoincareOptions {
  std::vector<double> s_values{0.2, 0.35, 0.5, 0.65, 0.8, 0.95};
  MeanKind mean = MeanKind::uniform;
};

/// Ratio of (avg_B |v - <v>|^{np/(n-s)} dmu)^{(n-s)/n} to s^{1-2p}(1-s) r^{sp}/w(B) times the
/// double sum. Needs n = 2.
VerificationReport sobolev_poincare_check(double p, const WeightModel& w, const GridDomain& grid, const BallSpec& B,
                                          const std::vector<FieldVector>& family,
                                          const SobolevPoincareOptions& opt = {});

/// s-grid used by the limit scan: 0.05, 0.10, ..., 0.95, 0.99.
std::vector<double> default_s_grid();

struct LimitScanResult {
  std::vector<double> s;
  std::vector<double> energy;
  double ref_l0 = 0.0;  // sum |v|^p w h^n
  double ref_l1 = 0.0;  // sum |grad v|^p w h^n
  VerificationReport report;
};

/// J^s(v) over s_values (ascending). Observed ratio0 = J^{s_min}/L0 and
/// ratio1 = J^{s_max}/L1, both frozen; finite = 1 if every energy is finite.
LimitScanResult limit_scan(const EnergySpec& base, const WeightModel& w, const GridDomain& grid,
                           std::span<const double> v, const std::vector<double>& s_values);

struct BoundednessOptions {
  std::vector<double> deltas{0.5, 1.0};
  /// Frozen c_b; unset reports c_b_required only.
  std::optional<double> c_b;
};

/// LHS = max_{B_{r/2}} |u|; RHS(delta) = c_b delta^{-(p-1)n/(p s0)} (avg_{B_r} |u|^p dmu)^{1/p}
/// + delta Tail(u; x0, r/2). Observed: c_b_required (smallest c_b that makes every delta pass),
/// lhs_over_rhs (analytic band [0, 1]) when c_b is given.
VerificationReport boundedness_check(const DirichletProblem& prob, std::span<const double> u, const BallSpec& B,
                                     const BoundednessOptions& opt = {});

/// Piecewise-linear cutoff: 1 on B_{inner}, 0 outside B_{outer}.
struct Cutoff {
  double inner = 0.5;  // fractions of r
  double outer = 0.75;
};

/// LHS and RHS of the Caccioppoli estimate for v = (u - k)_+ on B. Observed ratio = LHS/RHS (frozen),
/// lhs, rhs_local, rhs_tail. Throws DegenerateCutoffError if the cutoff vanishes on every node.
VerificationReport caccioppoli_check(const DirichletProblem& prob, std::span<const double> u, const BallSpec& B,
                                     double k_level, const Cutoff& cutoff = {});

struct HolderOptions {
  double tau = 0.5;
  int levels = 6;
  int min_nodes = 8;
  double flat_threshold = 1e-13;
};

/// osc_j over B_{tau^j r}(x0); fits log osc_j against j log tau. Observed alpha_hat (analytic > 0),
/// monotone (1 if osc_j is non-increasing), usable_levels. Throws InsufficientResolutionError when
/// fewer than 3 levels have min_nodes nodes.
VerificationReport holder_estimate(const GridDomain& grid, std::span<const double> u, const BallSpec& B,
                                   const HolderOptions& opt = {});

struct HarnackLevel {
  const DirichletProblem* prob;
  std::span<const double> u;
};

/// H = sup_{B_r} u / (inf_{B_r} u + Tail(u_-; x0, r)) on each level. Observed H (frozen, first level),
/// and drift = max |H_k - H_0| / H_0 (analytic <= 0.2) when more than one level is given.
/// Requires B_{2r}(x0) inside Omega.
VerificationReport harnack_check(const std::vector<HarnackLevel>& levels, const BallSpec& B,
                                 double drift_limit = 0.2);

/// Observed: energy_ratio = max J(v*rho)/J(v) (a), difference_ratio = max J(v*rho - v)/S_{4 eps}(v)
/// with S the short-range (1-s) pair sum (b), decreasing (1 if J(v*rho - v) decreases with eps),
/// lp_ratio = max sum |v - v*rho|^p w h^n / ((eps^{sp}/s) J(v)) (c). Epsilons must be decreasing.
VerificationReport mollification_suite(const EnergySpec& spec, const WeightModel& w, const GridDomain& grid,
                                       std::span<const double> v, const std::vector<double>& epsilons);

/// (I_alpha f)(x_i) = sum_{j != i} f_j |x_i - x_j|^{alpha-n} h^n plus the exact self-cell integral
/// f_i int_{cell} |t|^{alpha-n} dt.
FieldVector riesz_potential(const GridDomain& grid, std::span<const double> f, double alpha);

/// Observed per alpha: ratio_a<alpha> = max_f ((1/w(B)) sum_B (I_alpha|f|)^p w)^{1/p} /
/// ((r^alpha/alpha) ((1/w(B)) sum_B |f|^p w)^{1/p}); max_ratio over all alpha (frozen).
VerificationReport riesz_bound_check(double p, const WeightModel& w, const GridDomain& grid, const BallSpec& B,
                                     const std::vector<FieldVector>& family, const std::vector<double>& alphas);

struct RieszPointwiseOptions {
  std::vector<double> alphas{0.1, 0.5, 0.9, 0.99};
  MeanKind mean = MeanKind::uniform;
  /// Evaluate at every `sample_stride`-th node of B.
  int sample_stride = 4;
  double uniformity_limit = 10.0;
  /// alpha pair compared by the uniformity factor.
  double alpha_high = 0.99;
  double alpha_reference = 0.5;
};

/// LHS = |v(x) - <v>_psi|, RHS = (1-alpha) sum_{BxB} |v(zeta)-v(z)| / (|zeta-z|^{n+alpha}
/// (|x-z|+|x-zeta|)^{n-alpha}) h^{2n} with an exact self-cell term. Observed: ratio_a<alpha> per
/// alpha, max_ratio (frozen), uniformity = ratio(alpha_high)/ratio(alpha_reference) (analytic <= 10),
/// simple_ratio for the variant with kernel (|x-z|+|x-zeta|)^{-2n} (frozen).
VerificationReport riesz_pointwise_check(const GridDomain& grid, const BallSpec& B,
                                         const std::vector<FieldVector>& family,
                                         const RieszPointwiseOptions& opt = {});

struct IterationResult {
  bool converged = false;
  bool diverged = false;
  double threshold = 0.0;
  std::vector<double> trace;
};

/// a_{j+1} = b1 b2^j a_j^{1+beta} for J steps; converged iff a_J < 1e-12; stops early past 1e30.
IterationResult iteration_lemma_check(double b1, double b2, double beta, double a0, int J);

/// Sweep over b1 in {0.5,1,2}, b2 in {1.5,2,4}, beta in {0.5,1,2} and a0 below the threshold.
VerificationReport iteration_lemma_suite(int J = 200);

} // namespace degenlap
