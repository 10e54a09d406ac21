#include "degenlap/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "degenlap/errors.hpp"
#include "degenlap/pair_kernels.hpp"
#include "degenlap/quadrature.hpp"
#include "degenlap/summation.hpp"

namespace degenlap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Every denominator below vanishes only when the field is constant on the
// pairs it sums over, and then the numerator is rounding noise.
double safe_ratio(double num, double den) {
  if (num == 0.0 || den == 0.0) return 0.0;
  return num / den;
}

std::vector<std::size_t> nodes_in(const GridDomain& grid, const BallSpec& B) {
  auto idx = grid.nodes_in_ball(B);
  if (idx.empty()) throw InsufficientResolutionError("ball contains no grid nodes");
  return idx;
}

Json ball_json(const BallSpec& B, int dim) {
  Json c = Json::array({B.center[0]});
  if (dim == 2) c.push_back(B.center[1]);
  return Json{{"center", c}, {"radius", B.radius}};
}

Json grid_json(const GridDomain& g) {
  return Json{{"dim", g.dim()},
              {"box", Json::array({g.box().lo, g.box().hi})},
              {"nodes_per_axis", g.nodes_per_axis()},
              {"collar_width", g.collar_width()}};
}

const char* mean_name(MeanKind m) {
  switch (m) {
  case MeanKind::uniform:
    return "uniform";
  case MeanKind::weighted:
    return "weighted";
  case MeanKind::psi:
    return "psi";
  }
  return "uniform";
}

// Pairs of nodes inside a ball: K_ab = w_a w_b / w(B_{a,b}) and log d_ab.
struct BallPairs {
  std::vector<std::size_t> idx;
  std::vector<double> w;      // w at the nodes
  std::vector<double> K;      // m x m, zero diagonal
  std::vector<double> logd;   // m x m
  std::vector<double> dist;   // m x m

  std::size_t m() const { return idx.size(); }
};

BallPairs ball_pairs(const GridDomain& grid, const WeightModel& w, const BallSpec& B, bool with_kernel) {
  BallPairs bp;
  bp.idx = nodes_in(grid, B);
  const std::size_t m = bp.idx.size();
  bp.w.resize(m);
  for (std::size_t a = 0; a < m; ++a) bp.w[a] = w(grid.node(bp.idx[a]));
  bp.K.assign(with_kernel ? m * m : 0, 0.0);
  bp.logd.assign(m * m, 0.0);
  bp.dist.assign(m * m, 0.0);
  ErrorSink sink;
  pairsum::parallel::for_rows(m, [&](std::size_t a) {
    const Point& x = grid.node(bp.idx[a]);
    for (std::size_t b = a + 1; b < m; ++b) {
      const Point& y = grid.node(bp.idx[b]);
      const double d = distance(x, y);
      bp.dist[a * m + b] = d;
      bp.logd[a * m + b] = std::log(d);
      if (with_kernel) {
        bp.K[a * m + b] = sink.run([&] { return bp.w[a] * bp.w[b] / ball_measure(w, pair_ball(x, y)); });
      }
    }
  });
  sink.rethrow();
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      bp.dist[a * m + b] = bp.dist[b * m + a];
      bp.logd[a * m + b] = bp.logd[b * m + a];
      if (with_kernel) bp.K[a * m + b] = bp.K[b * m + a];
    }
  }
  return bp;
}

inline double pow_p(double t, double p) { return p == 2.0 ? t * t : std::pow(t, p); }

// sum_{a != b} |v_a - v_b|^p A_ab over the ball pairs.
double ball_double_sum(const BallPairs& bp, const std::vector<double>& vb, const std::vector<double>& A, double p) {
  const std::size_t m = bp.m();
  return 2.0 * pairsum::parallel::upper(m, [&](std::size_t a, std::size_t b) {
    const double dv = std::abs(vb[a] - vb[b]);
    return dv == 0.0 ? 0.0 : pow_p(dv, p) * A[a * m + b];
  });
}

std::vector<double> restrict_to(const std::vector<std::size_t>& idx, std::span<const double> v) {
  std::vector<double> out(idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a) out[a] = v[idx[a]];
  return out;
}

void check_family(const GridDomain& grid, const std::vector<FieldVector>& family) {
  if (family.empty()) throw InvalidArgument("test family is empty");
  for (const auto& v : family) {
    if (v.size() != grid.size()) throw InvalidArgument("test function length does not match the grid");
  }
}

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

Json number_list(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

std::string alpha_tag(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ratio_a%g", a);
  return buf;
}

} // namespace

std::vector<double> psi_density(const GridDomain& grid, const BallSpec& B) {
  std::vector<double> psi(grid.size(), 0.0);
  double mass = 0.0;
  for (std::size_t i : nodes_in(grid, B)) {
    psi[i] = 1.0 - distance(grid.node(i), B.center) / B.radius;
    mass += psi[i];
  }
  mass *= grid.cell_volume();
  for (double& v : psi) v /= mass;
  return psi;
}

double ball_mean(const GridDomain& grid, const WeightModel& w, const BallSpec& B, std::span<const double> v,
                 MeanKind kind) {
  const auto idx = nodes_in(grid, B);
  std::vector<double> num(idx.size());
  std::vector<double> den(idx.size());
  std::vector<double> psi;
  if (kind == MeanKind::psi) psi = psi_density(grid, B);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    const std::size_t i = idx[a];
    const double weight = kind == MeanKind::uniform ? 1.0 : kind == MeanKind::weighted ? w(grid.node(i)) : psi[i];
    num[a] = weight * v[i];
    den[a] = weight;
  }
  return pairwise_sum(num) / pairwise_sum(den);
}

VerificationReport poincare_check(double p, const WeightModel& w, const GridDomain& grid, const BallSpec& B,
                                  const std::vector<FieldVector>& family, const PoincareOptions& opt) {
  check_family(grid, family);
  if (opt.s_values.empty()) throw InvalidArgument("poincare_check: no s values");
  const auto ref_it = std::find(opt.s_values.begin(), opt.s_values.end(), opt.s_reference);
  if (ref_it == opt.s_values.end()) throw InvalidArgument("poincare_check: s_reference must be in s_values");
  const BallPairs bp = ball_pairs(grid, w, B, true);
  const std::size_t m = bp.m();
  const double hn = grid.cell_volume();
  const double r = B.radius;

  // ratios[f][k] for s_values[k]
  std::vector<std::vector<double>> ratios(family.size(), std::vector<double>(opt.s_values.size(), 0.0));
  std::vector<double> A(m * m, 0.0);
  for (std::size_t k = 0; k < opt.s_values.size(); ++k) {
    const double s = opt.s_values[k];
    if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("poincare_check: s must lie in (0,1)");
    for (std::size_t q = 0; q < m * m; ++q) A[q] = bp.K[q] == 0.0 ? 0.0 : bp.K[q] * std::exp(-s * p * bp.logd[q]);
    for (std::size_t f = 0; f < family.size(); ++f) {
      const auto vb = restrict_to(bp.idx, family[f]);
      const double mean = ball_mean(grid, w, B, family[f], opt.mean);
      std::vector<double> lhs_terms(m);
      for (std::size_t a = 0; a < m; ++a) lhs_terms[a] = pow_p(std::abs(vb[a] - mean), p) * bp.w[a];
      const double lhs = pairwise_sum(lhs_terms) * hn;
      const double rhs = (1.0 - s) * std::pow(r, s * p) * ball_double_sum(bp, vb, A, p) * hn * hn;
      ratios[f][k] = safe_ratio(lhs, rhs);
    }
  }
  const std::size_t kref = static_cast<std::size_t>(ref_it - opt.s_values.begin());
  double max_ratio = 0.0;
  double stability = 0.0;
  std::vector<double> per_s(opt.s_values.size(), 0.0);
  for (std::size_t f = 0; f < family.size(); ++f) {
    for (std::size_t k = 0; k < opt.s_values.size(); ++k) {
      max_ratio = std::max(max_ratio, ratios[f][k]);
      per_s[k] = std::max(per_s[k], ratios[f][k]);
      if (ratios[f][kref] > 0.0 && opt.s_values[k] <= 0.95) {
        stability = std::max(stability, ratios[f][k] / ratios[f][kref]);
      }
    }
  }

  VerificationReport rep;
  rep.check_name = "poincare";
  rep.provenance = Provenance::frozen_band;
  rep.parameters = Json{{"p", p},
                        {"weight", w.describe()},
                        {"grid", grid_json(grid)},
                        {"ball", ball_json(B, grid.dim())},
                        {"family_size", family.size()},
                        {"s_values", number_list(opt.s_values)},
                        {"mean", mean_name(opt.mean)}};
  rep.add("max_ratio", max_ratio);
  rep.add("s_stability", stability, Band{0.0, opt.stability_limit});
  for (std::size_t k = 0; k < opt.s_values.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "max_ratio_s%g", opt.s_values[k]);
    rep.add(name, per_s[k]);
  }
  rep.finalize();
  return rep;
}

VerificationReport sobolev_poincare_check(double p, const WeightModel& w, const GridDomain& grid, const BallSpec& B,
                                          const std::vector<FieldVector>& family,
                                          const SobolevPoincareOptions& opt) {
  if (grid.dim() != 2) throw InvalidArgument("sobolev_poincare_check: needs n = 2");
  check_family(grid, family);
  const BallPairs bp = ball_pairs(grid, w, B, true);
  const std::size_t m = bp.m();
  const double n = 2.0;
  const double hn = grid.cell_volume();
  const double r = B.radius;
  const double wB = pairwise_sum(bp.w) * hn;

  std::vector<double> per_s(opt.s_values.size(), 0.0);
  std::vector<double> A(m * m, 0.0);
  for (std::size_t k = 0; k < opt.s_values.size(); ++k) {
    const double s = opt.s_values[k];
    if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("sobolev_poincare_check: s must lie in (0,1)");
    const double q = n * p / (n - s);
    for (std::size_t t = 0; t < m * m; ++t) A[t] = bp.K[t] == 0.0 ? 0.0 : bp.K[t] * std::exp(-s * p * bp.logd[t]);
    for (const auto& v : family) {
      const auto vb = restrict_to(bp.idx, v);
      const double mean = ball_mean(grid, w, B, v, opt.mean);
      std::vector<double> terms(m);
      for (std::size_t a = 0; a < m; ++a) terms[a] = std::pow(std::abs(vb[a] - mean), q) * bp.w[a];
      const double lhs = std::pow(pairwise_sum(terms) * hn / wB, (n - s) / n);
      const double pref = std::pow(s, 1.0 - 2.0 * p) * (1.0 - s) * std::pow(r, s * p) / wB;
      const double rhs = pref * ball_double_sum(bp, vb, A, p) * hn * hn;
      per_s[k] = std::max(per_s[k], safe_ratio(lhs, rhs));
    }
  }
  VerificationReport rep;
  rep.check_name = "sobolev_poincare";
  rep.parameters = Json{{"p", p},
                        {"weight", w.describe()},
                        {"grid", grid_json(grid)},
                        {"ball", ball_json(B, grid.dim())},
                        {"family_size", family.size()},
                        {"s_values", number_list(opt.s_values)},
                        {"mean", mean_name(opt.mean)}};
  rep.add("max_ratio", max_of(per_s));
  for (std::size_t k = 0; k < opt.s_values.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "max_ratio_s%g", opt.s_values[k]);
    rep.add(name, per_s[k]);
  }
  rep.finalize();
  return rep;
}

std::vector<double> default_s_grid() {
  std::vector<double> s;
  for (int k = 1; k <= 19; ++k) s.push_back(0.05 * k);
  s.push_back(0.99);
  return s;
}

LimitScanResult limit_scan(const EnergySpec& base, const WeightModel& w, const GridDomain& grid,
                           std::span<const double> v, const std::vector<double>& s_values) {
  if (s_values.empty()) throw InvalidArgument("limit_scan: empty s grid");
  if (v.size() != grid.size()) throw InvalidArgument("limit_scan: field length does not match the grid");
  for (std::size_t k = 0; k < s_values.size(); ++k) {
    if (!(s_values[k] > 0.0 && s_values[k] < 1.0)) throw InvalidArgument("limit_scan: s must lie in (0,1)");
    if (k > 0 && !(s_values[k] > s_values[k - 1])) throw InvalidArgument("limit_scan: s grid must be increasing");
  }
  LimitScanResult res;
  const double p = base.p;
  const double hn = grid.cell_volume();
  const FieldVector grad = gradient_norm(grid, v);
  std::vector<double> t0(grid.size()), t1(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double wi = w(grid.node(i));
    t0[i] = pow_p(std::abs(v[i]), p) * wi;
    t1[i] = pow_p(grad[i], p) * wi;
  }
  res.ref_l0 = pairwise_sum(t0) * hn;
  res.ref_l1 = pairwise_sum(t1) * hn;
  bool finite = true;
  for (double s : s_values) {
    EnergySpec spec = base;
    spec.s = s;
    spec.s0 = std::min(base.s0, s);
    double J = 0.0;
    try {
      J = energy(spec, w, grid, v);
    } catch (const NonFiniteEnergyError&) {
      J = kInf;
    }
    finite = finite && std::isfinite(J);
    res.s.push_back(s);
    res.energy.push_back(J);
  }
  auto& rep = res.report;
  rep.check_name = "limit_scan";
  rep.parameters = Json{{"p", p},
                        {"weight", w.describe()},
                        {"grid", grid_json(grid)},
                        {"kernel_mode", static_cast<int>(base.resolved_mode(w))},
                        {"s_values", number_list(s_values)}};
  rep.add("ratio0", safe_ratio(res.energy.front(), res.ref_l0));
  rep.add("ratio1", safe_ratio(res.energy.back(), res.ref_l1));
  rep.add("finite", finite ? 1.0 : 0.0, Band{1.0, 1.0});
  rep.add("ref_l0", res.ref_l0);
  rep.add("ref_l1", res.ref_l1);
  rep.finalize();
  return res;
}

VerificationReport boundedness_check(const DirichletProblem& prob, std::span<const double> u, const BallSpec& B,
                                     const BoundednessOptions& opt) {
  const GridDomain& grid = prob.grid;
  if (!grid.contains_ball(B)) throw QueryOutsideDomainError("boundedness_check: B_r must lie in Omega");
  if (opt.deltas.empty()) throw InvalidArgument("boundedness_check: no deltas");
  const double p = prob.spec.p;
  const double n = grid.dim();
  const auto inner = nodes_in(grid, BallSpec{B.center, 0.5 * B.radius});
  double lhs = 0.0;
  for (std::size_t i : inner) lhs = std::max(lhs, std::abs(u[i]));
  const auto idx = nodes_in(grid, B);
  std::vector<double> num(idx.size()), den(idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a) {
    const double wi = prob.weight(grid.node(idx[a]));
    num[a] = pow_p(std::abs(u[idx[a]]), p) * wi;
    den[a] = wi;
  }
  const double mean_term = std::pow(pairwise_sum(num) / pairwise_sum(den), 1.0 / p);
  const double tl = tail(prob.spec, prob.weight, grid, u, TailQuery{B.center, 0.5 * B.radius});
  const double e = (p - 1.0) * n / (p * prob.spec.s0);

  double cb_req = 0.0;
  double worst = 0.0;
  for (double d : opt.deltas) {
    if (!(d > 0.0)) throw InvalidArgument("boundedness_check: deltas must be positive");
    const double scale = std::pow(d, -e) * mean_term;
    cb_req = std::max(cb_req, safe_ratio(std::max(0.0, lhs - d * tl), scale));
    if (opt.c_b) worst = std::max(worst, safe_ratio(lhs, *opt.c_b * scale + d * tl));
  }

  VerificationReport rep;
  rep.check_name = "boundedness";
  rep.provenance = opt.c_b ? Provenance::frozen_band : Provenance::analytic;
  rep.parameters = Json{{"p", p},
                        {"s", prob.spec.s},
                        {"s0", prob.spec.s0},
                        {"weight", prob.weight.describe()},
                        {"grid", grid_json(grid)},
                        {"ball", ball_json(B, grid.dim())},
                        {"deltas", number_list(opt.deltas)}};
  if (opt.c_b) {
    rep.parameters["c_b"] = *opt.c_b;
    rep.add("lhs_over_rhs", worst, Band{0.0, 1.0});
  }
  rep.add("c_b_required", cb_req);
  rep.add("lhs", lhs);
  rep.add("mean_term", mean_term);
  rep.add("tail", tl);
  rep.finalize();
  return rep;
}

VerificationReport caccioppoli_check(const DirichletProblem& prob, std::span<const double> u, const BallSpec& B,
                                     double k_level, const Cutoff& cutoff) {
  const GridDomain& grid = prob.grid;
  if (!grid.contains_ball(B)) throw QueryOutsideDomainError("caccioppoli_check: B_r must lie in Omega");
  if (!(cutoff.inner >= 0.0 && cutoff.inner < cutoff.outer && cutoff.outer <= 1.0)) {
    throw InvalidArgument("caccioppoli_check: need 0 <= inner < outer <= 1");
  }
  const double p = prob.spec.p;
  const double s = prob.spec.s;
  const double sp = s * p;
  const double hn = grid.cell_volume();
  const WeightModel& w = prob.weight;

  std::vector<double> phi(grid.size(), 0.0), v(grid.size(), 0.0);
  bool any = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double d = distance(grid.node(i), B.center) / B.radius;
    phi[i] = std::clamp((cutoff.outer - d) / (cutoff.outer - cutoff.inner), 0.0, 1.0);
    any = any || phi[i] > 0.0;
    v[i] = std::max(u[i] - k_level, 0.0);
  }
  if (!any) throw DegenerateCutoffError("caccioppoli_check: cutoff vanishes on every node");

  const BallPairs bp = ball_pairs(grid, w, B, true);
  const std::size_t m = bp.m();
  const auto vb = restrict_to(bp.idx, v);
  const auto fb = restrict_to(bp.idx, phi);
  const double lhs = 2.0 * hn * hn * pairsum::parallel::upper(m, [&](std::size_t a, std::size_t b) {
    const double dv = std::abs(vb[a] - vb[b]);
    if (dv == 0.0) return 0.0;
    const double mphi = std::pow(std::min(fb[a], fb[b]), p);
    return pow_p(dv, p) * std::exp(-sp * bp.logd[a * m + b]) * mphi * bp.K[a * m + b];
  });
  const double rhs_local = 2.0 * hn * hn * pairsum::parallel::upper(m, [&](std::size_t a, std::size_t b) {
    const double t = std::abs(fb[a] - fb[b]) * std::max(vb[a], vb[b]);
    if (t == 0.0) return 0.0;
    return pow_p(t, p) * std::exp(-sp * bp.logd[a * m + b]) * bp.K[a * m + b];
  });

  std::vector<double> mass(m);
  for (std::size_t a = 0; a < m; ++a) mass[a] = vb[a] * std::pow(fb[a], p) * bp.w[a];
  const double local_mass = pairwise_sum(mass) * hn;

  std::vector<std::size_t> support, outside;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (phi[i] > 0.0) support.push_back(i);
    if (!inside_ball(B, grid.node(i)) && v[i] > 0.0) outside.push_back(i);
  }
  std::vector<double> sup_terms(support.size(), 0.0);
  ErrorSink sink;
  pairsum::parallel::for_rows(support.size(), [&](std::size_t a) {
    const Point& y = grid.node(support[a]);
    std::vector<double> t(outside.size());
    for (std::size_t c = 0; c < outside.size(); ++c) {
      const Point& x = grid.node(outside[c]);
      t[c] = sink.run([&] {
        return std::pow(v[outside[c]], p - 1.0) * std::pow(distance(x, y), -sp) * w(x) /
               ball_measure(w, pair_ball(x, y));
      });
    }
    sup_terms[a] = pairwise_sum(t) * hn;
  });
  sink.rethrow();
  const double rhs_tail = local_mass * max_of(sup_terms);
  const double ratio = safe_ratio(lhs, rhs_local + rhs_tail);

  VerificationReport rep;
  rep.check_name = "caccioppoli";
  rep.parameters = Json{{"p", p},
                        {"s", s},
                        {"weight", w.describe()},
                        {"grid", grid_json(grid)},
                        {"ball", ball_json(B, grid.dim())},
                        {"k_level", k_level},
                        {"cutoff", Json::array({cutoff.inner, cutoff.outer})}};
  rep.add("ratio", ratio);
  rep.add("lhs", lhs);
  rep.add("rhs_local", rhs_local);
  rep.add("rhs_tail", rhs_tail);
  rep.finalize();
  return rep;
}

VerificationReport holder_estimate(const GridDomain& grid, std::span<const double> u, const BallSpec& B,
                                   const HolderOptions& opt) {
  if (!(opt.tau > 0.0 && opt.tau < 1.0)) throw InvalidArgument("holder_estimate: tau must lie in (0,1)");
  if (!grid.contains_ball(B)) throw QueryOutsideDomainError("holder_estimate: B_r must lie in Omega");
  std::vector<double> osc;
  for (int j = 0; j < opt.levels; ++j) {
    const auto idx = grid.nodes_in_ball(BallSpec{B.center, B.radius * std::pow(opt.tau, j)});
    if (static_cast<int>(idx.size()) < opt.min_nodes) break;
    double lo = kInf, hi = -kInf;
    for (std::size_t i : idx) {
      lo = std::min(lo, u[i]);
      hi = std::max(hi, u[i]);
    }
    osc.push_back(hi - lo);
  }
  if (osc.size() < 3) throw InsufficientResolutionError("holder_estimate: fewer than 3 levels are resolved");

  bool monotone = true;
  for (std::size_t j = 1; j < osc.size(); ++j) monotone = monotone && osc[j] <= osc[j - 1];
  std::vector<double> xs, ys;
  for (std::size_t j = 0; j < osc.size(); ++j) {
    if (osc[j] <= opt.flat_threshold) continue;
    xs.push_back(static_cast<double>(j) * std::log(opt.tau));
    ys.push_back(std::log(osc[j]));
  }
  double alpha = kInf;
  if (xs.size() >= 2) {
    const double mx = pairwise_sum(xs) / xs.size();
    const double my = pairwise_sum(ys) / ys.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      sxy += (xs[k] - mx) * (ys[k] - my);
      sxx += (xs[k] - mx) * (xs[k] - mx);
    }
    alpha = sxy / sxx;
  }

  VerificationReport rep;
  rep.check_name = "holder";
  rep.provenance = Provenance::analytic;
  rep.parameters = Json{{"grid", grid_json(grid)},
                        {"ball", ball_json(B, grid.dim())},
                        {"tau", opt.tau},
                        {"levels", opt.levels},
                        {"min_nodes", opt.min_nodes}};
  rep.add("alpha_hat", alpha, Band{std::numeric_limits<double>::min(), kInf});
  rep.add("monotone", monotone ? 1.0 : 0.0, Band{1.0, 1.0});
  rep.add("usable_levels", static_cast<double>(osc.size()));
  for (std::size_t j = 0; j < osc.size(); ++j) rep.add("osc_" + std::to_string(j), osc[j]);
  rep.finalize();
  return rep;
}

VerificationReport harnack_check(const std::vector<HarnackLevel>& levels, const BallSpec& B, double drift_limit) {
  if (levels.empty()) throw InvalidArgument("harnack_check: no levels");
  std::vector<double> H;
  Json grids = Json::array();
  for (const auto& lv : levels) {
    const DirichletProblem& prob = *lv.prob;
    const GridDomain& grid = prob.grid;
    if (!grid.contains_ball(BallSpec{B.center, 2.0 * B.radius})) {
      throw QueryOutsideDomainError("harnack_check: B_2r must lie in Omega");
    }
    const auto idx = nodes_in(grid, B);
    double lo = kInf, hi = -kInf;
    for (std::size_t i : idx) {
      lo = std::min(lo, lv.u[i]);
      hi = std::max(hi, lv.u[i]);
    }
    FieldVector neg(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) neg[i] = std::max(-lv.u[i], 0.0);
    const double tl = tail(prob.spec, prob.weight, grid, neg, TailQuery{B.center, B.radius});
    const double den = lo + tl;
    double h = 0.0;
    if (hi == lo && tl == 0.0 && hi > 0.0) {
      h = 1.0;
    } else {
      h = den > 0.0 ? hi / den : kInf;
    }
    H.push_back(h);
    grids.push_back(grid_json(grid));
  }
  VerificationReport rep;
  rep.check_name = "harnack";
  const DirichletProblem& p0 = *levels.front().prob;
  rep.parameters = Json{{"p", p0.spec.p},
                        {"s", p0.spec.s},
                        {"weight", p0.weight.describe()},
                        {"grids", grids},
                        {"ball", ball_json(B, p0.grid.dim())}};
  rep.add("H", H.front());
  rep.add("finite", std::isfinite(H.front()) ? 1.0 : 0.0, Band{1.0, 1.0});
  if (H.size() > 1) {
    double drift = 0.0;
    for (std::size_t k = 1; k < H.size(); ++k) drift = std::max(drift, std::abs(H[k] - H[0]) / H[0]);
    if (!std::isfinite(drift)) drift = kInf;
    rep.add("drift", drift, Band{0.0, drift_limit});
    for (std::size_t k = 1; k < H.size(); ++k) rep.add("H_" + std::to_string(k), H[k]);
  }
  rep.finalize();
  return rep;
}

VerificationReport mollification_suite(const EnergySpec& spec, const WeightModel& w, const GridDomain& grid,
                                       std::span<const double> v, const std::vector<double>& epsilons) {
  if (epsilons.empty()) throw InvalidArgument("mollification_suite: no epsilons");
  for (std::size_t k = 1; k < epsilons.size(); ++k) {
    if (!(epsilons[k] < epsilons[k - 1])) throw InvalidArgument("mollification_suite: epsilons must decrease");
  }
  const double p = spec.p;
  const double s = spec.s;
  const double hn = grid.cell_volume();
  const double Jv = energy(spec, w, grid, v);
  double ratio_a = 0.0, ratio_b = 0.0, ratio_c = 0.0;
  bool decreasing = true;
  double prev = kInf;
  Json diffs = Json::array();
  const FieldVector vv(v.begin(), v.end());
  for (double eps : epsilons) {
    const FieldVector ve = mollify(grid, vv, MollifierSpec{eps});
    FieldVector diff(grid.size());
    std::vector<double> lp(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      diff[i] = ve[i] - vv[i];
      lp[i] = pow_p(std::abs(diff[i]), p) * w(grid.node(i));
    }
    const double Ja = energy(spec, w, grid, ve);
    const double D = energy(spec, w, grid, diff);
    const double reach = 4.0 * eps;
    const NodeSet& nodes = grid.nodes();
    const double S = energy_restricted(spec, w, grid, vv, [&](std::size_t i, std::size_t j) {
                       return distance(nodes.points[i], nodes.points[j]) <= reach;
                     }) / s;
    ratio_a = std::max(ratio_a, safe_ratio(Ja, Jv));
    ratio_b = std::max(ratio_b, safe_ratio(D, S));
    ratio_c = std::max(ratio_c, safe_ratio(pairwise_sum(lp) * hn, std::pow(eps, s * p) / s * Jv));
    decreasing = decreasing && D <= prev;
    prev = D;
    diffs.push_back(D);
  }
  VerificationReport rep;
  rep.check_name = "mollification";
  rep.parameters = Json{{"p", p},
                        {"s", s},
                        {"weight", w.describe()},
                        {"grid", grid_json(grid)},
                        {"epsilons", number_list(epsilons)}};
  rep.add("energy_ratio", ratio_a);
  rep.add("difference_ratio", ratio_b);
  rep.add("lp_ratio", ratio_c);
  rep.add("decreasing", decreasing ? 1.0 : 0.0, Band{1.0, 1.0});
  rep.finalize();
  return rep;
}

namespace {

// int over the cell [-h/2, h/2]^n of |t|^{alpha - n}.
double riesz_self_cell(int n, double alpha, double h) {
  if (n == 1) return 2.0 * std::pow(0.5 * h, alpha) / alpha;
  // Eight octants of the square in polar coordinates: int_0^{R(theta)} r^{alpha-1} dr, R = 1/(2 cos theta).
  const auto& gl = gauss_legendre_unit(32);
  double acc = 0.0;
  for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
    const double th = 0.25 * std::numbers::pi * gl.nodes[k];
    acc += gl.weights[k] * std::pow(0.5 / std::cos(th), alpha) / alpha;
  }
  return std::pow(h, alpha) * 8.0 * 0.25 * std::numbers::pi * acc;
}

// I_alpha f at the nodes rows[a] from sources cols[b] (f given on cols).
std::vector<double> riesz_rows(const GridDomain& grid, const std::vector<std::size_t>& rows,
                               const std::vector<std::size_t>& cols, const std::vector<double>& fcols,
                               double alpha) {
  const int n = grid.dim();
  const double hn = grid.cell_volume();
  const double self = riesz_self_cell(n, alpha, grid.spacing());
  std::vector<double> out(rows.size());
  pairsum::parallel::for_rows(rows.size(), [&](std::size_t a) {
    const std::size_t i = rows[a];
    std::vector<double> t(cols.size());
    for (std::size_t b = 0; b < cols.size(); ++b) {
      const std::size_t j = cols[b];
      if (fcols[b] == 0.0) {
        t[b] = 0.0;
      } else if (j == i) {
        t[b] = fcols[b] * self;
      } else {
        t[b] = fcols[b] * std::pow(distance(grid.node(i), grid.node(j)), alpha - n) * hn;
      }
    }
    out[a] = pairwise_sum(t);
  });
  return out;
}

// Self-cell constant int int_{[0,1]^n x [0,1]^n} |e.(a-b)| |a-b|^{-n-alpha} da db for a unit
// vector e at angle theta_e (2-D) or any e (1-D).
double cell_gradient_constant(int n, double alpha, double theta_e) {
  if (n == 1) return 2.0 / ((1.0 - alpha) * (2.0 - alpha));
  constexpr int M = 720;
  double acc = 0.0;
  for (int k = 0; k < M; ++k) {
    const double th = 2.0 * std::numbers::pi * (k + 0.5) / M;
    const double c = std::abs(std::cos(th));
    const double s = std::abs(std::sin(th));
    const double R = 1.0 / std::max(c, s);
    const double F = std::pow(R, 1.0 - alpha) / (1.0 - alpha) - (c + s) * std::pow(R, 2.0 - alpha) / (2.0 - alpha) +
                     c * s * std::pow(R, 3.0 - alpha) / (3.0 - alpha);
    acc += std::abs(std::cos(th - theta_e)) * F;
  }
  return acc * 2.0 * std::numbers::pi / M;
}

} // namespace

FieldVector riesz_potential(const GridDomain& grid, std::span<const double> f, double alpha) {
  if (!(alpha > 0.0 && alpha < grid.dim())) throw InvalidArgument("riesz_potential: need 0 < alpha < n");
  if (f.size() != grid.size()) throw InvalidArgument("riesz_potential: field length does not match the grid");
  std::vector<std::size_t> all(grid.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return riesz_rows(grid, all, all, std::vector<double>(f.begin(), f.end()), alpha);
}

VerificationReport riesz_bound_check(double p, const WeightModel& w, const GridDomain& grid, const BallSpec& B,
                                     const std::vector<FieldVector>& family, const std::vector<double>& alphas) {
  check_family(grid, family);
  if (alphas.empty()) throw InvalidArgument("riesz_bound_check: no alphas");
  const auto idx = nodes_in(grid, B);
  const std::size_t m = idx.size();
  const double hn = grid.cell_volume();
  std::vector<double> wb(m);
  for (std::size_t a = 0; a < m; ++a) wb[a] = w(grid.node(idx[a]));
  const double wB = pairwise_sum(wb) * hn;

  VerificationReport rep;
  rep.check_name = "riesz_bound";
  rep.parameters = Json{{"p", p},
                        {"weight", w.describe()},
                        {"grid", grid_json(grid)},
                        {"ball", ball_json(B, grid.dim())},
                        {"family_size", family.size()},
                        {"alphas", number_list(alphas)}};
  std::vector<double> per_alpha;
  for (double alpha : alphas) {
    if (!(alpha > 0.0 && alpha < grid.dim())) throw InvalidArgument("riesz_bound_check: need 0 < alpha < n");
    double best = 0.0;
    for (const auto& f : family) {
      std::vector<double> fb(m);
      for (std::size_t a = 0; a < m; ++a) fb[a] = std::abs(f[idx[a]]);
      const auto I = riesz_rows(grid, idx, idx, fb, alpha);
      std::vector<double> lt(m), rt(m);
      for (std::size_t a = 0; a < m; ++a) {
        lt[a] = pow_p(I[a], p) * wb[a];
        rt[a] = pow_p(fb[a], p) * wb[a];
      }
      const double lhs = std::pow(pairwise_sum(lt) * hn / wB, 1.0 / p);
      const double rhs = std::pow(B.radius, alpha) / alpha * std::pow(pairwise_sum(rt) * hn / wB, 1.0 / p);
      best = std::max(best, safe_ratio(lhs, rhs));
    }
    per_alpha.push_back(best);
  }
  rep.add("max_ratio", max_of(per_alpha));
  double lo = kInf;
  for (double v : per_alpha) lo = std::min(lo, v);
  rep.add("alpha_spread", safe_ratio(max_of(per_alpha), lo));
  for (std::size_t k = 0; k < alphas.size(); ++k) rep.add(alpha_tag(alphas[k]), per_alpha[k]);
  rep.finalize();
  return rep;
}

VerificationReport riesz_pointwise_check(const GridDomain& grid, const BallSpec& B,
                                         const std::vector<FieldVector>& family, const RieszPointwiseOptions& opt) {
  check_family(grid, family);
  if (opt.mean == MeanKind::weighted) throw InvalidArgument("riesz_pointwise_check: use a uniform or psi mean");
  if (opt.sample_stride < 1) throw InvalidArgument("riesz_pointwise_check: sample_stride must be >= 1");
  for (double a : opt.alphas) {
    if (!(a > 0.0 && a < 1.0)) throw InvalidArgument("riesz_pointwise_check: alpha must lie in (0,1)");
  }
  const int n = grid.dim();
  const double nd = n;
  const double h = grid.spacing();
  const double hn = grid.cell_volume();
  const auto idx = nodes_in(grid, B);
  const std::size_t m = idx.size();
  const WeightModel unit = WeightModel::constant(n, 2.0);

  // Gradient components by centred differences on the full grid.
  const int N = grid.nodes_per_axis();
  auto grad_at = [&](const FieldVector& v, std::size_t i) -> std::array<double, 2> {
    const int ix = static_cast<int>(i % N);
    const int iy = static_cast<int>(i / N);
    auto diff = [&](int c, int lo, int hi, auto at) {
      if (c == lo) return (at(c + 1) - at(c)) / h;
      if (c == hi) return (at(c) - at(c - 1)) / h;
      return (at(c + 1) - at(c - 1)) / (2.0 * h);
    };
    const double gx = diff(ix, 0, N - 1, [&](int k) { return v[grid.index(k, iy)]; });
    const double gy = n == 2 ? diff(iy, 0, N - 1, [&](int k) { return v[grid.index(ix, k)]; }) : 0.0;
    return {gx, gy};
  };

  std::vector<double> dist(m * m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) dist[a * m + b] = distance(grid.node(idx[a]), grid.node(idx[b]));
  }
  std::vector<std::size_t> samples;
  for (std::size_t a = 0; a < m; a += static_cast<std::size_t>(opt.sample_stride)) samples.push_back(a);

  std::vector<double> per_alpha(opt.alphas.size(), 0.0);
  double simple = 0.0;
  for (const auto& v : family) {
    const auto vb = restrict_to(idx, v);
    const double mean = ball_mean(grid, unit, B, v, opt.mean);
    std::vector<double> gnorm(m), gangle(m);
    for (std::size_t a = 0; a < m; ++a) {
      const auto g = grad_at(v, idx[a]);
      gnorm[a] = std::hypot(g[0], g[1]);
      gangle[a] = std::atan2(g[1], g[0]);
    }
    for (std::size_t k = 0; k < opt.alphas.size(); ++k) {
      const double alpha = opt.alphas[k];
      std::vector<double> cell(m);
      for (std::size_t c = 0; c < m; ++c) {
        cell[c] = gnorm[c] == 0.0 ? 0.0 : gnorm[c] * cell_gradient_constant(n, alpha, gangle[c]) *
                                               std::pow(h, nd + 1.0 - alpha);
      }
      std::vector<double> ratios(samples.size());
      pairsum::parallel::for_rows(samples.size(), [&](std::size_t q) {
        const std::size_t xa = samples[q];
        const double* dx = &dist[xa * m];
        std::vector<double> row(m);
        for (std::size_t a = 0; a < m; ++a) {
          double acc = 0.0;
          for (std::size_t b = a + 1; b < m; ++b) {
            const double dv = std::abs(vb[a] - vb[b]);
            if (dv == 0.0) continue;
            acc += dv * std::pow(dist[a * m + b], -nd - alpha) * std::pow(dx[a] + dx[b], alpha - nd);
          }
          row[a] = 2.0 * acc * hn * hn + cell[a] * std::pow(2.0 * std::max(dx[a], 0.5 * h), alpha - nd);
        }
        const double rhs = (1.0 - alpha) * pairwise_sum(row);
        ratios[q] = safe_ratio(std::abs(vb[xa] - mean), rhs);
      });
      per_alpha[k] = std::max(per_alpha[k], max_of(ratios));
    }
    std::vector<double> sr(samples.size());
    pairsum::parallel::for_rows(samples.size(), [&](std::size_t q) {
      const std::size_t xa = samples[q];
      const double* dx = &dist[xa * m];
      std::vector<double> row(m);
      for (std::size_t a = 0; a < m; ++a) {
        double acc = 0.0;
        for (std::size_t b = a + 1; b < m; ++b) {
          const double dv = std::abs(vb[a] - vb[b]);
          if (dv != 0.0) acc += dv * std::pow(dx[a] + dx[b], -2.0 * nd);
        }
        row[a] = 2.0 * acc * hn * hn;
      }
      sr[q] = safe_ratio(std::abs(vb[xa] - mean), pairwise_sum(row));
    });
    simple = std::max(simple, max_of(sr));
  }

  auto value_at = [&](double a) {
    const auto it = std::find(opt.alphas.begin(), opt.alphas.end(), a);
    if (it == opt.alphas.end()) throw InvalidArgument("riesz_pointwise_check: uniformity alphas must be in the set");
    return per_alpha[static_cast<std::size_t>(it - opt.alphas.begin())];
  };
  VerificationReport rep;
  rep.check_name = "riesz_pointwise";
  rep.parameters = Json{{"grid", grid_json(grid)},
                        {"ball", ball_json(B, n)},
                        {"family_size", family.size()},
                        {"alphas", number_list(opt.alphas)},
                        {"mean", mean_name(opt.mean)},
                        {"sample_stride", opt.sample_stride}};
  rep.add("max_ratio", max_of(per_alpha));
  const double hi = value_at(opt.alpha_high);
  const double ref = value_at(opt.alpha_reference);
  rep.add("uniformity", ref > 0.0 ? hi / ref : 0.0, Band{0.0, opt.uniformity_limit});
  rep.add("simple_ratio", simple);
  for (std::size_t k = 0; k < opt.alphas.size(); ++k) rep.add(alpha_tag(opt.alphas[k]), per_alpha[k]);
  rep.finalize();
  return rep;
}

IterationResult iteration_lemma_check(double b1, double b2, double beta, double a0, int J) {
  if (!(b1 > 0.0 && beta > 0.0 && b2 > 1.0 && a0 >= 0.0 && J >= 1)) {
    throw InvalidArgument("iteration_lemma_check: need b1, beta > 0, b2 > 1, a0 >= 0, J >= 1");
  }
  IterationResult res;
  res.threshold = std::pow(b1, -1.0 / beta) * std::pow(b2, -1.0 / (beta * beta));
  double a = a0;
  res.trace.push_back(a);
  for (int j = 0; j < J; ++j) {
    a = b1 * std::pow(b2, j) * std::pow(a, 1.0 + beta);
    res.trace.push_back(a);
    if (!(a <= 1e30)) {
      res.diverged = true;
      break;
    }
  }
  res.converged = !res.diverged && res.trace.back() < 1e-12;
  return res;
}

VerificationReport iteration_lemma_suite(int J) {
  int guaranteed = 0, converged = 0, above_diverged = 0, above = 0;
  const double fractions[] = {0.0, 0.25, 0.5, 0.9, 0.999};
  for (double b1 : {0.5, 1.0, 2.0}) {
    for (double b2 : {1.5, 2.0, 4.0}) {
      for (double beta : {0.5, 1.0, 2.0}) {
        const double th = iteration_lemma_check(b1, b2, beta, 0.0, 1).threshold;
        for (double f : fractions) {
          ++guaranteed;
          if (iteration_lemma_check(b1, b2, beta, f * th, J).converged) ++converged;
        }
        ++above;
        if (iteration_lemma_check(b1, b2, beta, 10.0 * th, J).diverged) ++above_diverged;
      }
    }
  }
  // Exactly at the threshold the arithmetic is exact for (1, 2, 1): a_j = 2^{-(j+1)}.
  ++guaranteed;
  if (iteration_lemma_check(1.0, 2.0, 1.0, 0.5, J).converged) ++converged;

  VerificationReport rep;
  rep.check_name = "iteration_lemma";
  rep.provenance = Provenance::analytic;
  rep.parameters = Json{{"J", J},
                        {"b1", Json::array({0.5, 1.0, 2.0})},
                        {"b2", Json::array({1.5, 2.0, 4.0})},
                        {"beta", Json::array({0.5, 1.0, 2.0})},
                        {"a0_fractions", Json::array({0.0, 0.25, 0.5, 0.9, 0.999})}};
  rep.add("converged_fraction", static_cast<double>(converged) / guaranteed, Band{1.0, 1.0});
  rep.add("guaranteed_cases", guaranteed);
  rep.add("diverged_above_threshold", above_diverged);
  rep.add("above_threshold_cases", above);
  rep.finalize();
  return rep;
}

} // namespace degenlap
