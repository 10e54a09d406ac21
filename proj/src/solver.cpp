#include "degenlap/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "degenlap/errors.hpp"
#include "degenlap/pair_kernels.hpp"
#include "degenlap/summation.hpp"

namespace degenlap {

namespace {

// W_rj = k(x_i, x_j) d_ij^{-sp} h^{2n} for interior rows i = rows[r].
class InteriorRows {
public:
  explicit InteriorRows(const DirichletProblem& prob)
      : rows_(prob.grid.interior_indices()), n_(prob.grid.size()), pos_(prob.grid.size(), -1),
        w_(rows_.size() * prob.grid.size(), 0.0) {
    for (std::size_t r = 0; r < rows_.size(); ++r) pos_[rows_[r]] = static_cast<long>(r);
    const PairWeight W(prob.spec, prob.weight, prob.grid.nodes());
    ErrorSink sink;
    pairsum::parallel::for_rows(rows_.size(), [&](std::size_t r) {
      const std::size_t i = rows_[r];
      double* row = &w_[r * n_];
      for (std::size_t j = 0; j < n_; ++j) {
        if (j != i) row[j] = sink.run([&] { return W(i, j); });
      }
    });
    sink.rethrow();
  }

  std::size_t rows() const { return rows_.size(); }
  std::size_t cols() const { return n_; }
  std::size_t node(std::size_t r) const { return rows_[r]; }
  long position(std::size_t j) const { return pos_[j]; }
  const double* row(std::size_t r) const { return &w_[r * n_]; }

  /// out[r] = pairwise_j term(r, j, W_rj) with the (i, i) entry fixed at 0.
  template <class Term>
  void reduce_rows(const Term& term, std::vector<double>& out) const {
    out.assign(rows_.size(), 0.0);
    const long nr = static_cast<long>(rows_.size());
#pragma omp parallel
    {
      std::vector<double> buf(n_);
#pragma omp for schedule(dynamic, 4)
      for (long rl = 0; rl < nr; ++rl) {
        const auto r = static_cast<std::size_t>(rl);
        const std::size_t i = rows_[r];
        const double* wr = row(r);
        for (std::size_t j = 0; j < n_; ++j) buf[j] = j == i ? 0.0 : term(i, j, wr[j]);
        out[r] = pairwise_sum(buf);
      }
    }
  }

private:
  std::vector<std::size_t> rows_;
  std::size_t n_;
  std::vector<long> pos_;
  std::vector<double> w_;
};

// psi(t) = (t^2 + eps^2)^{p/2} - eps^p and its derivatives.
struct Smoothed {
  double p;
  double eps;

  double psi(double t) const {
    if (t == 0.0) return 0.0;
    if (p == 2.0) return t * t;
    if (eps == 0.0) return std::pow(std::abs(t), p);
    return std::pow(t * t + eps * eps, 0.5 * p) - std::pow(eps, p);
  }
  double dpsi(double t) const {
    if (t == 0.0) return 0.0;
    if (p == 2.0) return 2.0 * t;
    return p * std::pow(t * t + eps * eps, 0.5 * (p - 2.0)) * t;
  }
  double d2psi(double t) const {
    if (p == 2.0) return 2.0;
    const double q = t * t + eps * eps;
    if (q == 0.0) return 0.0;
    return p * std::pow(q, 0.5 * (p - 4.0)) * ((p - 1.0) * t * t + eps * eps);
  }
};

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void check_problem(const DirichletProblem& prob) {
  prob.spec.validate();
  if (prob.g.size() != prob.grid.size()) throw InvalidArgument("solve: data length does not match the grid");
  for (std::size_t j : prob.grid.exterior_indices()) {
    if (!std::isfinite(prob.g[j])) throw NonFiniteEnergyError("solve: complement data is not finite");
  }
  if (prob.weight.dim() != prob.grid.dim()) throw InvalidArgument("solve: weight and grid dimensions differ");
}

class NonlinearSolver {
public:
  NonlinearSolver(const DirichletProblem& prob, const InteriorRows& rows, FieldVector u)
      : prob_(prob), rows_(rows), u_(std::move(u)) {
    c_s_ = prob.spec.c_s();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t j : prob.grid.exterior_indices()) {
      lo = std::min(lo, prob.g[j]);
      hi = std::max(hi, prob.g[j]);
    }
    lo_ = lo;
    hi_ = hi;
    smooth_ = Smoothed{prob.spec.p, smoothing_epsilon(prob.spec.p, prob.g)};
  }

  FieldVector& field() { return u_; }

  double lower() const { return lo_; }
  double upper() const { return hi_; }

  /// Energy over pairs touching Omega.
  double energy(const FieldVector& u) const {
    std::vector<double> rs;
    rows_.reduce_rows([&](std::size_t i, std::size_t j, double w) {
      const double t = u[i] - u[j];
      if (t == 0.0) return 0.0;
      return (rows_.position(j) < 0 ? 2.0 : 1.0) * smooth_.psi(t) * w;
    }, rs);
    return c_s_ * pairwise_sum(rs);
  }

  std::vector<double> gradient(const FieldVector& u) const {
    std::vector<double> g;
    rows_.reduce_rows([&](std::size_t i, std::size_t j, double w) { return smooth_.dpsi(u[i] - u[j]) * w; }, g);
    for (double& v : g) v *= 2.0 * c_s_;
    return g;
  }

  Eigen::MatrixXd hessian(const FieldVector& u) const {
    const std::size_t m = rows_.rows();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<long>(m), static_cast<long>(m));
    std::vector<double> diag;
    rows_.reduce_rows([&](std::size_t i, std::size_t j, double w) { return smooth_.d2psi(u[i] - u[j]) * w; }, diag);
    for (std::size_t r = 0; r < m; ++r) {
      const std::size_t i = rows_.node(r);
      const double* wr = rows_.row(r);
      H(static_cast<long>(r), static_cast<long>(r)) = 2.0 * c_s_ * diag[r];
      for (std::size_t c = 0; c < m; ++c) {
        if (c == r) continue;
        const std::size_t k = rows_.node(c);
        H(static_cast<long>(r), static_cast<long>(c)) = -2.0 * c_s_ * smooth_.d2psi(u[i] - u[k]) * wr[k];
      }
    }
    return H;
  }

  FieldVector step(const FieldVector& u, const std::vector<double>& d, double t, bool project) const {
    FieldVector v = u;
    for (std::size_t r = 0; r < rows_.rows(); ++r) {
      double x = u[rows_.node(r)] + t * d[r];
      if (project) x = std::clamp(x, lo_, hi_);
      v[rows_.node(r)] = x;
    }
    return v;
  }

private:
  const DirichletProblem& prob_;
  const InteriorRows& rows_;
  FieldVector u_;
  Smoothed smooth_{};
  double c_s_ = 0.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

bool newton_direction(const Eigen::MatrixXd& H, const std::vector<double>& g, std::vector<double>& d) {
  const long m = H.rows();
  Eigen::VectorXd rhs(m);
  for (long r = 0; r < m; ++r) rhs(r) = -g[static_cast<std::size_t>(r)];
  const double scale = std::max(H.diagonal().cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  double shift = 1e-14 * scale;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::MatrixXd A = H;
    A.diagonal().array() += shift;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) {
      const Eigen::VectorXd x = llt.solve(rhs);
      if (x.allFinite()) {
        d.assign(x.data(), x.data() + m);
        return true;
      }
    }
    shift *= 100.0;
  }
  return false;
}

SolveResult solve_nonlinear(const DirichletProblem& prob, const SolveOptions& opt, const InteriorRows& rows,
                            FieldVector u, bool use_newton) {
  NonlinearSolver ns(prob, rows, std::move(u));
  FieldVector& x = ns.field();
  if (opt.project) {
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      x[rows.node(r)] = std::clamp(x[rows.node(r)], ns.lower(), ns.upper());
    }
  }
  SolveResult res;
  res.method = use_newton ? "newton" : "gradient";
  double E = ns.energy(x);
  if (!std::isfinite(E)) throw NonFiniteEnergyError("solve: initial energy is not finite");
  res.energy_trace.push_back(E);
  constexpr double c1 = 1e-4;
  double t_grad = 1.0;
  std::vector<double> g = ns.gradient(x);
  std::vector<double> d;

  int it = 0;
  for (; it < opt.max_iter; ++it) {
    const double gnorm = max_abs(g);
    if (gnorm <= opt.tol) break;

    bool accepted = false;
    for (int pass = 0; pass < 2 && !accepted; ++pass) {
      const bool newton = use_newton && pass == 0;
      if (newton) {
        if (!newton_direction(ns.hessian(x), g, d)) continue;
        double gd = 0.0;
        for (std::size_t r = 0; r < d.size(); ++r) gd += g[r] * d[r];
        if (!(gd < 0.0)) continue;
      } else {
        d.resize(g.size());
        for (std::size_t r = 0; r < g.size(); ++r) d[r] = -g[r];
      }
      double t = newton ? 1.0 : std::min(1e300, t_grad * 4.0);
      if (!newton && it == 0) {
        // First steepest-descent step: scale by the inverse Hessian diagonal size.
        const Eigen::MatrixXd H = ns.hessian(x);
        t = 1.0 / std::max(H.diagonal().maxCoeff(), std::numeric_limits<double>::min());
      }
      for (int ls = 0; ls < 80; ++ls, t *= 0.5) {
        FieldVector xt = ns.step(x, d, t, opt.project);
        double dec = 0.0;
        for (std::size_t r = 0; r < rows.rows(); ++r) dec += g[r] * (xt[rows.node(r)] - x[rows.node(r)]);
        if (!(dec < 0.0)) continue;
        const double Et = ns.energy(xt);
        bool ok = Et <= E + c1 * dec;
        std::vector<double> gt;
        if (!ok && newton && t == 1.0 && std::abs(Et - E) <= 1e-13 * std::abs(E)) {
          // Energy differences below roundoff: accept a full Newton step that
          // reduces the residual.
          gt = ns.gradient(xt);
          ok = max_abs(gt) < gnorm;
        }
        if (!ok) continue;
        x = std::move(xt);
        E = std::min(Et, E);
        g = gt.empty() ? ns.gradient(x) : std::move(gt);
        if (!newton) t_grad = t;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    res.energy_trace.push_back(E);
  }
  res.iterations = it;
  res.u = std::move(x);
  return res;
}

SolveResult solve_linear(const DirichletProblem& prob, const SolveOptions& opt, FieldVector u) {
  const LinearSystem sys = assemble_linear_system(prob);
  const auto& I = prob.grid.interior_indices();
  std::vector<double> x(I.size());
  for (std::size_t r = 0; r < I.size(); ++r) x[r] = u[I[r]];
  const CgResult cg = conjugate_gradient(sys, x, 0.5 * opt.tol, opt.max_iter);
  for (std::size_t r = 0; r < I.size(); ++r) u[I[r]] = x[r];
  SolveResult res;
  res.method = "cg";
  res.iterations = cg.iterations;
  res.u = std::move(u);
  return res;
}

} // namespace

LinearSystem assemble_linear_system(const DirichletProblem& prob) {
  check_problem(prob);
  if (prob.spec.p != 2.0) throw InvalidArgument("assemble_linear_system: needs p = 2");
  const InteriorRows rows(prob);
  const std::size_t m = rows.rows();
  const double f = 4.0 * prob.spec.c_s();
  LinearSystem sys;
  sys.size = m;
  sys.G.assign(m * m, 0.0);
  sys.b.assign(m, 0.0);
  std::vector<double> diag;
  rows.reduce_rows([](std::size_t, std::size_t, double w) { return w; }, diag);
  std::vector<double> rhs;
  rows.reduce_rows([&](std::size_t, std::size_t j, double w) { return rows.position(j) < 0 ? w * prob.g[j] : 0.0; },
                   rhs);
  for (std::size_t r = 0; r < m; ++r) {
    const double* wr = rows.row(r);
    for (std::size_t c = 0; c < m; ++c) {
      sys.G[r * m + c] = c == r ? f * diag[r] : -f * wr[rows.node(c)];
    }
    sys.b[r] = f * rhs[r];
  }
  return sys;
}

CgResult conjugate_gradient(const LinearSystem& sys, std::vector<double>& x, double tol, int max_iter) {
  const std::size_t m = sys.size;
  if (x.size() != m) throw InvalidArgument("conjugate_gradient: size mismatch");
  auto matvec = [&](const std::vector<double>& v, std::vector<double>& out) {
    out.assign(m, 0.0);
    const long ml = static_cast<long>(m);
#pragma omp parallel for schedule(static)
    for (long rl = 0; rl < ml; ++rl) {
      const auto r = static_cast<std::size_t>(rl);
      double acc = 0.0;
      for (std::size_t c = 0; c < m; ++c) acc += sys.G[r * m + c] * v[c];
      out[r] = acc;
    }
  };
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
    return acc;
  };
  auto true_residual = [&](std::vector<double>& r) {
    matvec(x, r);
    for (std::size_t k = 0; k < m; ++k) r[k] = sys.b[k] - r[k];
  };

  CgResult res;
  std::vector<double> r, p, Ap;
  true_residual(r);
  p = r;
  double rs = dot(r, r);
  int since_restart = 0;
  while (true) {
    res.residual_inf = max_abs(r);
    if (res.residual_inf <= tol || m == 0) {
      // Confirm against the true residual before stopping.
      std::vector<double> rt;
      true_residual(rt);
      res.residual_inf = max_abs(rt);
      if (res.residual_inf <= tol || since_restart == 0) {
        res.converged = res.residual_inf <= tol;
        break;
      }
      r = rt;
      p = r;
      rs = dot(r, r);
      since_restart = 0;
    }
    if (res.iterations >= max_iter) break;
    matvec(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) break;
    const double alpha = rs / pAp;
    for (std::size_t k = 0; k < m; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * Ap[k];
    }
    const double rs_new = dot(r, r);
    const double beta = rs_new / rs;
    rs = rs_new;
    for (std::size_t k = 0; k < m; ++k) p[k] = r[k] + beta * p[k];
    ++res.iterations;
    ++since_restart;
  }
  return res;
}

double residual(const DirichletProblem& prob, std::span<const double> u) {
  check_problem(prob);
  const auto g = energy_gradient_rows(prob.spec, prob.weight, prob.grid.nodes(), u, prob.grid.interior_indices());
  return max_abs(g);
}

SolveResult solve(const DirichletProblem& prob, const SolveOptions& opt) {
  check_problem(prob);
  if (!(opt.tol > 0.0)) throw InvalidArgument("solve: tol must be positive");
  if (opt.max_iter < 1) throw InvalidArgument("solve: max_iter must be >= 1");

  FieldVector u = prob.g;
  const auto& I = prob.grid.interior_indices();
  if (opt.initial) {
    if (opt.initial->size() != u.size()) throw InvalidArgument("solve: initial iterate has the wrong length");
    for (std::size_t i : I) u[i] = (*opt.initial)[i];
  } else {
    std::vector<double> ext;
    for (std::size_t j : prob.grid.exterior_indices()) ext.push_back(prob.g[j]);
    const double mean = pairwise_sum(ext) / static_cast<double>(ext.size());
    for (std::size_t i : I) u[i] = mean;
  }
  for (std::size_t i : I) {
    if (!std::isfinite(u[i])) throw InvalidArgument("solve: initial iterate is not finite");
  }

  SolveMethod method = opt.method;
  if (method == SolveMethod::automatic) method = prob.spec.p == 2.0 ? SolveMethod::cg : SolveMethod::newton;
  if (method == SolveMethod::cg && prob.spec.p != 2.0) throw InvalidArgument("solve: cg needs p = 2");

  SolveResult res;
  if (method == SolveMethod::cg) {
    res = solve_linear(prob, opt, std::move(u));
  } else {
    const InteriorRows rows(prob);
    res = solve_nonlinear(prob, opt, rows, std::move(u), method == SolveMethod::newton);
  }
  res.residual_inf = residual(prob, res.u);
  res.converged = res.residual_inf <= opt.tol;
  res.energy_value = opt.energy_domain == EnergyDomain::full
                         ? energy(prob.spec, prob.weight, prob.grid, res.u)
                         : energy_restricted(prob.spec, prob.weight, prob.grid, res.u, complement_excluded(prob.grid));
  if (res.energy_trace.empty()) res.energy_trace.push_back(res.energy_value);
  return res;
}

} // namespace degenlap
