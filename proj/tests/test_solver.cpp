#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "degenlap/errors.hpp"
#include "degenlap/random.hpp"
#include "degenlap/solver.hpp"

using namespace degenlap;

namespace {

GridDomain grid(int dim, int m, double collar = 1.0) {
  GridConfig c;
  c.dim = dim;
  c.lo = -2.0;
  c.hi = 2.0;
  c.nodes_per_axis = m;
  c.collar_width = collar;
  return make_grid(c);
}

DirichletProblem problem(const GridDomain& g, const WeightModel& w, double s, double p, FieldVector data) {
  EnergySpec e;
  e.s = s;
  e.p = p;
  e.s0 = std::min(0.1, s);
  return DirichletProblem{e, w, g, std::move(data)};
}

FieldVector sign_data(const GridDomain& g) {
  FieldVector d(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) d[i] = g.node(i)[0] < 0 ? -1.0 : 1.0;
  return d;
}

FieldVector uniform_data(const GridDomain& g, std::uint64_t seed, double lo, double hi) {
  const CounterRng rng(seed);
  FieldVector d(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) d[i] = rng.uniform(i, lo, hi);
  return d;
}

double max_diff(const FieldVector& a, const FieldVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// p = 2 minimiser from a dense solve of the normal equations, assembled here
// from kernel_eval so the oracle does not share the library's matrix code.
FieldVector dense_oracle(const DirichletProblem& prob) {
  const auto& g = prob.grid;
  const auto& I = g.interior_indices();
  const double vol2 = g.cell_volume() * g.cell_volume();
  const double c = 4.0 * prob.spec.c_s();
  const Eigen::Index n = static_cast<Eigen::Index>(I.size());
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const std::size_t i = I[static_cast<std::size_t>(a)];
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (j == i) continue;
      const double d = distance(g.node(i), g.node(j));
      const double wij =
          kernel_eval(prob.spec, prob.weight, g.node(i), g.node(j)) * std::pow(d, -2.0 * prob.spec.s) * vol2;
      G(a, a) += c * wij;
      if (g.is_interior(j)) {
        const auto it = std::lower_bound(I.begin(), I.end(), j);
        G(a, it - I.begin()) -= c * wij;
      } else {
        b(a) += c * wij * prob.g[j];
      }
    }
  }
  const Eigen::VectorXd x = G.ldlt().solve(b);
  FieldVector u = prob.g;
  for (Eigen::Index a = 0; a < n; ++a) u[I[static_cast<std::size_t>(a)]] = x(a);
  return u;
}

} // namespace

TEST_CASE("constant data gives the constant solution") {
  for (double p : {1.5, 2.0, 3.0}) {
    const auto g = grid(1, 32);
    const auto prob = problem(g, WeightModel::constant(1, p), 0.5, p, FieldVector(g.size(), 2.5));
    const auto r = solve(prob);
    CHECK(r.converged);
    for (double v : r.u) CHECK(v == 2.5);
    CHECK(r.residual_inf == 0.0);
    CHECK(r.energy_value == 0.0);
    CHECK(residual(prob, r.u) == 0.0);
  }
}

TEST_CASE("p = 2 matches a dense direct solve") {
  for (int dim : {1, 2}) {
    const auto g = dim == 1 ? grid(1, 32) : grid(2, 16);
    const auto w = dim == 1 ? WeightModel::constant(1, 2.0) : WeightModel::power(2, 2.0, 0.5);
    auto prob = problem(g, w, 0.4, 2.0, uniform_data(g, 5, -1.0, 1.0));
    SolveOptions opt;
    opt.tol = 1e-12;
    const auto r = solve(prob, opt);
    CHECK(r.converged);
    CHECK(r.method == "cg");
    const auto u = dense_oracle(prob);
    double scale = 0.0;
    for (double v : u) scale = std::max(scale, std::abs(v));
    CHECK(max_diff(r.u, u) <= 1e-8 * scale);
  }
}

TEST_CASE("sign data gives a monotone odd solution") {
  const auto g = grid(1, 32);
  const auto prob = problem(g, WeightModel::constant(1, 2.0), 0.5, 2.0, sign_data(g));
  const auto r = solve(prob);
  REQUIRE(r.converged);
  const auto& I = g.interior_indices();
  for (std::size_t k = 1; k < I.size(); ++k) CHECK(r.u[I[k]] > r.u[I[k - 1]]);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(r.u[i] == doctest::Approx(-r.u[g.size() - 1 - i]).epsilon(1e-9));
  const std::size_t mid = g.size() / 2;
  CHECK(r.u[mid - 1] < 0.0);
  CHECK(r.u[mid] > 0.0);
}

TEST_CASE("uniqueness from different initial iterates") {
  for (double p : {2.0, 3.0}) {
    const auto g = grid(1, 32);
    auto prob = problem(g, WeightModel::power(1, p, 0.5), 0.5, p, sign_data(g));
    SolveOptions a;
    a.tol = 1e-9;
    SolveOptions b = a;
    b.initial = uniform_data(g, 3, -1.0, 1.0);
    const auto ra = solve(prob, a);
    const auto rb = solve(prob, b);
    CHECK(ra.converged);
    CHECK(rb.converged);
    CHECK(max_diff(ra.u, rb.u) <= 1e-6);
  }
}

TEST_CASE("discrete maximum principle without projection") {
  int checked = 0;
  for (double p : {1.5, 2.0, 3.0}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const bool two = seed % 4 == 3;
      const auto g = two ? grid(2, 8) : grid(1, 24);
      const auto w = two ? WeightModel::power(2, p, 0.5) : WeightModel::constant(1, p);
      const auto data = uniform_data(g, 1000 + seed, -1.0, 2.0);
      const auto prob = problem(g, w, 0.3 + 0.02 * static_cast<double>(seed), p, data);
      SolveOptions opt;
      opt.tol = 1e-8;
      opt.project = false;
      const auto r = solve(prob, opt);
      double lo = 1e300, hi = -1e300;
      for (std::size_t i : g.exterior_indices()) {
        lo = std::min(lo, data[i]);
        hi = std::max(hi, data[i]);
      }
      for (std::size_t i : g.interior_indices()) {
        CHECK(r.u[i] >= lo - 1e-9);
        CHECK(r.u[i] <= hi + 1e-9);
      }
      ++checked;
    }
  }
  CHECK(checked == 60);
}

TEST_CASE("exterior data is left untouched") {
  const auto g = grid(2, 12);
  auto data = uniform_data(g, 77, -3.0, 3.0);
  const auto prob = problem(g, WeightModel::power(2, 3.0, 2.0), 0.5, 3.0, data);
  const auto r = solve(prob);
  for (std::size_t i : g.exterior_indices()) CHECK(r.u[i] == data[i]);
}

TEST_CASE("energy is non-increasing along iterations") {
  for (auto method : {SolveMethod::newton, SolveMethod::gradient}) {
    const auto g = grid(1, 32);
    const auto prob = problem(g, WeightModel::constant(1, 3.0), 0.5, 3.0, sign_data(g));
    SolveOptions opt;
    opt.method = method;
    opt.max_iter = 200;
    opt.tol = 1e-8;
    const auto r = solve(prob, opt);
    REQUIRE(r.energy_trace.size() >= 2);
    for (std::size_t k = 1; k < r.energy_trace.size(); ++k)
      CHECK(r.energy_trace[k] <= r.energy_trace[k - 1] * (1 + 1e-14));
  }
}

TEST_CASE("scaling equivariance") {
  for (double p : {2.0, 3.0}) {
    const auto g = grid(1, 32);
    const auto w = WeightModel::constant(1, p);
    const auto data = uniform_data(g, 8, -1.0, 1.0);
    FieldVector scaled = data;
    for (double& v : scaled) v *= 3.0;
    SolveOptions opt;
    opt.tol = 1e-11;
    const auto r1 = solve(problem(g, w, 0.5, p, data), opt);
    // The residual of the scaled problem is 3^{p-1} times larger.
    opt.tol = 1e-11 * std::pow(3.0, p - 1.0);
    const auto r3 = solve(problem(g, w, 0.5, p, scaled), opt);
    FieldVector expect = r1.u;
    for (double& v : expect) v *= 3.0;
    CHECK(max_diff(r3.u, expect) <= (p == 2.0 ? 1e-10 : 1e-6));
  }
}

TEST_CASE("solved field is a local minimum with small residual") {
  for (double p : {2.0, 3.0}) {
    const auto g = grid(1, 32);
    const auto prob = problem(g, WeightModel::constant(1, p), 0.5, p, sign_data(g));
    SolveOptions opt;
    opt.tol = 1e-10;
    const auto r = solve(prob, opt);
    REQUIRE(r.converged);
    CHECK(residual(prob, r.u) <= opt.tol);
    const double J = energy(prob.spec, prob.weight, g, r.u);
    for (std::size_t i : {g.interior_indices().front(), g.interior_indices()[5]}) {
      for (double d : {1e-3, -1e-3}) {
        auto v = r.u;
        v[i] += d;
        CHECK(energy(prob.spec, prob.weight, g, v) > J);
      }
    }
  }
}

TEST_CASE("invalid problems") {
  const auto g = grid(1, 16);
  auto prob = problem(g, WeightModel::constant(1, 2.0), 0.5, 2.0, FieldVector(g.size(), 0.0));
  SolveOptions bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(solve(prob, bad), InvalidArgument);
  prob.g.pop_back();
  CHECK_THROWS_AS(solve(prob), InvalidArgument);
  prob.g.assign(g.size(), 0.0);
  prob.g[g.exterior_indices().front()] = std::nan("");
  CHECK_THROWS_AS(solve(prob), NonFiniteEnergyError);
}

TEST_CASE("iteration cap reports non-convergence") {
  const auto g = grid(1, 32);
  const auto prob = problem(g, WeightModel::constant(1, 3.0), 0.5, 3.0, sign_data(g));
  SolveOptions opt;
  opt.method = SolveMethod::gradient;
  opt.max_iter = 2;
  opt.tol = 1e-14;
  const auto r = solve(prob, opt);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations <= 2);
  CHECK(r.residual_inf > opt.tol);
}
