#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "degenlap/errors.hpp"
#include "degenlap/grid.hpp"

using namespace degenlap;

namespace {

GridDomain grid1(int m, double collar = 1.0, double lo = -2.0, double hi = 2.0) {
  GridConfig c;
  c.dim = 1;
  c.lo = lo;
  c.hi = hi;
  c.nodes_per_axis = m;
  c.collar_width = collar;
  return make_grid(c);
}

double max_abs(const FieldVector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

} // namespace

TEST_CASE("1-D grid with 8 nodes") {
  const auto g = grid1(8);
  REQUIRE(g.size() == 8);
  CHECK(g.spacing() == 0.5);
  const double expected[] = {-1.75, -1.25, -0.75, -0.25, 0.25, 0.75, 1.25, 1.75};
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(g.node(i)[0] == doctest::Approx(expected[i]).epsilon(1e-15));
    CHECK(g.is_interior(i) == (std::abs(expected[i]) < 1.0));
  }
  CHECK(g.interior_indices().size() == 4);
  CHECK(g.interior_indices().size() + g.exterior_indices().size() == g.size());
}

TEST_CASE("2-D grid with 16 nodes per axis") {
  GridConfig c;
  c.dim = 2;
  c.lo = -1.0;
  c.hi = 1.0;
  c.nodes_per_axis = 16;
  const auto g = make_grid(c);
  CHECK(g.size() == 256);
  CHECK(g.spacing() == 0.125);
  CHECK(g.cell_volume() == 0.125 * 0.125);
  CHECK(g.node(g.index(3, 5))[0] == doctest::Approx(-1.0 + 3.5 * 0.125));
  CHECK(g.node(g.index(3, 5))[1] == doctest::Approx(-1.0 + 5.5 * 0.125));
}

TEST_CASE("invalid geometry") {
  CHECK_THROWS_AS(grid1(3), ConfigError);
  CHECK_THROWS_AS(grid1(8, 2.0), ConfigError);
  CHECK_THROWS_AS(grid1(8, -0.1), ConfigError);
  CHECK_THROWS_AS(grid1(8, 1.0, 1.0, 1.0), ConfigError);
  // Odd count on a symmetric box puts a node on the origin.
  CHECK_THROWS_AS(grid1(9), ConfigError);
}

TEST_CASE("default collar equals diam(Omega)") {
  for (int dim : {1, 2}) {
    GridConfig c;
    c.dim = dim;
    c.lo = -2.0;
    c.hi = 2.0;
    c.nodes_per_axis = 32;
    const auto g = make_grid(c);
    CHECK(g.collar_width() == doctest::Approx(g.omega_box().diameter()).epsilon(1e-12));
  }
}

TEST_CASE("ball-shaped Omega") {
  GridConfig c;
  c.dim = 2;
  c.lo = -2.0;
  c.hi = 2.0;
  c.nodes_per_axis = 32;
  c.collar_width = 1.0;
  c.shape = DomainShape::ball;
  const auto g = make_grid(c);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.is_interior(i) == (norm(g.node(i)) < 1.0));
  CHECK(g.contains_ball(BallSpec{{0.0, 0.0}, 0.5}));
  CHECK_FALSE(g.contains_ball(BallSpec{{0.6, 0.0}, 0.5}));
}

TEST_CASE("bump profile") {
  CHECK(bump_profile(0.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(bump_profile(1.0) == 0.0);
  CHECK(bump_profile(2.0) == 0.0);
  CHECK(bump_profile(0.25) == doctest::Approx(std::exp(-1.0 / 0.75)));
}

TEST_CASE("test functions vanish outside Omega") {
  GridConfig c;
  c.dim = 2;
  c.lo = -2.0;
  c.hi = 2.0;
  c.nodes_per_axis = 24;
  c.collar_width = 1.0;
  const auto g = make_grid(c);
  for (auto fam : {TestFamily::bump, TestFamily::trig, TestFamily::random_trig}) {
    TestFunctionSpec spec;
    spec.family = fam;
    spec.count = 4;
    spec.seed = 5;
    const auto fs = test_functions(g, spec);
    REQUIRE_FALSE(fs.empty());
    for (const auto& f : fs) {
      REQUIRE(f.size() == g.size());
      for (std::size_t i : g.exterior_indices()) CHECK(f[i] == 0.0);
      CHECK(max_abs(f) > 0.0);
    }
  }
}

TEST_CASE("random trig family is deterministic in the seed") {
  const auto g = grid1(64);
  TestFunctionSpec spec;
  spec.family = TestFamily::random_trig;
  spec.count = 5;
  spec.seed = 11;
  const auto a = test_functions(g, spec);
  const auto b = test_functions(g, spec);
  CHECK(a == b);
  spec.seed = 12;
  const auto c = test_functions(g, spec);
  CHECK(a != c);
}

TEST_CASE("mollifier reproduces constants") {
  const auto g = grid1(64);
  const FieldVector one(g.size(), 3.0);
  const auto m = mollify(g, one, MollifierSpec{4.0 * g.spacing()});
  for (double v : m) CHECK(v == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("mollified delta is a symmetric hat summing to one") {
  const auto g = grid1(64, 1.0);
  const double h = g.spacing();
  const std::size_t k = 32;
  FieldVector delta(g.size(), 0.0);
  delta[k] = 1.0;
  const auto m = mollify(g, delta, MollifierSpec{2.0 * h});
  double sum = 0.0;
  for (double v : m) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  // Hat of half-width 2h sampled at 0, h: weights 1 and 1/2.
  CHECK(m[k] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m[k - 1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(m[k - 1] == doctest::Approx(m[k + 1]).epsilon(1e-14));
  CHECK(m[k - 2] == 0.0);
  CHECK(m[k + 2] == 0.0);
}

TEST_CASE("mollifier is linear and does not raise the max norm") {
  const auto g = grid1(128);
  TestFunctionSpec spec;
  spec.family = TestFamily::random_trig;
  spec.count = 2;
  spec.seed = 3;
  const auto fs = test_functions(g, spec);
  const MollifierSpec m{3.0 * g.spacing()};
  FieldVector comb(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) comb[i] = 2.0 * fs[0][i] - 0.5 * fs[1][i];
  const auto lhs = mollify(g, comb, m);
  const auto a = mollify(g, fs[0], m);
  const auto b = mollify(g, fs[1], m);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(lhs[i] == doctest::Approx(2.0 * a[i] - 0.5 * b[i]).epsilon(1e-12).scale(1.0));
  CHECK(max_abs(a) <= max_abs(fs[0]) * (1.0 + 1e-14));
}

TEST_CASE("mollified bump converges as epsilon shrinks") {
  double prev = 1e300;
  for (int m : {64, 128, 256}) {
    const auto g = grid1(m);
    TestFunctionSpec spec;
    const auto u = test_functions(g, spec).front();
    const auto ue = mollify(g, u, MollifierSpec{2.0 * g.spacing()});
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(ue[i] - u[i]));
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("gradient norm of a linear field") {
  GridConfig c;
  c.dim = 2;
  c.lo = -2.0;
  c.hi = 2.0;
  c.nodes_per_axis = 16;
  c.collar_width = 1.0;
  const auto g = make_grid(c);
  FieldVector u(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) u[i] = 3.0 * g.node(i)[0] - 4.0 * g.node(i)[1];
  const auto gn = gradient_norm(g, u);
  for (double v : gn) CHECK(v == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("grid nesting") {
  const auto coarse = grid1(16);
  const auto fine = grid1(32);
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    const double avg = 0.5 * (fine.node(2 * i)[0] + fine.node(2 * i + 1)[0]);
    CHECK(coarse.node(i)[0] == doctest::Approx(avg).epsilon(1e-15));
  }
}

TEST_CASE("field CSV round trip") {
  GridConfig c;
  c.dim = 2;
  c.lo = -2.0;
  c.hi = 2.0;
  c.nodes_per_axis = 12;
  c.collar_width = 1.0;
  const auto g = make_grid(c);
  TestFunctionSpec spec;
  spec.family = TestFamily::random_trig;
  spec.count = 1;
  spec.seed = 9;
  const auto u = test_functions(g, spec).front();
  const std::string path = "test_grid_roundtrip.csv";
  write_field_csv(path, g, u);
  const auto back = read_field_csv(path, g);
  std::remove(path.c_str());
  CHECK(back == u);
}
