#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "degenlap/errors.hpp"
#include "degenlap/random.hpp"
#include "degenlap/verify.hpp"

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

EnergySpec spec(double s, double p) {
  EnergySpec e;
  e.s = s;
  e.p = p;
  e.s0 = std::min(0.1, s);
  return e;
}

std::vector<FieldVector> trig_family(const GridDomain& g, int count, std::uint64_t seed) {
  TestFunctionSpec t;
  t.family = TestFamily::random_trig;
  t.count = count;
  t.seed = seed;
  return test_functions(g, t);
}

FieldVector sign_data(const GridDomain& g) {
  FieldVector d(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) d[i] = g.node(i)[0] < 0 ? -1.0 : 1.0;
  return d;
}

} // namespace

TEST_CASE("constant inputs give zero ratios") {
  const auto g1 = grid(1, 64);
  const auto g2 = grid(2, 16);
  const auto w1 = WeightModel::constant(1, 2.0);
  const auto w2 = WeightModel::power(2, 3.0, 2.0);
  const FieldVector c1(g1.size(), 1.7);
  const FieldVector c2(g2.size(), -0.4);
  const BallSpec B1{{0.0, 0.0}, 0.8};
  const BallSpec B2{{0.0, 0.0}, 0.8};

  CHECK(poincare_check(2.0, w1, g1, B1, {c1}).value("max_ratio") == 0.0);
  CHECK(sobolev_poincare_check(3.0, w2, g2, B2, {c2}).value("max_ratio") == 0.0);
  const FieldVector zero(g1.size(), 0.0);
  const auto ls = limit_scan(spec(0.5, 2.0), w1, g1, zero, default_s_grid());
  CHECK(ls.report.value("ratio0") == 0.0);
  CHECK(ls.report.value("ratio1") == 0.0);
  for (double v : ls.energy) CHECK(v == 0.0);
  CHECK(riesz_bound_check(2.0, w1, g1, B1, {zero}, {0.5}).value("max_ratio") == 0.0);
  CHECK(riesz_pointwise_check(g1, B1, {c1}).value("max_ratio") == 0.0);
  for (double v : riesz_potential(g1, zero, 0.5)) CHECK(v == 0.0);

  const auto m = mollification_suite(spec(0.5, 2.0), w1, g1, c1, {8 * g1.spacing(), 4 * g1.spacing()});
  CHECK(m.value("energy_ratio") == 0.0);
  CHECK(m.value("difference_ratio") == 0.0);
  CHECK(m.value("lp_ratio") == 0.0);

  const DirichletProblem prob{spec(0.5, 2.0), w1, g1, c1};
  const auto cac = caccioppoli_check(prob, c1, B1, 2.0);
  CHECK(cac.value("ratio") == 0.0);
  CHECK(cac.value("lhs") == 0.0);

  const auto g256 = grid(1, 256);
  const auto h = holder_estimate(g256, FieldVector(g256.size(), 1.7), BallSpec{{0.0, 0.0}, 0.5});
  CHECK(std::isinf(h.value("alpha_hat")));
  CHECK(h.passed);
}

TEST_CASE("Harnack ratio of a positive constant is exactly one") {
  const auto g = grid(1, 64);
  const FieldVector c(g.size(), 2.0);
  const DirichletProblem prob{spec(0.5, 2.0), WeightModel::constant(1, 2.0), g, c};
  const auto r = harnack_check({HarnackLevel{&prob, c}}, BallSpec{{0.0, 0.0}, 0.4});
  CHECK(r.value("H") == 1.0);
}

TEST_CASE("boundedness with constant data") {
  const auto g = grid(1, 64);
  const FieldVector one(g.size(), 1.0);
  const DirichletProblem prob{spec(0.5, 2.0), WeightModel::constant(1, 2.0), g, one};
  BoundednessOptions opt;
  opt.c_b = 1.0;
  const auto r = boundedness_check(prob, one, BallSpec{{0.0, 0.0}, 0.8}, opt);
  CHECK(r.value("lhs") == 1.0);
  CHECK(r.value("mean_term") == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.value("lhs_over_rhs") <= 1.0);
  CHECK(r.passed);
}

TEST_CASE("iteration lemma examples") {
  const auto z = iteration_lemma_check(1.0, 2.0, 1.0, 0.0, 50);
  CHECK(z.converged);
  for (double a : z.trace) CHECK(a == 0.0);

  const auto r = iteration_lemma_check(1.0, 2.0, 1.0, 0.5, 200);
  CHECK(r.threshold == doctest::Approx(0.5).epsilon(1e-15));
  REQUIRE(r.trace.size() > 4);
  CHECK(r.trace[0] == 0.5);
  CHECK(r.trace[1] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(r.trace[2] == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(r.trace[3] == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(r.converged);

  const auto d = iteration_lemma_check(1.0, 2.0, 1.0, 5.0, 200);
  CHECK(d.diverged);
  CHECK_FALSE(d.converged);

  const auto suite = iteration_lemma_suite();
  CHECK(suite.passed);
}

TEST_CASE("Riesz potential of an indicator at the centre") {
  double prev_err = 1e300;
  for (int m : {256, 1024, 4096}) {
    const auto g = grid(1, m);
    FieldVector f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::abs(g.node(i)[0]) < 1.0 ? 1.0 : 0.0;
    const auto I = riesz_potential(g, f, 0.5);
    // Node values at +-h/2 straddle the centre.
    const double centre = 0.5 * (I[g.size() / 2 - 1] + I[g.size() / 2]);
    const double err = std::abs(centre - 4.0);
    CHECK(err < prev_err);
    prev_err = err;
    if (m == 1024) CHECK(centre == doctest::Approx(4.0).epsilon(0.01));
  }
}

TEST_CASE("Riesz potential is linear") {
  const auto g = grid(2, 16);
  const auto fam = trig_family(g, 2, 4);
  FieldVector comb(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) comb[i] = 1.5 * fam[0][i] - 2.0 * fam[1][i];
  const auto a = riesz_potential(g, fam[0], 0.7);
  const auto b = riesz_potential(g, fam[1], 0.7);
  const auto c = riesz_potential(g, comb, 0.7);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(c[i] == doctest::Approx(1.5 * a[i] - 2.0 * b[i]).scale(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(riesz_potential(g, fam[0], 2.0), InvalidArgument);
}

TEST_CASE("Poincare ratios are s-stable") {
  const auto g = grid(1, 128);
  const auto fam = trig_family(g, 10, 1);
  const auto r = poincare_check(2.0, WeightModel::constant(1, 2.0), g, g.omega_ball(), fam);
  const double mx = r.value("max_ratio");
  CHECK(std::isfinite(mx));
  CHECK(mx > 0.0);
  CHECK(r.value("s_stability") <= 10.0);
  CHECK(r.find("s_stability")->band.has_value());
}

TEST_CASE("mean variants agree at band level") {
  const auto g = grid(2, 16);
  const auto w = WeightModel::power(2, 3.0, 2.0);
  const auto fam = trig_family(g, 4, 2);
  std::vector<double> ratios;
  for (auto kind : {MeanKind::uniform, MeanKind::weighted, MeanKind::psi}) {
    PoincareOptions opt;
    opt.mean = kind;
    ratios.push_back(poincare_check(3.0, w, g, g.omega_ball(), fam, opt).value("max_ratio"));
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  CHECK(*lo > 0.0);
  CHECK(*hi <= 10.0 * *lo);
}

TEST_CASE("Sobolev-Poincare needs two dimensions") {
  const auto g = grid(1, 32);
  CHECK_THROWS_AS(sobolev_poincare_check(2.0, WeightModel::constant(1, 2.0), g, g.omega_ball(), trig_family(g, 1, 0)),
                  InvalidArgument);
}

TEST_CASE("Holder exponent of a sign-data solution is positive") {
  const auto g = grid(1, 512);
  const DirichletProblem prob{spec(0.5, 2.0), WeightModel::constant(1, 2.0), g, sign_data(g)};
  const auto sol = solve(prob);
  REQUIRE(sol.converged);
  const auto r = holder_estimate(g, sol.u, BallSpec{{0.5, 0.0}, 0.3});
  CHECK(r.value("alpha_hat") > 0.0);
  CHECK(r.value("monotone") == 1.0);
  CHECK(r.value("usable_levels") >= 3.0);
  CHECK_THROWS_AS(holder_estimate(g, sol.u, BallSpec{{0.5, 0.0}, 0.02}), InsufficientResolutionError);
}

TEST_CASE("Caccioppoli ratio is stable across s") {
  const auto g = grid(1, 128);
  std::vector<double> ratios;
  for (double s : {0.5, 0.7, 0.9}) {
    const DirichletProblem prob{spec(s, 2.0), WeightModel::constant(1, 2.0), g, sign_data(g)};
    const auto sol = solve(prob);
    REQUIRE(sol.converged);
    const BallSpec B{{0.3, 0.0}, 0.4};
    std::vector<double> inside;
    for (std::size_t i : g.nodes_in_ball(B)) inside.push_back(sol.u[i]);
    std::nth_element(inside.begin(), inside.begin() + inside.size() / 2, inside.end());
    ratios.push_back(caccioppoli_check(prob, sol.u, B, inside[inside.size() / 2]).value("ratio"));
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  CHECK(*lo > 0.0);
  CHECK(*hi <= 2.0 * *lo);
}

TEST_CASE("checks are deterministic") {
  const auto g = grid(2, 12);
  const auto fam = trig_family(g, 3, 6);
  const auto w = WeightModel::power(2, 3.0, 2.0);
  const auto a = poincare_check(3.0, w, g, g.omega_ball(), fam).to_json().dump();
  const auto b = poincare_check(3.0, w, g, g.omega_ball(), fam).to_json().dump();
  CHECK(a == b);
}

TEST_CASE("missing band fails the report") {
  VerificationReport r;
  r.check_name = "probe";
  r.add("ratio", 0.5);
  attach_band(r, "ratio", BandTable{}, "setup.probe.ratio");
  r.finalize();
  CHECK(r.missing_band);
  CHECK_FALSE(r.passed);

  BandTable t;
  t.set("setup.probe.ratio", Band{0.0, 1.0}, 0.1);
  VerificationReport ok;
  ok.check_name = "probe";
  ok.add("ratio", 0.5);
  attach_band(ok, "ratio", t, "setup.probe.ratio");
  ok.finalize();
  CHECK(ok.passed);

  VerificationReport out;
  out.add("ratio", 1.5, Band{0.0, 1.0});
  out.finalize();
  CHECK_FALSE(out.passed);
}

TEST_CASE("report serialisation") {
  VerificationReport r;
  r.check_name = "probe";
  r.parameters["s"] = 0.5;
  r.parameters["seed"] = 7;
  r.add("ratio", 0.25, Band{0.0, 2.0});
  r.add("info", 3.0);
  r.provenance = Provenance::frozen_band;
  r.finalize();
  const Json j = r.to_json();
  CHECK(j["check_name"] == "probe");
  CHECK(j["observed"]["ratio"] == 0.25);
  CHECK(j["band"]["ratio"][1] == 2.0);
  CHECK_FALSE(j["band"].contains("info"));
  CHECK(j["passed"] == true);
  CHECK(j["provenance"] == "frozen-band");
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"check_name", "parameters", "observed", "band", "passed", "provenance"});

  std::ostringstream csv;
  write_suite_csv_header(csv);
  write_suite_csv_row(csv, r);
  std::istringstream in(csv.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "check,param_hash,observed_max,band_lo,band_hi,passed");
  CHECK(row == "probe," + param_hash(r.parameters) + ",0.25,0,2,true");
  CHECK(param_hash(r.parameters).size() == 16);
}

TEST_CASE("band table round trip") {
  BandTable t;
  t.set_version(3);
  t.set("a.b.c", Band{0.0, 4.5}, 0.45);
  t.set("x.y.z", Band{0.01, 20.0}, 1.0, "frozen-band");
  const std::string path = "test_verify_bands.json";
  t.save(path);
  const auto back = BandTable::load(path);
  std::remove(path.c_str());
  CHECK(back.version() == 3);
  REQUIRE(back.find("a.b.c"));
  CHECK(back.find("a.b.c")->hi == 4.5);
  CHECK(back.find("x.y.z")->lo == 0.01);
  CHECK_FALSE(back.find("missing"));
}
