#include "degenlap/runner.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "degenlap/errors.hpp"
#include "degenlap/verify.hpp"

namespace degenlap {

namespace {

namespace fs = std::filesystem;

struct Setup {
  const RunConfig& cfg;
  std::uint64_t seed;
  const BandTable& bands;

  GridDomain grid() const { return build_grid(cfg); }
  WeightModel weight() const { return build_weight(cfg); }

  void freeze(VerificationReport& rep, const std::string& observed) const {
    attach_band(rep, observed, bands, band_key(cfg, rep.check_name, observed));
  }

  // Echo the config and seed, then re-evaluate pass/fail with frozen bands in place.
  void close(VerificationReport& rep) const {
    rep.parameters["setup"] = cfg.setup_tag();
    rep.parameters["seed"] = seed;
    rep.parameters["config"] = cfg.to_json();
    rep.finalize();
  }
};

BallSpec omega_ball(const GridDomain& g) { return g.omega_ball(); }

// Family used by the mean-value probes: a bump and `count - 1` random trigonometric fields.
std::vector<FieldVector> probe_family(const GridDomain& grid, std::uint64_t seed, int count) {
  auto fam = test_functions(grid, TestFunctionSpec{});
  TestFunctionSpec rt;
  rt.family = TestFamily::random_trig;
  rt.count = count - 1;
  rt.seed = seed;
  for (auto& v : test_functions(grid, rt)) fam.push_back(std::move(v));
  return fam;
}

Point offset_point(const GridDomain& g, double fx, double fy) {
  const Box om = g.omega_box();
  const Point c = om.center();
  const double L = om.side();
  return g.dim() == 2 ? Point{c[0] + fx * L, c[1] + fy * L} : Point{c[0] + fx * L, 0.0};
}

// Ball for boundedness and Caccioppoli: off-centre, radius a quarter of the Omega side.
BallSpec regularity_ball(const GridDomain& g) {
  return BallSpec{offset_point(g, 0.15, 0.1), 0.25 * g.omega_box().side()};
}

BallSpec holder_ball(const GridDomain& g) {
  if (g.dim() == 1) return BallSpec{offset_point(g, 0.25, 0.0), 0.15 * g.omega_box().side()};
  return BallSpec{offset_point(g, 0.15, 0.1), 0.3 * g.omega_box().side()};
}

BallSpec harnack_ball(const GridDomain& g) { return BallSpec{g.omega_box().center(), 0.225 * g.omega_box().side()}; }

FieldVector solve_field(const DirichletProblem& prob, const RunConfig& cfg) {
  const SolveResult res = solve(prob, build_solve_options(cfg));
  if (!res.converged) {
    throw Error("solver did not converge (residual " + format_double(res.residual_inf) + ")");
  }
  return res.u;
}

double interior_median(const GridDomain& g, const FieldVector& u) {
  std::vector<double> vals;
  for (std::size_t i : g.interior_indices()) vals.push_back(u[i]);
  std::sort(vals.begin(), vals.end());
  const std::size_t n = vals.size();
  return n % 2 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
}

std::vector<VerificationReport> suite_poincare(const Setup& S) {
  const GridDomain g = S.grid();
  const WeightModel w = S.weight();
  auto rep = poincare_check(S.cfg.energy.p, w, g, omega_ball(g), probe_family(g, S.seed, 50));
  S.freeze(rep, "max_ratio");
  S.close(rep);
  return {rep};
}

std::vector<VerificationReport> suite_sobolev(const Setup& S) {
  // The Sobolev-Poincare form needs n >= 2; there is nothing to run in one dimension.
  if (S.cfg.dimension != 2) return {};
  const GridDomain g = S.grid();
  const WeightModel w = S.weight();
  auto rep = sobolev_poincare_check(S.cfg.energy.p, w, g, omega_ball(g), probe_family(g, S.seed, 11));
  S.freeze(rep, "max_ratio");
  S.close(rep);
  return {rep};
}

std::vector<VerificationReport> suite_limits(const Setup& S) {
  GridConfig gc;
  gc.dim = S.cfg.dimension;
  gc.lo = -4.0;
  gc.hi = 4.0;
  gc.nodes_per_axis = S.cfg.dimension == 1 ? 4096 : 64;
  gc.collar_width = 1.0;
  const GridDomain g = make_grid(gc);
  TestFunctionSpec bump;
  bump.radius = 1.0;
  const auto v = test_functions(g, bump).front();
  auto res = limit_scan(S.cfg.energy, S.weight(), g, v, default_s_grid());
  S.freeze(res.report, "ratio0");
  S.freeze(res.report, "ratio1");
  S.close(res.report);
  return {res.report};
}

std::vector<VerificationReport> suite_bounded(const Setup& S) {
  const DirichletProblem prob = build_problem(S.cfg);
  const FieldVector u = solve_field(prob, S.cfg);
  BoundednessOptions opt;
  const std::string key = band_key(S.cfg, "boundedness", "c_b");
  if (auto b = S.bands.find(key)) opt.c_b = b->hi;
  auto rep = boundedness_check(prob, u, regularity_ball(prob.grid), opt);
  if (!opt.c_b) attach_band(rep, "c_b_required", S.bands, key);
  S.close(rep);
  return {rep};
}

std::vector<VerificationReport> suite_caccioppoli(const Setup& S) {
  const DirichletProblem prob = build_problem(S.cfg);
  const FieldVector u = solve_field(prob, S.cfg);
  auto rep = caccioppoli_check(prob, u, regularity_ball(prob.grid), interior_median(prob.grid, u));
  S.freeze(rep, "ratio");
  S.close(rep);
  return {rep};
}

std::vector<VerificationReport> suite_holder(const Setup& S) {
  const DirichletProblem prob = build_problem(S.cfg);
  const FieldVector u = solve_field(prob, S.cfg);
  auto rep = holder_estimate(prob.grid, u, holder_ball(prob.grid));
  S.close(rep);
  return {rep};
}

std::vector<VerificationReport> suite_harnack(const Setup& S) {
  // Harnack needs nonnegative data: a bump sitting in the collar.
  RunConfig cfg = S.cfg;
  cfg.data = "bump";
  const int m = cfg.harnack_nodes.value_or(cfg.nodes_per_axis);
  const DirichletProblem coarse = build_problem(cfg, m);
  const DirichletProblem fine = build_problem(cfg, 2 * m);
  const FieldVector uc = solve_field(coarse, cfg);
  const FieldVector uf = solve_field(fine, cfg);
  auto rep = harnack_check({HarnackLevel{&coarse, uc}, HarnackLevel{&fine, uf}}, harnack_ball(coarse.grid));
  S.freeze(rep, "H");
  S.close(rep);
  return {rep};
}

std::vector<VerificationReport> suite_mollify(const Setup& S) {
  const GridDomain g = S.grid();
  const auto v = test_functions(g, TestFunctionSpec{}).front();
  const double h = g.spacing();
  auto rep = mollification_suite(S.cfg.energy, S.weight(), g, v, {8.0 * h, 4.0 * h, 2.0 * h});
  for (const char* k : {"energy_ratio", "difference_ratio", "lp_ratio"}) S.freeze(rep, k);
  S.close(rep);
  return {rep};
}

std::vector<VerificationReport> suite_riesz(const Setup& S) {
  const GridDomain g = S.grid();
  const WeightModel w = S.weight();
  const auto fam = probe_family(g, S.seed, 11);
  const BallSpec B = omega_ball(g);
  auto bound = riesz_bound_check(S.cfg.energy.p, w, g, B, fam, {0.1, 0.3, 0.5, 0.9});
  S.freeze(bound, "max_ratio");
  S.close(bound);

  RieszPointwiseOptions opt;
  BallSpec Bp = B;
  if (g.dim() == 2) {
    Bp.radius *= 0.5;
    opt.sample_stride = 8;
  }
  auto point = riesz_pointwise_check(g, Bp, fam, opt);
  S.freeze(point, "max_ratio");
  S.freeze(point, "simple_ratio");
  S.close(point);
  return {bound, point};
}

std::vector<VerificationReport> suite_iteration(const Setup& S) {
  auto rep = iteration_lemma_suite(200);
  S.close(rep);
  return {rep};
}

VerificationReport error_report(const RunConfig& cfg, const std::string& suite, std::uint64_t seed,
                                const std::string& what) {
  VerificationReport rep;
  rep.check_name = suite;
  rep.parameters = Json{{"setup", cfg.setup_tag()}, {"seed", seed}, {"config", cfg.to_json()}, {"error", what}};
  rep.notes.push_back(what);
  rep.finalize(false);
  return rep;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

fs::path prepare_out(const RunConfig& cfg, const std::string& out_dir) {
  const fs::path dir = out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string());
  return dir;
}

} // namespace

void apply_thread_env() {
  const char* env = std::getenv("DEGENLAP_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1 || n > 4096) throw ConfigError(std::string("DEGENLAP_THREADS: bad value '") + env + "'");
  omp_set_num_threads(static_cast<int>(n));
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"poincare", "sobolev", "limits",  "bounded", "caccioppoli",
                                              "holder",   "harnack", "mollify", "riesz",   "iteration"};
  return names;
}

std::vector<std::string> expand_suites(const std::vector<std::string>& requested) {
  std::vector<std::string> out;
  for (const auto& r : requested) {
    if (r == "all") {
      for (const auto& n : suite_names()) {
        if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
      }
      continue;
    }
    if (std::find(suite_names().begin(), suite_names().end(), r) == suite_names().end()) {
      throw ConfigError("unknown suite '" + r + "'");
    }
    if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
  }
  if (out.empty()) throw ConfigError("no suite selected");
  return out;
}

std::string default_bands_path(const RunConfig& cfg) {
  return cfg.resolve(cfg.bands.empty() ? "../data/bands.json" : cfg.bands);
}

std::string band_key(const RunConfig& cfg, const std::string& check, const std::string& observed) {
  return cfg.setup_tag() + "." + check + "." + observed;
}

std::vector<VerificationReport> run_suite(const RunConfig& cfg, const std::string& suite, std::uint64_t seed,
                                          const BandTable& bands) {
  const Setup S{cfg, seed, bands};
  try {
    if (suite == "poincare") return suite_poincare(S);
    if (suite == "sobolev") return suite_sobolev(S);
    if (suite == "limits") return suite_limits(S);
    if (suite == "bounded") return suite_bounded(S);
    if (suite == "caccioppoli") return suite_caccioppoli(S);
    if (suite == "holder") return suite_holder(S);
    if (suite == "harnack") return suite_harnack(S);
    if (suite == "mollify") return suite_mollify(S);
    if (suite == "riesz") return suite_riesz(S);
    if (suite == "iteration") return suite_iteration(S);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    return {error_report(cfg, suite, seed, e.what())};
  }
  throw ConfigError("unknown suite '" + suite + "'");
}

VerifyOutcome run_verify(const RunConfig& cfg, const std::vector<std::string>& suites, std::uint64_t seed,
                         const BandTable& bands, const std::string& out_dir) {
  VerifyOutcome out;
  for (const auto& s : expand_suites(suites)) {
    for (auto& r : run_suite(cfg, s, seed, bands)) {
      out.all_passed = out.all_passed && r.passed;
      out.reports.push_back(std::move(r));
    }
  }
  if (!out_dir.empty()) {
    const fs::path dir = prepare_out(cfg, out_dir);
    std::ostringstream csv;
    write_suite_csv_header(csv);
    for (const auto& r : out.reports) {
      write_text(dir / (r.check_name + ".json"), r.to_json().dump(2) + "\n");
      write_suite_csv_row(csv, r);
    }
    write_text(dir / "suite.csv", csv.str());
  }
  return out;
}

int cmd_solve(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  const DirichletProblem prob = build_problem(cfg);
  const SolveResult res = solve(prob, build_solve_options(cfg));
  const fs::path dir = prepare_out(cfg, out_dir);
  std::ostringstream csv;
  write_field_csv(csv, prob.grid, res.u);
  write_text(dir / "solution.csv", csv.str());
  Json trace = Json::array();
  for (double e : res.energy_trace) trace.push_back(e);
  Json rep{{"parameters", Json{{"setup", cfg.setup_tag()}, {"config", cfg.to_json()}}},
           {"method", res.method},
           {"iterations", res.iterations},
           {"residual_inf", res.residual_inf},
           {"energy_value", res.energy_value},
           {"converged", res.converged},
           {"tol", cfg.solver_tol},
           {"energy_trace", trace}};
  write_text(dir / "solve_report.json", rep.dump(2) + "\n");
  log << "solve: " << res.method << ", " << res.iterations << " iterations, residual "
      << format_double(res.residual_inf) << (res.converged ? " (converged)" : " (not converged)") << '\n';
  return res.converged ? 0 : 2;
}

int cmd_verify(const RunConfig& cfg, const VerifyArgs& args, std::ostream& log) {
  const auto suites = expand_suites(args.suites.empty() ? cfg.suites : args.suites);
  const std::string bands_path = args.bands_path.empty() ? default_bands_path(cfg) : args.bands_path;
  BandTable bands;
  if (fs::exists(bands_path)) {
    bands = BandTable::load(bands_path);
  } else if (!args.bands_path.empty()) {
    throw ConfigError("bands file not found: " + bands_path);
  }
  const std::string out_dir = args.out_dir.empty() ? cfg.output_dir : args.out_dir;
  const auto outcome = run_verify(cfg, suites, args.seed.value_or(cfg.seed), bands, out_dir);
  for (const auto& r : outcome.reports) {
    log << (r.passed ? "PASS " : "FAIL ") << r.check_name;
    for (const auto& n : r.notes) log << "  [" << n << "]";
    log << '\n';
  }
  return outcome.all_passed ? 0 : 2;
}

std::vector<double> parse_s_grid(const std::string& text) {
  std::vector<double> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("--s-grid: empty entry");
    item = item.substr(b, e - b + 1);
    std::size_t used = 0;
    double s = 0.0;
    try {
      s = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("--s-grid: '" + item + "' is not a number");
    }
    if (used != item.size()) throw ConfigError("--s-grid: '" + item + "' is not a number");
    if (!(s > 0.0 && s < 1.0)) throw ConfigError("--s-grid: s = " + item + " lies outside (0,1)");
    if (!out.empty() && !(s > out.back())) throw ConfigError("--s-grid: values must be increasing");
    out.push_back(s);
  }
  if (out.empty()) throw ConfigError("--s-grid: no values");
  return out;
}

int cmd_scan(const RunConfig& cfg, ScanQuantity quantity, const std::vector<double>& s_grid,
             const std::string& out_dir, std::ostream& log) {
  const GridDomain g = build_grid(cfg);
  const WeightModel w = build_weight(cfg);
  FieldVector v;
  if (cfg.scan_field == "zero") {
    v.assign(g.size(), 0.0);
  } else if (cfg.scan_field == "data") {
    v = build_data(cfg, g);
  } else {
    v = test_functions(g, TestFunctionSpec{}).front();
  }
  std::ostringstream csv;
  csv << "s,value,ref_l0,ref_l1,ratio0,ratio1\n";
  if (quantity == ScanQuantity::energy) {
    const auto res = limit_scan(cfg.energy, w, g, v, s_grid);
    auto ratio = [](double a, double b) { return a == 0.0 ? 0.0 : a / b; };
    for (std::size_t k = 0; k < res.s.size(); ++k) {
      csv << format_double(res.s[k]) << ',' << format_double(res.energy[k]) << ',' << format_double(res.ref_l0)
          << ',' << format_double(res.ref_l1) << ',' << format_double(ratio(res.energy[k], res.ref_l0)) << ','
          << format_double(ratio(res.energy[k], res.ref_l1)) << '\n';
    }
  } else {
    const auto fam = probe_family(g, cfg.seed, 11);
    for (double s : s_grid) {
      PoincareOptions opt;
      opt.s_values = {s};
      opt.s_reference = s;
      const auto rep = poincare_check(cfg.energy.p, w, g, omega_ball(g), fam, opt);
      csv << format_double(s) << ',' << format_double(rep.value("max_ratio")) << ",,,,\n";
    }
  }
  const fs::path dir = prepare_out(cfg, out_dir);
  write_text(dir / "scan.csv", csv.str());
  log << "scan: " << s_grid.size() << " rows written to " << (dir / "scan.csv").string() << '\n';
  return 0;
}

} // namespace degenlap
