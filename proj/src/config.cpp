#include "degenlap/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "degenlap/errors.hpp"

namespace degenlap {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "dimension",     "box",           "nodes_per_axis",   "collar_width",    "weight.kind",
      "weight.gamma",  "weight.csv",    "energy.s",         "energy.p",        "energy.s0",
      "energy.lambda", "energy.Lambda", "energy.kernel_mode", "solver.tol",    "solver.max_iter",
      "data",          "data.value",    "scan.field",       "verify.suite",    "verify.seed",
      "verify.bands",  "verify.harnack_nodes", "io.output_dir"};
  return keys;
}

class Parser {
public:
  Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(int line, const std::string& msg) const {
    if (line > 0) throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
    throw ConfigError(source_ + ": " + msg);
  }

  double number(int line, const std::string& key, const std::string& v) const {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(v, &used);
    } catch (const std::exception&) {
      fail(line, "'" + key + "' expects a number, got '" + v + "'");
    }
    if (used != v.size() || !std::isfinite(x)) fail(line, "'" + key + "' expects a number, got '" + v + "'");
    return x;
  }

  long integer(int line, const std::string& key, const std::string& v) const {
    std::size_t used = 0;
    long x = 0;
    try {
      x = std::stol(v, &used);
    } catch (const std::exception&) {
      fail(line, "'" + key + "' expects an integer, got '" + v + "'");
    }
    if (used != v.size()) fail(line, "'" + key + "' expects an integer, got '" + v + "'");
    return x;
  }

  std::uint64_t unsigned_integer(int line, const std::string& key, const std::string& v) const {
    std::size_t used = 0;
    unsigned long long x = 0;
    if (!v.empty() && v[0] == '-') fail(line, "'" + key + "' expects a non-negative integer");
    try {
      x = std::stoull(v, &used);
    } catch (const std::exception&) {
      fail(line, "'" + key + "' expects an integer, got '" + v + "'");
    }
    if (used != v.size()) fail(line, "'" + key + "' expects an integer, got '" + v + "'");
    return x;
  }

private:
  std::string source_;
};

} // namespace

Json RunConfig::to_json() const {
  Json j = Json::object();
  for (const auto& [k, v] : entries) j[k] = v;
  return j;
}

std::string RunConfig::setup_tag() const {
  std::ostringstream os;
  os << dimension << "d_" << weight_kind;
  if (weight_kind == "power") os << weight_gamma;
  os << "_p" << energy.p;
  return os.str();
}

std::string RunConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

RunConfig parse_config(std::istream& in, const std::string& source, const std::string& base_dir) {
  Parser P(source);
  RunConfig cfg;
  cfg.source = source;
  cfg.base_dir = base_dir;
  std::map<std::string, int> seen;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(raw);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) P.fail(line, "expected 'key = value'");
    const std::string key = trim(text.substr(0, eq));
    std::string value = trim(text.substr(eq + 1));
    if (const auto hash = value.find(" #"); hash != std::string::npos) value = trim(value.substr(0, hash));
    if (key.empty()) P.fail(line, "empty key");
    if (std::find(known_keys().begin(), known_keys().end(), key) == known_keys().end()) {
      P.fail(line, "unknown key '" + key + "'");
    }
    if (seen.count(key)) P.fail(line, "duplicate key '" + key + "'");
    if (value.empty()) P.fail(line, "key '" + key + "' has no value");
    seen[key] = line;
    cfg.entries.emplace_back(key, value);

    if (key == "dimension") {
      cfg.dimension = static_cast<int>(P.integer(line, key, value));
      if (cfg.dimension != 1 && cfg.dimension != 2) P.fail(line, "dimension must be 1 or 2");
    } else if (key == "box") {
      std::istringstream is(value);
      std::string a, b, extra;
      is >> a >> b;
      if (a.empty() || b.empty() || (is >> extra)) P.fail(line, "'box' expects two numbers: lo hi");
      cfg.box_lo = P.number(line, key, a);
      cfg.box_hi = P.number(line, key, b);
      if (!(cfg.box_lo < cfg.box_hi)) P.fail(line, "'box' needs lo < hi");
    } else if (key == "nodes_per_axis") {
      const long n = P.integer(line, key, value);
      if (n < 4 || n > 100000) P.fail(line, "nodes_per_axis must lie in [4, 100000]");
      cfg.nodes_per_axis = static_cast<int>(n);
    } else if (key == "collar_width") {
      const double c = P.number(line, key, value);
      if (!(c > 0.0)) P.fail(line, "collar_width must be positive");
      cfg.collar_width = c;
    } else if (key == "weight.kind") {
      if (value != "constant" && value != "power" && value != "csv") {
        P.fail(line, "weight.kind must be constant, power or csv");
      }
      cfg.weight_kind = value;
    } else if (key == "weight.gamma") {
      cfg.weight_gamma = P.number(line, key, value);
    } else if (key == "weight.csv") {
      cfg.weight_csv = value;
    } else if (key == "energy.s") {
      cfg.energy.s = P.number(line, key, value);
    } else if (key == "energy.p") {
      cfg.energy.p = P.number(line, key, value);
    } else if (key == "energy.s0") {
      cfg.energy.s0 = P.number(line, key, value);
    } else if (key == "energy.lambda") {
      cfg.energy.lambda = P.number(line, key, value);
    } else if (key == "energy.Lambda") {
      cfg.energy.Lambda = P.number(line, key, value);
    } else if (key == "energy.kernel_mode") {
      if (value == "model") {
        cfg.energy.kernel_mode = KernelMode::model;
      } else if (value == "power_closed_form") {
        cfg.energy.kernel_mode = KernelMode::power_closed_form;
      } else if (value == "custom_multiplier") {
        cfg.energy.kernel_mode = KernelMode::custom_multiplier;
      } else {
        P.fail(line, "energy.kernel_mode must be model, power_closed_form or custom_multiplier");
      }
    } else if (key == "solver.tol") {
      cfg.solver_tol = P.number(line, key, value);
      if (!(cfg.solver_tol > 0.0)) P.fail(line, "solver.tol must be positive");
    } else if (key == "solver.max_iter") {
      const long n = P.integer(line, key, value);
      if (n < 1) P.fail(line, "solver.max_iter must be at least 1");
      cfg.solver_max_iter = static_cast<int>(n);
    } else if (key == "data") {
      cfg.data = value;
    } else if (key == "data.value") {
      cfg.data_value = P.number(line, key, value);
    } else if (key == "scan.field") {
      if (value != "bump" && value != "zero" && value != "data") P.fail(line, "scan.field must be bump, zero or data");
      cfg.scan_field = value;
    } else if (key == "verify.suite") {
      cfg.suites.clear();
      std::istringstream is(value);
      std::string item;
      while (std::getline(is, item, ',')) {
        item = trim(item);
        if (item.empty()) P.fail(line, "empty entry in verify.suite");
        cfg.suites.push_back(item);
      }
    } else if (key == "verify.seed") {
      cfg.seed = P.unsigned_integer(line, key, value);
    } else if (key == "verify.bands") {
      cfg.bands = value;
    } else if (key == "verify.harnack_nodes") {
      const long n = P.integer(line, key, value);
      if (n < 4) P.fail(line, "verify.harnack_nodes must be at least 4");
      cfg.harnack_nodes = static_cast<int>(n);
    } else if (key == "io.output_dir") {
      cfg.output_dir = value;
    }
  }

  for (const char* req : {"dimension", "nodes_per_axis", "energy.s", "energy.p"}) {
    if (!seen.count(req)) P.fail(0, std::string("missing required key '") + req + "'");
  }
  try {
    cfg.energy.validate();
  } catch (const InvalidArgument& e) {
    P.fail(seen["energy.s"], e.what());
  }
  if (cfg.weight_kind == "power" && !seen.count("weight.gamma")) {
    P.fail(seen["weight.kind"], "weight.kind = power needs weight.gamma");
  }
  if (cfg.weight_kind == "csv" && cfg.weight_csv.empty()) {
    P.fail(seen["weight.kind"], "weight.kind = csv needs weight.csv");
  }
  if (cfg.weight_kind == "power") {
    const WeightModel w = WeightModel::power(cfg.dimension, cfg.energy.p, cfg.weight_gamma);
    if (!w.in_ap_range()) {
      P.fail(seen["weight.gamma"], "power weight outside the A_p range -n < gamma < n(p-1)");
    }
  }
  if (cfg.energy.kernel_mode == KernelMode::power_closed_form && cfg.weight_kind != "power") {
    P.fail(seen["energy.kernel_mode"], "power_closed_form needs weight.kind = power");
  }
  // Grid preconditions are checked here so that no command starts on a bad grid.
  try {
    (void)build_grid(cfg);
  } catch (const ConfigError& e) {
    P.fail(seen["nodes_per_axis"], e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(in, path, dir.empty() ? "." : dir.string());
}

GridDomain build_grid(const RunConfig& cfg, std::optional<int> nodes_per_axis) {
  GridConfig gc;
  gc.dim = cfg.dimension;
  gc.lo = cfg.box_lo;
  gc.hi = cfg.box_hi;
  gc.nodes_per_axis = nodes_per_axis.value_or(cfg.nodes_per_axis);
  gc.collar_width = cfg.collar_width;
  return make_grid(gc);
}

WeightModel build_weight(const RunConfig& cfg) {
  if (cfg.weight_kind == "power") return WeightModel::power(cfg.dimension, cfg.energy.p, cfg.weight_gamma);
  if (cfg.weight_kind == "csv") return WeightModel::from_csv(cfg.resolve(cfg.weight_csv), cfg.dimension, cfg.energy.p);
  return WeightModel::constant(cfg.dimension, cfg.energy.p);
}

FieldVector build_data(const RunConfig& cfg, const GridDomain& grid) {
  FieldVector g(grid.size(), 0.0);
  if (cfg.data == "constant") {
    std::fill(g.begin(), g.end(), cfg.data_value);
  } else if (cfg.data == "sign") {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double x = grid.node(i)[0];
      g[i] = x > 0.0 ? 1.0 : x < 0.0 ? -1.0 : 0.0;
    }
  } else if (cfg.data == "bump") {
    // Positive bump sitting in the collar to the right of Omega.
    const double c = grid.collar_width();
    const Point center{grid.box().hi - 0.5 * c, 0.0};
    const double r = 0.5 * c;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double d = distance(grid.node(i), center) / r;
      g[i] = bump_profile(d * d);
    }
  } else {
    g = read_field_csv(cfg.resolve(cfg.data), grid);
  }
  return g;
}

DirichletProblem build_problem(const RunConfig& cfg, std::optional<int> nodes_per_axis) {
  GridDomain grid = build_grid(cfg, nodes_per_axis);
  FieldVector g = build_data(cfg, grid);
  return DirichletProblem{cfg.energy, build_weight(cfg), std::move(grid), std::move(g)};
}

SolveOptions build_solve_options(const RunConfig& cfg) {
  SolveOptions opt;
  opt.tol = cfg.solver_tol;
  opt.max_iter = cfg.solver_max_iter;
  return opt;
}

} // namespace degenlap
