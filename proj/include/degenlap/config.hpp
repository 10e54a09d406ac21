#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "degenlap/grid.hpp"
#include "degenlap/kernel_energy.hpp"
#include "degenlap/report.hpp"
#include "degenlap/solver.hpp"
#include "degenlap/weights.hpp"

namespace degenlap {

/// A run configuration read from flat `key = value` text. Lines starting with
/// `#` are comments. Keys:
///
///   dimension, box (two numbers: lo hi), nodes_per_axis, collar_width
///   weight.kind (constant|power|csv), weight.gamma, weight.csv
///   energy.s, energy.p, energy.s0, energy.lambda, energy.Lambda,
///   energy.kernel_mode (model|power_closed_form|custom_multiplier)
///   solver.tol, solver.max_iter
///   data (constant|sign|bump|<csv path>), data.value
///   scan.field (bump|zero|data)
///   verify.suite (comma list or all), verify.seed, verify.bands, verify.harnack_nodes
///   io.output_dir
///
/// dimension, nodes_per_axis, energy.s and energy.p are required.
struct RunConfig {
  std::string source = "<config>";
  std::string base_dir = ".";

  int dimension = 1;
  double box_lo = -2.0;
  double box_hi = 2.0;
  int nodes_per_axis = 0;
  std::optional<double> collar_width;

  std::string weight_kind = "constant";
  double weight_gamma = 0.0;
  std::string weight_csv;

  EnergySpec energy;

  double solver_tol = 1e-10;
  int solver_max_iter = 500;

  std::string data = "constant";
  double data_value = 1.0;
  std::string scan_field = "bump";

  std::vector<std::string> suites{"all"};
  std::uint64_t seed = 0;
  std::string bands;  // resolved path; empty means the default next to the config
  std::optional<int> harnack_nodes;
  std::string output_dir = ".";

  /// The key/value pairs as read, in file order; echoed into reports.
  std::vector<std::pair<std::string, std::string>> entries;

  Json to_json() const;
  /// Short tag naming the setup, e.g. "1d_constant_p2" or "2d_power2_p3".
  std::string setup_tag() const;
  /// Resolves a path relative to the config's directory.
  std::string resolve(const std::string& path) const;
};

/// Throws ConfigError with "<source>:<line>: message" on malformed input,
/// unknown keys and values that fail module preconditions.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>", const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

GridDomain build_grid(const RunConfig& cfg, std::optional<int> nodes_per_axis = std::nullopt);
WeightModel build_weight(const RunConfig& cfg);
/// Exterior data from the `data` key on the given grid.
FieldVector build_data(const RunConfig& cfg, const GridDomain& grid);
DirichletProblem build_problem(const RunConfig& cfg, std::optional<int> nodes_per_axis = std::nullopt);
SolveOptions build_solve_options(const RunConfig& cfg);

} // namespace degenlap
