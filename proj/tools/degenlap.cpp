#include <CLI11.hpp>

#include <iostream>

#include "degenlap/errors.hpp"
#include "degenlap/runner.hpp"
#include "degenlap/verify.hpp"

int main(int argc, char** argv) {
  using namespace degenlap;

  CLI::App app{"Weighted fractional p-Laplacian solver and inequality checks"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;

  auto* solve_cmd = app.add_subcommand("solve", "Solve the Dirichlet problem of a config");
  solve_cmd->add_option("--config", config, "Config file")->required();
  solve_cmd->add_option("--out", out_dir, "Output directory (default io.output_dir)");

  VerifyArgs vargs;
  std::uint64_t seed = 0;
  auto* verify_cmd = app.add_subcommand("verify", "Run verification suites");
  verify_cmd->add_option("--config", config, "Config file")->required();
  verify_cmd->add_option("--suite", vargs.suites, "Suite name or 'all' (repeatable)")->delimiter(',');
  auto* seed_opt = verify_cmd->add_option("--seed", seed, "Seed for test families");
  verify_cmd->add_option("--out", vargs.out_dir, "Output directory (default io.output_dir)");
  verify_cmd->add_option("--bands", vargs.bands_path, "Frozen band file");

  std::string quantity = "energy";
  std::string s_grid;
  auto* scan_cmd = app.add_subcommand("scan", "Scan a quantity over s");
  scan_cmd->add_option("--config", config, "Config file")->required();
  scan_cmd->add_option("--quantity", quantity, "energy or poincare-ratio");
  auto* s_grid_opt = scan_cmd->add_option("--s-grid", s_grid, "Comma-separated s values (default 0.05,...,0.95,0.99)");
  scan_cmd->add_option("--out", out_dir, "Output directory (default io.output_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    apply_thread_env();
    const RunConfig cfg = load_config(config);
    if (*solve_cmd) return cmd_solve(cfg, out_dir, std::cout);
    if (*verify_cmd) {
      if (*seed_opt) vargs.seed = seed;
      return cmd_verify(cfg, vargs, std::cout);
    }
    ScanQuantity q = ScanQuantity::energy;
    if (quantity == "poincare-ratio") {
      q = ScanQuantity::poincare_ratio;
    } else if (quantity != "energy") {
      throw ConfigError("--quantity must be energy or poincare-ratio");
    }
    const auto grid = *s_grid_opt ? parse_s_grid(s_grid) : default_s_grid();
    return cmd_scan(cfg, q, grid, out_dir, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
