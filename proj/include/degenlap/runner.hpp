#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "degenlap/config.hpp"
#include "degenlap/report.hpp"

namespace degenlap {

/// Caps the OpenMP thread count from DEGENLAP_THREADS when it is set.
/// Throws ConfigError on a malformed value.
void apply_thread_env();

/// poincare, sobolev, limits, bounded, caccioppoli, holder, harnack, mollify, riesz, iteration.
const std::vector<std::string>& suite_names();

/// Expands "all" and checks names. Throws ConfigError on an unknown suite.
std::vector<std::string> expand_suites(const std::vector<std::string>& requested);

/// Band file for a config: verify.bands relative to the config if set,
/// otherwise ../data/bands.json next to the config.
std::string default_bands_path(const RunConfig& cfg);

/// Band-file key of a frozen observable.
std::string band_key(const RunConfig& cfg, const std::string& check, const std::string& observed);

/// Runs one suite. Frozen observables are looked up in `bands`; keys that are
/// absent leave the report failing. Library errors raised by a check turn into
/// a failing report carrying the message.
std::vector<VerificationReport> run_suite(const RunConfig& cfg, const std::string& suite, std::uint64_t seed,
                                          const BandTable& bands);

struct VerifyOutcome {
  std::vector<VerificationReport> reports;
  bool all_passed = true;
};

/// Runs the suites in order. With a non-empty out_dir writes <check>.json per
/// report and suite.csv.
VerifyOutcome run_verify(const RunConfig& cfg, const std::vector<std::string>& suites, std::uint64_t seed,
                         const BandTable& bands, const std::string& out_dir);

/// Exit codes: 0 success or pass, 1 usage or config error, 2 non-convergence or band failure.
int cmd_solve(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

struct VerifyArgs {
  std::vector<std::string> suites;  // empty: the config's verify.suite
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string bands_path;  // empty: default_bands_path
};
int cmd_verify(const RunConfig& cfg, const VerifyArgs& args, std::ostream& log);

enum class ScanQuantity { energy, poincare_ratio };

/// Parses "0.1,0.5,0.9". Throws ConfigError unless every entry is a number in (0,1).
std::vector<double> parse_s_grid(const std::string& text);

int cmd_scan(const RunConfig& cfg, ScanQuantity quantity, const std::vector<double>& s_grid,
             const std::string& out_dir, std::ostream& log);

} // namespace degenlap
