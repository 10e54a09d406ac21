// Regenerates the frozen band file. Each config is run on calibration seeds
// and grid sizes disjoint from the shipped test runs; every frozen observable
// gets the band [0, 10 x its largest calibrated value].
#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <map>

#include "degenlap/errors.hpp"
#include "degenlap/runner.hpp"

namespace {

struct Range {
  double lo = INFINITY;
  double hi = -INFINITY;
  int dim = 1;
};

int scaled_even(int n, double f) {
  const int m = static_cast<int>(std::lround(n * f / 2.0)) * 2;
  return std::max(m, 4);
}

bool is_limit_key(const std::string& key) { return key.find(".limit_scan.ratio") != std::string::npos; }

} // namespace

int main(int argc, char** argv) {
  using namespace degenlap;
  CLI::App app{"Calibrate frozen bands"};
  std::vector<std::string> configs;
  std::vector<std::uint64_t> seeds{101, 202};
  std::vector<double> scales{1.25, 1.5};
  std::string out = "data/bands.json";
  int version = 1;
  app.add_option("--config", configs, "Config files")->required();
  app.add_option("--seeds", seeds, "Calibration seeds")->delimiter(',');
  app.add_option("--scales", scales, "Grid scale per seed")->delimiter(',');
  app.add_option("--out", out, "Band file to write");
  app.add_option("--version", version, "Band file version");
  CLI11_PARSE(app, argc, argv);
  if (seeds.size() != scales.size()) {
    std::cerr << "error: --seeds and --scales need the same length\n";
    return 1;
  }

  try {
    apply_thread_env();
    std::map<std::string, Range> ranges;
    const BandTable empty;
    for (const auto& path : configs) {
      const RunConfig base = load_config(path);
      for (std::size_t k = 0; k < seeds.size(); ++k) {
        RunConfig cfg = base;
        cfg.nodes_per_axis = scaled_even(base.nodes_per_axis, scales[k]);
        if (base.harnack_nodes) cfg.harnack_nodes = scaled_even(*base.harnack_nodes, scales[k]);
        for (const auto& suite : suite_names()) {
          for (const auto& rep : run_suite(cfg, suite, seeds[k], empty)) {
            if (rep.parameters.contains("error")) {
              throw Error(path + ": " + suite + ": " + rep.parameters["error"].get<std::string>());
            }
            for (const auto& o : rep.observed) {
              if (o.band_key.empty() || o.band) continue;
              auto& r = ranges[o.band_key];
              r.lo = std::min(r.lo, o.value);
              r.hi = std::max(r.hi, o.value);
              r.dim = cfg.dimension;
            }
          }
          std::cerr << path << " seed " << seeds[k] << ": " << suite << " done\n";
        }
      }
    }
    BandTable table;
    table.set_version(version);
    for (const auto& [key, r] : ranges) {
      if (!std::isfinite(r.hi)) throw Error("non-finite calibration value for " + key);
      if (is_limit_key(key) && r.dim == 1) {
        table.set(key, Band{0.1, 10.0}, r.hi);
      } else if (is_limit_key(key)) {
        table.set(key, Band{r.lo / 10.0, 10.0 * r.hi}, r.hi);
      } else {
        table.set(key, Band{0.0, 10.0 * r.hi}, r.hi);
      }
      std::cout << key << " calibrated " << format_double(r.hi) << '\n';
    }
    table.save(out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
