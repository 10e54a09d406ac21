#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kSource = DEGENLAP_SOURCE_DIR;

fs::path scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("degenlap_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(const std::string& args, const std::string& env = "") {
  const fs::path out = scratch() / "stdout.txt";
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd =
      env + " '" + std::string(DEGENLAP_CLI) + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

const std::string kConstant =
    "dimension = 1\n"
    "box = -2 2\n"
    "nodes_per_axis = 32\n"
    "collar_width = 1\n"
    "energy.s = 0.5\n"
    "energy.p = 2\n"
    "data = constant\n"
    "data.value = 1.5\n";

} // namespace

TEST_CASE("missing required key") {
  const auto cfg = write_config("missing.cfg",
                                "dimension = 1\nnodes_per_axis = 32\nenergy.p = 2\n");
  const auto r = run("solve --config '" + cfg.string() + "' --out '" + (scratch() / "m").string() + "'");
  CHECK(r.code == 1);
  CHECK(r.err.find("energy.s") != std::string::npos);
}

TEST_CASE("unknown key is rejected with its line") {
  const auto cfg = write_config("unknown.cfg", kConstant + "energy.q = 3\n");
  const auto r = run("solve --config '" + cfg.string() + "'");
  CHECK(r.code == 1);
  CHECK(r.err.find("unknown.cfg:9") != std::string::npos);
  CHECK(r.err.find("energy.q") != std::string::npos);
}

TEST_CASE("duplicate keys are rejected") {
  const auto cfg = write_config("dup.cfg", kConstant + "data = sign\n");
  const auto r = run("solve --config '" + cfg.string() + "'");
  CHECK(r.code == 1);
  CHECK(r.err.find("dup.cfg:9") != std::string::npos);
}

TEST_CASE("invalid values exit with 1") {
  const auto cfg = write_config("bad_s.cfg", "dimension = 1\nnodes_per_axis = 32\nenergy.s = 1.5\nenergy.p = 2\n");
  CHECK(run("solve --config '" + cfg.string() + "'").code == 1);
  CHECK(run("solve --config '" + (scratch() / "does_not_exist.cfg").string() + "'").code == 1);
  CHECK(run("frobnicate").code == 1);
}

TEST_CASE("constant data solve") {
  const auto cfg = write_config("constant.cfg", kConstant);
  const fs::path out = scratch() / "constant";
  const auto r = run("solve --config '" + cfg.string() + "' --out '" + out.string() + "'");
  REQUIRE(r.code == 0);
  std::ifstream in(out / "solution.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,value");
  int rows = 0;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    CHECK(std::stod(line.substr(comma + 1)) == 1.5);
    ++rows;
  }
  CHECK(rows == 32);
  const auto rep = nlohmann::json::parse(slurp(out / "solve_report.json"));
  CHECK(rep["converged"] == true);
  CHECK(rep["residual_inf"] == 0.0);
  CHECK(rep.contains("parameters"));
}

TEST_CASE("shipped sign config converges") {
  const fs::path out = scratch() / "sign";
  const auto r = run("solve --config '" + (kSource / "configs/sign_1d.cfg").string() + "' --out '" + out.string() + "'");
  REQUIRE(r.code == 0);
  const auto rep = nlohmann::json::parse(slurp(out / "solve_report.json"));
  CHECK(rep["converged"] == true);
  CHECK(rep["residual_inf"].get<double>() <= 1e-10);
}

TEST_CASE("iteration suite writes one report") {
  const auto cfg = write_config("iter.cfg", kConstant);
  const fs::path out = scratch() / "iter";
  const auto r = run("verify --config '" + cfg.string() + "' --suite iteration --out '" + out.string() + "'");
  CHECK(r.code == 0);
  int json_files = 0;
  for (const auto& e : fs::directory_iterator(out))
    if (e.path().extension() == ".json") ++json_files;
  CHECK(json_files == 1);
  const auto csv = slurp(out / "suite.csv");
  CHECK(csv.rfind("check,param_hash,observed_max,band_lo,band_hi,passed\n", 0) == 0);
  CHECK(r.out.find("PASS") != std::string::npos);
}

TEST_CASE("unknown suite exits with 1") {
  const auto cfg = write_config("suite.cfg", kConstant);
  CHECK(run("verify --config '" + cfg.string() + "' --suite nosuch --out '" + (scratch() / "x").string() + "'").code ==
        1);
}

TEST_CASE("harnack suite on the shipped config passes the shipped bands") {
  const fs::path out = scratch() / "harnack";
  const auto r = run("verify --config '" + (kSource / "configs/sign_1d.cfg").string() + "' --suite harnack --out '" +
                     out.string() + "'");
  CHECK(r.code == 0);
  CHECK(fs::exists(out / "harnack.json"));
}

TEST_CASE("scan of the zero field") {
  const auto cfg = write_config("zero.cfg", kConstant + "scan.field = zero\n");
  const fs::path out = scratch() / "scan";
  const auto r = run("scan --config '" + cfg.string() + "' --s-grid 0.5 --out '" + out.string() + "'");
  REQUIRE(r.code == 0);
  std::istringstream in(slurp(out / "scan.csv"));
  std::string header, row, extra;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "s,value,ref_l0,ref_l1,ratio0,ratio1");
  CHECK(row.rfind("0.5,0,", 0) == 0);
  CHECK_FALSE(std::getline(in, extra));
}

TEST_CASE("malformed s grids exit with 1") {
  const auto cfg = write_config("scan.cfg", kConstant);
  for (const char* grid : {"0.5,abc", "1.2", "0.5,0.3", "", "0,0.5"}) {
    CAPTURE(grid);
    const auto r = run("scan --config '" + cfg.string() + "' --s-grid '" + grid + "' --out '" +
                       (scratch() / "bad").string() + "'");
    CHECK(r.code == 1);
  }
}

TEST_CASE("thread count does not change the output") {
  const auto cfg2 = write_config("threads2.cfg",
                                 "dimension = 1\nbox = -2 2\nnodes_per_axis = 64\ncollar_width = 1\n"
                                 "energy.s = 0.5\nenergy.p = 3\ndata = sign\n");
  const fs::path a = scratch() / "t1";
  const fs::path b = scratch() / "t4";
  REQUIRE(run("solve --config '" + cfg2.string() + "' --out '" + a.string() + "'", "DEGENLAP_THREADS=1").code == 0);
  REQUIRE(run("solve --config '" + cfg2.string() + "' --out '" + b.string() + "'", "DEGENLAP_THREADS=4").code == 0);
  CHECK(slurp(a / "solution.csv") == slurp(b / "solution.csv"));
  CHECK(run("solve --config '" + cfg2.string() + "'", "DEGENLAP_THREADS=zero").code == 1);
}
