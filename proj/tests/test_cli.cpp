#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "eoam/io.hpp"

// End-to-end checks of the command-line tool. The binary path and the shipped
// config directory come from the build system.

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(EOAM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

fs::path work_dir() {
  fs::path dir = fs::temp_directory_path() / "eoam_cli_test";
  fs::create_directories(dir);
  return dir;
}

// a reduced grid so the precompute step stays fast in unit runs
fs::path small_grid_cfg() {
  fs::path p = work_dir() / "grid_small.cfg";
  eoam::write_text_file(p.string(),
                        "speeds_ms = 14 16 18 20 22 24 26 28 30 32 34\n"
                        "mus = 1.0\n"
                        "lane_change_offset_m = 3.5\n"
                        "lat_accel_frac = 0.70\n"
                        "buffer_factor = 1.15\n");
  return p;
}

fs::path vehicle_cfg() { return fs::path(EOAM_CONFIG_DIR) / "vehicle_default.cfg"; }

const fs::path& tables_dir() {
  static fs::path dir = [] {
    fs::path d = work_dir() / "tables";
    int rc = run_cli("precompute --vehicle " + vehicle_cfg().string() + " --grid " +
                     small_grid_cfg().string() + " --out " + d.string());
    REQUIRE(rc == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("precompute writes the artifact set") {
  const fs::path& dir = tables_dir();
  CHECK(fs::exists(dir / "tables.dat"));
  CHECK(fs::exists(dir / "phase_mu_100.dat"));
  CHECK(fs::exists(dir / "phase_mu_100.csv"));
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(fs::exists(dir / "vehicle.cfg"));
  CHECK(fs::exists(dir / "solver_log.txt"));

  SUBCASE("rerunning yields byte-identical data artifacts") {
    fs::path again = work_dir() / "tables_again";
    REQUIRE(run_cli("precompute --vehicle " + vehicle_cfg().string() + " --grid " +
                    small_grid_cfg().string() + " --out " + again.string()) == 0);
    for (const char* name : {"tables.dat", "phase_mu_100.dat", "phase_mu_100.csv",
                             "solver_log.txt"}) {
      CHECK(eoam::read_text_file((dir / name).string()) ==
            eoam::read_text_file((again / name).string()));
    }
  }
  SUBCASE("empty grid file is a data error") {
    fs::path bad = work_dir() / "grid_bad.cfg";
    eoam::write_text_file(bad.string(), "mus = 1.0\n");
    CHECK(run_cli("precompute --vehicle " + vehicle_cfg().string() + " --grid " + bad.string() +
                  " --out " + (work_dir() / "never").string()) == 65);
  }
}

TEST_CASE("run command") {
  const fs::path& dir = tables_dir();
  fs::path scenario = work_dir() / "scenario.cfg";
  eoam::write_text_file(scenario.string(),
                        "ego_speed_kmh = 120\n"
                        "mu = 1.0\n");
  fs::path out = work_dir() / "run_out";

  SUBCASE("baseline run exits with the green code and writes outputs") {
    int rc = run_cli("run --scenario " + scenario.string() + " --tables " + dir.string() +
                     " --out " + out.string() + " --dump-plots");
    CHECK(rc == 0);
    CHECK(fs::exists(out / "timeseries.csv"));
    CHECK(fs::exists(out / "phase_trace.csv"));
    CHECK(fs::exists(out / "outcome.json"));
    CHECK(fs::exists(out / "plots" / "accel_tracking.csv"));
    CHECK(fs::exists(out / "plots" / "lateral_tracking.csv"));
    CHECK(fs::exists(out / "plots" / "differential_x.csv"));

    SUBCASE("outputs are byte-identical across reruns") {
      fs::path out2 = work_dir() / "run_out2";
      REQUIRE(run_cli("run --scenario " + scenario.string() + " --tables " + dir.string() +
                      " --out " + out2.string()) == 0);
      CHECK(eoam::read_text_file((out / "timeseries.csv").string()) ==
            eoam::read_text_file((out2 / "timeseries.csv").string()));
      CHECK(eoam::read_text_file((out / "phase_trace.csv").string()) ==
            eoam::read_text_file((out2 / "phase_trace.csv").string()));
      CHECK(eoam::read_text_file((out / "outcome.json").string()) ==
            eoam::read_text_file((out2 / "outcome.json").string()));
    }
  }
  SUBCASE("malformed scenario reports a parse diagnostic") {
    fs::path bad = work_dir() / "bad_scenario.cfg";
    eoam::write_text_file(bad.string(), "ego_speed_kmh : oops\n");
    CHECK(run_cli("run --scenario " + bad.string() + " --tables " + dir.string() + " --out " +
                  (work_dir() / "never2").string()) == 65);
  }
  SUBCASE("missing tables directory is a data error") {
    CHECK(run_cli("run --scenario " + scenario.string() + " --tables " +
                  (work_dir() / "nowhere").string() + " --out " +
                  (work_dir() / "never3").string()) == 65);
  }
}

TEST_CASE("sweep command") {
  const fs::path& dir = tables_dir();
  fs::path matrix = work_dir() / "matrix_one.cfg";
  eoam::write_text_file(matrix.string(),
                        "speeds_kmh = 120\n"
                        "mus = 1.0\n"
                        "oncoming_dists_m = 0\n");
  fs::path out = work_dir() / "sweep_out";
  REQUIRE(run_cli("sweep --matrix " + matrix.string() + " --tables " + dir.string() + " --out " +
                  out.string() + " --parallel 2") == 0);
  std::string csv = eoam::read_text_file((out / "sweep.csv").string());
  CHECK(csv.find("green") != std::string::npos);
  CHECK(fs::exists(out / "sweep_table.txt"));
}

TEST_CASE("validate command accepts its own artifacts") {
  CHECK(run_cli("validate --tables " + tables_dir().string()) == 0);
}

TEST_CASE("usage errors") {
  CHECK(run_cli("") == 64);
  CHECK(run_cli("run") == 64);
  CHECK(run_cli("frobnicate --x 1") == 64);
}
