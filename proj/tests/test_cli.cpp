// End-to-end tests for the lgscan command-line tool: spawns the real binary
// (path injected as LGSCAN_CLI_PATH), checks exit codes, output files, and
// the printed reports.
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "lgscan/chsh.hpp"
#include "lgscan/scan_io.hpp"

using namespace lgscan;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr interleaved
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(LGSCAN_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  size_t n = 0;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

// Fresh per-process scratch directory under the system temp dir.
fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("lgscan_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path_of(const std::string& name) {
  return (work_dir() / name).string();
}

const std::string kFixture =
    std::string(LGSCAN_DATA_DIR) + "/reference_bell_counts.csv";
const std::string kScenario =
    std::string(LGSCAN_DATA_DIR) + "/reference_scenario.json";

}  // namespace

TEST_CASE("chsh reports S from the bundled counts fixture") {
  const RunResult r = run("chsh --counts " + kFixture);
  CHECK(r.exit_code == 0);
  CHECK(contains(r.output, "E(a , b ) = -0.757771"));
  CHECK(contains(r.output, "|S| = 2.126971"));
}

TEST_CASE("chsh model mode reaches the ideal S at the optimal radius") {
  const RunResult r = run("chsh --r 282.84271247461902 --omega 400 --delta 0");
  CHECK(r.exit_code == 0);
  CHECK(contains(r.output, "|S| = 2.828427"));
}

TEST_CASE("chsh exits 3 when a quad has no counts") {
  // Start from a simulated file so the layout is canonical, then zero one
  // quad through the typed reader/writer.
  const std::string quads = path_of("zero_quads.csv");
  REQUIRE(run("chsh --simulate --accumulation 20 --out " + quads).exit_code ==
          0);
  ChshCounts counts = chsh_counts_from_csv(read_text_file(quads));
  counts.ab.c = counts.ab.c_ab_perp = 0;
  counts.ab.c_a_perp_b = counts.ab.c_perp_perp = 0;
  write_text_file(quads, chsh_counts_to_csv(counts));

  const RunResult r = run("chsh --counts " + quads);
  CHECK(r.exit_code == 3);
  CHECK(contains(r.output, "zero-total"));
}

TEST_CASE("simulated count quads round-trip through the reader") {
  const std::string quads = path_of("sim_quads.csv");
  const RunResult sim = run("chsh --simulate --r 283 --accumulation 100 "
                            "--seed 7 --out " + quads);
  REQUIRE(sim.exit_code == 0);
  const ChshCounts counts = chsh_counts_from_csv(read_text_file(quads));
  const double s = s_value(correlations(counts));
  CHECK(std::abs(s) > 2.0);
  CHECK(std::abs(s) < 2.0 * std::sqrt(2.0) + 0.2);

  // The file-mode report matches what the simulation printed.
  const RunResult file_mode = run("chsh --counts " + quads);
  CHECK(file_mode.exit_code == 0);
  char line[64];
  std::snprintf(line, sizeof(line), "S = %+.6f", s);
  CHECK(contains(sim.output, line));
  CHECK(contains(file_mode.output, line));
}

TEST_CASE("simulate writes deterministic maps with recorded config") {
  const std::string out1 = path_of("scan1.csv");
  const std::string out2 = path_of("scan2.csv");
  const std::string an1 = path_of("scan1_analytic.csv");
  const std::string an2 = path_of("scan2_analytic.csv");
  const std::string base = "simulate --config " + kScenario;

  REQUIRE(run(base + " --out " + out1 + " --analytic-out " + an1).exit_code ==
          0);
  REQUIRE(run(base + " --out " + out2 + " --analytic-out " + an2).exit_code ==
          0);

  // Byte-identical across invocations.
  CHECK(read_text_file(out1) == read_text_file(out2));
  CHECK(read_text_file(an1) == read_text_file(an2));

  // Round-trips through the reader with the full effective config attached.
  const ScanMap map = scan_map_from_csv(read_text_file(out1));
  CHECK(map.grid.nx == 14);
  CHECK(map.grid.ny == 14);
  CHECK(static_cast<int>(map.counts.size()) == 196);
  CHECK(map.dwell == doctest::Approx(12.2));
  CHECK(map.metadata.at("seed") == "42");
  CHECK(map.metadata.at("axis_x_um") == "-50");
  CHECK(map.metadata.at("r_b_um") == "200");
  CHECK(map.metadata.at("omega_um") == "400");

  const RateMap rates = rate_map_from_csv(read_text_file(an1));
  CHECK(rates.grid == map.grid);
  CHECK(rates.metadata.at("peak_rate_cps") == "100");
}

TEST_CASE("flags override config-file values") {
  const std::string out = path_of("override.csv");
  const std::string an = path_of("override_analytic.csv");
  const RunResult r = run("simulate --config " + kScenario +
                          " --r-b 250 --out " + out + " --analytic-out " + an);
  REQUIRE(r.exit_code == 0);
  const ScanMap map = scan_map_from_csv(read_text_file(out));
  CHECK(map.metadata.at("r_b_um") == "250");    // flag wins
  CHECK(map.metadata.at("omega_um") == "400");  // config survives
}

TEST_CASE("angle flags accept a deg suffix") {
  const std::string out = path_of("deg.csv");
  const std::string an = path_of("deg_analytic.csv");
  const RunResult r = run("simulate --theta-b '90 deg' --out " + out +
                          " --analytic-out " + an);
  REQUIRE(r.exit_code == 0);
  const ScanMap map = scan_map_from_csv(read_text_file(out));
  const double theta = std::stod(map.metadata.at("theta_b_rad"));
  CHECK(theta == doctest::Approx(1.5707963267948966).epsilon(1e-12));
}

TEST_CASE("simulate rejects an invalid grid with exit code 2") {
  const RunResult r = run("simulate --nx 1 --out " + path_of("bad.csv"));
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "ScanGrid"));
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("estimate --out " + path_of("nofit.json")).exit_code == 2);
  CHECK(run("simulate --no-such-flag 1").exit_code == 2);
  CHECK(run("").exit_code == 2);
  CHECK(run("--help").exit_code == 0);
}

TEST_CASE("estimate recovers the reference geometry from simulated maps") {
  const std::string map = path_of("est_scan.csv");
  const std::string map_an = path_of("est_scan_analytic.csv");
  const std::string aux = path_of("est_aux.csv");
  const std::string aux_an = path_of("est_aux_analytic.csv");
  const std::string fit_path = path_of("est_fit.json");

  REQUIRE(run("simulate --config " + kScenario + " --out " + map +
              " --analytic-out " + map_an).exit_code == 0);
  // Rescan after displacing hologram B by (0, +200) um: its dislocation
  // lands on the beam axis.
  REQUIRE(run("simulate --config " + kScenario +
              " --r-b 0 --theta-b 0 --seed 100042 --out " + aux +
              " --analytic-out " + aux_an).exit_code == 0);

  const RunResult r = run("estimate --map " + map + " --aux-map " + aux +
                          " --shift-x 0 --shift-y 200 --out " + fit_path);
  REQUIRE(r.exit_code == 0);

  const std::string report_text = read_text_file(fit_path);
  const GeometryFit fit = geometry_fit_from_json(report_text);
  REQUIRE(fit.chosen.has_value());
  CHECK(*fit.chosen == 0);
  const GeometryCandidate& chosen = fit.candidates[*fit.chosen];
  CHECK(chosen.r_b == doctest::Approx(200.0).epsilon(0.15));
  CHECK(chosen.omega == doctest::Approx(400.0).epsilon(0.15));
  REQUIRE(fit.theta_b.has_value());
  CHECK(*fit.theta_b == doctest::Approx(-1.5707963267948966).epsilon(1e-9));
  REQUIRE(fit.delta.has_value());
  CHECK(std::abs(normalize_angle(*fit.delta - kPi)) < 0.25);

  // The report documents how it was made.
  CHECK(contains(report_text, "\"config\""));
  CHECK(contains(report_text, "\"aux_map\""));
  CHECK(contains(report_text, "\"shift_y_um\": 200.0"));
}

TEST_CASE("estimate exits 3 with the failure name on a featureless map") {
  ScanMap flat;
  flat.grid = ScanGrid{0.0, 0.0, 100.0, 6, 6};
  flat.dwell = 1.0;
  flat.counts.assign(flat.grid.size(), 50);
  const std::string path = path_of("flat.csv");
  write_text_file(path, scan_map_to_csv(flat));

  const RunResult r = run("estimate --map " + path + " --out " +
                          path_of("flat_fit.json"));
  CHECK(r.exit_code == 3);
  CHECK(contains(r.output, "ambiguous-extremum"));
}
