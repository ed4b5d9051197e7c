// lgscan: command-line front end for the photon-pair scan library.
//
// Subcommands:
//   simulate  forward-model a stage raster, write noisy + analytic maps
//   estimate  recover the beam geometry from a measured/simulated map
//   chsh      Bell-test S from a counts file or from model parameters
//
// Configuration layering: built-in defaults < --config JSON file < flags.
// The effective configuration is recorded in every output file's metadata.
// Angles are radians; any angle flag or config value also accepts a string
// with a `deg` suffix ("-90 deg"). Exit codes: 0 success, 2 invalid input
// or arguments, 3 a computation failed on valid inputs (the failure name
// is printed in brackets).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lgscan/chsh.hpp"
#include "lgscan/estimator.hpp"
#include "lgscan/forward_model.hpp"
#include "lgscan/scan_io.hpp"

using nlohmann::json;

namespace {

using namespace lgscan;

// Default seed used by every stochastic subcommand so repeated invocations
// reproduce each other without any flags.
constexpr std::uint64_t kDefaultSeed = 42;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_double_strict(const std::string& text, const std::string& what) {
  try {
    size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("invalid " + what + ": '" + text + "'");
  }
}

// "0.5", "-1.57", "90 deg", "90deg" -> radians.
double parse_angle(const std::string& raw) {
  std::string s = trim(raw);
  bool degrees = false;
  if (s.size() >= 3 && s.substr(s.size() - 3) == "deg") {
    degrees = true;
    s = trim(s.substr(0, s.size() - 3));
  }
  const double v = parse_double_strict(s, "angle");
  return degrees ? v * kPi / 180.0 : v;
}

double angle_from_json(const json& v, const std::string& key) {
  if (v.is_string()) return parse_angle(v.get<std::string>());
  if (v.is_number()) return v.get<double>();
  throw ValidationError("config key '" + key +
                        "' must be a number (radians) or a 'deg' string");
}

json load_config_file(const std::string& path,
                      const std::set<std::string>& allowed) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ValidationError("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) {
    throw ValidationError("config file " + path + " must hold a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) {
      throw ValidationError("config file " + path + ": unknown key '" + key +
                            "'");
    }
  }
  return j;
}

std::vector<std::pair<double, double>> table_from_json(const json& v) {
  std::vector<std::pair<double, double>> table;
  if (!v.is_array()) {
    throw ValidationError("config key 'profile_table' must be an array of "
                          "[r_um, eta] pairs");
  }
  for (const auto& row : v) {
    if (!row.is_array() || row.size() != 2) {
      throw ValidationError("config key 'profile_table' must be an array of "
                            "[r_um, eta] pairs");
    }
    table.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
  }
  return table;
}

// Reads a scan map by extension: .json -> JSON, anything else -> CSV.
ScanMap read_scan_map(const std::string& path) {
  const std::string text = read_text_file(path);
  const bool is_json =
      path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  try {
    return is_json ? scan_map_from_json(text) : scan_map_from_csv(text);
  } catch (const json::exception& e) {
    throw ValidationError("map file " + path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateParams {
  double axis_x = -50.0;
  double axis_y = 0.0;
  double r_b = 200.0;
  double theta_b = -kPi / 2.0;
  double alpha_sq = 0.5;
  double delta = kPi;
  double omega = 400.0;
  double eta0 = 1.0;
  double r_cut = 2000.0;
  double shape_p = 2.0;
  std::vector<std::pair<double, double>> profile_table;
  double peak_rate = 100.0;
  double background_rate = 0.0;
  double x0 = -1025.0;
  double y0 = -975.0;
  double step = 150.0;
  int nx = 14;
  int ny = 14;
  double dwell = 12.2;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;
  std::string format = "csv";
  std::string out;           // default: scan.<format>
  std::string analytic_out;  // default: <out stem>_analytic.<ext>
};

struct SimulateFlags {
  SimulateParams v;  // holds flag values as parsed
  std::string theta_b_text;
  std::string delta_text;
  CLI::Option* config = nullptr;
  std::string config_path;
  CLI::Option *axis_x = nullptr, *axis_y = nullptr, *r_b = nullptr,
              *theta_b = nullptr, *alpha_sq = nullptr, *delta = nullptr,
              *omega = nullptr, *eta0 = nullptr, *r_cut = nullptr,
              *shape_p = nullptr, *peak = nullptr, *background = nullptr,
              *x0 = nullptr, *y0 = nullptr, *step = nullptr, *nx = nullptr,
              *ny = nullptr, *dwell = nullptr, *seed = nullptr,
              *threads = nullptr, *format = nullptr, *out = nullptr,
              *analytic_out = nullptr;
};

void setup_simulate(CLI::App* sub, SimulateFlags& f) {
  sub->description("Simulate a raster scan: write a Poisson-noisy count map "
                   "and the matching analytic rate map.");
  f.config = sub->add_option("--config", f.config_path,
                             "JSON config file (flags override it)");
  f.axis_x = sub->add_option("--axis-x", f.v.axis_x,
                             "beam-axis x in the scan plane, um");
  f.axis_y = sub->add_option("--axis-y", f.v.axis_y,
                             "beam-axis y in the scan plane, um");
  f.r_b = sub->add_option("--r-b", f.v.r_b,
                          "hologram-B dislocation radius, um");
  f.theta_b = sub->add_option("--theta-b", f.theta_b_text,
                              "hologram-B azimuth, radians (or '<x> deg')");
  f.alpha_sq = sub->add_option("--alpha-sq", f.v.alpha_sq,
                               "pair-term weight |alpha|^2, at most 0.5");
  f.delta = sub->add_option("--delta", f.delta_text,
                            "source relative phase, radians (or '<x> deg')");
  f.omega = sub->add_option("--omega", f.v.omega, "beam waist, um");
  f.eta0 = sub->add_option("--eta0", f.v.eta0, "peak hologram efficiency");
  f.r_cut = sub->add_option("--r-cut", f.v.r_cut,
                            "efficiency cutoff radius, um");
  f.shape_p = sub->add_option("--shape-p", f.v.shape_p,
                              "efficiency fall-off exponent");
  f.peak = sub->add_option("--peak-rate", f.v.peak_rate,
                           "coincidence rate at the fringe maximum, cps");
  f.background = sub->add_option("--background", f.v.background_rate,
                                 "background rate, cps");
  f.x0 = sub->add_option("--x0", f.v.x0, "grid origin x, um");
  f.y0 = sub->add_option("--y0", f.v.y0, "grid origin y, um");
  f.step = sub->add_option("--step", f.v.step, "grid pitch, um");
  f.nx = sub->add_option("--nx", f.v.nx, "grid points along x");
  f.ny = sub->add_option("--ny", f.v.ny, "grid points along y");
  f.dwell = sub->add_option("--dwell", f.v.dwell, "dwell per point, s");
  f.seed = sub->add_option("--seed", f.v.seed,
                           "random seed (default 42; same seed, same bytes)");
  f.threads = sub->add_option("--threads", f.v.threads,
                              "worker threads (never changes the output)");
  f.format = sub->add_option("--format", f.v.format, "output format")
                 ->check(CLI::IsMember({"csv", "json"}));
  f.out = sub->add_option("--out", f.v.out,
                          "noisy map path (default scan.<format>)");
  f.analytic_out =
      sub->add_option("--analytic-out", f.v.analytic_out,
                      "analytic map path (default <out>_analytic)");
}

SimulateParams resolve_simulate(const SimulateFlags& f) {
  SimulateParams p;  // defaults
  if (f.config->count() > 0) {
    static const std::set<std::string> allowed{
        "axis_x", "axis_y", "r_b", "theta_b", "alpha_sq", "delta", "omega",
        "eta0", "r_cut", "shape_p", "profile_table", "peak_rate",
        "background_rate", "x0", "y0", "step", "nx", "ny", "dwell", "seed",
        "threads", "format", "out", "analytic_out"};
    const json j = load_config_file(f.config_path, allowed);
    if (j.contains("axis_x")) p.axis_x = j["axis_x"].get<double>();
    if (j.contains("axis_y")) p.axis_y = j["axis_y"].get<double>();
    if (j.contains("r_b")) p.r_b = j["r_b"].get<double>();
    if (j.contains("theta_b")) p.theta_b = angle_from_json(j["theta_b"], "theta_b");
    if (j.contains("alpha_sq")) p.alpha_sq = j["alpha_sq"].get<double>();
    if (j.contains("delta")) p.delta = angle_from_json(j["delta"], "delta");
    if (j.contains("omega")) p.omega = j["omega"].get<double>();
    if (j.contains("eta0")) p.eta0 = j["eta0"].get<double>();
    if (j.contains("r_cut")) p.r_cut = j["r_cut"].get<double>();
    if (j.contains("shape_p")) p.shape_p = j["shape_p"].get<double>();
    if (j.contains("profile_table")) p.profile_table = table_from_json(j["profile_table"]);
    if (j.contains("peak_rate")) p.peak_rate = j["peak_rate"].get<double>();
    if (j.contains("background_rate")) p.background_rate = j["background_rate"].get<double>();
    if (j.contains("x0")) p.x0 = j["x0"].get<double>();
    if (j.contains("y0")) p.y0 = j["y0"].get<double>();
    if (j.contains("step")) p.step = j["step"].get<double>();
    if (j.contains("nx")) p.nx = j["nx"].get<int>();
    if (j.contains("ny")) p.ny = j["ny"].get<int>();
    if (j.contains("dwell")) p.dwell = j["dwell"].get<double>();
    if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) p.threads = j["threads"].get<unsigned>();
    if (j.contains("format")) p.format = j["format"].get<std::string>();
    if (j.contains("out")) p.out = j["out"].get<std::string>();
    if (j.contains("analytic_out")) p.analytic_out = j["analytic_out"].get<std::string>();
    if (p.format != "csv" && p.format != "json") {
      throw ValidationError("config key 'format' must be csv or json");
    }
  }
  if (f.axis_x->count()) p.axis_x = f.v.axis_x;
  if (f.axis_y->count()) p.axis_y = f.v.axis_y;
  if (f.r_b->count()) p.r_b = f.v.r_b;
  if (f.theta_b->count()) p.theta_b = parse_angle(f.theta_b_text);
  if (f.alpha_sq->count()) p.alpha_sq = f.v.alpha_sq;
  if (f.delta->count()) p.delta = parse_angle(f.delta_text);
  if (f.omega->count()) p.omega = f.v.omega;
  if (f.eta0->count()) p.eta0 = f.v.eta0;
  if (f.r_cut->count()) p.r_cut = f.v.r_cut;
  if (f.shape_p->count()) p.shape_p = f.v.shape_p;
  if (f.peak->count()) p.peak_rate = f.v.peak_rate;
  if (f.background->count()) p.background_rate = f.v.background_rate;
  if (f.x0->count()) p.x0 = f.v.x0;
  if (f.y0->count()) p.y0 = f.v.y0;
  if (f.step->count()) p.step = f.v.step;
  if (f.nx->count()) p.nx = f.v.nx;
  if (f.ny->count()) p.ny = f.v.ny;
  if (f.dwell->count()) p.dwell = f.v.dwell;
  if (f.seed->count()) p.seed = f.v.seed;
  if (f.threads->count()) p.threads = f.v.threads;
  if (f.format->count()) p.format = f.v.format;
  if (f.out->count()) p.out = f.v.out;
  if (f.analytic_out->count()) p.analytic_out = f.v.analytic_out;
  return p;
}

EfficiencyProfile profile_from(const std::vector<std::pair<double, double>>& table,
                               double eta0, double r_cut, double shape_p) {
  if (!table.empty()) return EfficiencyProfile::from_table(table);
  return EfficiencyProfile(eta0, r_cut, shape_p);
}

std::string derive_analytic_path(const std::string& out) {
  const auto slash = out.find_last_of('/');
  const auto dot = out.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return out + "_analytic";
  }
  return out.substr(0, dot) + "_analytic" + out.substr(dot);
}

// The effective physics configuration, recorded in output metadata so a map
// file documents how it was produced.
std::map<std::string, std::string> config_metadata(const SimulateParams& p) {
  std::map<std::string, std::string> meta;
  meta["axis_x_um"] = fmt_double(p.axis_x);
  meta["axis_y_um"] = fmt_double(p.axis_y);
  meta["r_b_um"] = fmt_double(p.r_b);
  meta["theta_b_rad"] = fmt_double(p.theta_b);
  meta["alpha_sq"] = fmt_double(p.alpha_sq);
  meta["delta_rad"] = fmt_double(p.delta);
  meta["omega_um"] = fmt_double(p.omega);
  if (!p.profile_table.empty()) {
    meta["profile"] = "table[" + std::to_string(p.profile_table.size()) + "]";
  } else {
    meta["profile"] = "eta0=" + fmt_double(p.eta0) +
                      ";r_cut_um=" + fmt_double(p.r_cut) +
                      ";p=" + fmt_double(p.shape_p);
  }
  meta["peak_rate_cps"] = fmt_double(p.peak_rate);
  meta["background_rate_cps"] = fmt_double(p.background_rate);
  return meta;
}

int cmd_simulate(const SimulateFlags& flags) {
  const SimulateParams p = resolve_simulate(flags);

  ExperimentConfig config;
  config.axis_xy = {p.axis_x, p.axis_y};
  config.pose_b = HologramPose{p.r_b, p.theta_b};
  config.source = SourceState{p.alpha_sq, p.delta};
  config.beam = BeamGeometry{p.omega};
  config.profile = profile_from(p.profile_table, p.eta0, p.r_cut, p.shape_p);
  config.peak_rate = p.peak_rate;
  config.background_rate = p.background_rate;
  config.seed = p.seed;

  const ScanGrid grid{p.x0, p.y0, p.step, p.nx, p.ny};

  const std::string out = p.out.empty() ? "scan." + p.format : p.out;
  const std::string analytic_out =
      p.analytic_out.empty() ? derive_analytic_path(out) : p.analytic_out;
  if (out == analytic_out) {
    throw ValidationError("output paths must be distinct: '" + out + "'");
  }
  if (flags.config->count() &&
      (flags.config_path == out || flags.config_path == analytic_out)) {
    throw ValidationError("output path collides with the config file: '" +
                          flags.config_path + "'");
  }

  ScanMap map = simulate_scan(config, grid, p.dwell, p.threads);
  map.metadata = config_metadata(p);
  map.metadata["seed"] = std::to_string(p.seed);

  RateMap rates = analytic_map(config, grid);
  rates.metadata = config_metadata(p);

  if (p.format == "csv") {
    write_text_file(out, scan_map_to_csv(map));
    write_text_file(analytic_out, rate_map_to_csv(rates));
  } else {
    write_text_file(out, scan_map_to_json(map));
    write_text_file(analytic_out, rate_map_to_json(rates));
  }

  std::int64_t total = 0;
  int imax = 0;
  int imin = 0;
  for (int i = 0; i < grid.size(); ++i) {
    total += map.counts[i];
    if (map.counts[i] > map.counts[imax]) imax = i;
    if (map.counts[i] < map.counts[imin]) imin = i;
  }
  const Point pmax = grid.point(imax);
  const Point pmin = grid.point(imin);
  std::printf("wrote scan map %s (%dx%d cells, dwell %g s, seed %llu)\n",
              out.c_str(), grid.nx, grid.ny, p.dwell,
              static_cast<unsigned long long>(p.seed));
  std::printf("wrote analytic map %s\n", analytic_out.c_str());
  std::printf("total counts %lld\n", static_cast<long long>(total));
  std::printf("max cell (%g, %g) counts %lld\n", pmax.x, pmax.y,
              static_cast<long long>(map.counts[imax]));
  std::printf("min cell (%g, %g) counts %lld\n", pmin.x, pmin.y,
              static_cast<long long>(map.counts[imin]));
  return 0;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateParams {
  std::string map_path;
  std::string aux_map_path;
  double shift_x = 0.0;
  double shift_y = 0.0;
  double eta0 = 1.0;
  double r_cut = 2000.0;
  double shape_p = 2.0;
  std::vector<std::pair<double, double>> profile_table;
  int smoothing = 1;
  std::string out = "fit.json";
};

struct EstimateFlags {
  EstimateParams v;
  CLI::Option* config = nullptr;
  std::string config_path;
  CLI::Option *map = nullptr, *aux_map = nullptr, *shift_x = nullptr,
              *shift_y = nullptr, *eta0 = nullptr, *r_cut = nullptr,
              *shape_p = nullptr, *smoothing = nullptr, *out = nullptr;
};

void setup_estimate(CLI::App* sub, EstimateFlags& f) {
  sub->description("Estimate the beam axis and hologram-B geometry from a "
                   "scan map (CSV or JSON, by extension).");
  f.config = sub->add_option("--config", f.config_path,
                             "JSON config file (flags override it)");
  f.map = sub->add_option("--map", f.v.map_path, "scan map to fit");
  f.aux_map = sub->add_option(
      "--aux-map", f.v.aux_map_path,
      "rescan taken after displacing hologram B (resolves the dual branch)");
  f.shift_x = sub->add_option("--shift-x", f.v.shift_x,
                              "hologram-B displacement x for --aux-map, um")
                  ->needs(f.aux_map);
  f.shift_y = sub->add_option("--shift-y", f.v.shift_y,
                              "hologram-B displacement y for --aux-map, um")
                  ->needs(f.aux_map);
  f.eta0 = sub->add_option("--eta0", f.v.eta0, "peak hologram efficiency");
  f.r_cut = sub->add_option("--r-cut", f.v.r_cut,
                            "efficiency cutoff radius, um");
  f.shape_p = sub->add_option("--shape-p", f.v.shape_p,
                              "efficiency fall-off exponent");
  f.smoothing = sub->add_option("--smoothing", f.v.smoothing,
                                "box-average radius in cells");
  f.out = sub->add_option("--out", f.v.out,
                          "fit report path (default fit.json)");
}

EstimateParams resolve_estimate(const EstimateFlags& f) {
  EstimateParams p;
  if (f.config->count() > 0) {
    static const std::set<std::string> allowed{
        "map", "aux_map", "shift_x", "shift_y", "eta0",
        "r_cut", "shape_p", "profile_table", "smoothing", "out"};
    const json j = load_config_file(f.config_path, allowed);
    if (j.contains("map")) p.map_path = j["map"].get<std::string>();
    if (j.contains("aux_map")) p.aux_map_path = j["aux_map"].get<std::string>();
    if (j.contains("shift_x")) p.shift_x = j["shift_x"].get<double>();
    if (j.contains("shift_y")) p.shift_y = j["shift_y"].get<double>();
    if (j.contains("eta0")) p.eta0 = j["eta0"].get<double>();
    if (j.contains("r_cut")) p.r_cut = j["r_cut"].get<double>();
    if (j.contains("shape_p")) p.shape_p = j["shape_p"].get<double>();
    if (j.contains("profile_table")) p.profile_table = table_from_json(j["profile_table"]);
    if (j.contains("smoothing")) p.smoothing = j["smoothing"].get<int>();
    if (j.contains("out")) p.out = j["out"].get<std::string>();
  }
  if (f.map->count()) p.map_path = f.v.map_path;
  if (f.aux_map->count()) p.aux_map_path = f.v.aux_map_path;
  if (f.shift_x->count()) p.shift_x = f.v.shift_x;
  if (f.shift_y->count()) p.shift_y = f.v.shift_y;
  if (f.eta0->count()) p.eta0 = f.v.eta0;
  if (f.r_cut->count()) p.r_cut = f.v.r_cut;
  if (f.shape_p->count()) p.shape_p = f.v.shape_p;
  if (f.smoothing->count()) p.smoothing = f.v.smoothing;
  if (f.out->count()) p.out = f.v.out;
  if (p.map_path.empty()) {
    throw ValidationError("estimate needs a scan map: pass --map or set "
                          "'map' in the config file");
  }
  return p;
}

int cmd_estimate(const EstimateFlags& flags) {
  const EstimateParams p = resolve_estimate(flags);
  const ScanMap map = read_scan_map(p.map_path);
  const EfficiencyProfile profile =
      profile_from(p.profile_table, p.eta0, p.r_cut, p.shape_p);

  GeometryFit fit;
  if (!p.aux_map_path.empty()) {
    const ScanMap aux = read_scan_map(p.aux_map_path);
    fit = estimate_axis(map, profile, aux, Point{p.shift_x, p.shift_y},
                        p.smoothing);
  } else {
    fit = estimate_axis(map, profile, p.smoothing);
  }

  json report = json::parse(geometry_fit_to_json(fit));
  json cfg{{"map", p.map_path},
           {"smoothing", p.smoothing}};
  if (!p.profile_table.empty()) {
    cfg["profile"] = "table[" + std::to_string(p.profile_table.size()) + "]";
  } else {
    cfg["eta0"] = p.eta0;
    cfg["r_cut_um"] = p.r_cut;
    cfg["shape_p"] = p.shape_p;
  }
  if (!p.aux_map_path.empty()) {
    cfg["aux_map"] = p.aux_map_path;
    cfg["shift_x_um"] = p.shift_x;
    cfg["shift_y_um"] = p.shift_y;
  }
  report["config"] = cfg;
  write_text_file(p.out, report.dump(2) + "\n");

  std::printf("wrote fit report %s\n", p.out.c_str());
  for (int i = 0; i < 2; ++i) {
    const GeometryCandidate& c = fit.candidates[i];
    std::printf("candidate %d: r_b %.3f um, omega %.3f um, axis (%.2f, %.2f),"
                " residual %.6g\n",
                i, c.r_b, c.omega, c.axis_xy.x, c.axis_xy.y, c.residual);
  }
  std::printf("theta_sum %.6f rad\n", fit.theta_sum);
  if (fit.chosen) {
    std::printf("chosen candidate %d: theta_b %.6f rad, delta %.6f rad\n",
                *fit.chosen, *fit.theta_b, *fit.delta);
  } else {
    std::printf("dual branch unresolved (no --aux-map)\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// chsh

struct ChshParams {
  std::string counts_path;
  double r = 200.0;
  double omega = 400.0;
  double alpha_sq = 0.5;
  double delta = 0.0;
  double theta_a = -kPi / 4.0;
  double theta_a_prime = kPi / 4.0;
  double theta_b = -kPi / 2.0;
  double theta_b_prime = 0.0;
  bool simulate = false;
  double peak_rate = 100.0;
  double accumulation = 5.0;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

struct ChshFlags {
  ChshParams v;
  std::string theta_a_text, theta_a_prime_text, theta_b_text,
      theta_b_prime_text, delta_text;
  CLI::Option* config = nullptr;
  std::string config_path;
  CLI::Option *counts = nullptr, *r = nullptr, *omega = nullptr,
              *alpha_sq = nullptr, *delta = nullptr, *theta_a = nullptr,
              *theta_a_prime = nullptr, *theta_b = nullptr,
              *theta_b_prime = nullptr, *simulate = nullptr, *peak = nullptr,
              *accumulation = nullptr, *seed = nullptr, *out = nullptr;
};

void setup_chsh(CLI::App* sub, ChshFlags& f) {
  sub->description("Bell-test S value: from a measured count-quad CSV, or "
                   "predicted (optionally simulated) from model parameters.");
  f.config = sub->add_option("--config", f.config_path,
                             "JSON config file (flags override it)");
  f.counts = sub->add_option("--counts", f.v.counts_path,
                             "count-quad CSV; when given, model flags are "
                             "ignored");
  f.r = sub->add_option("--r", f.v.r, "analyzer dislocation radius, um");
  f.omega = sub->add_option("--omega", f.v.omega, "beam waist, um");
  f.alpha_sq = sub->add_option("--alpha-sq", f.v.alpha_sq,
                               "pair-term weight |alpha|^2");
  f.delta = sub->add_option("--delta", f.delta_text,
                            "source relative phase, radians (or '<x> deg')");
  f.theta_a = sub->add_option("--theta-a", f.theta_a_text,
                              "setting a, radians (or '<x> deg')");
  f.theta_a_prime = sub->add_option("--theta-a-prime", f.theta_a_prime_text,
                                    "setting a', radians (or '<x> deg')");
  f.theta_b = sub->add_option("--theta-b", f.theta_b_text,
                              "setting b, radians (or '<x> deg')");
  f.theta_b_prime = sub->add_option("--theta-b-prime", f.theta_b_prime_text,
                                    "setting b', radians (or '<x> deg')");
  f.simulate = sub->add_flag("--simulate", f.v.simulate,
                             "draw Poisson counts instead of quoting the "
                             "analytic correlations");
  f.peak = sub->add_option("--peak-rate", f.v.peak_rate,
                           "peak coincidence rate for --simulate, cps");
  f.accumulation = sub->add_option("--accumulation", f.v.accumulation,
                                   "accumulation per setting pair, s");
  f.seed = sub->add_option("--seed", f.v.seed,
                           "random seed for --simulate (default 42)");
  f.out = sub->add_option("--out", f.v.out,
                          "write the (simulated) count quads to this CSV");
}

ChshParams resolve_chsh(const ChshFlags& f) {
  ChshParams p;
  if (f.config->count() > 0) {
    static const std::set<std::string> allowed{
        "counts", "r", "omega", "alpha_sq", "delta", "theta_a",
        "theta_a_prime", "theta_b", "theta_b_prime", "simulate", "peak_rate",
        "accumulation", "seed", "out"};
    const json j = load_config_file(f.config_path, allowed);
    if (j.contains("counts")) p.counts_path = j["counts"].get<std::string>();
    if (j.contains("r")) p.r = j["r"].get<double>();
    if (j.contains("omega")) p.omega = j["omega"].get<double>();
    if (j.contains("alpha_sq")) p.alpha_sq = j["alpha_sq"].get<double>();
    if (j.contains("delta")) p.delta = angle_from_json(j["delta"], "delta");
    if (j.contains("theta_a")) p.theta_a = angle_from_json(j["theta_a"], "theta_a");
    if (j.contains("theta_a_prime"))
      p.theta_a_prime = angle_from_json(j["theta_a_prime"], "theta_a_prime");
    if (j.contains("theta_b")) p.theta_b = angle_from_json(j["theta_b"], "theta_b");
    if (j.contains("theta_b_prime"))
      p.theta_b_prime = angle_from_json(j["theta_b_prime"], "theta_b_prime");
    if (j.contains("simulate")) p.simulate = j["simulate"].get<bool>();
    if (j.contains("peak_rate")) p.peak_rate = j["peak_rate"].get<double>();
    if (j.contains("accumulation")) p.accumulation = j["accumulation"].get<double>();
    if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) p.out = j["out"].get<std::string>();
  }
  if (f.counts->count()) p.counts_path = f.v.counts_path;
  if (f.r->count()) p.r = f.v.r;
  if (f.omega->count()) p.omega = f.v.omega;
  if (f.alpha_sq->count()) p.alpha_sq = f.v.alpha_sq;
  if (f.delta->count()) p.delta = parse_angle(f.delta_text);
  if (f.theta_a->count()) p.theta_a = parse_angle(f.theta_a_text);
  if (f.theta_a_prime->count()) p.theta_a_prime = parse_angle(f.theta_a_prime_text);
  if (f.theta_b->count()) p.theta_b = parse_angle(f.theta_b_text);
  if (f.theta_b_prime->count()) p.theta_b_prime = parse_angle(f.theta_b_prime_text);
  if (f.simulate->count()) p.simulate = f.v.simulate;
  if (f.peak->count()) p.peak_rate = f.v.peak_rate;
  if (f.accumulation->count()) p.accumulation = f.v.accumulation;
  if (f.seed->count()) p.seed = f.v.seed;
  if (f.out->count()) p.out = f.v.out;
  return p;
}

void print_s_report(const CorrelationSet& corr) {
  std::printf("E(a , b ) = %+.6f\n", corr.e_ab);
  std::printf("E(a', b ) = %+.6f\n", corr.e_a_prime_b);
  std::printf("E(a , b') = %+.6f\n", corr.e_ab_prime);
  std::printf("E(a', b') = %+.6f\n", corr.e_a_prime_b_prime);
  const double s = s_value(corr);
  std::printf("S = %+.6f\n", s);
  std::printf("|S| = %.6f\n", std::abs(s));
}

int cmd_chsh(const ChshFlags& flags) {
  const ChshParams p = resolve_chsh(flags);

  if (!p.counts_path.empty()) {
    const ChshCounts counts = chsh_counts_from_csv(read_text_file(p.counts_path));
    std::printf("counts file %s\n", p.counts_path.c_str());
    print_s_report(correlations(counts));
    return 0;
  }

  const ChshSettings settings{p.theta_a, p.theta_a_prime, p.theta_b,
                              p.theta_b_prime};
  const BeamGeometry beam{p.omega};
  const SourceState source{p.alpha_sq, p.delta};

  if (p.simulate) {
    const ChshCounts counts =
        simulate_chsh_counts(settings, p.r, beam, source, p.peak_rate,
                             p.accumulation, p.seed);
    if (!p.out.empty()) {
      write_text_file(p.out, chsh_counts_to_csv(counts));
      std::printf("wrote count quads %s\n", p.out.c_str());
    }
    std::printf("simulated counts: r %g um, omega %g um, accumulation %g s, "
                "seed %llu\n",
                p.r, p.omega, p.accumulation,
                static_cast<unsigned long long>(p.seed));
    print_s_report(correlations(counts));
    std::printf("predicted S = %+.6f\n", predict_s(settings, p.r, beam, source));
    return 0;
  }

  // Analytic correlations: evaluate the four coincidence channels of each
  // setting pair at the model probabilities.
  const auto e_of = [&](double ta, double tb) {
    const double c = angle_coincidence_probability(ta, tb, p.r, beam, source);
    const double cpp =
        angle_coincidence_probability(perp(ta), perp(tb), p.r, beam, source);
    const double cpb =
        angle_coincidence_probability(perp(ta), tb, p.r, beam, source);
    const double cbp =
        angle_coincidence_probability(ta, perp(tb), p.r, beam, source);
    return (c + cpp - cpb - cbp) / (c + cpp + cpb + cbp);
  };
  const CorrelationSet corr{
      e_of(settings.theta_a, settings.theta_b),
      e_of(settings.theta_a_prime, settings.theta_b),
      e_of(settings.theta_a, settings.theta_b_prime),
      e_of(settings.theta_a_prime, settings.theta_b_prime)};
  std::printf("model: r %g um, omega %g um, delta %g rad\n", p.r, p.omega,
              p.delta);
  print_s_report(corr);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photon-pair raster-scan toolkit: simulate fringe maps, "
               "recover the beam geometry, evaluate Bell-test S values."};
  app.require_subcommand(1);

  SimulateFlags sim_flags;
  EstimateFlags est_flags;
  ChshFlags chsh_flags;
  CLI::App* sim = app.add_subcommand("simulate");
  CLI::App* est = app.add_subcommand("estimate");
  CLI::App* bell = app.add_subcommand("chsh");
  setup_simulate(sim, sim_flags);
  setup_estimate(est, est_flags);
  setup_chsh(bell, chsh_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_flags);
    if (est->parsed()) return cmd_estimate(est_flags);
    if (bell->parsed()) return cmd_chsh(chsh_flags);
  } catch (const lgscan::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const lgscan::ComputationError& e) {
    std::fprintf(stderr, "computation error [%s]: %s\n", e.name().c_str(),
                 e.what());
    return 3;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
