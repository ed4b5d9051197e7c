#include "lgscan/scan_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace lgscan {
namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, sep)) parts.push_back(item);
  return parts;
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(std::string(what) + ": bad number '" + s + "'");
  }
}

std::int64_t parse_count(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(std::string(what) + ": bad integer '" + s + "'");
  }
}

// Shared grid-map CSV machinery for count and rate maps.
struct ParsedGridCsv {
  std::map<std::string, std::string> header;
  std::map<std::string, std::string> metadata;
  std::vector<std::array<std::string, 3>> rows;
};

ParsedGridCsv parse_grid_csv(const std::string& text, const char* value_col) {
  ParsedGridCsv out;
  std::istringstream in(text);
  std::string line;
  const std::string column_header = std::string("x_um,y_um,") + value_col;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      if (!body.empty() && body.front() == ' ') body.erase(0, 1);
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = body.substr(0, eq);
      const std::string value = body.substr(eq + 1);
      if (key.rfind("meta_", 0) == 0) {
        out.metadata[key.substr(5)] = value;
      } else {
        out.header[key] = value;
      }
      continue;
    }
    if (line == column_header) continue;
    auto parts = split(line, ',');
    if (parts.size() != 3) {
      throw ValidationError("scan CSV row must have 3 columns: '" + line + "'");
    }
    out.rows.push_back({parts[0], parts[1], parts[2]});
  }
  return out;
}

const std::string& require_key(const ParsedGridCsv& csv, const std::string& key) {
  const auto it = csv.header.find(key);
  if (it == csv.header.end()) {
    throw ValidationError("scan CSV is missing the '# " + key + "=' header");
  }
  return it->second;
}

ScanGrid grid_from_header(const ParsedGridCsv& csv) {
  const double step = parse_double(require_key(csv, "step_um"), "step_um");
  const int nx = static_cast<int>(parse_count(require_key(csv, "nx"), "nx"));
  const int ny = static_cast<int>(parse_count(require_key(csv, "ny"), "ny"));
  double x0 = 0.0, y0 = 0.0;
  if (csv.header.count("x0_um") && csv.header.count("y0_um")) {
    x0 = parse_double(csv.header.at("x0_um"), "x0_um");
    y0 = parse_double(csv.header.at("y0_um"), "y0_um");
  } else {
    if (csv.rows.empty()) throw ValidationError("scan CSV has no data rows");
    x0 = parse_double(csv.rows.front()[0], "x_um");
    y0 = parse_double(csv.rows.front()[1], "y_um");
    for (const auto& row : csv.rows) {
      x0 = std::min(x0, parse_double(row[0], "x_um"));
      y0 = std::min(y0, parse_double(row[1], "y_um"));
    }
  }
  return ScanGrid(x0, y0, step, nx, ny);
}

// Places row values into grid order by their coordinates, so files remain
// readable after arbitrary row reordering.
template <typename T, typename Parse>
std::vector<T> rows_to_cells(const ParsedGridCsv& csv, const ScanGrid& grid,
                             Parse parse) {
  if (static_cast<int>(csv.rows.size()) != grid.size()) {
    throw ValidationError("scan CSV row count does not match nx * ny");
  }
  std::vector<T> cells(csv.rows.size());
  std::vector<bool> seen(csv.rows.size(), false);
  for (const auto& row : csv.rows) {
    const double x = parse_double(row[0], "x_um");
    const double y = parse_double(row[1], "y_um");
    const int ix = static_cast<int>(std::lround((x - grid.x0) / grid.step));
    const int iy = static_cast<int>(std::lround((y - grid.y0) / grid.step));
    if (ix < 0 || ix >= grid.nx || iy < 0 || iy >= grid.ny ||
        std::abs(x - grid.x(ix)) > 1e-6 * grid.step ||
        std::abs(y - grid.y(iy)) > 1e-6 * grid.step) {
      throw ValidationError("scan CSV row lies outside the declared grid");
    }
    const int i = grid.index(ix, iy);
    if (seen[i]) throw ValidationError("scan CSV has duplicate grid rows");
    seen[i] = true;
    cells[i] = parse(row[2]);
  }
  return cells;
}

void append_metadata_lines(std::string& out,
                           const std::map<std::string, std::string>& metadata,
                           bool seed_promoted) {
  for (const auto& [key, value] : metadata) {
    if (seed_promoted && key == "seed") continue;  // dedicated header line
    out += "# meta_" + key + "=" + value + "\n";
  }
}

json grid_to_json(const ScanGrid& grid) {
  return json{{"x0_um", grid.x0},
              {"y0_um", grid.y0},
              {"step_um", grid.step},
              {"nx", grid.nx},
              {"ny", grid.ny}};
}

ScanGrid grid_from_json(const json& j) {
  return ScanGrid(j.at("x0_um").get<double>(), j.at("y0_um").get<double>(),
                  j.at("step_um").get<double>(), j.at("nx").get<int>(),
                  j.at("ny").get<int>());
}

std::map<std::string, std::string> metadata_from_json(const json& j) {
  std::map<std::string, std::string> metadata;
  if (j.contains("metadata")) {
    for (const auto& [key, value] : j.at("metadata").items()) {
      metadata[key] = value.get<std::string>();
    }
  }
  return metadata;
}

}  // namespace

std::string scan_map_to_csv(const ScanMap& map) {
  map.validate();
  std::string out;
  out += "# step_um=" + fmt_double(map.grid.step) + "\n";
  out += "# nx=" + std::to_string(map.grid.nx) + "\n";
  out += "# ny=" + std::to_string(map.grid.ny) + "\n";
  out += "# dwell_s=" + fmt_double(map.dwell) + "\n";
  // Seed is promoted out of the free-form metadata into its own header line;
  // a map without one (e.g. measured data) simply omits the line.
  const auto seed = map.metadata.find("seed");
  if (seed != map.metadata.end()) out += "# seed=" + seed->second + "\n";
  out += "# x0_um=" + fmt_double(map.grid.x0) + "\n";
  out += "# y0_um=" + fmt_double(map.grid.y0) + "\n";
  append_metadata_lines(out, map.metadata, /*seed_promoted=*/true);
  out += "x_um,y_um,counts\n";
  for (int i = 0; i < map.grid.size(); ++i) {
    const Point p = map.grid.point(i);
    out += fmt_double(p.x) + "," + fmt_double(p.y) + "," +
           std::to_string(map.counts[i]) + "\n";
  }
  return out;
}

ScanMap scan_map_from_csv(const std::string& text) {
  const ParsedGridCsv csv = parse_grid_csv(text, "counts");
  ScanMap map;
  map.grid = grid_from_header(csv);
  map.dwell = parse_double(require_key(csv, "dwell_s"), "dwell_s");
  map.metadata = csv.metadata;
  if (csv.header.count("seed")) map.metadata["seed"] = csv.header.at("seed");
  map.counts = rows_to_cells<std::int64_t>(
      csv, map.grid,
      [](const std::string& s) { return parse_count(s, "counts"); });
  map.validate();
  return map;
}

std::string scan_map_to_json(const ScanMap& map) {
  map.validate();
  json j = grid_to_json(map.grid);
  j["dwell_s"] = map.dwell;
  j["counts"] = map.counts;
  j["metadata"] = map.metadata;
  return j.dump(2) + "\n";
}

ScanMap scan_map_from_json(const std::string& text) {
  const json j = json::parse(text);
  ScanMap map;
  map.grid = grid_from_json(j);
  map.dwell = j.at("dwell_s").get<double>();
  map.counts = j.at("counts").get<std::vector<std::int64_t>>();
  map.metadata = metadata_from_json(j);
  map.validate();
  return map;
}

std::string rate_map_to_csv(const RateMap& map) {
  std::string out;
  out += "# step_um=" + fmt_double(map.grid.step) + "\n";
  out += "# nx=" + std::to_string(map.grid.nx) + "\n";
  out += "# ny=" + std::to_string(map.grid.ny) + "\n";
  out += "# x0_um=" + fmt_double(map.grid.x0) + "\n";
  out += "# y0_um=" + fmt_double(map.grid.y0) + "\n";
  append_metadata_lines(out, map.metadata, /*seed_promoted=*/false);
  out += "x_um,y_um,rate_cps\n";
  for (int i = 0; i < map.grid.size(); ++i) {
    const Point p = map.grid.point(i);
    out += fmt_double(p.x) + "," + fmt_double(p.y) + "," +
           fmt_double(map.rates[i]) + "\n";
  }
  return out;
}

RateMap rate_map_from_csv(const std::string& text) {
  const ParsedGridCsv csv = parse_grid_csv(text, "rate_cps");
  RateMap map;
  map.grid = grid_from_header(csv);
  map.metadata = csv.metadata;
  map.rates = rows_to_cells<double>(csv, map.grid, [](const std::string& s) {
    return parse_double(s, "rate_cps");
  });
  return map;
}

std::string rate_map_to_json(const RateMap& map) {
  json j = grid_to_json(map.grid);
  j["rates"] = map.rates;
  j["metadata"] = map.metadata;
  return j.dump(2) + "\n";
}

RateMap rate_map_from_json(const std::string& text) {
  const json j = json::parse(text);
  RateMap map;
  map.grid = grid_from_json(j);
  map.rates = j.at("rates").get<std::vector<double>>();
  map.metadata = metadata_from_json(j);
  return map;
}

namespace {

constexpr double kAngleMatchTol = 1e-9;

bool same_angle(double a, double b) { return std::fabs(a - b) <= kAngleMatchTol; }

std::string quad_row(double theta_a, double theta_b, const CountQuad& q) {
  std::string row = fmt_double(theta_a) + "," + fmt_double(theta_b) + "," +
                    std::to_string(q.c) + "," + std::to_string(q.c_ab_perp) +
                    "," + std::to_string(q.c_a_perp_b) + "," +
                    std::to_string(q.c_perp_perp) + "," +
                    fmt_double(q.accumulation_s);
  if (q.singles_a && q.singles_b) {
    row += "," + std::to_string(*q.singles_a) + "," + std::to_string(*q.singles_b);
  }
  return row;
}

}  // namespace

std::string chsh_counts_to_csv(const ChshCounts& counts) {
  const ChshSettings& s = counts.settings;
  std::string out =
      "theta_A,theta_B,c,c_ab_perp,c_a_perp_b,c_perp_perp,accumulation_s\n";
  out += quad_row(s.theta_a, s.theta_b, counts.ab) + "\n";
  out += quad_row(s.theta_a, s.theta_b_prime, counts.ab_prime) + "\n";
  out += quad_row(s.theta_a_prime, s.theta_b, counts.a_prime_b) + "\n";
  out += quad_row(s.theta_a_prime, s.theta_b_prime, counts.a_prime_b_prime) + "\n";
  return out;
}

ChshCounts chsh_counts_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  struct Row {
    double theta_a, theta_b;
    CountQuad quad;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("theta_A", 0) == 0) continue;  // column header
    auto parts = split(line, ',');
    if (parts.size() != 7 && parts.size() != 9) {
      throw ValidationError(
          "count-quad CSV rows need 7 columns (9 with singles): '" + line + "'");
    }
    Row row;
    row.theta_a = parse_double(parts[0], "theta_A");
    row.theta_b = parse_double(parts[1], "theta_B");
    row.quad.c = parse_count(parts[2], "c");
    row.quad.c_ab_perp = parse_count(parts[3], "c_ab_perp");
    row.quad.c_a_perp_b = parse_count(parts[4], "c_a_perp_b");
    row.quad.c_perp_perp = parse_count(parts[5], "c_perp_perp");
    row.quad.accumulation_s = parse_double(parts[6], "accumulation_s");
    if (parts.size() == 9) {
      row.quad.singles_a = parse_count(parts[7], "singles_a");
      row.quad.singles_b = parse_count(parts[8], "singles_b");
    }
    rows.push_back(row);
  }
  if (rows.size() != 4) {
    throw ValidationError("count-quad CSV must contain exactly 4 data rows");
  }

  // First appearance fixes the unprimed setting on each arm.
  const double theta_a = rows[0].theta_a;
  double theta_a_prime = theta_a;
  const double theta_b = rows[0].theta_b;
  double theta_b_prime = theta_b;
  for (const auto& row : rows) {
    if (!same_angle(row.theta_a, theta_a) && same_angle(theta_a_prime, theta_a)) {
      theta_a_prime = row.theta_a;
    }
    if (!same_angle(row.theta_b, theta_b) && same_angle(theta_b_prime, theta_b)) {
      theta_b_prime = row.theta_b;
    }
  }
  if (same_angle(theta_a_prime, theta_a) || same_angle(theta_b_prime, theta_b)) {
    throw ValidationError(
        "count-quad CSV must cover two distinct angles per arm");
  }

  ChshCounts out;
  out.settings = ChshSettings(theta_a, theta_a_prime, theta_b, theta_b_prime);
  bool filled[4] = {false, false, false, false};
  for (const auto& row : rows) {
    const bool a_prime = same_angle(row.theta_a, theta_a_prime);
    const bool b_prime = same_angle(row.theta_b, theta_b_prime);
    if (!a_prime && !same_angle(row.theta_a, theta_a)) {
      throw ValidationError("count-quad CSV has more than two theta_A values");
    }
    if (!b_prime && !same_angle(row.theta_b, theta_b)) {
      throw ValidationError("count-quad CSV has more than two theta_B values");
    }
    const int slot = (a_prime ? 1 : 0) + (b_prime ? 2 : 0);
    if (filled[slot]) {
      throw ValidationError("count-quad CSV repeats a setting pair");
    }
    filled[slot] = true;
    switch (slot) {
      case 0: out.ab = row.quad; break;
      case 1: out.a_prime_b = row.quad; break;
      case 2: out.ab_prime = row.quad; break;
      default: out.a_prime_b_prime = row.quad; break;
    }
  }
  return out;
}

namespace {

json candidate_to_json(const GeometryCandidate& c) {
  return json{{"r_b_um", c.r_b},
              {"omega_um", c.omega},
              {"axis_xy_um", {c.axis_xy.x, c.axis_xy.y}},
              {"residual", c.residual}};
}

GeometryCandidate candidate_from_json(const json& j) {
  GeometryCandidate c;
  c.r_b = j.at("r_b_um").get<double>();
  c.omega = j.at("omega_um").get<double>();
  c.axis_xy = {j.at("axis_xy_um").at(0).get<double>(),
               j.at("axis_xy_um").at(1).get<double>()};
  c.residual = j.at("residual").get<double>();
  return c;
}

}  // namespace

std::string geometry_fit_to_json(const GeometryFit& fit) {
  json extrema{{"max_xy_um", {fit.extrema.max_xy.x, fit.extrema.max_xy.y}},
               {"min_xy_um", {fit.extrema.min_xy.x, fit.extrema.min_xy.y}},
               {"max_value_cps", fit.extrema.max_value},
               {"min_value_cps", fit.extrema.min_value},
               {"separation_um", fit.extrema.separation},
               {"phi_max_rad", fit.extrema.phi_max},
               {"max_on_edge", fit.extrema.max_on_edge},
               {"min_on_edge", fit.extrema.min_on_edge}};
  json j{{"extrema", extrema},
         {"candidates",
          {candidate_to_json(fit.candidates[0]), candidate_to_json(fit.candidates[1])}},
         {"theta_sum_rad", fit.theta_sum}};
  j["chosen"] = fit.chosen ? json(*fit.chosen) : json(nullptr);
  j["theta_b_rad"] = fit.theta_b ? json(*fit.theta_b) : json(nullptr);
  j["delta_rad"] = fit.delta ? json(*fit.delta) : json(nullptr);
  return j.dump(2) + "\n";
}

GeometryFit geometry_fit_from_json(const std::string& text) {
  const json j = json::parse(text);
  GeometryFit fit;
  const json& e = j.at("extrema");
  fit.extrema.max_xy = {e.at("max_xy_um").at(0).get<double>(),
                        e.at("max_xy_um").at(1).get<double>()};
  fit.extrema.min_xy = {e.at("min_xy_um").at(0).get<double>(),
                        e.at("min_xy_um").at(1).get<double>()};
  fit.extrema.max_value = e.at("max_value_cps").get<double>();
  fit.extrema.min_value = e.at("min_value_cps").get<double>();
  fit.extrema.separation = e.at("separation_um").get<double>();
  fit.extrema.phi_max = e.at("phi_max_rad").get<double>();
  fit.extrema.max_on_edge = e.at("max_on_edge").get<bool>();
  fit.extrema.min_on_edge = e.at("min_on_edge").get<bool>();
  fit.candidates[0] = candidate_from_json(j.at("candidates").at(0));
  fit.candidates[1] = candidate_from_json(j.at("candidates").at(1));
  fit.theta_sum = j.at("theta_sum_rad").get<double>();
  if (!j.at("chosen").is_null()) fit.chosen = j.at("chosen").get<int>();
  if (!j.at("theta_b_rad").is_null()) fit.theta_b = j.at("theta_b_rad").get<double>();
  if (!j.at("delta_rad").is_null()) fit.delta = j.at("delta_rad").get<double>();
  return fit;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open file for writing: " + path);
  out << text;
  if (!out) throw ValidationError("failed writing file: " + path);
}

}  // namespace lgscan
