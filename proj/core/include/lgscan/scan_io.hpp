#pragma once

#include <string>

#include "lgscan/chsh.hpp"
#include "lgscan/estimator.hpp"
#include "lgscan/forward_model.hpp"

namespace lgscan {

// Serialization for the on-disk formats. All writers are deterministic
// (same input, same bytes) and every format round-trips losslessly.
//
// Scan-map CSV: `# key=value` header lines (step_um, nx, ny, dwell_s, seed,
// x0_um, y0_um, plus meta_<key> for free-form metadata), a column header,
// then one `x_um,y_um,counts` row per grid point, x fastest.

std::string scan_map_to_csv(const ScanMap& map);
ScanMap scan_map_from_csv(const std::string& text);

std::string scan_map_to_json(const ScanMap& map);
ScanMap scan_map_from_json(const std::string& text);

// Rate maps use the same layout with a rate_cps column and no dwell/seed.
std::string rate_map_to_csv(const RateMap& map);
RateMap rate_map_from_csv(const std::string& text);

std::string rate_map_to_json(const RateMap& map);
RateMap rate_map_from_json(const std::string& text);

// Count-quad CSV: one row per setting pair,
// theta_A,theta_B,c,c_ab_perp,c_a_perp_b,c_perp_perp,accumulation_s
// with optional trailing singles_a,singles_b columns. Exactly four rows
// covering a 2x2 grid of angles; the first theta_A (theta_B) to appear is
// the unprimed setting.
ChshCounts chsh_counts_from_csv(const std::string& text);
std::string chsh_counts_to_csv(const ChshCounts& counts);

std::string geometry_fit_to_json(const GeometryFit& fit);
GeometryFit geometry_fit_from_json(const std::string& text);

// Small file helpers shared by the tools and tests.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace lgscan
