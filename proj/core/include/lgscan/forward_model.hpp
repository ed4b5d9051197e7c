#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lgscan/lg_core.hpp"

namespace lgscan {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

// Position-dependent diffraction efficiency of the scanning hologram.
// Parametric form eta0 * max(0, 1 - (r/r_cut)^p), or an optional tabulated
// radial profile (linear interpolation, clamped at the ends) when `table`
// is nonempty. Radii in micrometers.
struct EfficiencyProfile {
  double eta0 = 1.0;
  double r_cut = 1000.0;
  double shape_p = 2.0;
  std::vector<std::pair<double, double>> table;  // (r, eta), r ascending

  EfficiencyProfile() = default;
  EfficiencyProfile(double eta0_value, double r_cut_um, double p_value);
  static EfficiencyProfile from_table(
      std::vector<std::pair<double, double>> samples);
};

double efficiency(const EfficiencyProfile& profile, double r);

// Rectangular stage raster: nx-by-ny points starting at (x0, y0) with the
// given pitch, all in micrometers. Index layout is row-major with x
// fastest: index = iy * nx + ix.
struct ScanGrid {
  double x0 = 0.0;
  double y0 = 0.0;
  double step = 1.0;
  int nx = 2;
  int ny = 2;

  ScanGrid() = default;
  ScanGrid(double x0_um, double y0_um, double step_um, int nx_points,
           int ny_points);

  int size() const { return nx * ny; }
  int index(int ix, int iy) const { return iy * nx + ix; }
  double x(int ix) const { return x0 + step * ix; }
  double y(int iy) const { return y0 + step * iy; }
  Point point(int i) const { return {x(i % nx), y(i / nx)}; }

  friend bool operator==(const ScanGrid&, const ScanGrid&) = default;
};

// Measured (or simulated) coincidence counts over a scan grid.
struct ScanMap {
  ScanGrid grid;
  double dwell = 1.0;  // seconds per point
  std::vector<std::int64_t> counts;
  std::map<std::string, std::string> metadata;

  void validate() const;

  friend bool operator==(const ScanMap&, const ScanMap&) = default;
};

// Noiseless expected rates (counts/s) over a scan grid.
struct RateMap {
  ScanGrid grid;
  std::vector<double> rates;
  std::map<std::string, std::string> metadata;

  friend bool operator==(const RateMap&, const RateMap&) = default;
};

// Everything the forward model needs to predict a rate at a stage point.
// axis_xy: stage coordinates of the beam axis in arm A's scan plane.
// pose_b: hologram-B dislocation in arm B's own polar frame.
struct ExperimentConfig {
  Point axis_xy;
  HologramPose pose_b;
  SourceState source;
  BeamGeometry beam;
  EfficiencyProfile profile;
  double peak_rate = 100.0;       // counts/s at the fringe maximum, eta = 1
  double background_rate = 0.0;   // counts/s
  std::uint64_t seed = 0;

  void validate() const;
};

// Coincidence probability for hologram poses (r_A, theta_A), (r_B, theta_B):
//   |alpha|^2 (4 r_A^2 r_B^2 + 4 r_A r_B w^2 cos(theta_B - theta_A + delta)
//              + w^4) / ((2 r_A^2 + w^2)(2 r_B^2 + w^2)).
double coincidence_probability(const HologramPose& pose_a,
                               const HologramPose& pose_b,
                               const SourceState& source,
                               const BeamGeometry& beam);

// Same quantity evaluated the long way round: project the truncated
// two-mode pair state onto the measurement bases with lg-core inner
// products. Kept deliberately independent of the closed form above.
double coincidence_probability_oracle(const HologramPose& pose_a,
                                      const HologramPose& pose_b,
                                      const SourceState& source,
                                      const BeamGeometry& beam);

// Poses of hologram A that maximize / zero the coincidence probability:
// max at (r_B, delta + theta_B), min at (w^2 / (2 r_B), pi + delta + theta_B).
// Throws DegenerateInputError when pose_b.r == 0 (no azimuthal structure).
std::pair<HologramPose, HologramPose> extremum_poses(
    const HologramPose& pose_b, const SourceState& source,
    const BeamGeometry& beam);

// Distance between the two extrema: r_B + w^2 / (2 r_B), always >= sqrt(2) w.
double min_max_distance(double r_b, const BeamGeometry& beam);

// Expected coincidence rate at a stage position. Hologram A's pose is the
// polar form of (stage - axis); the probability is rescaled so peak_rate
// is reached at the fringe maximum when eta == 1.
double expected_rate(const ExperimentConfig& config, const Point& stage_xy);

// Poisson-noisy scan. Each grid point draws from its own (seed, index)
// random stream, so results do not depend on evaluation order or thread
// count. `threads` only splits the work.
ScanMap simulate_scan(const ExperimentConfig& config, const ScanGrid& grid,
                      double dwell_s, unsigned threads = 1);

// Noiseless expected-rate map over the same grid.
RateMap analytic_map(const ExperimentConfig& config, const ScanGrid& grid);

}  // namespace lgscan
