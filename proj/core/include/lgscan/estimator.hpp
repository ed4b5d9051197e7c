#pragma once

#include <array>
#include <optional>

#include "lgscan/forward_model.hpp"

namespace lgscan {

// Located fringe extrema of a scan map. Positions are stage coordinates in
// micrometers after sub-grid refinement; values are box-averaged rates.
struct ExtremaReport {
  Point max_xy;
  Point min_xy;
  double max_value = 0.0;  // counts/s, smoothed
  double min_value = 0.0;  // counts/s, smoothed
  double separation = 0.0; // |max - min|, micrometers
  double phi_max = 0.0;    // direction min -> max, radians
  bool max_on_edge = false;
  bool min_on_edge = false;
};

// One solution of the distance constraint d = r_B + w^2 / (2 r_B).
struct GeometryCandidate {
  double r_b = 0.0;   // micrometers
  double omega = 0.0; // micrometers
  Point axis_xy;      // stage coordinates of the recovered beam axis
  double residual = 0.0;
};

// Full geometry estimate: the constrained fit always produces the dual
// candidate pair; scanning hologram B's displaced copy of the map picks
// one and pins theta_B and delta individually.
struct GeometryFit {
  ExtremaReport extrema;
  std::array<GeometryCandidate, 2> candidates;  // ordered by r_b
  std::optional<int> chosen;                    // index into candidates
  double theta_sum = 0.0;                       // theta_B + delta
  std::optional<double> theta_b;
  std::optional<double> delta;
};

// Locates the fringe maximum and minimum on a box-averaged copy of the map
// (averaging radius in cells), refining each by a quadratic fit over its
// 3x3 neighborhood. The reported minimum is the smallest smoothed cell
// whose neighborhood is interior to the grid; extrema of the unrestricted
// search landing on the boundary set the corresponding edge flag.
// Throws AmbiguousExtremumError when a cell non-adjacent to the maximum
// ties with it within counting noise, sqrt(max raw count).
ExtremaReport locate_extrema(const ScanMap& map, int smoothing_radius = 1);

// Weighted least-squares fit of the forward model to the map, constrained
// to w^2 = 2 r_B (d - r_B) with d from `extrema` and the axis placed on the
// max->min segment at distance r_B from the maximum. Scans 200 log-spaced
// radii over (0.01 d, 0.99 d), refines the best interior minimum of the
// residual, and returns it together with its exact dual d - r_B.
GeometryFit fit_geometry(const ScanMap& map, const ExtremaReport& extrema,
                         const EfficiencyProfile& profile);

// Chooses between the dual candidates using a second map scanned after
// displacing hologram B by `aux_shift` (micrometers, stage frame). Each
// candidate predicts the post-shift dislocation radius |r_B - |shift||;
// the candidates must predict different symmetry classes, and an 8-bin
// angular asymmetry statistic of the displaced map decides between them.
// Sets chosen, theta_b, and delta on the returned copy.
GeometryFit disambiguate(const GeometryFit& fit, const ScanMap& aux_map,
                         const Point& aux_shift);

// locate_extrema + fit_geometry (+ disambiguate when aux data is given).
GeometryFit estimate_axis(const ScanMap& map, const EfficiencyProfile& profile,
                          int smoothing_radius = 1);
GeometryFit estimate_axis(const ScanMap& map, const EfficiencyProfile& profile,
                          const ScanMap& aux_map, const Point& aux_shift,
                          int smoothing_radius = 1);

}  // namespace lgscan
