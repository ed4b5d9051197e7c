// Tests for the geometry estimator: extremum location on noisy fringe maps,
// the constrained dual-candidate fit, and branch disambiguation from a
// displaced rescan. Reference maps are noiseless (expected counts at a very
// long dwell), so every tolerance below reflects grid resolution and model
// bias rather than shot noise.
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "lgscan/estimator.hpp"
#include "lgscan/forward_model.hpp"

using namespace lgscan;

namespace {

EfficiencyProfile uniform_profile() {
  return EfficiencyProfile::from_table({{0.0, 1.0}, {1e9, 1.0}});
}

// 14x14, 150 um pitch, centered near the origin: the reference scan layout
// used throughout these tests.
ScanGrid reference_grid() { return ScanGrid{-1025.0, -975.0, 150.0, 14, 14}; }

ExperimentConfig reference_config(double r_b, double theta_b) {
  ExperimentConfig c;
  c.axis_xy = {-50.0, 0.0};
  c.pose_b = HologramPose{r_b, theta_b};
  c.source = SourceState{0.5, kPi};
  c.beam = BeamGeometry{400.0};
  c.profile = uniform_profile();
  c.peak_rate = 100.0;
  c.background_rate = 0.0;
  return c;
}

// Expected counts at a 1e6 s dwell: relative rounding error <= ~1e-8, so the
// map is effectively noise-free while staying integer-valued like real data.
ScanMap noiseless_map(const ExperimentConfig& config, const ScanGrid& grid) {
  const RateMap rates = analytic_map(config, grid);
  ScanMap m;
  m.grid = grid;
  m.dwell = 1e6;
  m.counts.resize(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    m.counts[i] = std::llround(rates.rates[i] * m.dwell);
  }
  return m;
}

double dist(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Signed fraction of the way from `a` to `b` at which `p` projects onto the
// segment, plus the perpendicular offset from the line.
struct Projection {
  double t;
  double perp;
};

Projection project_onto(const Point& p, const Point& a, const Point& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  const double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
  const double perp =
      std::abs((p.x - a.x) * dy - (p.y - a.y) * dx) / std::sqrt(len2);
  return {t, perp};
}

}  // namespace

TEST_CASE("locate_extrema finds both fringe extrema of a reference map") {
  const ScanMap m = noiseless_map(reference_config(200.0, -kPi / 2.0),
                                  reference_grid());
  const ExtremaReport er = locate_extrema(m);

  // True extrema: maximum at (-50, 200), minimum at (-50, -400). The fringe
  // is asymmetric around both, so the refined positions carry a model bias
  // below half a grid step.
  CHECK(dist(er.max_xy, {-50.0, 200.0}) < 80.0);
  CHECK(dist(er.min_xy, {-50.0, -400.0}) < 80.0);
  CHECK(er.separation == doctest::Approx(600.0).epsilon(0.1));
  CHECK(std::abs(normalize_angle(er.phi_max - kPi / 2.0)) < 0.1);

  // Box-averaged values: below the 100 cps peak, near the 0 cps floor.
  CHECK(er.max_value > 70.0);
  CHECK(er.max_value < 100.5);
  CHECK(er.min_value >= 0.0);
  CHECK(er.min_value < 10.0);

  CHECK_FALSE(er.max_on_edge);
  CHECK_FALSE(er.min_on_edge);
}

TEST_CASE("locate_extrema rejects a featureless map") {
  ScanMap m;
  m.grid = reference_grid();
  m.dwell = 1.0;
  m.counts.assign(m.grid.size(), 100);
  CHECK_THROWS_AS(locate_extrema(m), AmbiguousExtremumError);
  try {
    locate_extrema(m);
  } catch (const ComputationError& e) {
    CHECK(e.name() == "ambiguous-extremum");
  }
}

TEST_CASE("locate_extrema flags a minimum captured by the scan edge") {
  // With hologram B centred on the axis the map is radially symmetric: the
  // probability only falls off with distance, so the true minimum lies
  // beyond the scanned area and the located one sits on the boundary.
  const ScanMap m =
      noiseless_map(reference_config(0.0, 0.0), reference_grid());
  const ExtremaReport er = locate_extrema(m);
  CHECK(er.min_on_edge);
  CHECK_FALSE(er.max_on_edge);
  CHECK(dist(er.max_xy, {-50.0, 0.0}) < 80.0);
}

TEST_CASE("fit_geometry returns an exact dual pair of candidates") {
  const ScanMap m = noiseless_map(reference_config(200.0, -kPi / 2.0),
                                  reference_grid());
  const ExtremaReport er = locate_extrema(m);
  const GeometryFit fit = fit_geometry(m, er, uniform_profile());

  const GeometryCandidate& lo = fit.candidates[0];
  const GeometryCandidate& hi = fit.candidates[1];

  // Ordered by radius, sharing one beam waist.
  CHECK(lo.r_b < hi.r_b);
  CHECK(lo.omega == hi.omega);

  // The pair satisfies the dual-radius identity exactly by construction:
  // r1 * r2 = w^2 / 2.
  CHECK(lo.r_b * hi.r_b ==
        doctest::Approx(lo.omega * lo.omega / 2.0).epsilon(1e-9));

  // Ground truth: r_B = 200 um (true branch), dual 400 um, waist 400 um.
  CHECK(lo.r_b == doctest::Approx(200.0).epsilon(0.02));
  CHECK(hi.r_b == doctest::Approx(400.0).epsilon(0.02));
  CHECK(lo.omega == doctest::Approx(400.0).epsilon(0.02));

  // The true branch both fits better and recovers the axis.
  CHECK(lo.residual < hi.residual);
  CHECK(dist(lo.axis_xy, {-50.0, 0.0}) < 75.0);

  // Both candidate axes lie strictly between the located extrema, on the
  // max -> min line.
  for (const GeometryCandidate& c : fit.candidates) {
    const Projection p = project_onto(c.axis_xy, er.max_xy, er.min_xy);
    CHECK(p.t > 0.0);
    CHECK(p.t < 1.0);
    CHECK(p.perp < 1e-6 * er.separation);
  }

  // theta_sum = theta_B + delta = -pi/2 + pi = pi/2, known already from the
  // fringe orientation, before any disambiguation.
  CHECK(std::abs(normalize_angle(fit.theta_sum - kPi / 2.0)) < 0.1);

  // No rescan given: the branch stays open.
  CHECK_FALSE(fit.chosen.has_value());
  CHECK_FALSE(fit.theta_b.has_value());
  CHECK_FALSE(fit.delta.has_value());
}

TEST_CASE("fit_geometry rejects a landscape with no interior minimum") {
  ScanMap m;
  m.grid = reference_grid();
  m.dwell = 1.0;
  m.counts.assign(m.grid.size(), 0);

  ExtremaReport er;
  er.max_xy = {-50.0, 200.0};
  er.min_xy = {-50.0, -400.0};
  er.max_value = 100.0;
  er.min_value = 0.0;
  er.separation = 600.0;
  er.phi_max = kPi / 2.0;

  // An all-zero map makes every radius fit equally badly, so the residual
  // scan never develops an interior minimum.
  CHECK_THROWS_AS(fit_geometry(m, er, uniform_profile()), FitFailureError);
  try {
    fit_geometry(m, er, uniform_profile());
  } catch (const ComputationError& e) {
    CHECK(e.name() == "fit-failure");
  }

  ExtremaReport bad = er;
  bad.separation = 0.0;
  CHECK_THROWS_AS(fit_geometry(m, bad, uniform_profile()), ValidationError);
}

TEST_CASE("dual candidates coincide at the self-dual geometry") {
  // r_B = w / sqrt(2) is its own dual: the extremum separation reaches its
  // minimum sqrt(2) w and both branches describe the same geometry.
  const double r_self = 400.0 / std::sqrt(2.0);
  const ScanMap m = noiseless_map(reference_config(r_self, -kPi / 2.0),
                                  reference_grid());
  const GeometryFit fit = estimate_axis(m, uniform_profile());

  const double r1 = fit.candidates[0].r_b;
  const double r2 = fit.candidates[1].r_b;
  CHECK(std::abs(r1 - r2) < 0.01 * r_self);
  CHECK(r1 == doctest::Approx(r_self).epsilon(0.02));
  CHECK(r2 == doctest::Approx(r_self).epsilon(0.02));
  CHECK(fit.candidates[0].omega == doctest::Approx(400.0).epsilon(0.02));
}

TEST_CASE("noiseless round trips recover the geometry within a few percent") {
  const double radii[10] = {100, 150, 200, 250, 300, 350, 400, 450, 500, 320};
  const double waists[10] = {300, 340, 380, 420, 460, 500, 310, 350, 430, 470};
  for (int k = 0; k < 10; ++k) {
    CAPTURE(k);
    ExperimentConfig c = reference_config(radii[k], 0.7 * k - 3.0);
    c.beam = BeamGeometry{waists[k]};
    c.source = SourceState{0.5, 0.4 * k - 2.0};
    const ScanMap m = noiseless_map(c, reference_grid());
    const GeometryFit fit = estimate_axis(m, uniform_profile());

    // Every fit keeps the exact dual identity.
    const double r1 = fit.candidates[0].r_b;
    const double r2 = fit.candidates[1].r_b;
    const double w = fit.candidates[0].omega;
    CHECK(r1 * r2 == doctest::Approx(w * w / 2.0).epsilon(1e-9));

    // One branch matches the truth to a few percent.
    const int best =
        std::abs(r1 - radii[k]) < std::abs(r2 - radii[k]) ? 0 : 1;
    const GeometryCandidate& cb = fit.candidates[best];
    CHECK(cb.r_b == doctest::Approx(radii[k]).epsilon(0.03));
    CHECK(cb.omega == doctest::Approx(waists[k]).epsilon(0.03));
  }
}

TEST_CASE("disambiguation picks the branch consistent with a displaced rescan") {
  const ScanGrid grid = reference_grid();
  const EfficiencyProfile prof = uniform_profile();

  SUBCASE("true radius on the lower branch") {
    const ExperimentConfig c = reference_config(200.0, -kPi / 2.0);
    const ScanMap m = noiseless_map(c, grid);
    // Displacing hologram B by (0, +200) um cancels its (0, -200) um offset,
    // so the rescan is the radially symmetric pattern.
    ExperimentConfig moved = c;
    moved.pose_b = HologramPose{0.0, 0.0};
    const ScanMap aux = noiseless_map(moved, grid);

    const GeometryFit fit = estimate_axis(m, prof, aux, Point{0.0, 200.0});
    REQUIRE(fit.chosen.has_value());
    CHECK(*fit.chosen == 0);
    CHECK(fit.candidates[*fit.chosen].r_b ==
          doctest::Approx(200.0).epsilon(0.02));
    REQUIRE(fit.theta_b.has_value());
    REQUIRE(fit.delta.has_value());
    // theta_B points opposite the shift that cancelled the offset.
    CHECK(*fit.theta_b == doctest::Approx(-kPi / 2.0).epsilon(1e-12));
    // delta = theta_sum - theta_B; the source phase here is pi.
    CHECK(std::abs(normalize_angle(*fit.delta - kPi)) < 0.15);
  }

  SUBCASE("true radius on the upper branch") {
    const ExperimentConfig c = reference_config(400.0, -kPi / 2.0);
    const ScanMap m = noiseless_map(c, grid);
    ExperimentConfig moved = c;
    moved.pose_b = HologramPose{0.0, 0.0};
    const ScanMap aux = noiseless_map(moved, grid);

    const GeometryFit fit = estimate_axis(m, prof, aux, Point{0.0, 400.0});
    REQUIRE(fit.chosen.has_value());
    CHECK(*fit.chosen == 1);
    CHECK(fit.candidates[*fit.chosen].r_b ==
          doctest::Approx(400.0).epsilon(0.02));
    CHECK(std::abs(normalize_angle(*fit.delta - kPi)) < 0.15);
  }

  SUBCASE("a zero displacement is inconclusive") {
    const ExperimentConfig c = reference_config(200.0, -kPi / 2.0);
    const ScanMap m = noiseless_map(c, grid);
    CHECK_THROWS_AS(estimate_axis(m, prof, m, Point{0.0, 0.0}),
                    InconclusiveDisambiguationError);
  }
}

TEST_CASE("estimate_axis composes the pipeline stages verbatim") {
  const ScanMap m = noiseless_map(reference_config(200.0, -kPi / 2.0),
                                  reference_grid());
  const EfficiencyProfile prof = uniform_profile();

  const GeometryFit one_shot = estimate_axis(m, prof);
  const GeometryFit staged = fit_geometry(m, locate_extrema(m), prof);

  CHECK(one_shot.candidates[0].r_b == staged.candidates[0].r_b);
  CHECK(one_shot.candidates[1].r_b == staged.candidates[1].r_b);
  CHECK(one_shot.candidates[0].omega == staged.candidates[0].omega);
  CHECK(one_shot.theta_sum == staged.theta_sum);
  CHECK(one_shot.extrema.separation == staged.extrema.separation);
}

TEST_CASE("geometry estimation survives shot noise at realistic dwell") {
  // One seeded noisy realization of the reference experiment, 12.2 s dwell:
  // the recovered radius and waist stay within 10%.
  ExperimentConfig c = reference_config(200.0, -kPi / 2.0);
  c.seed = 7;
  const ScanMap m = simulate_scan(c, reference_grid(), 12.2);

  ExperimentConfig moved = c;
  moved.pose_b = HologramPose{0.0, 0.0};
  moved.seed = 100007;
  const ScanMap aux = simulate_scan(moved, reference_grid(), 12.2);

  const GeometryFit fit =
      estimate_axis(m, uniform_profile(), aux, Point{0.0, 200.0});
  REQUIRE(fit.chosen.has_value());
  const GeometryCandidate& cb = fit.candidates[*fit.chosen];
  CHECK(cb.r_b == doctest::Approx(200.0).epsilon(0.10));
  CHECK(cb.omega == doctest::Approx(400.0).epsilon(0.10));
}
