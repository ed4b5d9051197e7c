#include "lgscan/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace lgscan {
namespace {

constexpr int kRadiusScanPoints = 200;
constexpr double kRadiusScanLow = 0.01;   // fraction of the separation
constexpr double kRadiusScanHigh = 0.99;  // fraction of the separation
constexpr double kAsymmetryThreshold = 0.1;
// Predicted post-shift radii at or below this fraction of the candidate
// omega count as "the displaced map should look symmetric".
constexpr double kSymmetricRadiusFraction = 0.25;
constexpr int kAngularBins = 8;

std::vector<double> box_average(const ScanMap& map, int radius) {
  const ScanGrid& g = map.grid;
  std::vector<double> out(static_cast<std::size_t>(g.size()), 0.0);
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      double sum = 0.0;
      int n = 0;
      for (int vy = std::max(0, iy - radius); vy <= std::min(g.ny - 1, iy + radius); ++vy) {
        for (int vx = std::max(0, ix - radius); vx <= std::min(g.nx - 1, ix + radius); ++vx) {
          sum += static_cast<double>(map.counts[g.index(vx, vy)]);
          ++n;
        }
      }
      out[g.index(ix, iy)] = sum / n;
    }
  }
  return out;
}

// Least-squares quadratic surface over the 3x3 neighborhood of (ix, iy);
// returns the critical point as a stage position, or the cell center when
// the surface has the wrong curvature there.
Point refine_quadratic(const ScanGrid& g, const std::vector<double>& sm,
                       int ix, int iy, bool want_max) {
  double sum = 0.0, sum_uu = 0.0, sum_vv = 0.0;
  double bu = 0.0, bv = 0.0, euv = 0.0;
  for (int v = -1; v <= 1; ++v) {
    for (int u = -1; u <= 1; ++u) {
      const double z = sm[g.index(ix + u, iy + v)];
      sum += z;
      sum_uu += u * u * z;
      sum_vv += v * v * z;
      bu += u * z;
      bv += v * z;
      euv += u * v * z;
    }
  }
  const double b = bu / 6.0;
  const double c = bv / 6.0;
  const double e = euv / 4.0;
  const double a0 = (5.0 * sum - 3.0 * (sum_uu + sum_vv)) / 9.0;
  const double s = (sum - 9.0 * a0) / 6.0;
  const double d2 = 0.5 * s + 0.25 * (sum_uu - sum_vv);
  const double f2 = 0.5 * s - 0.25 * (sum_uu - sum_vv);

  const double det = 4.0 * d2 * f2 - e * e;
  const bool curved_right =
      det > 0.0 && (want_max ? (2.0 * d2 < 0.0) : (2.0 * d2 > 0.0));
  double du = 0.0, dv = 0.0;
  if (curved_right) {
    du = (-2.0 * f2 * b + e * c) / det;
    dv = (-2.0 * d2 * c + e * b) / det;
    // Offsets beyond one cell mean the quadratic stopped being a useful
    // local model; keep the direction but stay inside the neighborhood.
    du = std::clamp(du, -1.0, 1.0);
    dv = std::clamp(dv, -1.0, 1.0);
  }
  return {g.x(ix) + du * g.step, g.y(iy) + dv * g.step};
}

bool on_boundary(const ScanGrid& g, int i) {
  const int ix = i % g.nx;
  const int iy = i / g.nx;
  return ix == 0 || iy == 0 || ix == g.nx - 1 || iy == g.ny - 1;
}

}  // namespace

ExtremaReport locate_extrema(const ScanMap& map, int smoothing_radius) {
  map.validate();
  if (smoothing_radius < 0) {
    throw ValidationError("locate_extrema: smoothing_radius must be >= 0");
  }
  const ScanGrid& g = map.grid;
  if (g.nx < 3 || g.ny < 3) {
    throw ValidationError("locate_extrema: map must be at least 3x3");
  }

  const std::vector<double> sm = box_average(map, smoothing_radius);
  // Smoothing suppresses shot noise when picking cells, but it also drags
  // the apparent extremum of an asymmetric fringe by up to a cell, so the
  // sub-grid refinement fits the raw counts instead.
  const std::vector<double> raw(map.counts.begin(), map.counts.end());

  std::int64_t max_count = 0;
  for (const auto c : map.counts) max_count = std::max(max_count, c);
  const double noise = std::sqrt(std::max<double>(1.0, static_cast<double>(max_count)));

  // Maximum over the full grid.
  int imax = 0;
  for (int i = 1; i < g.size(); ++i) {
    if (sm[i] > sm[imax]) imax = i;
  }
  // A second cell outside the maximum's immediate neighborhood that ties
  // within counting noise makes the located maximum meaningless.
  const int mx = imax % g.nx, my = imax / g.nx;
  for (int i = 0; i < g.size(); ++i) {
    const int ix = i % g.nx, iy = i / g.nx;
    if (std::max(std::abs(ix - mx), std::abs(iy - my)) <= 1) continue;
    if (sm[imax] - sm[i] < noise) {
      throw AmbiguousExtremumError(
          "two non-adjacent cells tie for the maximum within counting noise");
    }
  }

  ExtremaReport report;
  report.max_on_edge = on_boundary(g, imax);
  report.max_xy = report.max_on_edge
                      ? Point{g.x(mx), g.y(my)}
                      : refine_quadratic(g, raw, mx, my, /*want_max=*/true);

  // Minimum restricted to cells whose 3x3 neighborhood is interior; the
  // unrestricted minimum only feeds the edge flag.
  int imin_global = 0;
  for (int i = 1; i < g.size(); ++i) {
    if (sm[i] < sm[imin_global]) imin_global = i;
  }
  report.min_on_edge = on_boundary(g, imin_global);

  int imin = -1;
  for (int iy = 1; iy < g.ny - 1; ++iy) {
    for (int ix = 1; ix < g.nx - 1; ++ix) {
      const int i = g.index(ix, iy);
      if (imin < 0 || sm[i] < sm[imin]) imin = i;
    }
  }
  if (imin == imax) {
    throw AmbiguousExtremumError("maximum and minimum coincide");
  }
  report.min_xy = refine_quadratic(g, raw, imin % g.nx, imin / g.nx,
                                   /*want_max=*/false);

  report.max_value = sm[imax] / map.dwell;
  report.min_value = sm[imin] / map.dwell;
  const double dx = report.max_xy.x - report.min_xy.x;
  const double dy = report.max_xy.y - report.min_xy.y;
  report.separation = std::hypot(dx, dy);
  if (!(report.separation > 0.0)) {
    throw AmbiguousExtremumError("extrema refine to the same position");
  }
  report.phi_max = std::atan2(dy, dx);
  return report;
}

namespace {

// Weighted least-squares residual of the constrained forward model at a
// trial dislocation radius, with the overall scale profiled out.
class RadiusObjective {
 public:
  RadiusObjective(const ScanMap& map, const ExtremaReport& extrema,
                  const EfficiencyProfile& profile)
      : map_(map), extrema_(extrema), profile_(profile) {
    d_ = extrema.separation;
    // Unit vector from the maximum toward the minimum; trial axes sit on
    // this segment at distance r_b from the maximum.
    u_ = {(extrema.min_xy.x - extrema.max_xy.x) / d_,
          (extrema.min_xy.y - extrema.max_xy.y) / d_};
  }

  double separation() const { return d_; }

  // Trial axis after sliding the anchor by s along the max->min direction
  // and stepping r_b further toward the minimum.
  Point axis_at(double slide, double r_b) const {
    return {extrema_.max_xy.x + (slide + r_b) * u_.x,
            extrema_.max_xy.y + (slide + r_b) * u_.y};
  }
  Point axis_at(double r_b) const { return axis_at(0.0, r_b); }

  double operator()(double r_b) const { return evaluate(0.0, r_b, d_); }

  // Weighted least-squares residual of the model with the overall scale
  // profiled out. The extrema separation d is a free parameter here: the
  // measured value seeds it, but sub-grid extremum error would otherwise
  // leak straight into r_b and omega.
  double evaluate(double slide, double r_b, double d) const {
    const double omega2 = 2.0 * r_b * (d - r_b);
    if (!(omega2 > 0.0)) return std::numeric_limits<double>::infinity();
    const double rb2 = r_b * r_b;
    const Point axis = axis_at(slide, r_b);
    const ScanGrid& g = map_.grid;

    double swmm = 0.0, swym = 0.0, swyy = 0.0;
    for (int i = 0; i < g.size(); ++i) {
      const Point p = g.point(i);
      const double ax = p.x - axis.x;
      const double ay = p.y - axis.y;
      const double ra = std::hypot(ax, ay);
      const double theta_a = std::atan2(ay, ax);
      // theta_B + delta equals the axis->max direction phi_max, so the
      // fringe term reduces to cos(phi_max - theta_A).
      const double num =
          4.0 * ra * ra * rb2 +
          4.0 * ra * r_b * omega2 * std::cos(extrema_.phi_max - theta_a) +
          omega2 * omega2;
      const double den = (2.0 * ra * ra + omega2) * (2.0 * rb2 + omega2);
      const double m = efficiency(profile_, ra) * std::max(0.0, num / den);
      const double y = static_cast<double>(map_.counts[i]) / map_.dwell;
      const double w =
          1.0 / static_cast<double>(std::max<std::int64_t>(map_.counts[i], 1));
      swmm += w * m * m;
      swym += w * y * m;
      swyy += w * y * y;
    }
    if (!(swmm > 0.0)) return std::numeric_limits<double>::infinity();
    const double kappa = swym / swmm;
    return swyy - 2.0 * kappa * swym + kappa * kappa * swmm;
  }

 private:
  const ScanMap& map_;
  const ExtremaReport& extrema_;
  const EfficiencyProfile& profile_;
  Point u_;
  double d_ = 0.0;
};

double golden_minimize(const RadiusObjective& f, double lo, double hi) {
  constexpr double kRatio = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kRatio * (b - a);
  double x2 = a + kRatio * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int iter = 0; iter < 200 && (b - a) > 1e-10 * hi; ++iter) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kRatio * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kRatio * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

// Deterministic Nelder-Mead over (slide, r_b, d). Plain textbook moves;
// the objective is cheap and the seed from the radius scan is close, so a
// few hundred iterations are plenty.
template <typename F>
std::array<double, 3> nelder_mead_3(F f, const std::array<double, 3>& seed,
                                    const std::array<double, 3>& steps) {
  using Vec = std::array<double, 3>;
  struct Vertex {
    Vec x;
    double fx;
  };
  std::array<Vertex, 4> simplex;
  simplex[0] = {seed, f(seed)};
  for (int i = 0; i < 3; ++i) {
    Vec x = seed;
    x[i] += steps[i];
    simplex[i + 1] = {x, f(x)};
  }
  const auto by_value = [](const Vertex& a, const Vertex& b) {
    return a.fx < b.fx;
  };
  for (int iter = 0; iter < 400; ++iter) {
    std::sort(simplex.begin(), simplex.end(), by_value);
    if (simplex[3].fx - simplex[0].fx <=
        1e-14 * (1.0 + std::abs(simplex[0].fx))) {
      break;
    }
    Vec centroid{0.0, 0.0, 0.0};
    for (int v = 0; v < 3; ++v) {
      for (int i = 0; i < 3; ++i) centroid[i] += simplex[v].x[i] / 3.0;
    }
    const auto blend = [&](double t) {
      Vec x;
      for (int i = 0; i < 3; ++i) {
        x[i] = centroid[i] + t * (simplex[3].x[i] - centroid[i]);
      }
      return x;
    };
    const Vec reflected = blend(-1.0);
    const double fr = f(reflected);
    if (fr < simplex[0].fx) {
      const Vec expanded = blend(-2.0);
      const double fe = f(expanded);
      simplex[3] = fe < fr ? Vertex{expanded, fe} : Vertex{reflected, fr};
    } else if (fr < simplex[2].fx) {
      simplex[3] = {reflected, fr};
    } else {
      const Vec contracted = blend(fr < simplex[3].fx ? -0.5 : 0.5);
      const double fc = f(contracted);
      if (fc < std::min(fr, simplex[3].fx)) {
        simplex[3] = {contracted, fc};
      } else {
        for (int v = 1; v < 4; ++v) {  // shrink toward the best vertex
          for (int i = 0; i < 3; ++i) {
            simplex[v].x[i] =
                simplex[0].x[i] + 0.5 * (simplex[v].x[i] - simplex[0].x[i]);
          }
          simplex[v].fx = f(simplex[v].x);
        }
      }
    }
  }
  std::sort(simplex.begin(), simplex.end(), by_value);
  return simplex[0].x;
}

}  // namespace

GeometryFit fit_geometry(const ScanMap& map, const ExtremaReport& extrema,
                         const EfficiencyProfile& profile) {
  map.validate();
  if (!(extrema.separation > 0.0)) {
    throw ValidationError("fit_geometry: extrema separation must be > 0");
  }
  const RadiusObjective objective(map, extrema, profile);
  const double d = extrema.separation;
  const double lo = kRadiusScanLow * d;
  const double hi = kRadiusScanHigh * d;

  // Log-spaced radius scan.
  std::vector<double> radii(kRadiusScanPoints);
  std::vector<double> values(kRadiusScanPoints);
  const double ratio = std::log(hi / lo);
  int best = -1;
  for (int k = 0; k < kRadiusScanPoints; ++k) {
    radii[k] = lo * std::exp(ratio * k / (kRadiusScanPoints - 1.0));
    values[k] = objective(radii[k]);
    if (best < 0 || values[k] < values[best]) best = k;
  }
  if (!std::isfinite(values[best]) || best == 0 ||
      best == kRadiusScanPoints - 1) {
    throw FitFailureError(
        "residual landscape has no interior minimum over the radius scan");
  }

  const double scan_r = golden_minimize(objective, radii[best - 1], radii[best + 1]);

  // Polish (slide, r_b, d) jointly. The anchor may slide a little along the
  // max->min line and d may move off the measured separation, which absorbs
  // the sub-grid error of the located extrema; the penalty keeps both dual
  // axes strictly between the measured extrema.
  const double step = map.grid.step;
  const auto penalized = [&](const std::array<double, 3>& x) {
    const auto [slide, r_b, dd] = x;
    if (!(r_b > 0.005 * d) || !(r_b < dd - 0.005 * d)) {
      return std::numeric_limits<double>::infinity();
    }
    if (!(dd > 0.4 * d) || !(dd < 1.8 * d) || std::abs(slide) > 1.5 * step) {
      return std::numeric_limits<double>::infinity();
    }
    const double a1 = slide + r_b;          // axis offset of the candidate
    const double a2 = slide + (dd - r_b);   // ... and of its dual
    if (!(a1 > 0.01 * d) || !(a1 < 0.99 * d) || !(a2 > 0.01 * d) ||
        !(a2 < 0.99 * d)) {
      return std::numeric_limits<double>::infinity();
    }
    return objective.evaluate(slide, r_b, dd);
  };
  const auto [slide, r1, d_fit] = nelder_mead_3(
      penalized, {0.0, scan_r, d}, {0.4 * step, 0.04 * scan_r, 0.04 * d});

  const double r2 = d_fit - r1;  // exact dual: same omega, mirrored axis
  const double omega = std::sqrt(2.0 * r1 * (d_fit - r1));

  GeometryCandidate c1{r1, omega, objective.axis_at(slide, r1),
                       objective.evaluate(slide, r1, d_fit)};
  GeometryCandidate c2{r2, omega, objective.axis_at(slide, r2),
                       objective.evaluate(slide, r2, d_fit)};

  GeometryFit fit;
  fit.extrema = extrema;
  fit.candidates = r1 <= r2 ? std::array<GeometryCandidate, 2>{c1, c2}
                            : std::array<GeometryCandidate, 2>{c2, c1};
  fit.theta_sum = extrema.phi_max;
  return fit;
}

namespace {

// Variance-over-mean-squared of the smoothed counts across 8 angular bins
// at the radius (in grid-step rings) where the mean count is largest.
double angular_asymmetry(const ScanMap& map, const Point& center) {
  const ScanGrid& g = map.grid;
  const std::vector<double> sm = box_average(map, 1);

  const int max_ring = 1 + static_cast<int>(
      std::hypot(std::max(std::abs(g.x(0) - center.x), std::abs(g.x(g.nx - 1) - center.x)),
                 std::max(std::abs(g.y(0) - center.y), std::abs(g.y(g.ny - 1) - center.y))) /
      g.step);
  std::vector<double> ring_sum(max_ring + 1, 0.0);
  std::vector<int> ring_n(max_ring + 1, 0);
  for (int i = 0; i < g.size(); ++i) {
    const Point p = g.point(i);
    const int k = static_cast<int>(std::hypot(p.x - center.x, p.y - center.y) / g.step);
    if (k > max_ring) continue;
    ring_sum[k] += sm[i];
    ring_n[k] += 1;
  }
  int k_best = -1;
  double best_mean = -1.0;
  for (int k = 0; k <= max_ring; ++k) {
    if (ring_n[k] == 0) continue;
    const double mean = ring_sum[k] / ring_n[k];
    if (mean > best_mean) {
      best_mean = mean;
      k_best = k;
    }
  }
  if (k_best < 0) return 0.0;

  double bin_sum[kAngularBins] = {};
  int bin_n[kAngularBins] = {};
  for (int i = 0; i < g.size(); ++i) {
    const Point p = g.point(i);
    const double dx = p.x - center.x;
    const double dy = p.y - center.y;
    if (static_cast<int>(std::hypot(dx, dy) / g.step) != k_best) continue;
    int bin = static_cast<int>((std::atan2(dy, dx) + kPi) / (2.0 * kPi) *
                               kAngularBins);
    bin = std::clamp(bin, 0, kAngularBins - 1);
    bin_sum[bin] += sm[i];
    bin_n[bin] += 1;
  }
  std::vector<double> means;
  for (int b = 0; b < kAngularBins; ++b) {
    if (bin_n[b] > 0) means.push_back(bin_sum[b] / bin_n[b]);
  }
  if (means.size() < 2) return 0.0;
  double mean = 0.0;
  for (const double v : means) mean += v;
  mean /= means.size();
  if (!(mean > 0.0)) return 0.0;
  double var = 0.0;
  for (const double v : means) var += (v - mean) * (v - mean);
  var /= means.size();
  return var / (mean * mean);
}

}  // namespace

GeometryFit disambiguate(const GeometryFit& fit, const ScanMap& aux_map,
                         const Point& aux_shift) {
  aux_map.validate();
  const double shift_len = std::hypot(aux_shift.x, aux_shift.y);
  if (!(shift_len > 0.0)) {
    throw InconclusiveDisambiguationError(
        "aux displacement is zero; the displaced map adds no information");
  }

  // The displacement is taken to run along the dislocation direction toward
  // the axis, so each candidate predicts a post-shift radius |r_b - |shift||.
  double predicted[2];
  bool symmetric[2];
  for (int i = 0; i < 2; ++i) {
    predicted[i] = std::fabs(fit.candidates[i].r_b - shift_len);
    symmetric[i] =
        predicted[i] <= kSymmetricRadiusFraction * fit.candidates[i].omega;
  }
  if (symmetric[0] == symmetric[1]) {
    throw InconclusiveDisambiguationError(
        "both candidates predict the same symmetry class for the displaced "
        "map");
  }
  const int sym_idx = symmetric[0] ? 0 : 1;
  const double asymmetry =
      angular_asymmetry(aux_map, fit.candidates[sym_idx].axis_xy);
  const int chosen = asymmetry < kAsymmetryThreshold ? sym_idx : 1 - sym_idx;

  GeometryFit out = fit;
  out.chosen = chosen;
  const double theta_b = std::atan2(-aux_shift.y, -aux_shift.x);
  out.theta_b = theta_b;
  out.delta = normalize_angle(fit.theta_sum - theta_b);
  return out;
}

GeometryFit estimate_axis(const ScanMap& map, const EfficiencyProfile& profile,
                          int smoothing_radius) {
  return fit_geometry(map, locate_extrema(map, smoothing_radius), profile);
}

GeometryFit estimate_axis(const ScanMap& map, const EfficiencyProfile& profile,
                          const ScanMap& aux_map, const Point& aux_shift,
                          int smoothing_radius) {
  return disambiguate(estimate_axis(map, profile, smoothing_radius), aux_map,
                      aux_shift);
}

}  // namespace lgscan
