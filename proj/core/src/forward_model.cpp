#include "lgscan/forward_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "lgscan/rng.hpp"

namespace lgscan {

EfficiencyProfile::EfficiencyProfile(double eta0_value, double r_cut_um,
                                     double p_value)
    : eta0(eta0_value), r_cut(r_cut_um), shape_p(p_value) {
  if (!(eta0_value > 0.0) || !(eta0_value <= 1.0) || !std::isfinite(eta0_value)) {
    throw ValidationError("EfficiencyProfile.eta0 must lie in (0, 1]");
  }
  if (!(r_cut_um > 0.0) || !std::isfinite(r_cut_um)) {
    throw ValidationError("EfficiencyProfile.r_cut must be finite and > 0");
  }
  if (!(p_value >= 1.0) || !std::isfinite(p_value)) {
    throw ValidationError("EfficiencyProfile.shape_p must be finite and >= 1");
  }
}

EfficiencyProfile EfficiencyProfile::from_table(
    std::vector<std::pair<double, double>> samples) {
  if (samples.size() < 2) {
    throw ValidationError("EfficiencyProfile.table needs at least 2 samples");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& [r, eta] = samples[i];
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw ValidationError("EfficiencyProfile.table radii must be >= 0");
    }
    if (!(eta >= 0.0) || !(eta <= 1.0)) {
      throw ValidationError("EfficiencyProfile.table values must lie in [0, 1]");
    }
    if (i > 0) {
      if (samples[i - 1].first >= r) {
        throw ValidationError(
            "EfficiencyProfile.table radii must be strictly increasing");
      }
      if (samples[i - 1].second < eta) {
        throw ValidationError(
            "EfficiencyProfile.table must be non-increasing in r");
      }
    }
  }
  EfficiencyProfile profile;
  profile.table = std::move(samples);
  return profile;
}

double efficiency(const EfficiencyProfile& profile, double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw ValidationError("efficiency: r must be finite and >= 0");
  }
  if (!profile.table.empty()) {
    const auto& t = profile.table;
    if (r <= t.front().first) return t.front().second;
    if (r >= t.back().first) return t.back().second;
    // Linear interpolation between the bracketing samples.
    auto hi = std::upper_bound(
        t.begin(), t.end(), r,
        [](double value, const auto& s) { return value < s.first; });
    auto lo = hi - 1;
    const double f = (r - lo->first) / (hi->first - lo->first);
    return lo->second + f * (hi->second - lo->second);
  }
  const double x = r / profile.r_cut;
  return profile.eta0 * std::max(0.0, 1.0 - std::pow(x, profile.shape_p));
}

ScanGrid::ScanGrid(double x0_um, double y0_um, double step_um, int nx_points,
                   int ny_points)
    : x0(x0_um), y0(y0_um), step(step_um), nx(nx_points), ny(ny_points) {
  if (!std::isfinite(x0_um) || !std::isfinite(y0_um)) {
    throw ValidationError("ScanGrid.x0/y0 must be finite");
  }
  if (!(step_um > 0.0) || !std::isfinite(step_um)) {
    throw ValidationError("ScanGrid.step must be finite and > 0");
  }
  if (nx_points < 2) throw ValidationError("ScanGrid.nx must be >= 2");
  if (ny_points < 2) throw ValidationError("ScanGrid.ny must be >= 2");
}

void ScanMap::validate() const {
  if (!(dwell > 0.0) || !std::isfinite(dwell)) {
    throw ValidationError("ScanMap.dwell must be finite and > 0");
  }
  if (static_cast<int>(counts.size()) != grid.size()) {
    throw ValidationError("ScanMap.counts size must equal grid.nx * grid.ny");
  }
  for (const auto c : counts) {
    if (c < 0) throw ValidationError("ScanMap.counts must be non-negative");
  }
}

void ExperimentConfig::validate() const {
  if (!(peak_rate > 0.0) || !std::isfinite(peak_rate)) {
    throw ValidationError("ExperimentConfig.peak_rate must be finite and > 0");
  }
  if (!(background_rate >= 0.0) || !std::isfinite(background_rate)) {
    throw ValidationError(
        "ExperimentConfig.background_rate must be finite and >= 0");
  }
  if (!std::isfinite(axis_xy.x) || !std::isfinite(axis_xy.y)) {
    throw ValidationError("ExperimentConfig.axis_xy must be finite");
  }
}

double coincidence_probability(const HologramPose& pose_a,
                               const HologramPose& pose_b,
                               const SourceState& source,
                               const BeamGeometry& beam) {
  const double w2 = beam.omega * beam.omega;
  const double ra = pose_a.r;
  const double rb = pose_b.r;
  const double num = 4.0 * ra * ra * rb * rb +
                     4.0 * ra * rb * w2 *
                         std::cos(pose_b.theta - pose_a.theta + source.delta) +
                     w2 * w2;
  const double den = (2.0 * ra * ra + w2) * (2.0 * rb * rb + w2);
  // The numerator is (2 r_A r_B - w^2)^2 at the fringe minimum; clamp the
  // cancellation residue so the result stays a probability.
  return source.alpha_sq * std::max(0.0, num / den);
}

double coincidence_probability_oracle(const HologramPose& pose_a,
                                      const HologramPose& pose_b,
                                      const SourceState& source,
                                      const BeamGeometry& beam) {
  const LgKet bra_a = basis_minus(pose_a, beam);
  const LgKet bra_b = basis_plus(pose_b, beam);
  const double alpha = std::sqrt(source.alpha_sq);
  // Truncated pair state: amplitude alpha on |0>_A |0>_B and
  // alpha e^{i delta} on |1>_A |-1>_B.
  const Complex a_00(alpha, 0.0);
  const Complex a_1m1 = std::polar(alpha, source.delta);
  const Complex amp =
      a_00 * inner_product(bra_a, LgKet::basis(LgIndex(0))) *
          inner_product(bra_b, LgKet::basis(LgIndex(0))) +
      a_1m1 * inner_product(bra_a, LgKet::basis(LgIndex(1))) *
          inner_product(bra_b, LgKet::basis(LgIndex(-1)));
  return std::norm(amp);
}

std::pair<HologramPose, HologramPose> extremum_poses(
    const HologramPose& pose_b, const SourceState& source,
    const BeamGeometry& beam) {
  if (pose_b.r <= 0.0) {
    throw DegenerateInputError(
        "extremum_poses: pose_B.r must be > 0; the fringe has no azimuthal "
        "structure at r_B = 0");
  }
  const double w2 = beam.omega * beam.omega;
  const HologramPose max_pose(pose_b.r,
                              normalize_angle(source.delta + pose_b.theta));
  const HologramPose min_pose(
      w2 / (2.0 * pose_b.r),
      normalize_angle(kPi + source.delta + pose_b.theta));
  return {max_pose, min_pose};
}

double min_max_distance(double r_b, const BeamGeometry& beam) {
  if (!(r_b > 0.0) || !std::isfinite(r_b)) {
    throw DegenerateInputError("min_max_distance: r_b must be finite and > 0");
  }
  return r_b + beam.omega * beam.omega / (2.0 * r_b);
}

double expected_rate(const ExperimentConfig& config, const Point& stage_xy) {
  config.validate();
  const double dx = stage_xy.x - config.axis_xy.x;
  const double dy = stage_xy.y - config.axis_xy.y;
  const double r_a = std::hypot(dx, dy);
  const HologramPose pose_a(r_a, std::atan2(dy, dx));
  const double p = coincidence_probability(pose_a, config.pose_b,
                                           config.source, config.beam);
  // peak_rate is the rate at the fringe maximum (where p == alpha_sq) with
  // unit efficiency.
  return config.peak_rate * efficiency(config.profile, r_a) * p /
             config.source.alpha_sq +
         config.background_rate;
}

ScanMap simulate_scan(const ExperimentConfig& config, const ScanGrid& grid,
                      double dwell_s, unsigned threads) {
  config.validate();
  if (!(dwell_s > 0.0) || !std::isfinite(dwell_s)) {
    throw ValidationError("simulate_scan: dwell must be finite and > 0");
  }
  ScanMap map;
  map.grid = grid;
  map.dwell = dwell_s;
  map.counts.assign(grid.size(), 0);
  map.metadata["seed"] = std::to_string(config.seed);

  const int n = grid.size();
  auto worker = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      const double mean = expected_rate(config, grid.point(i)) * dwell_s;
      CounterRng rng(config.seed, static_cast<std::uint64_t>(i));
      map.counts[i] = poisson_sample(rng, mean);
    }
  };

  if (threads <= 1) {
    worker(0, n);
  } else {
    const int used = static_cast<int>(std::min<unsigned>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(used);
    const int chunk = (n + used - 1) / used;
    for (int t = 0; t < used; ++t) {
      const int begin = t * chunk;
      const int end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  return map;
}

RateMap analytic_map(const ExperimentConfig& config, const ScanGrid& grid) {
  config.validate();
  RateMap map;
  map.grid = grid;
  map.rates.resize(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    map.rates[i] = expected_rate(config, grid.point(i));
  }
  return map;
}

}  // namespace lgscan
