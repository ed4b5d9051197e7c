#pragma once

#include <cstdint>
#include <optional>

#include "lgscan/forward_model.hpp"

namespace lgscan {

// Analyzer angles for a Bell test: hologram azimuths theta for each arm and
// their primed alternatives. Radii are fixed and equal on both arms.
struct ChshSettings {
  double theta_a = 0.0;
  double theta_a_prime = 0.0;
  double theta_b = 0.0;
  double theta_b_prime = 0.0;

  ChshSettings() = default;
  ChshSettings(double a, double a_prime, double b, double b_prime);
};

// The angle set used throughout: -pi/4, pi/4, -pi/2, 0.
ChshSettings canonical_chsh_settings();

// Coincidence counts for one setting pair (theta_A, theta_B) and the three
// perpendicular companions, accumulated over `accumulation_s` seconds.
// singles_a / singles_b are reserved for data files that carry them.
struct CountQuad {
  std::int64_t c = 0;            // C(theta_A, theta_B)
  std::int64_t c_ab_perp = 0;    // C(theta_A, theta_B + pi)
  std::int64_t c_a_perp_b = 0;   // C(theta_A + pi, theta_B)
  std::int64_t c_perp_perp = 0;  // C(theta_A + pi, theta_B + pi)
  double accumulation_s = 1.0;
  std::optional<std::int64_t> singles_a;
  std::optional<std::int64_t> singles_b;
};

// Correlation values for the four setting pairs.
struct CorrelationSet {
  double e_ab = 0.0;
  double e_a_prime_b = 0.0;
  double e_ab_prime = 0.0;
  double e_a_prime_b_prime = 0.0;

  CorrelationSet() = default;
  CorrelationSet(double ab, double a_prime_b, double ab_prime,
                 double a_prime_b_prime);
};

// Measured counts for all four setting pairs of a Bell run.
struct ChshCounts {
  ChshSettings settings;
  CountQuad ab;
  CountQuad a_prime_b;
  CountQuad ab_prime;
  CountQuad a_prime_b_prime;
};

// theta + pi, wrapped into (-pi, pi].
double perp(double theta);

// E = (c + c_perp_perp - c_a_perp_b - c_ab_perp) / total.
// Throws ZeroTotalError when the quad sums to zero.
double correlation_from_counts(const CountQuad& quad);

CorrelationSet correlations(const ChshCounts& counts);

// S = E(a,b) - E(a',b) + E(a,b') + E(a',b').
double s_value(const CorrelationSet& correlations);

// Coincidence probability with both radii pinned to r:
//   |alpha|^2 (4 r^4 + w^4 + 4 r^2 w^2 cos(theta_B - theta_A + delta))
//   / (2 r^2 + w^2)^2.
double angle_coincidence_probability(double theta_a, double theta_b, double r,
                                     const BeamGeometry& beam,
                                     const SourceState& source);

// Analytic S for the given settings at radius r: each correlation is
// v * cos(theta_B - theta_A + delta) with visibility
// v = 4 r^2 w^2 / (4 r^4 + w^4).
double predict_s(const ChshSettings& settings, double r,
                 const BeamGeometry& beam, const SourceState& source);

// Radius maximizing the visibility (v = 1): omega / sqrt(2).
double optimal_radius(const BeamGeometry& beam);

// Poisson-noisy counts for all four setting pairs. Channel means follow
// angle_coincidence_probability scaled so the fringe maximum accumulates
// peak_rate counts/s; each of the 16 channels draws from its own
// (seed, stream) sequence.
ChshCounts simulate_chsh_counts(const ChshSettings& settings, double r,
                                const BeamGeometry& beam,
                                const SourceState& source, double peak_rate,
                                double accumulation_s, std::uint64_t seed);

}  // namespace lgscan
