#include "lgscan/chsh.hpp"

#include <cmath>
#include <string>

#include "lgscan/rng.hpp"

namespace lgscan {

ChshSettings::ChshSettings(double a, double a_prime, double b, double b_prime)
    : theta_a(normalize_angle(a)),
      theta_a_prime(normalize_angle(a_prime)),
      theta_b(normalize_angle(b)),
      theta_b_prime(normalize_angle(b_prime)) {
  if (!std::isfinite(a) || !std::isfinite(a_prime) || !std::isfinite(b) ||
      !std::isfinite(b_prime)) {
    throw ValidationError("ChshSettings angles must be finite");
  }
}

ChshSettings canonical_chsh_settings() {
  return ChshSettings(-kPi / 4.0, kPi / 4.0, -kPi / 2.0, 0.0);
}

CorrelationSet::CorrelationSet(double ab, double a_prime_b, double ab_prime,
                               double a_prime_b_prime)
    : e_ab(ab),
      e_a_prime_b(a_prime_b),
      e_ab_prime(ab_prime),
      e_a_prime_b_prime(a_prime_b_prime) {
  constexpr double kSlack = 1.0 + 1e-12;
  for (const double e : {ab, a_prime_b, ab_prime, a_prime_b_prime}) {
    if (!(std::fabs(e) <= kSlack)) {
      throw ValidationError("CorrelationSet entries must lie in [-1, 1]");
    }
  }
}

double perp(double theta) { return normalize_angle(theta + kPi); }

double correlation_from_counts(const CountQuad& quad) {
  for (const auto c : {quad.c, quad.c_ab_perp, quad.c_a_perp_b, quad.c_perp_perp}) {
    if (c < 0) throw ValidationError("CountQuad counts must be non-negative");
  }
  const std::int64_t total =
      quad.c + quad.c_ab_perp + quad.c_a_perp_b + quad.c_perp_perp;
  if (total == 0) {
    throw ZeroTotalError("count quad sums to zero; correlation is undefined");
  }
  return static_cast<double>(quad.c + quad.c_perp_perp - quad.c_a_perp_b -
                             quad.c_ab_perp) /
         static_cast<double>(total);
}

CorrelationSet correlations(const ChshCounts& counts) {
  return CorrelationSet(correlation_from_counts(counts.ab),
                        correlation_from_counts(counts.a_prime_b),
                        correlation_from_counts(counts.ab_prime),
                        correlation_from_counts(counts.a_prime_b_prime));
}

double s_value(const CorrelationSet& c) {
  return c.e_ab - c.e_a_prime_b + c.e_ab_prime + c.e_a_prime_b_prime;
}

double angle_coincidence_probability(double theta_a, double theta_b, double r,
                                     const BeamGeometry& beam,
                                     const SourceState& source) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw ValidationError("angle_coincidence_probability: r must be >= 0");
  }
  const double r2 = r * r;
  const double w2 = beam.omega * beam.omega;
  const double num = 4.0 * r2 * r2 + w2 * w2 +
                     4.0 * r2 * w2 * std::cos(theta_b - theta_a + source.delta);
  const double den = (2.0 * r2 + w2) * (2.0 * r2 + w2);
  return source.alpha_sq * std::max(0.0, num / den);
}

namespace {

double visibility(double r, const BeamGeometry& beam) {
  const double r2 = r * r;
  const double w2 = beam.omega * beam.omega;
  return 4.0 * r2 * w2 / (4.0 * r2 * r2 + w2 * w2);
}

}  // namespace

double predict_s(const ChshSettings& settings, double r,
                 const BeamGeometry& beam, const SourceState& source) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw ValidationError("predict_s: r must be finite and > 0");
  }
  const double v = visibility(r, beam);
  const auto e = [&](double ta, double tb) {
    return v * std::cos(tb - ta + source.delta);
  };
  return e(settings.theta_a, settings.theta_b) -
         e(settings.theta_a_prime, settings.theta_b) +
         e(settings.theta_a, settings.theta_b_prime) +
         e(settings.theta_a_prime, settings.theta_b_prime);
}

double optimal_radius(const BeamGeometry& beam) {
  return beam.omega / std::sqrt(2.0);
}

ChshCounts simulate_chsh_counts(const ChshSettings& settings, double r,
                                const BeamGeometry& beam,
                                const SourceState& source, double peak_rate,
                                double accumulation_s, std::uint64_t seed) {
  if (!(peak_rate > 0.0) || !std::isfinite(peak_rate)) {
    throw ValidationError("simulate_chsh_counts: peak_rate must be > 0");
  }
  if (!(accumulation_s > 0.0) || !std::isfinite(accumulation_s)) {
    throw ValidationError("simulate_chsh_counts: accumulation must be > 0");
  }
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw ValidationError("simulate_chsh_counts: r must be finite and > 0");
  }

  const double pair_angles[4][2] = {
      {settings.theta_a, settings.theta_b},
      {settings.theta_a_prime, settings.theta_b},
      {settings.theta_a, settings.theta_b_prime},
      {settings.theta_a_prime, settings.theta_b_prime},
  };

  CountQuad quads[4];
  for (int q = 0; q < 4; ++q) {
    const double ta = pair_angles[q][0];
    const double tb = pair_angles[q][1];
    const double channel_angles[4][2] = {
        {ta, tb}, {ta, perp(tb)}, {perp(ta), tb}, {perp(ta), perp(tb)}};
    std::int64_t drawn[4];
    for (int ch = 0; ch < 4; ++ch) {
      const double p = angle_coincidence_probability(
          channel_angles[ch][0], channel_angles[ch][1], r, beam, source);
      const double mean = peak_rate * accumulation_s * p / source.alpha_sq;
      CounterRng rng(seed, static_cast<std::uint64_t>(q * 4 + ch));
      drawn[ch] = poisson_sample(rng, mean);
    }
    quads[q].c = drawn[0];
    quads[q].c_ab_perp = drawn[1];
    quads[q].c_a_perp_b = drawn[2];
    quads[q].c_perp_perp = drawn[3];
    quads[q].accumulation_s = accumulation_s;
  }

  ChshCounts out;
  out.settings = settings;
  out.ab = quads[0];
  out.a_prime_b = quads[1];
  out.ab_prime = quads[2];
  out.a_prime_b_prime = quads[3];
  return out;
}

}  // namespace lgscan
