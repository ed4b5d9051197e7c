#include "lgscan/lg_core.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace lgscan {

LgIndex::LgIndex(int m_value) : m(m_value) {
  if (std::abs(m_value) > 2) {
    throw ValidationError("LgIndex.m must satisfy |m| <= 2, got " +
                          std::to_string(m_value));
  }
}

LgKet LgKet::basis(LgIndex m) {
  LgKet ket;
  ket.set(m, Complex(1.0, 0.0));
  return ket;
}

LgKet LgKet::from_amplitudes(const std::map<LgIndex, Complex>& amps) {
  LgKet ket;
  for (const auto& [m, c] : amps) ket.set(m, c);
  if (ket.norm_sq() > 1.0 + 1e-12) {
    throw ValidationError("LgKet squared norm must be <= 1, got " +
                          std::to_string(ket.norm_sq()));
  }
  return ket;
}

void LgKet::set(LgIndex m, Complex amplitude) {
  LgIndex checked(m.m);  // revalidates range for default-constructed indices
  if (amplitude == Complex(0.0, 0.0)) {
    amps_.erase(checked);
  } else {
    amps_[checked] = amplitude;
  }
}

Complex LgKet::amplitude(LgIndex m) const {
  const auto it = amps_.find(m);
  return it == amps_.end() ? Complex(0.0, 0.0) : it->second;
}

double LgKet::norm_sq() const {
  double total = 0.0;
  for (const auto& [m, c] : amps_) total += std::norm(c);
  return total;
}

HologramPose::HologramPose(double r_um, double theta_rad)
    : r(r_um), theta(normalize_angle(theta_rad)) {
  if (!(r_um >= 0.0) || !std::isfinite(r_um)) {
    throw ValidationError("HologramPose.r must be finite and >= 0");
  }
  if (!std::isfinite(theta_rad)) {
    throw ValidationError("HologramPose.theta must be finite");
  }
}

BeamGeometry::BeamGeometry(double omega_um) : omega(omega_um) {
  if (!(omega_um > 0.0) || !std::isfinite(omega_um)) {
    throw ValidationError("BeamGeometry.omega must be finite and > 0");
  }
}

SourceState::SourceState(double alpha_sq_value, double delta_rad)
    : alpha_sq(alpha_sq_value), delta(normalize_angle(delta_rad)) {
  if (!(alpha_sq_value > 0.0) || !(alpha_sq_value <= 0.5) ||
      !std::isfinite(alpha_sq_value)) {
    throw ValidationError("SourceState.alpha_sq must lie in (0, 0.5]");
  }
  if (!std::isfinite(delta_rad)) {
    throw ValidationError("SourceState.delta must be finite");
  }
}

namespace {

// Shared mode weights: c_r on |0>, c_w on the charged mode.
void split_weights(const HologramPose& pose, const BeamGeometry& beam,
                   double& c_r, double& c_w) {
  const double two_r2 = 2.0 * pose.r * pose.r;
  const double w2 = beam.omega * beam.omega;
  c_r = std::sqrt(two_r2 / (two_r2 + w2));
  c_w = std::sqrt(w2 / (two_r2 + w2));
}

}  // namespace

LgKet basis_minus(const HologramPose& pose, const BeamGeometry& beam) {
  double c_r = 0.0, c_w = 0.0;
  split_weights(pose, beam, c_r, c_w);
  LgKet ket;
  ket.set(LgIndex(0), std::polar(c_r, -pose.theta));
  ket.set(LgIndex(1), Complex(c_w, 0.0));
  return ket;
}

LgKet basis_plus(const HologramPose& pose, const BeamGeometry& beam) {
  double c_r = 0.0, c_w = 0.0;
  split_weights(pose, beam, c_r, c_w);
  LgKet ket;
  ket.set(LgIndex(0), std::polar(c_r, pose.theta));
  ket.set(LgIndex(-1), Complex(c_w, 0.0));
  return ket;
}

LgKet hologram_output_state(const HologramPose& pose,
                            const BeamGeometry& beam) {
  double c_r = 0.0, c_w = 0.0;
  split_weights(pose, beam, c_r, c_w);
  LgKet ket;
  ket.set(LgIndex(0), std::polar(c_r, pose.theta + kPi));
  ket.set(LgIndex(1), Complex(c_w, 0.0));
  return ket;
}

LgKet time_reverse(const LgKet& ket) {
  LgKet out;
  for (const auto& [m, c] : ket.amplitudes()) {
    const double sign = (m.m % 2 == 0) ? 1.0 : -1.0;
    out.set(m, sign * std::conj(c));
  }
  return out;
}

Complex inner_product(const LgKet& a, const LgKet& b) {
  Complex total(0.0, 0.0);
  for (const auto& [m, c] : a.amplitudes()) {
    total += std::conj(c) * b.amplitude(m);
  }
  return total;
}

std::optional<Complex> phase_between(const LgKet& a, const LgKet& b,
                                     double tol) {
  // Pick the reference phase from b's largest coefficient, then require
  // a == z * b on every mode of either support.
  double best = 0.0;
  Complex za(0.0, 0.0), zb(0.0, 0.0);
  for (const auto& [m, c] : b.amplitudes()) {
    if (std::abs(c) > best) {
      best = std::abs(c);
      zb = c;
      za = a.amplitude(m);
    }
  }
  if (best == 0.0) {
    // b == 0: proportional only if a == 0 too; phase is then meaningless.
    return a.norm_sq() <= tol * tol ? std::optional<Complex>(Complex(1.0, 0.0))
                                    : std::nullopt;
  }
  const Complex z = za / zb;
  if (std::fabs(std::abs(z) - 1.0) > tol) return std::nullopt;
  for (const auto& [m, c] : b.amplitudes()) {
    if (std::abs(a.amplitude(m) - z * c) > tol) return std::nullopt;
  }
  for (const auto& [m, c] : a.amplitudes()) {
    if (std::abs(c - z * b.amplitude(m)) > tol) return std::nullopt;
  }
  return z;
}

}  // namespace lgscan
