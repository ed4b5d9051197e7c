#pragma once

#include <compare>
#include <complex>
#include <map>
#include <optional>

#include "lgscan/angles.hpp"
#include "lgscan/errors.hpp"

namespace lgscan {

using Complex = std::complex<double>;

// Azimuthal index of a Laguerre-Gauss mode. The toolkit works in the
// truncated space |m| <= 2.
struct LgIndex {
  int m = 0;

  LgIndex() = default;
  explicit LgIndex(int m_value);

  auto operator<=>(const LgIndex&) const = default;
};

// Sparse superposition over LG modes. Zero amplitudes are not stored, so
// the support is exactly the set of modes with nonzero coefficient.
class LgKet {
 public:
  LgKet() = default;

  // Unit ket |m>.
  static LgKet basis(LgIndex m);
  // Builds a ket from a coefficient map; rejects squared norm > 1 + 1e-12.
  static LgKet from_amplitudes(const std::map<LgIndex, Complex>& amps);

  void set(LgIndex m, Complex amplitude);
  Complex amplitude(LgIndex m) const;
  const std::map<LgIndex, Complex>& amplitudes() const { return amps_; }

  double norm_sq() const;
  std::size_t support_size() const { return amps_.size(); }

 private:
  std::map<LgIndex, Complex> amps_;
};

// Dislocation position of a fork hologram relative to the beam axis,
// in polar form. r in micrometers, theta wrapped into (-pi, pi].
struct HologramPose {
  double r = 0.0;
  double theta = 0.0;

  HologramPose() = default;
  HologramPose(double r_um, double theta_rad);
};

// Beam waist at the hologram plane, micrometers.
struct BeamGeometry {
  double omega = 0.0;

  BeamGeometry() = default;
  explicit BeamGeometry(double omega_um);
};

// Two-mode source: |alpha|^2 is the weight of each retained pair term
// (at most 1/2), delta the relative phase between the pair terms.
struct SourceState {
  double alpha_sq = 0.5;
  double delta = 0.0;

  SourceState() = default;
  SourceState(double alpha_sq_value, double delta_rad);
};

// State selected by detecting the Gaussian core behind a hologram whose
// dislocation sits at `pose`: e^{-i theta} c_r |0> + c_w |1> with
// c_r = sqrt(2r^2 / (2r^2 + w^2)), c_w = sqrt(w^2 / (2r^2 + w^2)).
LgKet basis_minus(const HologramPose& pose, const BeamGeometry& beam);

// Mirror basis for the partner arm: e^{+i theta} c_r |0> + c_w |-1>.
LgKet basis_plus(const HologramPose& pose, const BeamGeometry& beam);

// First-order diffracted state produced when a Gaussian beam passes the
// displaced hologram: e^{i(theta + pi)} c_r |0> + c_w |1>.
LgKet hologram_output_state(const HologramPose& pose, const BeamGeometry& beam);

// Time reversal: each coefficient c_m maps to conj(c_m) * (-1)^m.
LgKet time_reverse(const LgKet& ket);

// <a|b>, conjugate-linear in the first argument.
Complex inner_product(const LgKet& a, const LgKet& b);

// Unit-modulus phase z with a == z * b mode-by-mode within tol, when one
// exists. Returns nullopt when the kets are not proportional.
std::optional<Complex> phase_between(const LgKet& a, const LgKet& b,
                                     double tol = 1e-10);

}  // namespace lgscan
