#pragma once

#include <cmath>
#include <numbers>

namespace lgscan {

inline constexpr double kPi = std::numbers::pi;

// Wrap an angle into (-pi, pi].
inline double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

}  // namespace lgscan
