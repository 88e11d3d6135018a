#pragma once

/**
 * @file halfplane.hpp
 * @brief Closed half-planes stored as affine images of the closed upper half-plane.
 *
 * The half-plane with angle theta and base point b is { b + e^{i theta} u : Im(u) >= 0 }.
 * theta = 0, b = 0 is the upper half-plane; theta = pi/2, b = 0 is the closed left half-plane.
 */

#include <cmath>

#include "types.hpp"

namespace stable_slices {

enum class Location { interior, boundary, outside };

inline const char* to_string(Location loc) {
  switch (loc) {
    case Location::interior: return "interior";
    case Location::boundary: return "boundary";
    case Location::outside: return "outside";
  }
  return "?";
}

class HalfPlane {
 public:
  HalfPlane() = default;
  HalfPlane(double theta, Complex base) : theta_(normalize(theta)), base_(base) {
    if (!std::isfinite(theta) || !is_finite(base)) throw ValidationError("half-plane parameters must be finite");
  }

  static HalfPlane upper() { return {}; }
  static HalfPlane left() { return {kPi / 2.0, Complex{}}; }

  double theta() const { return theta_; }
  Complex base() const { return base_; }
  Complex rotation() const { return std::polar(1.0, theta_); }

  bool is_upper() const { return theta_ == 0.0 && base_ == Complex{}; }

  /// Coordinates in the upper half-plane frame: u = e^{-i theta} (w - base).
  Complex to_upper(Complex w) const { return std::conj(rotation()) * (w - base_); }
  Complex from_upper(Complex u) const { return base_ + rotation() * u; }

  /// Signed distance to the boundary line, positive inside.
  double signed_distance(Complex w) const { return to_upper(w).imag(); }

 private:
  static double normalize(double theta) {
    double t = std::fmod(theta, 2.0 * kPi);
    if (t < 0) t += 2.0 * kPi;
    if (t >= 2.0 * kPi) t = 0.0;
    return t;
  }

  double theta_ = 0.0;
  Complex base_{};
};

inline Location halfplane_contains(const HalfPlane& h, Complex z, double tol) {
  if (tol < 0) throw ValidationError("tolerance must be non-negative");
  const double s = h.signed_distance(z);
  if (std::abs(s) <= tol) return Location::boundary;
  return s > 0 ? Location::interior : Location::outside;
}

}  // namespace stable_slices
