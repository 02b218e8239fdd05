#pragma once

#include <compare>

namespace bellsim {

/// Orientation in the transverse (xy) plane, in degrees, kept in [0, 360).
///
/// Angles are stored in degrees everywhere in the API; radians appear only
/// inside trigonometric evaluation.
class Angle {
 public:
  constexpr Angle() = default;

  /// Reduces `deg` modulo 360 into [0, 360).
  static Angle from_degrees(double deg);

  constexpr double deg() const noexcept { return deg_; }
  double rad() const noexcept;

  friend constexpr bool operator==(Angle, Angle) = default;

 private:
  double deg_ = 0.0;
};

Angle operator+(Angle x, double deg);

/// Smallest rotation taking `x` onto `y`, in [0, 180].
Angle relative_angle(Angle x, Angle y);

/// cos^2 of an angle. Exact 0/1 at multiples of 90 degrees.
double cos_squared(Angle a);

/// Analyzer settings for the equal-spacing CH geometry:
/// |a - b| = |a' - b| = |a' - b'| = |a - b'| / 3 = theta.
struct ChSettings {
  Angle a;
  Angle a_prime;
  Angle b;
  Angle b_prime;
};

/// Settings a = 0, b = theta, a' = 2 theta, b' = 3 theta.
/// Throws DomainError unless 0 < theta <= 60 degrees.
ChSettings ch_settings(Angle theta);

}  // namespace bellsim
