#include "bellsim/angle.hpp"

#include <cmath>
#include <numbers>

#include "bellsim/errors.hpp"

namespace bellsim {

Angle Angle::from_degrees(double deg) {
  if (!std::isfinite(deg)) {
    throw DomainError("angle must be finite");
  }
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) {
    r += 360.0;
  }
  // fmod of a tiny negative value plus 360 can round up to 360
  if (r >= 360.0) {
    r = 0.0;
  }
  Angle a;
  a.deg_ = r;
  return a;
}

double Angle::rad() const noexcept { return deg_ * std::numbers::pi / 180.0; }

Angle operator+(Angle x, double deg) { return Angle::from_degrees(x.deg() + deg); }

Angle relative_angle(Angle x, Angle y) {
  const double d = std::fabs(x.deg() - y.deg());
  return Angle::from_degrees(d <= 180.0 ? d : 360.0 - d);
}

double cos_squared(Angle a) {
  // cos^2 has period 180; table lookup keeps the common lattice angles exact
  const double r = std::fmod(a.deg(), 180.0);
  if (r == 0.0) return 1.0;
  if (r == 90.0) return 0.0;
  if (r == 45.0 || r == 135.0) return 0.5;
  if (r == 30.0 || r == 150.0) return 0.75;
  if (r == 60.0 || r == 120.0) return 0.25;
  const double c = std::cos(a.rad());
  return c * c;
}

ChSettings ch_settings(Angle theta) {
  const double t = theta.deg();
  if (!(t > 0.0 && t <= 60.0)) {
    throw DomainError("CH geometry requires 0 < theta <= 60 degrees");
  }
  return ChSettings{
      .a = Angle::from_degrees(0.0),
      .a_prime = Angle::from_degrees(2.0 * t),
      .b = Angle::from_degrees(t),
      .b_prime = Angle::from_degrees(3.0 * t),
  };
}

}  // namespace bellsim
