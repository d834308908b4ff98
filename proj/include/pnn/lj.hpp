#pragma once

#include <cmath>
#include <limits>

#include "pnn/error.hpp"

namespace pnn {

/// One particle in a Lennard-Jones well, reduced units by default
/// (epsilon = sigma = mass = 1).
struct LjPotential {
  double epsilon = 1.0;
  double sigma = 1.0;
  double mass = 1.0;

  double potential(double x) const {
    require_domain(x);
    const double s6 = sixth_power(x);
    return 4.0 * epsilon * (s6 * s6 - s6);
  }

  /// F(x) = -dV/dx. Positive (repulsive) inside the minimum at 2^(1/6) sigma.
  double force(double x) const {
    require_domain(x);
    const double s6 = sixth_power(x);
    return 24.0 * epsilon * (2.0 * s6 * s6 - s6) / x;
  }

  /// dF/dx, for propagating gradients through an exact-force stand-in.
  double force_slope(double x) const {
    require_domain(x);
    const double s6 = sixth_power(x);
    return 24.0 * epsilon * (7.0 * s6 - 26.0 * s6 * s6) / (x * x);
  }

  /// Total variant of force(): NaN outside the physical domain instead of a
  /// throw, so callers that must stay exception-free can propagate the flag.
  double force_or_nan(double x) const noexcept {
    if (!(x > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double s6 = sixth_power(x);
    return 24.0 * epsilon * (2.0 * s6 * s6 - s6) / x;
  }

  double total_energy(double x, double v) const {
    return 0.5 * mass * v * v + potential(x);
  }

  /// Position of the potential minimum, 2^(1/6) sigma.
  double minimum_position() const { return sigma * std::pow(2.0, 1.0 / 6.0); }

  /// Inner turning point of a bound orbit with total energy e (in absolute
  /// units): the smaller root of V(x) = e. Requires e >= -epsilon.
  double inner_turning_point(double e) const {
    const double u = (1.0 + std::sqrt(turning_discriminant(e))) / 2.0;
    return sigma * std::pow(u, -1.0 / 6.0);
  }

  /// Outer turning point; bound orbits only (-epsilon <= e < 0).
  double outer_turning_point(double e) const {
    if (!(e < 0.0))
      throw ValidationError("outer turning point requires a bound orbit (e < 0)");
    const double u = (1.0 - std::sqrt(turning_discriminant(e))) / 2.0;
    return sigma * std::pow(u, -1.0 / 6.0);
  }

 private:
  double sixth_power(double x) const {
    const double r = sigma / x;
    const double r2 = r * r;
    return r2 * r2 * r2;
  }

  double turning_discriminant(double e) const {
    const double d = 1.0 + e / epsilon;
    if (d < 0.0)
      throw ValidationError("energy below the well depth has no turning point");
    return d;
  }

  static void require_domain(double x) {
    if (!(x > 0.0)) throw ValidationError("position must be positive");
  }
};

}  // namespace pnn
