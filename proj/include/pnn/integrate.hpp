#pragma once

#include "pnn/lj.hpp"

namespace pnn {

struct State {
  double x = 0.0;
  double v = 0.0;
};

/// One velocity-Verlet step under F_total(x, v) = F_LJ(x) - gamma * v.
///
/// The friction term in the closing half-kick depends on the velocity being
/// solved for; it is evaluated at the half-step velocity and refined with a
/// single fixed-point pass. With gamma = 0 this is exactly velocity Verlet.
inline State reference_step(const LjPotential& pot, double x, double v,
                            double dt, double gamma = 0.0) {
  const double inv_m = 1.0 / pot.mass;
  const double f0 = pot.force(x);
  const double vh = v + 0.5 * dt * (f0 - gamma * v) * inv_m;
  const double x1 = x + dt * vh;
  const double f1 = pot.force(x1);
  double vn = vh + 0.5 * dt * (f1 - gamma * vh) * inv_m;
  vn = vh + 0.5 * dt * (f1 - gamma * vn) * inv_m;
  return {x1, vn};
}

/// One explicit first-order Euler step (frictionless), kept as the weak
/// integrator that short evolution runs rediscover and then surpass.
inline State euler_step(const LjPotential& pot, double x, double v, double dt) {
  const double a = pot.force(x) / pot.mass;
  return {x + dt * v, v + dt * a};
}

}  // namespace pnn
