#pragma once

#include <initializer_list>
#include <vector>

#include "pnn/genome.hpp"

namespace pnn {

// Hand-wired dynamics genomes for known step maps. Weight allele codes:
//   0:fixed 0   1:fixed 1/2   2:fixed 1   3:fixed 2
//   4:fixed dt/2   5:fixed dt   6:fixed 2dt   7:trainable
// Activation code 0 is linear. These are the yardsticks evolution runs are
// measured against and the seeds for verification harnesses.

namespace detail {
inline Genome dyn_genome(std::initializer_list<std::uint8_t> weights) {
  Genome g;
  g.kind = TopologyKind::Dynamics;
  g.weight_alleles.assign(weights);
  g.activation_alleles.assign(6, 0);
  return g;
}
}  // namespace detail

/// x' = 0, v' = 0. Every connection pruned; total parsimony cost 0.
inline Genome zero_map_genome() {
  return detail::dyn_genome(
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
}

/// x' = x, v' = v.
inline Genome identity_genome() {
  return detail::dyn_genome(
      {2, 0, 0, 2, 0, 0, 2, 0, 0, 2, 2, 0, 0, 0, 2, 0, 2, 0, 0, 2});
}

/// x' = x + dt v, v' = v. The cheapest map that tracks position at all.
inline Genome free_flight_genome() {
  return detail::dyn_genome(
      {2, 5, 0, 2, 0, 0, 2, 0, 0, 2, 2, 0, 0, 0, 2, 0, 2, 0, 0, 2});
}

/// Explicit first-order Euler: x' = x + dt v, v' = v + dt F(x).
inline Genome euler_genome() {
  return detail::dyn_genome(
      {2, 0, 0, 2, 2, 0, 2, 5, 0, 2, 2, 0, 0, 0, 2, 5, 2, 0, 0, 2});
}

/// Half-step-drift form of Verlet:
///   x' = x + dt v + T0 F(x + v dt/2)      with T0 trained toward dt^2/2m
///   v' = v + dt F(x + v dt/2)
/// One trainable gene: no fixed allele equals dt^2/2. With `trainable_vF`
/// the dt on the velocity force term is trained too instead of pinned.
inline Genome position_verlet_genome(bool trainable_vF = false) {
  auto g = detail::dyn_genome(
      {2, 4, 0, 2, 2, 0, 2, 4, 0, 2, 2, 0, 7, 0, 2, 5, 2, 0, 0, 2});
  if (trainable_vF) g.weight_alleles[15] = 7;
  return g;
}

/// Trainable values that make position_verlet_genome the exact scheme, in
/// slot order.
inline std::vector<double> position_verlet_ideal_values(double dt, double mass,
                                                        bool trainable_vF = false) {
  std::vector<double> vals{dt * dt / (2.0 * mass)};
  if (trainable_vF) vals.push_back(dt / mass);
  return vals;
}

/// Damped variant: the velocity row picks up a (1 - gamma dt/m) contraction
/// and the position row's drift shortens accordingly. Four trainable genes:
///   w7  -> dt/2 - gamma dt^2/2m     (second drift increment)
///   w12 -> dt^2/2m                  (position force term)
///   w14 -> 1 - gamma dt/m           (velocity contraction)
///   w15 -> dt/m                     (velocity force term)
inline Genome damped_verlet_genome() {
  return detail::dyn_genome(
      {2, 4, 0, 2, 2, 0, 2, 7, 0, 2, 2, 0, 7, 0, 7, 7, 2, 0, 0, 2});
}

inline std::vector<double> damped_verlet_ideal_values(double dt, double mass,
                                                      double gamma) {
  const double inv_m = 1.0 / mass;
  return {0.5 * dt - 0.5 * gamma * dt * dt * inv_m,
          0.5 * dt * dt * inv_m,
          1.0 - gamma * dt * inv_m,
          dt * inv_m};
}

}  // namespace pnn
