#pragma once

#include <cmath>
#include <limits>

#include "pnn/genome.hpp"

namespace pnn {

/// Which data split feeds the accuracy term. Selecting on the held-out test
/// orbit is deliberate: evolution must generalize beyond the training
/// energies, not merely interpolate them.
enum class ErrorSource { Test, Val, Train };

struct ObjectiveConfig {
  double parsimony = 1.0;  // weight of the structure cost against accuracy
  double f1_offset = 13.0;
  double f1_floor = 0.0;
  ErrorSource source = ErrorSource::Test;
};

/// Accuracy term: a clamped logarithm of the error,
///   max(floor, log10(mse + 1e-30) + offset).
/// The tiny additive constant keeps a perfect fit finite; +inf maps to +inf.
inline double accuracy_term(double mse, const ObjectiveConfig& cfg) {
  if (mse < 0.0) mse = 0.0;
  return std::max(cfg.f1_floor, std::log10(mse + 1e-30) + cfg.f1_offset);
}

inline int genome_weight_score(const Genome& g) {
  int s = 0;
  for (auto code : g.weight_alleles) s += weight_allele_score(g.kind, code);
  return s;
}

inline int genome_activation_score(const Genome& g) {
  int s = 0;
  for (auto code : g.activation_alleles)
    s += activation_allele_score(g.kind, code);
  return s;
}

/// Total structure cost: the integer the parsimony pressure acts on.
inline int genome_complexity(const Genome& g) {
  return genome_weight_score(g) + genome_activation_score(g);
}

/// Combined objective, lower is better:
///   accuracy_term(error) + parsimony * complexity.
inline double objective_value(double mse, const Genome& g,
                              const ObjectiveConfig& cfg) {
  return accuracy_term(mse, cfg) +
         cfg.parsimony * static_cast<double>(genome_complexity(g));
}

}  // namespace pnn
