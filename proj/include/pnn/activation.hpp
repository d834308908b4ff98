#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "pnn/error.hpp"

namespace pnn {

// ---------------------------------------------------------------------------
// Dynamics networks choose among four activations. The allele code doubles as
// the parsimony score: cheaper-to-interpret functions cost less.

enum class Act : std::uint8_t { Linear = 0, Relu = 1, Tanh = 2, Elu = 3 };

inline double act_eval(Act a, double z) {
  switch (a) {
    case Act::Linear: return z;
    case Act::Relu: return z > 0.0 ? z : 0.0;
    case Act::Tanh: return std::tanh(z);
    case Act::Elu: return z > 0.0 ? z : std::expm1(z);
  }
  throw ValidationError("unknown activation code");
}

inline double act_deriv(Act a, double z) {
  switch (a) {
    case Act::Linear: return 1.0;
    case Act::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Act::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Act::Elu: return z > 0.0 ? 1.0 : std::exp(z);
  }
  throw ValidationError("unknown activation code");
}

inline int act_score(Act a) { return static_cast<int>(a); }

inline const char* act_name(Act a) {
  switch (a) {
    case Act::Linear: return "linear";
    case Act::Relu: return "relu";
    case Act::Tanh: return "tanh";
    case Act::Elu: return "elu";
  }
  throw ValidationError("unknown activation code");
}

// ---------------------------------------------------------------------------
// Melting-law networks use a different basis chosen for closed-form readouts.
// Reciprocal and square share a score of 1: one algebraic operation each.

enum class MeltAct : std::uint8_t { Linear = 0, Reciprocal = 1, Square = 2 };

/// Pre-activations this close to zero make 1/z meaningless; the evaluation
/// returns NaN and scoring treats the individual as divergent.
inline constexpr double kReciprocalGuard = 1e-12;

inline double melt_act_eval(MeltAct a, double z) {
  switch (a) {
    case MeltAct::Linear: return z;
    case MeltAct::Reciprocal:
      if (std::abs(z) < kReciprocalGuard)
        return std::numeric_limits<double>::quiet_NaN();
      return 1.0 / z;
    case MeltAct::Square: return z * z;
  }
  throw ValidationError("unknown activation code");
}

inline double melt_act_deriv(MeltAct a, double z) {
  switch (a) {
    case MeltAct::Linear: return 1.0;
    case MeltAct::Reciprocal:
      if (std::abs(z) < kReciprocalGuard)
        return std::numeric_limits<double>::quiet_NaN();
      return -1.0 / (z * z);
    case MeltAct::Square: return 2.0 * z;
  }
  throw ValidationError("unknown activation code");
}

inline int melt_act_score(MeltAct a) {
  return a == MeltAct::Linear ? 0 : 1;
}

inline const char* melt_act_name(MeltAct a) {
  switch (a) {
    case MeltAct::Linear: return "linear";
    case MeltAct::Reciprocal: return "reciprocal";
    case MeltAct::Square: return "square";
  }
  throw ValidationError("unknown activation code");
}

}  // namespace pnn
