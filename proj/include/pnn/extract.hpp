#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "pnn/network.hpp"

namespace pnn {

/// Raised when a network cannot be read off in closed form (some activation
/// is not linear). Callers distinguish "not interpretable" from bad input.
struct ExtractNotApplicable : ValidationError {
  using ValidationError::ValidationError;
};

/// Closed form of an all-linear dynamics network:
///   x' = m_xx x + m_xv v + f_x F(q_x x + q_v v)
///   v' = m_vx x + m_vv v + f_v F(q_x x + q_v v)
struct SymbolicStep {
  double dt = 0.0;
  double m_xx = 0.0, m_xv = 0.0, m_vx = 0.0, m_vv = 0.0;
  double f_x = 0.0, f_v = 0.0;
  double q_x = 0.0, q_v = 0.0;
  bool force_engaged = false;
};

/// Composes the linear layers of a dynamics network into a SymbolicStep.
/// Any non-linear activation gene makes the reduction invalid.
inline SymbolicStep extract_symbolic(const PnnNetwork& net) {
  if (net.topology.kind != TopologyKind::Dynamics)
    throw ValidationError("symbolic extraction applies to dynamics networks");
  for (int i = 0; i < 6; ++i)
    if (net.act(i) != Act::Linear)
      throw ExtractNotApplicable(
          "activation gene " + std::to_string(i) + " is " +
          act_name(net.act(i)) + "; closed-form readout needs linear");

  const auto& w = net.weights;
  auto val = [&](int i) { return w[i].value; };

  SymbolicStep s;
  s.dt = net.topology.dt;
  // Layer matrices, rows = outputs.
  const double a1[2][2] = {{val(0), val(1)}, {val(2), val(3)}};
  const double a2[2][2] = {{val(6), val(7)}, {val(8), val(9)}};
  const double a3[2][2] = {{val(10), val(11)}, {val(13), val(14)}};
  const double a4[2][2] = {{val(16), val(17)}, {val(18), val(19)}};
  const double bf[2] = {val(12), val(15)};

  double m21[2][2];  // a2 * a1
  double m321[2][2];
  double m[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      m21[i][j] = a2[i][0] * a1[0][j] + a2[i][1] * a1[1][j];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      m321[i][j] = a3[i][0] * m21[0][j] + a3[i][1] * m21[1][j];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      m[i][j] = a4[i][0] * m321[0][j] + a4[i][1] * m321[1][j];

  s.m_xx = m[0][0];
  s.m_xv = m[0][1];
  s.m_vx = m[1][0];
  s.m_vv = m[1][1];
  s.f_x = a4[0][0] * bf[0] + a4[0][1] * bf[1];
  s.f_v = a4[1][0] * bf[0] + a4[1][1] * bf[1];
  s.force_engaged = w[12].allele != 0 || w[15].allele != 0;
  if (s.force_engaged) {
    s.q_x = val(4) * a1[0][0] + val(5) * a1[1][0];
    s.q_v = val(4) * a1[0][1] + val(5) * a1[1][1];
  }
  return s;
}

// ---------------------------------------------------------------------------
// Matching the extracted map against known schemes.

enum class StepTemplate {
  ZeroMap,
  Identity,
  FreeFlight,
  EulerExplicit,
  PositionVerlet,
  PositionVerletDamped,
};

inline const char* template_name(StepTemplate t) {
  switch (t) {
    case StepTemplate::ZeroMap: return "zero-map";
    case StepTemplate::Identity: return "identity";
    case StepTemplate::FreeFlight: return "free-flight";
    case StepTemplate::EulerExplicit: return "euler-explicit";
    case StepTemplate::PositionVerlet: return "position-verlet";
    case StepTemplate::PositionVerletDamped: return "position-verlet-damped";
  }
  return "unknown";
}

/// Ideal coefficients of one scheme at a given step, mass, and friction.
inline SymbolicStep template_coefficients(StepTemplate t, double dt,
                                          double mass, double gamma) {
  SymbolicStep s;
  s.dt = dt;
  const double inv_m = 1.0 / mass;
  switch (t) {
    case StepTemplate::ZeroMap:
      break;
    case StepTemplate::Identity:
      s.m_xx = s.m_vv = 1.0;
      break;
    case StepTemplate::FreeFlight:
      s.m_xx = s.m_vv = 1.0;
      s.m_xv = dt;
      break;
    case StepTemplate::EulerExplicit:
      s.m_xx = s.m_vv = 1.0;
      s.m_xv = dt;
      s.f_v = dt * inv_m;
      s.q_x = 1.0;
      s.force_engaged = true;
      break;
    case StepTemplate::PositionVerlet:
      s.m_xx = s.m_vv = 1.0;
      s.m_xv = dt;
      s.f_x = 0.5 * dt * dt * inv_m;
      s.f_v = dt * inv_m;
      s.q_x = 1.0;
      s.q_v = 0.5 * dt;
      s.force_engaged = true;
      break;
    case StepTemplate::PositionVerletDamped:
      s.m_xx = 1.0;
      s.m_xv = dt - 0.5 * gamma * dt * dt * inv_m;
      s.m_vv = 1.0 - gamma * dt * inv_m;
      s.f_x = 0.5 * dt * dt * inv_m;
      s.f_v = dt * inv_m;
      s.q_x = 1.0;
      s.q_v = 0.5 * dt;
      s.force_engaged = true;
      break;
  }
  return s;
}

struct TemplateMatch {
  StepTemplate kind = StepTemplate::ZeroMap;
  bool matched = false;
  double max_deviation = 0.0;
  std::map<std::string, double> deviations;
};

namespace detail {

/// Deviation relative to the ideal when it is nonzero; when the ideal is
/// zero, relative to the term's leading-order magnitude at this timestep.
/// An absolute comparison against zero would make any scheme that simply
/// omits a small term (a dt^2-sized force coefficient, a half-step drift in
/// the force argument) look closer than the scheme that carries it slightly
/// off-ideal, misclassifying near-perfect integrators.
inline double coefficient_deviation(double actual, double ideal,
                                    double scale) {
  return ideal != 0.0 ? std::abs(actual - ideal) / std::abs(ideal)
                      : std::abs(actual) / scale;
}

inline TemplateMatch match_one(const SymbolicStep& sym, StepTemplate t,
                               double mass, double gamma) {
  const SymbolicStep ideal = template_coefficients(t, sym.dt, mass, gamma);
  TemplateMatch m;
  m.kind = t;
  auto add = [&](const char* name, double a, double i, double scale) {
    const double d = coefficient_deviation(a, i, scale);
    m.deviations[name] = d;
    m.max_deviation = std::max(m.max_deviation, d);
  };
  const double dt = sym.dt;
  const double inv_m = 1.0 / mass;
  add("m_xx", sym.m_xx, ideal.m_xx, 1.0);
  add("m_xv", sym.m_xv, ideal.m_xv, dt);
  add("m_vx", sym.m_vx, ideal.m_vx, dt);
  add("m_vv", sym.m_vv, ideal.m_vv, 1.0);
  add("f_x", sym.f_x, ideal.f_x, 0.5 * dt * dt * inv_m);
  add("f_v", sym.f_v, ideal.f_v, dt * inv_m);
  // The force argument only exists when the scheme uses the force at all.
  if (ideal.f_x != 0.0 || ideal.f_v != 0.0) {
    add("q_x", sym.q_x, ideal.q_x, 1.0);
    add("q_v", sym.q_v, ideal.q_v, 0.5 * dt);
  }
  return m;
}

}  // namespace detail

/// Compares against every known scheme and returns the closest; `matched`
/// reports whether its worst coefficient deviation is within `tol`.
inline TemplateMatch match_template(const SymbolicStep& sym, double mass,
                                    double tol = 1e-2, double gamma = 0.0) {
  std::vector<StepTemplate> candidates{
      StepTemplate::ZeroMap,      StepTemplate::Identity,
      StepTemplate::FreeFlight,   StepTemplate::EulerExplicit,
      StepTemplate::PositionVerlet};
  if (gamma != 0.0) candidates.push_back(StepTemplate::PositionVerletDamped);
  TemplateMatch best;
  bool first = true;
  for (StepTemplate t : candidates) {
    TemplateMatch m = detail::match_one(sym, t, mass, gamma);
    if (first || m.max_deviation < best.max_deviation) {
      best = m;
      first = false;
    }
  }
  best.matched = best.max_deviation <= tol;
  return best;
}

/// Checks one specific scheme rather than searching for the closest.
inline TemplateMatch match_template_exact(const SymbolicStep& sym,
                                          StepTemplate t, double mass,
                                          double tol = 1e-2,
                                          double gamma = 0.0) {
  TemplateMatch m = detail::match_one(sym, t, mass, gamma);
  m.matched = m.max_deviation <= tol;
  return m;
}

// ---------------------------------------------------------------------------
// Human-readable rendering.

enum class RenderStyle { Raw, Factored };

namespace detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string factor(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// "c unit" with the multiplier omitted when it is 1 to working precision.
inline void append_term(std::string& line, double multiplier,
                        const std::string& unit) {
  if (std::abs(multiplier) < 1e-15) return;
  if (!line.empty()) line += " + ";
  if (std::abs(multiplier - 1.0) < 1e-12)
    line += unit;
  else
    line += factor(multiplier) + " " + unit;
}

inline std::string force_argument_raw(const SymbolicStep& s) {
  std::string arg;
  append_term(arg, s.q_x, "x(t)");
  append_term(arg, s.q_v, "v(t)");
  if (arg.empty()) arg = "0";
  return arg;
}

}  // namespace detail

/// Renders the two update lines. Raw prints coefficients as numbers.
/// Factored divides each term by its scheme ideal so a near-perfect
/// integrator reads as multipliers near one; pass gamma to factor against
/// the damped form.
inline std::string render_equations(const SymbolicStep& s, RenderStyle style,
                                    double mass = 1.0, double gamma = 0.0) {
  std::string xline, vline;
  if (style == RenderStyle::Raw) {
    detail::append_term(xline, s.m_xx, "x(t)");
    detail::append_term(xline, s.m_xv, "v(t)");
    detail::append_term(vline, s.m_vx, "x(t)");
    detail::append_term(vline, s.m_vv, "v(t)");
    if (s.force_engaged) {
      const std::string f = "F(" + detail::force_argument_raw(s) + ")";
      detail::append_term(xline, s.f_x, f);
      detail::append_term(vline, s.f_v, f);
    }
  } else {
    const double dt = s.dt;
    const double inv_m = 1.0 / mass;
    const double drift = dt - 0.5 * gamma * dt * dt * inv_m;
    const double contraction = 1.0 - gamma * dt * inv_m;
    const std::string drift_unit =
        gamma != 0.0 ? "v(t) (dt - g dt^2/2m)" : "v(t) dt";
    const std::string contraction_unit =
        gamma != 0.0 ? "(1 - g dt/m) v(t)" : "v(t)";

    std::string arg;
    detail::append_term(arg, s.q_x, "x(t)");
    detail::append_term(arg, s.q_v / (0.5 * dt), "v(t) dt/2");
    if (arg.empty()) arg = "0";
    const std::string f = "F(" + arg + ")";

    detail::append_term(xline, s.m_xx, "x(t)");
    detail::append_term(xline, s.m_xv / drift, drift_unit);
    detail::append_term(vline, s.m_vx, "x(t)");
    detail::append_term(vline, s.m_vv / contraction, contraction_unit);
    if (s.force_engaged) {
      detail::append_term(xline, s.f_x / (0.5 * dt * dt * inv_m),
                          f + " dt^2/2m");
      detail::append_term(vline, s.f_v / (dt * inv_m), f + " dt/m");
    }
  }
  if (xline.empty()) xline = "0";
  if (vline.empty()) vline = "0";
  return "x(t+dt) = " + xline + "\nv(t+dt) = " + vline;
}

}  // namespace pnn
