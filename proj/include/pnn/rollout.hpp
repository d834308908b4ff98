#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "pnn/csv_io.hpp"
#include "pnn/integrate.hpp"
#include "pnn/network.hpp"
#include "pnn/trajectory.hpp"

namespace pnn {

/// Any one-step map (x, v) -> (x', v'): a candidate network, the reference
/// integrator at the data step, or a dense baseline.
using StepMap = std::function<State(State)>;

inline StepMap network_step_map(PnnNetwork net) {
  return [net = std::move(net)](State s) {
    auto [x, v] = net.forward(s.x, s.v);
    return State{x, v};
  };
}

inline StepMap reference_step_map(LjPotential pot, double dt,
                                  double gamma = 0.0) {
  return [=](State s) { return reference_step(pot, s.x, s.v, dt, gamma); };
}

inline StepMap euler_step_map(LjPotential pot, double dt) {
  return [=](State s) { return euler_step(pot, s.x, s.v, dt); };
}

// ---------------------------------------------------------------------------
// Long-horizon energy tracking.

struct RolloutReport {
  int requested_steps = 0;
  int completed_steps = 0;
  bool diverged = false;  // non-finite state or energy before the horizon
  double initial_energy = 0.0;
  double max_abs_drift = 0.0;  // max |E(t) - E(0)| over completed steps
  State final_state{};
  std::vector<double> energy;  // E after step k, including E(0) at k = 0
};

/// Iterates the map and records total energy each step. Leaving the
/// potential's domain or going non-finite truncates the run and flags it.
inline RolloutReport rollout(const StepMap& map, const LjPotential& pot,
                             State start, int steps) {
  if (steps < 0) throw ValidationError("step count must be non-negative");
  RolloutReport rep;
  rep.requested_steps = steps;
  State s = start;
  rep.initial_energy = pot.total_energy(s.x, s.v);
  rep.energy.push_back(rep.initial_energy);
  rep.final_state = s;
  for (int k = 0; k < steps; ++k) {
    s = map(s);
    if (!std::isfinite(s.x) || !std::isfinite(s.v) || !(s.x > 0.0)) {
      rep.diverged = true;
      return rep;
    }
    const double e = pot.total_energy(s.x, s.v);
    if (!std::isfinite(e)) {
      rep.diverged = true;
      return rep;
    }
    rep.energy.push_back(e);
    rep.max_abs_drift =
        std::max(rep.max_abs_drift, std::abs(e - rep.initial_energy));
    rep.final_state = s;
    rep.completed_steps = k + 1;
  }
  return rep;
}

inline void rollout_to_csv(const std::string& path, const RolloutReport& rep) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"step", "E_total"});
  for (std::size_t k = 0; k < rep.energy.size(); ++k)
    rows.push_back({std::to_string(k), csv::fmt(rep.energy[k])});
  csv::write_rows(path, rows);
}

// ---------------------------------------------------------------------------
// Time-reversal probe: run forward n steps, flip the velocity sign, run n
// more, flip again, and compare against the start. A map with the right
// coefficient symmetry retraces its path regardless of how accurate its
// force term is.

struct ReversibilityReport {
  int forward_steps = 0;
  bool diverged = false;
  State turnaround{};      // state after the velocity flip
  State returned{};        // state after the return leg and final flip
  double error_x = 0.0;    // |returned.x - start.x|
  double error_v = 0.0;
  std::vector<State> forward_path;  // start .. turnaround (pre-flip)
  std::vector<State> return_path;   // post-flip .. end (pre-final-flip)
};

inline ReversibilityReport reversibility_probe(const StepMap& map, State start,
                                               int steps) {
  if (steps < 0) throw ValidationError("step count must be non-negative");
  ReversibilityReport rep;
  rep.forward_steps = steps;
  State s = start;
  rep.forward_path.push_back(s);
  for (int k = 0; k < steps; ++k) {
    s = map(s);
    if (!std::isfinite(s.x) || !std::isfinite(s.v)) {
      rep.diverged = true;
      return rep;
    }
    rep.forward_path.push_back(s);
  }
  s.v = -s.v;
  rep.turnaround = s;
  rep.return_path.push_back(s);
  for (int k = 0; k < steps; ++k) {
    s = map(s);
    if (!std::isfinite(s.x) || !std::isfinite(s.v)) {
      rep.diverged = true;
      return rep;
    }
    rep.return_path.push_back(s);
  }
  s.v = -s.v;
  rep.returned = s;
  rep.error_x = std::abs(s.x - start.x);
  rep.error_v = std::abs(s.v - start.v);
  return rep;
}

inline void reversibility_to_csv(const std::string& path,
                                 const ReversibilityReport& rep) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"step", "x", "v", "phase"});
  for (std::size_t k = 0; k < rep.forward_path.size(); ++k)
    rows.push_back({std::to_string(k), csv::fmt(rep.forward_path[k].x),
                    csv::fmt(rep.forward_path[k].v), "forward"});
  for (std::size_t k = 0; k < rep.return_path.size(); ++k)
    rows.push_back({std::to_string(rep.forward_path.empty()
                                       ? k
                                       : rep.forward_path.size() - 1 + k),
                    csv::fmt(rep.return_path[k].x),
                    csv::fmt(rep.return_path[k].v), "reverse"});
  csv::write_rows(path, rows);
}

// ---------------------------------------------------------------------------
// Per-split error summary against a step dataset.

struct RmseReport {
  double train_x = 0.0, train_v = 0.0;
  double val_x = 0.0, val_v = 0.0;
  double test_x = 0.0, test_v = 0.0;
  double train_total = 0.0, val_total = 0.0, test_total = 0.0;
};

namespace detail {
inline void split_rmse(const StepMap& map, const StepDataset& data, double& rx,
                       double& rv, double& rtotal) {
  if (data.empty()) {
    rx = rv = rtotal = 0.0;
    return;
  }
  double ax = 0.0, av = 0.0;
  for (const auto& p : data.rows) {
    const State out = map({p.x_t, p.v_t});
    ax += (out.x - p.x_next) * (out.x - p.x_next);
    av += (out.v - p.v_next) * (out.v - p.v_next);
  }
  const double n = static_cast<double>(data.rows.size());
  rx = std::sqrt(ax / n);
  rv = std::sqrt(av / n);
  rtotal = std::sqrt((ax + av) / (2.0 * n));
}
}  // namespace detail

inline RmseReport rmse_report(const StepMap& map, const DatasetBundle& data) {
  RmseReport rep;
  detail::split_rmse(map, data.train, rep.train_x, rep.train_v,
                     rep.train_total);
  detail::split_rmse(map, data.val, rep.val_x, rep.val_v, rep.val_total);
  detail::split_rmse(map, data.test, rep.test_x, rep.test_v, rep.test_total);
  return rep;
}

}  // namespace pnn
