#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "pnn/csv_io.hpp"
#include "pnn/error.hpp"
#include "pnn/integrate.hpp"
#include "pnn/lj.hpp"
#include "pnn/rng.hpp"

namespace pnn {

struct TrajectoryRow {
  double t, x, v;
};

struct Trajectory {
  double energy_label = 0.0;  // initial total energy the run was started at
  double dt_fine = 0.0;
  double gamma = 0.0;
  std::vector<TrajectoryRow> rows;  // steps + 1 entries, t strictly increasing
};

/// Integrates `steps` fine steps from (x0, v0) and records every state.
inline Trajectory simulate(const LjPotential& pot, double x0, double v0,
                           double dt_fine, int steps, double gamma = 0.0) {
  if (steps < 0) throw ValidationError("step count must be non-negative");
  if (!(dt_fine > 0.0)) throw ValidationError("time step must be positive");
  Trajectory traj;
  traj.energy_label = pot.total_energy(x0, v0);
  traj.dt_fine = dt_fine;
  traj.gamma = gamma;
  traj.rows.reserve(static_cast<std::size_t>(steps) + 1);
  State s{x0, v0};
  traj.rows.push_back({0.0, s.x, s.v});
  for (int i = 1; i <= steps; ++i) {
    s = reference_step(pot, s.x, s.v, dt_fine, gamma);
    traj.rows.push_back({i * dt_fine, s.x, s.v});
  }
  return traj;
}

/// Starts an orbit of total energy e at its inner turning point (v = 0).
inline Trajectory simulate_energy(const LjPotential& pot, double e,
                                  double dt_fine, int steps,
                                  double gamma = 0.0) {
  const double x0 = pot.inner_turning_point(e);
  return simulate(pot, x0, 0.0, dt_fine, steps, gamma);
}

// ---------------------------------------------------------------------------
// Single-step datasets subsampled from fine trajectories.

struct StepPair {
  double x_t, v_t, x_next, v_next;
};

struct StepDataset {
  std::vector<StepPair> rows;
  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
};

namespace detail {

/// Evenly strided subsample of [0, n). Rows are shuffled at split time, so an
/// even stride is an unbiased cap on dataset size.
inline std::vector<std::size_t> thinned_indices(std::size_t n,
                                                std::size_t cap) {
  std::vector<std::size_t> idx;
  if (cap == 0 || n <= cap) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  idx.reserve(cap);
  for (std::size_t k = 0; k < cap; ++k) idx.push_back(k * n / cap);
  return idx;
}

inline StepDataset thin_dataset(const StepDataset& data, std::size_t cap) {
  if (cap == 0 || data.rows.size() <= cap) return data;
  StepDataset out;
  for (auto i : thinned_indices(data.rows.size(), cap))
    out.rows.push_back(data.rows[i]);
  return out;
}

}  // namespace detail

struct SimConfig {
  double dt_fine = 1e-4;
  int stride = 10;        // data step = stride * dt_fine
  int total_steps = 15000;  // fine steps per trajectory
  // Initial total energies; each spawns one trajectory from its inner turning
  // point. The last entry is held out entirely as the test orbit.
  std::vector<double> energies = {-0.8, -0.7, -0.6, -0.5, -0.65};
  double gamma = 0.0;
  double val_fraction = 0.20;
  std::uint64_t seed = 1;

  double dt_data() const { return dt_fine * stride; }
};

struct DatasetBundle {
  double dt_data = 0.0;
  double gamma = 0.0;
  StepDataset train, val, test;
  std::vector<Trajectory> trajectories;  // in energy order, test orbit last
};

inline std::vector<StepPair> subsample_pairs(const Trajectory& traj,
                                             int stride) {
  if (stride < 1) throw ValidationError("stride must be at least 1");
  std::vector<StepPair> pairs;
  const std::size_t n = traj.rows.size();
  for (std::size_t k = 0; k + stride < n; k += stride) {
    const auto& a = traj.rows[k];
    const auto& b = traj.rows[k + stride];
    pairs.push_back({a.x, a.v, b.x, b.v});
  }
  return pairs;
}

/// Runs one trajectory per configured energy, subsamples coarse step pairs,
/// pools the training orbits and splits off a validation fraction with a
/// seeded shuffle. The final energy's orbit becomes the test set unchanged.
inline DatasetBundle generate_dataset(const LjPotential& pot,
                                      const SimConfig& cfg) {
  if (cfg.energies.size() < 2)
    throw ValidationError("need at least one training energy plus a test energy");
  if (!(cfg.val_fraction >= 0.0 && cfg.val_fraction < 1.0))
    throw ValidationError("validation fraction must lie in [0, 1)");

  DatasetBundle bundle;
  bundle.dt_data = cfg.dt_data();
  bundle.gamma = cfg.gamma;

  std::vector<StepPair> pooled;
  for (std::size_t i = 0; i < cfg.energies.size(); ++i) {
    Trajectory traj = simulate_energy(pot, cfg.energies[i], cfg.dt_fine,
                                      cfg.total_steps, cfg.gamma);
    auto pairs = subsample_pairs(traj, cfg.stride);
    const bool is_test = (i + 1 == cfg.energies.size());
    if (is_test)
      bundle.test.rows = std::move(pairs);
    else
      pooled.insert(pooled.end(), pairs.begin(), pairs.end());
    bundle.trajectories.push_back(std::move(traj));
  }

  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_engine(derive_seed(cfg.seed, "train-val-split"));
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_val =
      static_cast<std::size_t>(pooled.size() * cfg.val_fraction);
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = (i < n_val) ? bundle.val : bundle.train;
    dst.rows.push_back(pooled[order[i]]);
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// CSV round-trips.

inline void trajectory_to_csv(const std::string& path, const Trajectory& traj) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"t", "x", "v"});
  for (const auto& r : traj.rows)
    rows.push_back({csv::fmt(r.t), csv::fmt(r.x), csv::fmt(r.v)});
  csv::write_rows(path, rows);
}

inline Trajectory trajectory_from_csv(const std::string& path) {
  auto rows = csv::read_rows(path);
  csv::require_header(rows, {"t", "x", "v"}, path);
  Trajectory traj;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 3)
      throw ValidationError("row " + std::to_string(i) + " in " + path +
                            " does not have 3 cells");
    traj.rows.push_back({csv::parse_double(rows[i][0], path),
                         csv::parse_double(rows[i][1], path),
                         csv::parse_double(rows[i][2], path)});
  }
  for (std::size_t i = 1; i < traj.rows.size(); ++i)
    if (!(traj.rows[i].t > traj.rows[i - 1].t))
      throw ValidationError("time column in " + path +
                            " is not strictly increasing");
  return traj;
}

namespace detail {
inline const char* split_name(int which) {
  switch (which) {
    case 0: return "train";
    case 1: return "val";
    default: return "test";
  }
}
}  // namespace detail

inline void dataset_to_csv(const std::string& path, const DatasetBundle& b) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"x_t", "v_t", "x_next", "v_next", "split"});
  const StepDataset* sets[3] = {&b.train, &b.val, &b.test};
  for (int s = 0; s < 3; ++s)
    for (const auto& p : sets[s]->rows)
      rows.push_back({csv::fmt(p.x_t), csv::fmt(p.v_t), csv::fmt(p.x_next),
                      csv::fmt(p.v_next), detail::split_name(s)});
  csv::write_rows(path, rows);
}

inline DatasetBundle dataset_from_csv(const std::string& path) {
  auto rows = csv::read_rows(path);
  csv::require_header(rows, {"x_t", "v_t", "x_next", "v_next", "split"}, path);
  DatasetBundle b;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 5)
      throw ValidationError("row " + std::to_string(i) + " in " + path +
                            " does not have 5 cells");
    StepPair p{csv::parse_double(rows[i][0], path),
               csv::parse_double(rows[i][1], path),
               csv::parse_double(rows[i][2], path),
               csv::parse_double(rows[i][3], path)};
    const std::string& split = rows[i][4];
    if (split == "train")
      b.train.rows.push_back(p);
    else if (split == "val")
      b.val.rows.push_back(p);
    else if (split == "test")
      b.test.rows.push_back(p);
    else
      throw ValidationError("unknown split label '" + split + "' in " + path);
  }
  return b;
}

}  // namespace pnn
