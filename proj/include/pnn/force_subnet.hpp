#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "pnn/mlp.hpp"
#include "pnn/network.hpp"
#include "pnn/trajectory.hpp"

namespace pnn {

/// Pretrained stand-in for the force law: a scalar tanh network with affine
/// input/output normalization folded in. Once fitted it is frozen; candidate
/// integrators read values and slopes but never update it.
class ForceSubnet final : public ForceModel {
 public:
  Mlp net;
  double x_shift = 0.0, x_scale = 1.0;  // q_norm = (q - x_shift) / x_scale
  double f_shift = 0.0, f_scale = 1.0;  // F = f_shift + f_scale * net(q_norm)
  double fit_rmse = 0.0;                // held-out RMSE in force units

  double value(double q) const override {
    double y, dy;
    net.value_and_slope((q - x_shift) / x_scale, y, dy);
    return f_shift + f_scale * y;
  }

  double slope(double q) const override {
    double y, dy;
    net.value_and_slope((q - x_shift) / x_scale, y, dy);
    return f_scale * dy / x_scale;
  }

  bool operator==(const ForceSubnet& o) const {
    return net.sizes == o.net.sizes && net.W == o.net.W && net.b == o.net.b &&
           x_shift == o.x_shift && x_scale == o.x_scale &&
           f_shift == o.f_shift && f_scale == o.f_scale &&
           fit_rmse == o.fit_rmse;
  }
};

struct ForceFitConfig {
  std::vector<int> hidden = {20, 20};
  FitConfig fit{.epochs = 6000, .lr0 = 5e-3, .lr_final = 1e-6, .patience = 800};
  double val_fraction = 0.15;
  std::size_t min_samples = 50;
  std::uint64_t seed = 1;
  int max_retries = 3;
};

/// Harvests (position, force) samples from fine trajectories, thinned by
/// `stride` so neighbouring samples are not near-duplicates.
inline std::vector<std::pair<double, double>> force_samples(
    const LjPotential& pot, const std::vector<Trajectory>& trajectories,
    int stride = 10) {
  if (stride < 1) throw ValidationError("stride must be at least 1");
  std::vector<std::pair<double, double>> samples;
  for (const auto& traj : trajectories)
    for (std::size_t i = 0; i < traj.rows.size();
         i += static_cast<std::size_t>(stride))
      samples.emplace_back(traj.rows[i].x, pot.force(traj.rows[i].x));
  return samples;
}

/// Fits the frozen force stand-in. Divergent fits are retried with fresh
/// initializations; exhausting the retries is a numeric failure.
inline ForceSubnet pretrain_force_subnet(
    const std::vector<std::pair<double, double>>& samples,
    const ForceFitConfig& cfg) {
  if (samples.size() < cfg.min_samples)
    throw ValidationError("need at least " + std::to_string(cfg.min_samples) +
                          " force samples, got " +
                          std::to_string(samples.size()));

  // Normalize positions to the sampled interval and forces to zero mean,
  // unit spread; the raw force spans orders of magnitude near the wall.
  double x_lo = samples[0].first, x_hi = samples[0].first;
  double f_mean = 0.0;
  for (const auto& [x, f] : samples) {
    x_lo = std::min(x_lo, x);
    x_hi = std::max(x_hi, x);
    f_mean += f;
  }
  f_mean /= static_cast<double>(samples.size());
  double f_var = 0.0;
  for (const auto& [x, f] : samples) f_var += (f - f_mean) * (f - f_mean);
  f_var /= static_cast<double>(samples.size());

  ForceSubnet subnet;
  subnet.x_shift = 0.5 * (x_lo + x_hi);
  subnet.x_scale = std::max(0.5 * (x_hi - x_lo), 1e-12);
  subnet.f_shift = f_mean;
  subnet.f_scale = std::max(std::sqrt(f_var), 1e-12);

  // Seeded split: every k-th sample is held out for early stopping.
  const std::size_t k =
      std::max<std::size_t>(2, static_cast<std::size_t>(1.0 / std::max(
                                   cfg.val_fraction, 1e-6)));
  std::vector<double> X, Y, Xv, Yv;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double xn = (samples[i].first - subnet.x_shift) / subnet.x_scale;
    const double fn = (samples[i].second - subnet.f_shift) / subnet.f_scale;
    if (i % k == 1) {
      Xv.push_back(xn);
      Yv.push_back(fn);
    } else {
      X.push_back(xn);
      Y.push_back(fn);
    }
  }

  std::vector<int> sizes{1};
  for (int h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(1);

  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    auto rng = make_engine(derive_seed(cfg.seed, 1000 + attempt));
    subnet.net = Mlp::make(sizes, rng);
    FitReport report = fit_mlp(subnet.net, X, Y, Xv, Yv, cfg.fit);
    if (!report.diverged) {
      subnet.fit_rmse =
          std::sqrt(Xv.empty() ? report.train_mse : report.val_mse) *
          subnet.f_scale;
      return subnet;
    }
  }
  throw NumericError("force fit diverged on every attempt");
}

}  // namespace pnn
