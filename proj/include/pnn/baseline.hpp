#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "pnn/mlp.hpp"
#include "pnn/rollout.hpp"
#include "pnn/trajectory.hpp"

namespace pnn {

/// Conventional dense one-step model: (x, v) -> (x', v') through a tanh MLP
/// with per-channel standardization folded in. The accuracy yardstick that
/// the evolved, far smaller networks are compared against.
///
/// The net predicts the state *increment*, not the next state: a coarse step
/// is a small correction on top of the identity map, and forcing a tanh
/// stack to reproduce the identity part caps single-step accuracy orders of
/// magnitude above what the residual formulation reaches.
struct BaselineModel {
  Mlp net;  // 2 -> hidden... -> 2, outputs the standardized increment
  std::array<double, 2> in_shift{0.0, 0.0}, in_scale{1.0, 1.0};
  std::array<double, 2> delta_shift{0.0, 0.0}, delta_scale{1.0, 1.0};

  State predict(State s) const {
    const double in[2] = {(s.x - in_shift[0]) / in_scale[0],
                          (s.v - in_shift[1]) / in_scale[1]};
    double out[2];
    net.forward(in, out);
    return {s.x + delta_shift[0] + delta_scale[0] * out[0],
            s.v + delta_shift[1] + delta_scale[1] * out[1]};
  }

  StepMap step_map() const {
    return [model = *this](State s) { return model.predict(s); };
  }
};

struct BaselineConfig {
  std::vector<int> hidden = {32, 32};
  FitConfig fit{.epochs = 6000, .lr0 = 3e-3, .lr_final = 1e-6,
                .patience = 800};
  std::size_t max_train_rows = 0;  // 0 = all
  std::uint64_t seed = 1;
  int max_retries = 3;
};

struct BaselineResult {
  BaselineModel model;
  FitReport fit;
  RmseReport rmse;
};

inline BaselineResult train_baseline(const DatasetBundle& data,
                                     const BaselineConfig& cfg) {
  if (data.train.empty()) throw ValidationError("empty training set");

  const StepDataset train = detail::thin_dataset(data.train, cfg.max_train_rows);

  BaselineModel model;
  // Standardize from training rows; targets share the input statistics'
  // structure but get their own moments.
  auto moments = [](const std::vector<double>& vals) {
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= static_cast<double>(vals.size());
    return std::pair<double, double>{mean,
                                     std::max(std::sqrt(var), 1e-12)};
  };
  std::vector<double> xs, vs, dx, dv;
  for (const auto& p : train.rows) {
    xs.push_back(p.x_t);
    vs.push_back(p.v_t);
    dx.push_back(p.x_next - p.x_t);
    dv.push_back(p.v_next - p.v_t);
  }
  std::tie(model.in_shift[0], model.in_scale[0]) = moments(xs);
  std::tie(model.in_shift[1], model.in_scale[1]) = moments(vs);
  std::tie(model.delta_shift[0], model.delta_scale[0]) = moments(dx);
  std::tie(model.delta_shift[1], model.delta_scale[1]) = moments(dv);

  auto pack = [&](const StepDataset& d, std::vector<double>& X,
                  std::vector<double>& Y) {
    for (const auto& p : d.rows) {
      X.push_back((p.x_t - model.in_shift[0]) / model.in_scale[0]);
      X.push_back((p.v_t - model.in_shift[1]) / model.in_scale[1]);
      Y.push_back((p.x_next - p.x_t - model.delta_shift[0]) /
                  model.delta_scale[0]);
      Y.push_back((p.v_next - p.v_t - model.delta_shift[1]) /
                  model.delta_scale[1]);
    }
  };
  std::vector<double> X, Y, Xv, Yv;
  pack(train, X, Y);
  pack(data.val, Xv, Yv);

  std::vector<int> sizes{2};
  for (int h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(2);

  BaselineResult result;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    auto rng = make_engine(derive_seed(cfg.seed, 2000 + attempt));
    model.net = Mlp::make(sizes, rng);
    result.fit = fit_mlp(model.net, X, Y, Xv, Yv, cfg.fit);
    if (!result.fit.diverged) {
      result.model = model;
      result.rmse = rmse_report(model.step_map(), data);
      return result;
    }
  }
  throw NumericError("baseline fit diverged on every attempt");
}

}  // namespace pnn
