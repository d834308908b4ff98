#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pnn/network.hpp"
#include "pnn/trajectory.hpp"

namespace pnn {

struct TrainConfig {
  int epochs = 2500;
  double lr0 = 1e-2;
  double lr_final = 1e-10;
  int patience = 400;  // epochs without a new best monitored loss
  // Row caps (0 = use everything). Large step datasets are thinned with an
  // even stride; rows are already shuffled at split time, so an even stride
  // is an unbiased subsample.
  std::size_t max_train_rows = 0;
  std::size_t max_val_rows = 0;
  double init_range = 0.1;

  static TrainConfig dynamics_defaults() { return TrainConfig{}; }
  static TrainConfig melting_defaults() {
    TrainConfig cfg;
    cfg.epochs = 3000;
    cfg.lr0 = 0.3;
    cfg.lr_final = 1e-7;
    cfg.patience = 500;
    return cfg;
  }
};

struct TrainResult {
  PnnNetwork net;
  double train_mse = std::numeric_limits<double>::infinity();
  double val_mse = std::numeric_limits<double>::infinity();
  int epochs_run = 0;
  bool diverged = false;
};

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace detail

// ---------------------------------------------------------------------------
// Loss evaluation. Mean squared error over rows and output channels; any
// non-finite prediction makes the whole value +infinity so scoring treats
// the candidate as divergent.

inline double dynamics_mse(const PnnNetwork& net, const StepDataset& data) {
  if (data.empty()) return detail::kInf;
  double acc = 0.0;
  for (const auto& p : data.rows) {
    auto [x1, v1] = net.forward(p.x_t, p.v_t);
    const double dx = x1 - p.x_next;
    const double dv = v1 - p.v_next;
    acc += dx * dx + dv * dv;
  }
  acc /= static_cast<double>(2 * data.rows.size());
  return std::isfinite(acc) ? acc : detail::kInf;
}

inline double melting_mse(const PnnNetwork& net,
                          const std::vector<MeltSample>& data) {
  if (data.empty()) return detail::kInf;
  double acc = 0.0;
  for (const auto& s : data) {
    const double d = net.forward_melt(s.x1, s.x2, s.x3) - s.y;
    acc += d * d;
  }
  acc /= static_cast<double>(data.size());
  return std::isfinite(acc) ? acc : detail::kInf;
}

// ---------------------------------------------------------------------------
// Backward passes. Gradients are produced for every weight slot; the update
// step applies them only to trainable slots. Fixed alleles and the frozen
// force model are never modified.

namespace detail {

/// Adds this sample's contribution to dL/dw for all 20 dynamics slots.
/// `gx, gv` are dL/d(out_x), dL/d(out_v).
inline void dynamics_backward(const PnnNetwork& net, const DynamicsTrace& t,
                              double gx, double gv, double* gw) {
  const auto& w = net.weights;
  const double gh3_0 = gx * w[16].value + gv * w[18].value;
  const double gh3_1 = gx * w[17].value + gv * w[19].value;
  gw[16] += gx * t.h3[0];
  gw[17] += gx * t.h3[1];
  gw[18] += gv * t.h3[0];
  gw[19] += gv * t.h3[1];

  const double gz3_0 = gh3_0 * act_deriv(net.act(4), t.z3[0]);
  const double gz3_1 = gh3_1 * act_deriv(net.act(5), t.z3[1]);
  gw[10] += gz3_0 * t.h2[0];
  gw[11] += gz3_0 * t.h2[1];
  gw[12] += gz3_0 * t.Fq;
  gw[13] += gz3_1 * t.h2[0];
  gw[14] += gz3_1 * t.h2[1];
  gw[15] += gz3_1 * t.Fq;

  const double gh2_0 = gz3_0 * w[10].value + gz3_1 * w[13].value;
  const double gh2_1 = gz3_0 * w[11].value + gz3_1 * w[14].value;
  const double gF = gz3_0 * w[12].value + gz3_1 * w[15].value;
  const double gq = t.force_engaged ? gF * t.dFq : 0.0;
  gw[4] += gq * t.h1[0];
  gw[5] += gq * t.h1[1];

  const double gz2_0 = gh2_0 * act_deriv(net.act(2), t.z2[0]);
  const double gz2_1 = gh2_1 * act_deriv(net.act(3), t.z2[1]);
  gw[6] += gz2_0 * t.h1[0];
  gw[7] += gz2_0 * t.h1[1];
  gw[8] += gz2_1 * t.h1[0];
  gw[9] += gz2_1 * t.h1[1];

  const double gh1_0 =
      gz2_0 * w[6].value + gz2_1 * w[8].value + gq * w[4].value;
  const double gh1_1 =
      gz2_0 * w[7].value + gz2_1 * w[9].value + gq * w[5].value;
  const double gz1_0 = gh1_0 * act_deriv(net.act(0), t.z1[0]);
  const double gz1_1 = gh1_1 * act_deriv(net.act(1), t.z1[1]);
  gw[0] += gz1_0 * t.x;
  gw[1] += gz1_0 * t.v;
  gw[2] += gz1_1 * t.x;
  gw[3] += gz1_1 * t.v;
}

/// Adds this sample's contribution to dL/dw for all 13 melting slots.
inline void melting_backward(const PnnNetwork& net, const MeltingTrace& t,
                             double gout, double* gw) {
  const auto& w = net.weights;
  for (int j = 0; j < 3; ++j) {
    if (w[9 + j].allele == 0) continue;  // pruned neuron: no gradient path
    gw[9 + j] += gout * t.h[j];
    const double gz =
        gout * w[9 + j].value * melt_act_deriv(net.melt_act(j), t.z[j]);
    gw[3 * j + 0] += gz * t.in[0];
    gw[3 * j + 1] += gz * t.in[1];
    gw[3 * j + 2] += gz * t.in[2];
  }
  gw[12] += gout;
}

struct BatchGrad {
  double loss = kInf;
  std::vector<double> gw;  // one slot per weight gene
  bool finite = false;
};

template <typename EvalFn>
BatchGrad batch_gradient(const PnnNetwork& net, std::size_t n_rows,
                         EvalFn&& per_row) {
  BatchGrad g;
  g.gw.assign(net.weights.size(), 0.0);
  if (n_rows == 0) return g;
  double loss = 0.0;
  for (std::size_t r = 0; r < n_rows; ++r) loss += per_row(r, g.gw.data());
  loss /= static_cast<double>(n_rows);
  const double scale = 1.0 / static_cast<double>(n_rows);
  for (auto& v : g.gw) v *= scale;
  g.loss = loss;
  g.finite = std::isfinite(loss);
  for (double v : g.gw)
    if (!std::isfinite(v)) g.finite = false;
  return g;
}

/// Full-batch loss and gradient for a dynamics network on thinned rows.
/// Per-row loss is (dx^2 + dv^2) / 2 so the batch mean matches dynamics_mse.
inline BatchGrad dynamics_gradient(const PnnNetwork& net,
                                   const StepDataset& data,
                                   const std::vector<std::size_t>& idx) {
  DynamicsTrace t;
  return batch_gradient(net, idx.size(), [&](std::size_t r, double* gw) {
    const StepPair& p = data.rows[idx[r]];
    net.forward_traced(p.x_t, p.v_t, t, /*want_slope=*/true);
    const double dx = t.out_x - p.x_next;
    const double dv = t.out_v - p.v_next;
    // d(loss)/d(out) is the raw residual here; the 1/n batch factor is
    // applied once in batch_gradient.
    dynamics_backward(net, t, dx, dv, gw);
    return 0.5 * (dx * dx + dv * dv);
  });
}

inline BatchGrad melting_gradient(const PnnNetwork& net,
                                  const std::vector<MeltSample>& data,
                                  const std::vector<std::size_t>& idx) {
  MeltingTrace t;
  return batch_gradient(net, idx.size(), [&](std::size_t r, double* gw) {
    const MeltSample& s = data[idx[r]];
    net.forward_melt_traced(s.x1, s.x2, s.x3, t);
    const double d = t.out - s.y;
    melting_backward(net, t, 2.0 * d, gw);
    return d * d;
  });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Adam over the trainable slots, full batch, exponentially decaying learning
// rate. The input network is untouched; the returned copy carries the
// best-validation weights seen. Networks with no trainable slots skip
// training entirely and only have their losses computed.

namespace detail {

template <typename GradFn, typename EvalTrainFn, typename EvalValFn>
TrainResult run_training(const PnnNetwork& start, bool have_val,
                         const TrainConfig& cfg, GradFn&& gradient,
                         EvalTrainFn&& eval_train, EvalValFn&& eval_val) {
  TrainResult result;
  result.net = start;

  if (result.net.trainable_count() == 0) {
    result.train_mse = eval_train(result.net);
    result.val_mse = have_val ? eval_val(result.net) : result.train_mse;
    result.diverged = !std::isfinite(result.train_mse) ||
                      !std::isfinite(result.val_mse);
    return result;
  }

  std::vector<int> slots;
  for (std::size_t i = 0; i < result.net.weights.size(); ++i)
    if (result.net.weights[i].trainable) slots.push_back(static_cast<int>(i));

  std::vector<double> m(slots.size(), 0.0), v(slots.size(), 0.0);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  const double decay =
      (cfg.epochs > 1) ? std::pow(cfg.lr_final / cfg.lr0,
                                  1.0 / static_cast<double>(cfg.epochs - 1))
                       : 1.0;
  double lr = cfg.lr0;

  std::vector<double> best = result.net.trainable_values();
  double best_monitor = kInf;
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    BatchGrad g = gradient(result.net);
    if (!g.finite) {
      result.diverged = true;
      result.epochs_run = epoch;
      result.train_mse = kInf;
      result.val_mse = kInf;
      return result;
    }

    const double t = epoch + 1;
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (std::size_t k = 0; k < slots.size(); ++k) {
      const double grad = g.gw[slots[k]];
      m[k] = beta1 * m[k] + (1 - beta1) * grad;
      v[k] = beta2 * v[k] + (1 - beta2) * grad * grad;
      result.net.weights[slots[k]].value -=
          lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
    }
    lr *= decay;
    result.epochs_run = epoch + 1;

    const double monitor =
        have_val ? eval_val(result.net) : eval_train(result.net);
    if (!std::isfinite(monitor)) {
      result.diverged = true;
      result.train_mse = kInf;
      result.val_mse = kInf;
      return result;
    }
    if (monitor < best_monitor) {
      best_monitor = monitor;
      best = result.net.trainable_values();
      since_best = 0;
    } else if (++since_best > cfg.patience) {
      break;
    }
  }

  result.net.set_trainable_values(best);
  result.train_mse = eval_train(result.net);
  result.val_mse = have_val ? eval_val(result.net) : result.train_mse;
  result.diverged =
      !std::isfinite(result.train_mse) || !std::isfinite(result.val_mse);
  return result;
}

/// The melting output layer is linear in its trainable slots (three readout
/// weights and the bias), so those are set by an exact least-squares solve
/// instead of gradient steps. Gradient descent alone crawls here: the raw
/// reduced features span orders of magnitude, which makes the bias/readout
/// loss surface a badly conditioned ravine. Returns false when the normal
/// equations go non-finite (for instance a reciprocal neuron hit zero).
inline bool solve_melt_output(PnnNetwork& net,
                              const std::vector<MeltSample>& data,
                              const std::vector<std::size_t>& idx) {
  std::vector<int> cols;
  for (int s = 9; s <= 12; ++s)
    if (net.weights[s].trainable) cols.push_back(s);
  if (cols.empty()) return true;
  const std::size_t m = cols.size();
  double M[4][4] = {{0}}, rhs[4] = {0};
  MeltingTrace t;
  for (std::size_t r : idx) {
    const MeltSample& s = data[r];
    net.forward_melt_traced(s.x1, s.x2, s.x3, t);
    double p[4];
    for (std::size_t k = 0; k < m; ++k)
      p[k] = cols[k] == 12 ? 1.0 : t.h[cols[k] - 9];
    double resid = s.y;
    for (int j = 0; j < 3; ++j)
      if (!net.weights[9 + j].trainable)
        resid -= net.weights[9 + j].value * t.h[j];
    if (!net.weights[12].trainable) resid -= net.weights[12].value;
    for (std::size_t a = 0; a < m; ++a) {
      rhs[a] += p[a] * resid;
      for (std::size_t b = 0; b < m; ++b) M[a][b] += p[a] * p[b];
    }
  }

  double max_diag = 1.0;
  for (std::size_t a = 0; a < m; ++a) {
    if (!std::isfinite(rhs[a])) return false;
    for (std::size_t b = 0; b < m; ++b)
      if (!std::isfinite(M[a][b])) return false;
    max_diag = std::max(max_diag, M[a][a]);
  }

  // Gaussian elimination with partial pivoting on the m x m system.
  auto try_solve = [&](double ridge, double* sol) {
    double A[4][4];
    double b[4];
    for (std::size_t r = 0; r < m; ++r) {
      b[r] = rhs[r];
      for (std::size_t c = 0; c < m; ++c) A[r][c] = M[r][c];
      A[r][r] += ridge;
    }
    int perm[4] = {0, 1, 2, 3};
    for (std::size_t c = 0; c < m; ++c) {
      std::size_t pivot = c;
      for (std::size_t r = c + 1; r < m; ++r)
        if (std::abs(A[perm[r]][c]) > std::abs(A[perm[pivot]][c])) pivot = r;
      std::swap(perm[c], perm[pivot]);
      const double pv = A[perm[c]][c];
      if (!(std::abs(pv) > 0.0)) return false;
      for (std::size_t r = c + 1; r < m; ++r) {
        const double f = A[perm[r]][c] / pv;
        for (std::size_t k = c; k < m; ++k) A[perm[r]][k] -= f * A[perm[c]][k];
        b[perm[r]] -= f * b[perm[c]];
      }
    }
    for (int c = static_cast<int>(m) - 1; c >= 0; --c) {
      double acc = b[perm[c]];
      for (std::size_t k = c + 1; k < m; ++k) acc -= A[perm[c]][k] * sol[k];
      sol[c] = acc / A[perm[c]][c];
      if (!std::isfinite(sol[c])) return false;
    }
    return true;
  };

  // Well-posed systems are solved exactly; a ridge fallback rescues singular
  // ones (a neuron whose taps are all the fixed-zero allele contributes a
  // dead predictor column, whose weight it simply pulls to zero).
  double sol[4] = {0};
  if (!try_solve(0.0, sol) && !try_solve(1e-12 * max_diag, sol)) return false;
  for (std::size_t k = 0; k < m; ++k) net.weights[cols[k]].value = sol[k];
  return true;
}

}  // namespace detail

inline TrainResult train_network(const PnnNetwork& net,
                                 const StepDataset& train_set,
                                 const StepDataset& val_set,
                                 const TrainConfig& cfg) {
  if (net.topology.kind != TopologyKind::Dynamics)
    throw ValidationError("dynamics trainer given a non-dynamics network");
  if (train_set.empty()) throw ValidationError("empty training set");
  const StepDataset train = detail::thin_dataset(train_set, cfg.max_train_rows);
  const StepDataset val = detail::thin_dataset(val_set, cfg.max_val_rows);
  std::vector<std::size_t> idx(train.rows.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return detail::run_training(
      net, !val.empty(), cfg,
      [&](const PnnNetwork& n) { return detail::dynamics_gradient(n, train, idx); },
      [&](const PnnNetwork& n) { return dynamics_mse(n, train); },
      [&](const PnnNetwork& n) { return dynamics_mse(n, val); });
}

/// Melting fits are hybrid: Adam walks the hidden-layer trainables while the
/// linear output layer is re-solved exactly by least squares each epoch.
/// Genomes whose hidden taps are all fixed therefore train in one solve.
inline TrainResult train_network(const PnnNetwork& net,
                                 const std::vector<MeltSample>& train_set,
                                 const std::vector<MeltSample>& val_set,
                                 const TrainConfig& cfg) {
  if (net.topology.kind != TopologyKind::Melting)
    throw ValidationError("melting trainer given a non-melting network");
  if (train_set.empty()) throw ValidationError("empty training set");
  std::vector<std::size_t> idx(train_set.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const bool have_val = !val_set.empty();

  TrainResult result;
  result.net = net;
  auto finish = [&](int epochs_run) {
    result.epochs_run = epochs_run;
    result.train_mse = melting_mse(result.net, train_set);
    result.val_mse = have_val ? melting_mse(result.net, val_set)
                              : result.train_mse;
    result.diverged = !std::isfinite(result.train_mse) ||
                      !std::isfinite(result.val_mse);
    return result;
  };
  auto abort_divergent = [&](int epochs_run) {
    result.epochs_run = epochs_run;
    result.train_mse = detail::kInf;
    result.val_mse = detail::kInf;
    result.diverged = true;
    return result;
  };

  std::vector<int> hidden_slots;
  for (int s = 0; s < 9; ++s)
    if (result.net.weights[s].trainable) hidden_slots.push_back(s);

  if (hidden_slots.empty()) {
    if (result.net.trainable_count() == 0) return finish(0);
    if (!detail::solve_melt_output(result.net, train_set, idx))
      return abort_divergent(0);
    return finish(1);
  }

  std::vector<double> m(hidden_slots.size(), 0.0), v(hidden_slots.size(), 0.0);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  const double decay =
      (cfg.epochs > 1) ? std::pow(cfg.lr_final / cfg.lr0,
                                  1.0 / static_cast<double>(cfg.epochs - 1))
                       : 1.0;
  double lr = cfg.lr0;
  if (!detail::solve_melt_output(result.net, train_set, idx))
    return abort_divergent(0);
  std::vector<double> best = result.net.trainable_values();
  double best_monitor = have_val ? melting_mse(result.net, val_set)
                                 : melting_mse(result.net, train_set);
  int since_best = 0;
  int epochs_run = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    detail::BatchGrad g = detail::melting_gradient(result.net, train_set, idx);
    if (!g.finite) return abort_divergent(epoch);
    const double t = epoch + 1;
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (std::size_t k = 0; k < hidden_slots.size(); ++k) {
      const double grad = g.gw[hidden_slots[k]];
      m[k] = beta1 * m[k] + (1 - beta1) * grad;
      v[k] = beta2 * v[k] + (1 - beta2) * grad * grad;
      result.net.weights[hidden_slots[k]].value -=
          lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
    }
    lr *= decay;
    if (!detail::solve_melt_output(result.net, train_set, idx))
      return abort_divergent(epoch + 1);
    epochs_run = epoch + 1;

    const double monitor = have_val ? melting_mse(result.net, val_set)
                                    : melting_mse(result.net, train_set);
    if (!std::isfinite(monitor)) return abort_divergent(epochs_run);
    if (monitor < best_monitor) {
      best_monitor = monitor;
      best = result.net.trainable_values();
      since_best = 0;
    } else if (++since_best > cfg.patience) {
      break;
    }
  }

  result.net.set_trainable_values(best);
  return finish(epochs_run);
}

// ---------------------------------------------------------------------------
// Finite-difference check of the analytic gradients.

namespace detail {

template <typename LossFn, typename GradFn>
double gradient_check_impl(const PnnNetwork& net, LossFn&& loss_at,
                           GradFn&& gradient, double h) {
  if (net.trainable_count() == 0)
    throw ValidationError("gradient check needs at least one trainable gene");
  BatchGrad g = gradient(net);
  if (!g.finite) throw NumericError("gradient check hit a non-finite value");

  double worst = 0.0;
  PnnNetwork probe = net;
  for (std::size_t i = 0; i < net.weights.size(); ++i) {
    if (!net.weights[i].trainable) continue;
    const double w0 = net.weights[i].value;
    probe.weights[i].value = w0 + h;
    const double lp = loss_at(probe);
    probe.weights[i].value = w0 - h;
    const double lm = loss_at(probe);
    probe.weights[i].value = w0;
    if (!std::isfinite(lp) || !std::isfinite(lm))
      throw NumericError("gradient check hit a non-finite value");
    const double fd = (lp - lm) / (2.0 * h);
    const double an = g.gw[i];
    const double scale = std::max({std::abs(fd), std::abs(an), 1.0});
    worst = std::max(worst, std::abs(fd - an) / scale);
  }
  return worst;
}

}  // namespace detail

/// Largest relative mismatch between analytic and central-difference
/// gradients over the trainable genes, on the given batch.
inline double gradient_check(const PnnNetwork& net, const StepDataset& batch,
                             double h = 1e-6) {
  std::vector<std::size_t> idx(batch.rows.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return detail::gradient_check_impl(
      net, [&](const PnnNetwork& n) { return dynamics_mse(n, batch); },
      [&](const PnnNetwork& n) { return detail::dynamics_gradient(n, batch, idx); },
      h);
}

inline double gradient_check(const PnnNetwork& net,
                             const std::vector<MeltSample>& batch,
                             double h = 1e-6) {
  std::vector<std::size_t> idx(batch.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return detail::gradient_check_impl(
      net, [&](const PnnNetwork& n) { return melting_mse(n, batch); },
      [&](const PnnNetwork& n) { return detail::melting_gradient(n, batch, idx); },
      h);
}

}  // namespace pnn
