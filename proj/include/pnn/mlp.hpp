#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "pnn/error.hpp"
#include "pnn/rng.hpp"

namespace pnn {

/// Small dense feed-forward network: tanh hidden layers, linear output,
/// biases throughout. Sized for this project's needs (a handful of units),
/// so everything is plain loops over vectors.
class Mlp {
 public:
  std::vector<int> sizes;                // e.g. {1, 20, 20, 1}
  std::vector<std::vector<double>> W;    // W[l]: sizes[l+1] x sizes[l], row-major
  std::vector<std::vector<double>> b;    // b[l]: sizes[l+1]

  static Mlp make(std::vector<int> sizes, std::mt19937_64& rng) {
    if (sizes.size() < 2) throw ValidationError("network needs >= 2 layers");
    for (int s : sizes)
      if (s < 1) throw ValidationError("layer sizes must be positive");
    Mlp m;
    m.sizes = std::move(sizes);
    const std::size_t L = m.sizes.size() - 1;
    m.W.resize(L);
    m.b.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
      const int n_in = m.sizes[l], n_out = m.sizes[l + 1];
      const double bound = std::sqrt(6.0 / (n_in + n_out));
      std::uniform_real_distribution<double> dist(-bound, bound);
      m.W[l].resize(static_cast<std::size_t>(n_out) * n_in);
      for (auto& w : m.W[l]) w = dist(rng);
      m.b[l].assign(n_out, 0.0);
    }
    return m;
  }

  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }
  std::size_t layer_count() const { return W.size(); }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < W.size(); ++l) n += W[l].size() + b[l].size();
    return n;
  }

  struct Trace {
    // a[0] is the input; a[l+1] the post-activation of layer l.
    std::vector<std::vector<double>> a;
  };

  void forward_traced(const double* in, Trace& t) const {
    t.a.resize(sizes.size());
    t.a[0].assign(in, in + sizes[0]);
    for (std::size_t l = 0; l < W.size(); ++l) {
      const int n_in = sizes[l], n_out = sizes[l + 1];
      auto& out = t.a[l + 1];
      out.assign(n_out, 0.0);
      for (int i = 0; i < n_out; ++i) {
        double z = b[l][i];
        const double* row = &W[l][static_cast<std::size_t>(i) * n_in];
        for (int j = 0; j < n_in; ++j) z += row[j] * t.a[l][j];
        out[i] = (l == W.size() - 1) ? z : std::tanh(z);
      }
    }
  }

  void forward(const double* in, double* out) const {
    Trace t;
    forward_traced(in, t);
    for (int i = 0; i < output_dim(); ++i) out[i] = t.a.back()[i];
  }

  /// Backward pass from dL/d(output). Accumulates parameter gradients into
  /// (gW, gb) when they are non-null and returns the input gradient.
  std::vector<double> backward(const Trace& t, const double* dout,
                               std::vector<std::vector<double>>* gW,
                               std::vector<std::vector<double>>* gb) const {
    std::vector<double> da(t.a.back().size());
    for (std::size_t i = 0; i < da.size(); ++i) da[i] = dout[i];
    for (int l = static_cast<int>(W.size()) - 1; l >= 0; --l) {
      const int n_in = sizes[l], n_out = sizes[l + 1];
      std::vector<double> dz(n_out);
      for (int i = 0; i < n_out; ++i) {
        const double a = t.a[l + 1][i];
        // Output layer is linear; hidden activations are tanh, whose
        // derivative is recoverable from the activation value alone.
        dz[i] = (l == static_cast<int>(W.size()) - 1) ? da[i]
                                                      : da[i] * (1.0 - a * a);
      }
      if (gW) {
        for (int i = 0; i < n_out; ++i) {
          double* grow = &(*gW)[l][static_cast<std::size_t>(i) * n_in];
          for (int j = 0; j < n_in; ++j) grow[j] += dz[i] * t.a[l][j];
          (*gb)[l][i] += dz[i];
        }
      }
      std::vector<double> da_prev(n_in, 0.0);
      for (int i = 0; i < n_out; ++i) {
        const double* row = &W[l][static_cast<std::size_t>(i) * n_in];
        for (int j = 0; j < n_in; ++j) da_prev[j] += row[j] * dz[i];
      }
      da = std::move(da_prev);
    }
    return da;
  }

  /// Scalar specialization: value and d(output)/d(input) for 1 -> 1 networks.
  void value_and_slope(double in, double& value, double& slope) const {
    if (input_dim() != 1 || output_dim() != 1)
      throw ValidationError("value_and_slope needs a scalar network");
    Trace t;
    forward_traced(&in, t);
    value = t.a.back()[0];
    const double one = 1.0;
    slope = backward(t, &one, nullptr, nullptr)[0];
  }
};

// ---------------------------------------------------------------------------
// Full-batch Adam fit with an exponentially decaying learning rate.

struct FitConfig {
  int epochs = 4000;
  double lr0 = 5e-3;
  double lr_final = 1e-6;
  int patience = 500;          // epochs without monitored-loss improvement
  double min_improve = 1e-14;
};

struct FitReport {
  double train_mse = std::numeric_limits<double>::infinity();
  double val_mse = std::numeric_limits<double>::infinity();
  int epochs_run = 0;
  bool diverged = false;
};

/// Mean squared error over rows and output channels. Any non-finite
/// prediction makes the result +infinity.
inline double mlp_mse(const Mlp& net, const std::vector<double>& X,
                      const std::vector<double>& Y) {
  const int n_in = net.input_dim(), n_out = net.output_dim();
  const std::size_t n = X.size() / n_in;
  if (n == 0) return std::numeric_limits<double>::infinity();
  std::vector<double> out(n_out);
  double acc = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    net.forward(&X[r * n_in], out.data());
    for (int c = 0; c < n_out; ++c) {
      const double d = out[c] - Y[r * n_out + c];
      acc += d * d;
    }
  }
  acc /= static_cast<double>(n * n_out);
  return std::isfinite(acc) ? acc
                            : std::numeric_limits<double>::infinity();
}

/// Trains `net` in place on flattened rows (X: n x in_dim, Y: n x out_dim).
/// Validation rows steer early stopping when present; the best-validation
/// parameters are restored on return. A non-finite loss aborts with the
/// diverged flag set so the caller can re-initialize and retry.
inline FitReport fit_mlp(Mlp& net, const std::vector<double>& X,
                         const std::vector<double>& Y,
                         const std::vector<double>& Xval,
                         const std::vector<double>& Yval,
                         const FitConfig& cfg) {
  const int n_in = net.input_dim(), n_out = net.output_dim();
  if (X.size() % n_in != 0 || Y.size() % n_out != 0)
    throw ValidationError("training rows do not match network dimensions");
  const std::size_t n = X.size() / n_in;
  if (n == 0) throw ValidationError("no training rows");
  if (Y.size() / n_out != n)
    throw ValidationError("input and target row counts differ");
  const bool have_val = !Xval.empty();

  auto gW = net.W;
  auto gb = net.b;
  auto zero_grads = [&] {
    for (auto& g : gW) std::fill(g.begin(), g.end(), 0.0);
    for (auto& g : gb) std::fill(g.begin(), g.end(), 0.0);
  };
  // Adam state, same shapes as the parameters.
  auto mW = net.W, vW = net.W, mb = net.b, vb = net.b;
  for (auto& g : mW) std::fill(g.begin(), g.end(), 0.0);
  for (auto& g : vW) std::fill(g.begin(), g.end(), 0.0);
  for (auto& g : mb) std::fill(g.begin(), g.end(), 0.0);
  for (auto& g : vb) std::fill(g.begin(), g.end(), 0.0);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  FitReport report;
  auto best_W = net.W;
  auto best_b = net.b;
  double best_monitor = std::numeric_limits<double>::infinity();
  int since_best = 0;

  const double decay = (cfg.epochs > 1)
                           ? std::pow(cfg.lr_final / cfg.lr0,
                                      1.0 / static_cast<double>(cfg.epochs - 1))
                           : 1.0;
  double lr = cfg.lr0;
  Mlp::Trace trace;
  std::vector<double> dout(n_out);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    zero_grads();
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      net.forward_traced(&X[r * n_in], trace);
      for (int c = 0; c < n_out; ++c) {
        const double d = trace.a.back()[c] - Y[r * n_out + c];
        loss += d * d;
        dout[c] = 2.0 * d / static_cast<double>(n * n_out);
      }
      net.backward(trace, dout.data(), &gW, &gb);
    }
    loss /= static_cast<double>(n * n_out);
    if (!std::isfinite(loss)) {
      report.diverged = true;
      report.epochs_run = epoch;
      return report;
    }

    const double t = epoch + 1;
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (std::size_t l = 0; l < net.W.size(); ++l) {
      for (std::size_t k = 0; k < net.W[l].size(); ++k) {
        mW[l][k] = beta1 * mW[l][k] + (1 - beta1) * gW[l][k];
        vW[l][k] = beta2 * vW[l][k] + (1 - beta2) * gW[l][k] * gW[l][k];
        net.W[l][k] -= lr * (mW[l][k] / bc1) / (std::sqrt(vW[l][k] / bc2) + eps);
      }
      for (std::size_t k = 0; k < net.b[l].size(); ++k) {
        mb[l][k] = beta1 * mb[l][k] + (1 - beta1) * gb[l][k];
        vb[l][k] = beta2 * vb[l][k] + (1 - beta2) * gb[l][k] * gb[l][k];
        net.b[l][k] -= lr * (mb[l][k] / bc1) / (std::sqrt(vb[l][k] / bc2) + eps);
      }
    }
    lr *= decay;

    const double monitor = have_val ? mlp_mse(net, Xval, Yval) : loss;
    if (!std::isfinite(monitor)) {
      report.diverged = true;
      report.epochs_run = epoch + 1;
      return report;
    }
    if (monitor < best_monitor - cfg.min_improve) {
      best_monitor = monitor;
      best_W = net.W;
      best_b = net.b;
      since_best = 0;
    } else if (++since_best > cfg.patience) {
      report.epochs_run = epoch + 1;
      break;
    }
    report.epochs_run = epoch + 1;
  }

  net.W = best_W;
  net.b = best_b;
  report.train_mse = mlp_mse(net, X, Y);
  report.val_mse = have_val ? mlp_mse(net, Xval, Yval) : report.train_mse;
  return report;
}

}  // namespace pnn
