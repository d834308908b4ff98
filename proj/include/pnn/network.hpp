#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <utility>
#include <vector>

#include "pnn/activation.hpp"
#include "pnn/genome.hpp"
#include "pnn/lj.hpp"

namespace pnn {

/// Scalar force law F(q) with a usable slope, so candidate integrators can
/// backpropagate through their force term. Implementations must be total:
/// return NaN rather than throw for inputs outside their domain.
struct ForceModel {
  virtual ~ForceModel() = default;
  virtual double value(double q) const = 0;
  virtual double slope(double q) const = 0;
};

/// Wraps a pair of callables as a force model (exact force laws, test stubs).
struct CallableForce final : ForceModel {
  std::function<double(double)> f;
  std::function<double(double)> df;
  CallableForce(std::function<double(double)> f_,
                std::function<double(double)> df_)
      : f(std::move(f_)), df(std::move(df_)) {}
  double value(double q) const override { return f(q); }
  double slope(double q) const override { return df(q); }
};

inline std::shared_ptr<const ForceModel> exact_lj_force(LjPotential pot) {
  return std::make_shared<CallableForce>(
      [pot](double q) { return pot.force_or_nan(q); },
      [pot](double q) {
        if (!(q > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        return pot.force_slope(q);
      });
}

inline std::shared_ptr<const ForceModel> zero_force() {
  return std::make_shared<CallableForce>([](double) { return 0.0; },
                                         [](double) { return 0.0; });
}

struct WeightGene {
  std::uint8_t allele = 0;
  bool trainable = false;
  double value = 0.0;  // fixed value, or current trainable value
};

/// Per-sample forward records kept for backpropagation.
struct DynamicsTrace {
  double x, v;
  double z1[2], h1[2];
  double q, Fq, dFq;
  bool force_engaged;
  double z2[2], h2[2];
  double z3[2], h3[2];
  double out_x, out_v;
};

struct MeltingTrace {
  double in[3];
  double z[3], h[3];
  double out;
};

/// One supervised row for melting-law fits: reduced features -> reduced
/// melting temperature.
struct MeltSample {
  double x1, x2, x3, y;
};

// ---------------------------------------------------------------------------
// Candidate network: a genome bound to concrete weight values.
//
// Dynamics wiring (inputs x, v; outputs x', v'):
//   w0..w3   (x, v) -> first hidden pair, row-major per neuron
//   w4..w5   force tap      q  = w4*h1_0 + w5*h1_1,  F = force(q)
//   w6..w9   first -> second hidden pair, row-major
//   w10..w15 (h2_0, h2_1, F) -> third hidden pair, row-major
//   w16..w19 third hidden pair -> (x', v'), row-major
// Activation slots a0,a1 / a2,a3 / a4,a5 act on the three hidden pairs; the
// output layer is linear.
//
// Melting wiring (inputs x1, x2, x3; output y):
//   w0..w8   inputs -> three hidden neurons, row-major
//   w9..w11  hidden -> output
//   w12      output bias
// Activation slots a0..a2 act on the hidden neurons.

class PnnNetwork {
 public:
  Topology topology;
  Genome genome;
  std::vector<WeightGene> weights;
  std::shared_ptr<const ForceModel> force;

  int trainable_count() const {
    int n = 0;
    for (const auto& w : weights) n += w.trainable ? 1 : 0;
    return n;
  }

  std::vector<double> trainable_values() const {
    std::vector<double> out;
    for (const auto& w : weights)
      if (w.trainable) out.push_back(w.value);
    return out;
  }

  void set_trainable_values(const std::vector<double>& vals) {
    std::size_t k = 0;
    for (auto& w : weights)
      if (w.trainable) {
        if (k >= vals.size())
          throw ValidationError("too few trainable values supplied");
        w.value = vals[k++];
      }
    if (k != vals.size())
      throw ValidationError("too many trainable values supplied");
  }

  /// Sets the value of one weight slot; the slot must be trainable.
  void set_slot(int slot, double value) {
    if (slot < 0 || slot >= static_cast<int>(weights.size()))
      throw ValidationError("weight slot out of range");
    if (!weights[slot].trainable)
      throw ValidationError("slot " + std::to_string(slot) +
                            " holds a fixed allele");
    weights[slot].value = value;
  }

  Act act(int slot) const {
    return static_cast<Act>(genome.activation_alleles[slot]);
  }
  MeltAct melt_act(int slot) const {
    return static_cast<MeltAct>(genome.activation_alleles[slot]);
  }

  std::pair<double, double> forward(double x, double v) const {
    DynamicsTrace t;
    forward_traced(x, v, t, /*want_slope=*/false);
    return {t.out_x, t.out_v};
  }

  void forward_traced(double x, double v, DynamicsTrace& t,
                      bool want_slope) const {
    if (topology.kind != TopologyKind::Dynamics)
      throw ValidationError("dynamics forward on a non-dynamics network");
    const auto& w = weights;
    t.x = x;
    t.v = v;
    t.z1[0] = w[0].value * x + w[1].value * v;
    t.z1[1] = w[2].value * x + w[3].value * v;
    t.h1[0] = act_eval(act(0), t.z1[0]);
    t.h1[1] = act_eval(act(1), t.z1[1]);
    t.q = w[4].value * t.h1[0] + w[5].value * t.h1[1];
    // A force term whose outgoing weights are both the fixed-zero allele is
    // pruned from the graph; evaluating it anyway would let an out-of-domain
    // NaN leak through the 0 * NaN product.
    t.force_engaged = w[12].allele != 0 || w[15].allele != 0;
    t.Fq = t.force_engaged ? force->value(t.q) : 0.0;
    t.dFq = (t.force_engaged && want_slope) ? force->slope(t.q) : 0.0;
    t.z2[0] = w[6].value * t.h1[0] + w[7].value * t.h1[1];
    t.z2[1] = w[8].value * t.h1[0] + w[9].value * t.h1[1];
    t.h2[0] = act_eval(act(2), t.z2[0]);
    t.h2[1] = act_eval(act(3), t.z2[1]);
    t.z3[0] = w[10].value * t.h2[0] + w[11].value * t.h2[1] + w[12].value * t.Fq;
    t.z3[1] = w[13].value * t.h2[0] + w[14].value * t.h2[1] + w[15].value * t.Fq;
    t.h3[0] = act_eval(act(4), t.z3[0]);
    t.h3[1] = act_eval(act(5), t.z3[1]);
    t.out_x = w[16].value * t.h3[0] + w[17].value * t.h3[1];
    t.out_v = w[18].value * t.h3[0] + w[19].value * t.h3[1];
  }

  double forward_melt(double x1, double x2, double x3) const {
    MeltingTrace t;
    forward_melt_traced(x1, x2, x3, t);
    return t.out;
  }

  void forward_melt_traced(double x1, double x2, double x3,
                           MeltingTrace& t) const {
    if (topology.kind != TopologyKind::Melting)
      throw ValidationError("melting forward on a non-melting network");
    const auto& w = weights;
    t.in[0] = x1;
    t.in[1] = x2;
    t.in[2] = x3;
    for (int j = 0; j < 3; ++j) {
      t.z[j] = w[3 * j + 0].value * x1 + w[3 * j + 1].value * x2 +
               w[3 * j + 2].value * x3;
      // A neuron whose output connection is the fixed-zero allele is pruned
      // from the graph; evaluating it anyway would let an out-of-domain NaN
      // (e.g. a guarded reciprocal) leak through the 0 * NaN product.
      t.h[j] = w[9 + j].allele != 0 ? melt_act_eval(melt_act(j), t.z[j]) : 0.0;
    }
    t.out = w[9].value * t.h[0] + w[10].value * t.h[1] + w[11].value * t.h[2] +
            w[12].value;
  }
};

/// Binds a genome to a network. Fixed alleles resolve to their constants;
/// trainable slots are initialized uniformly in [-init_range, init_range]
/// from `init_seed`, in slot order.
inline PnnNetwork build_network(const Genome& genome, const Topology& topo,
                                std::shared_ptr<const ForceModel> force,
                                std::uint64_t init_seed,
                                double init_range = 0.1) {
  validate_genome(genome, topo);
  if (topo.kind == TopologyKind::Dynamics && !force)
    throw ValidationError("dynamics networks need a force model");
  PnnNetwork net;
  net.topology = topo;
  net.genome = genome;
  net.force = std::move(force);
  auto rng = make_engine(init_seed);
  std::uniform_real_distribution<double> dist(-init_range, init_range);
  net.weights.reserve(genome.weight_alleles.size());
  for (auto code : genome.weight_alleles) {
    WeightGene w;
    w.allele = code;
    w.trainable = weight_allele_trainable(topo.kind, code);
    w.value = w.trainable ? dist(rng) : fixed_weight_value(topo, code);
    net.weights.push_back(w);
  }
  return net;
}

}  // namespace pnn
