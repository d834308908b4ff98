#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "pnn/error.hpp"
#include "pnn/evolve.hpp"
#include "pnn/extract.hpp"
#include "pnn/force_subnet.hpp"
#include "pnn/melting.hpp"
#include "pnn/network.hpp"
#include "pnn/rollout.hpp"

namespace pnn {

// Key order is kept stable so identical runs produce byte-identical files.
using ojson = nlohmann::ordered_json;

inline void write_json_file(const std::string& path, const ojson& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open file for writing: " + path);
  out << j.dump(2) << '\n';
}

inline ojson read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  try {
    return ojson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed JSON in " + path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Force stand-in.

inline ojson subnet_to_json(const ForceSubnet& s) {
  ojson j;
  j["sizes"] = s.net.sizes;
  j["weights"] = s.net.W;
  j["biases"] = s.net.b;
  j["x_shift"] = s.x_shift;
  j["x_scale"] = s.x_scale;
  j["f_shift"] = s.f_shift;
  j["f_scale"] = s.f_scale;
  j["fit_rmse"] = s.fit_rmse;
  return j;
}

inline ForceSubnet subnet_from_json(const ojson& j) {
  try {
    ForceSubnet s;
    s.net.sizes = j.at("sizes").get<std::vector<int>>();
    s.net.W = j.at("weights").get<std::vector<std::vector<double>>>();
    s.net.b = j.at("biases").get<std::vector<std::vector<double>>>();
    s.x_shift = j.at("x_shift").get<double>();
    s.x_scale = j.at("x_scale").get<double>();
    s.f_shift = j.at("f_shift").get<double>();
    s.f_scale = j.at("f_scale").get<double>();
    s.fit_rmse = j.at("fit_rmse").get<double>();
    if (s.net.sizes.size() < 2 ||
        s.net.W.size() != s.net.sizes.size() - 1 ||
        s.net.b.size() != s.net.sizes.size() - 1)
      throw ValidationError("inconsistent layer shapes");
    for (std::size_t l = 0; l < s.net.W.size(); ++l) {
      const std::size_t n_out = s.net.sizes[l + 1], n_in = s.net.sizes[l];
      if (s.net.W[l].size() != n_out * n_in || s.net.b[l].size() != n_out)
        throw ValidationError("inconsistent layer shapes");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad force model file: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Candidate networks. Fixed genes serialize as symbolic tags so the file
// stays readable and re-binds exactly under a different dt; trainable genes
// carry their current value.

inline ojson network_to_json(const PnnNetwork& net,
                             std::optional<std::string> force_subnet_path,
                             ojson metrics = ojson::object()) {
  ojson j;
  const bool dynamics = net.topology.kind == TopologyKind::Dynamics;
  j["topology"] = dynamics ? "dynamics" : "melting";
  if (dynamics) j["dt"] = net.topology.dt;
  ojson genes = ojson::array();
  for (const auto& w : net.weights) {
    ojson g;
    if (w.trainable) {
      g["allele"] = "trainable";
      g["value"] = w.value;
    } else {
      g["allele"] = "fixed";
      g["value_tag"] = weight_allele_tag(net.topology.kind, w.allele);
    }
    genes.push_back(std::move(g));
  }
  j["weight_genes"] = std::move(genes);
  ojson acts = ojson::array();
  for (int i = 0; i < net.topology.activation_slots(); ++i)
    acts.push_back(dynamics ? act_name(net.act(i))
                            : melt_act_name(net.melt_act(i)));
  j["activation_genes"] = std::move(acts);
  if (force_subnet_path)
    j["force_subnet_path"] = *force_subnet_path;
  else
    j["force_subnet_path"] = nullptr;
  j["metrics"] = std::move(metrics);
  return j;
}

inline ojson scored_metrics(const ScoredIndividual& s) {
  ojson m;
  m["genome_id"] = s.genome.id();
  m["train_mse"] = s.train_mse;
  m["val_mse"] = s.val_mse;
  m["test_mse"] = s.test_mse;
  m["weight_score"] = s.weight_score;
  m["activation_score"] = s.activation_score;
  m["complexity"] = s.complexity;
  m["objective"] = s.objective;
  m["diverged"] = s.diverged;
  m["epochs_run"] = s.epochs_run;
  return m;
}

namespace detail {

inline std::uint8_t act_code_from_name(TopologyKind kind,
                                       const std::string& name) {
  if (kind == TopologyKind::Dynamics) {
    for (std::uint8_t c = 0; c < 4; ++c)
      if (name == act_name(static_cast<Act>(c))) return c;
  } else {
    for (std::uint8_t c = 0; c < 3; ++c)
      if (name == melt_act_name(static_cast<MeltAct>(c))) return c;
  }
  throw ValidationError("unknown activation name '" + name + "'");
}

}  // namespace detail

/// Rebuilds a network from its JSON form. `base_dir` anchors a relative
/// force_subnet_path; when the file names no stand-in, `fallback_force`
/// supplies the force law a dynamics network needs.
inline PnnNetwork network_from_json(
    const ojson& j, const std::string& base_dir = ".",
    std::shared_ptr<const ForceModel> fallback_force = nullptr) {
  try {
    const std::string topo_name = j.at("topology").get<std::string>();
    Topology topo;
    if (topo_name == "dynamics")
      topo = Topology::dynamics(j.at("dt").get<double>());
    else if (topo_name == "melting")
      topo = Topology::melting();
    else
      throw ValidationError("unknown topology '" + topo_name + "'");

    Genome genome;
    genome.kind = topo.kind;
    std::vector<double> trainable_values;
    for (const auto& g : j.at("weight_genes")) {
      const std::string allele = g.at("allele").get<std::string>();
      if (allele == "trainable") {
        genome.weight_alleles.push_back(
            topo.kind == TopologyKind::Dynamics ? kTrainableDynamics
                                                : kTrainableMelting);
        trainable_values.push_back(g.at("value").get<double>());
      } else if (allele == "fixed") {
        genome.weight_alleles.push_back(weight_allele_from_tag(
            topo.kind, g.at("value_tag").get<std::string>()));
      } else {
        throw ValidationError("unknown allele kind '" + allele + "'");
      }
    }
    for (const auto& a : j.at("activation_genes"))
      genome.activation_alleles.push_back(
          detail::act_code_from_name(topo.kind, a.get<std::string>()));

    std::shared_ptr<const ForceModel> force;
    if (topo.kind == TopologyKind::Dynamics) {
      const auto& path_field = j.at("force_subnet_path");
      if (!path_field.is_null()) {
        const std::filesystem::path p = path_field.get<std::string>();
        const auto resolved =
            p.is_absolute() ? p : std::filesystem::path(base_dir) / p;
        force = std::make_shared<ForceSubnet>(
            subnet_from_json(read_json_file(resolved.string())));
      } else if (fallback_force) {
        force = std::move(fallback_force);
      } else {
        throw ValidationError(
            "network names no force stand-in and none was supplied");
      }
    }

    PnnNetwork net = build_network(genome, topo, force, /*init_seed=*/0);
    net.set_trainable_values(trainable_values);
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad network file: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Reports.

inline ojson symbolic_to_json(const SymbolicStep& s) {
  ojson j;
  j["dt"] = s.dt;
  j["m_xx"] = s.m_xx;
  j["m_xv"] = s.m_xv;
  j["m_vx"] = s.m_vx;
  j["m_vv"] = s.m_vv;
  j["f_x"] = s.f_x;
  j["f_v"] = s.f_v;
  j["q_x"] = s.q_x;
  j["q_v"] = s.q_v;
  j["force_engaged"] = s.force_engaged;
  return j;
}

inline SymbolicStep symbolic_from_json(const ojson& j) {
  try {
    SymbolicStep s;
    s.dt = j.at("dt").get<double>();
    s.m_xx = j.at("m_xx").get<double>();
    s.m_xv = j.at("m_xv").get<double>();
    s.m_vx = j.at("m_vx").get<double>();
    s.m_vv = j.at("m_vv").get<double>();
    s.f_x = j.at("f_x").get<double>();
    s.f_v = j.at("f_v").get<double>();
    s.q_x = j.at("q_x").get<double>();
    s.q_v = j.at("q_v").get<double>();
    s.force_engaged = j.at("force_engaged").get<bool>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad symbolic-step record: ") + e.what());
  }
}

inline ojson match_to_json(const TemplateMatch& m) {
  ojson j;
  j["template"] = template_name(m.kind);
  j["matched"] = m.matched;
  j["max_deviation"] = m.max_deviation;
  ojson d = ojson::object();
  for (const auto& [name, dev] : m.deviations) d[name] = dev;
  j["deviations"] = std::move(d);
  return j;
}

inline ojson rollout_to_json(const RolloutReport& r) {
  ojson j;
  j["requested_steps"] = r.requested_steps;
  j["completed_steps"] = r.completed_steps;
  j["diverged"] = r.diverged;
  j["initial_energy"] = r.initial_energy;
  j["max_abs_drift"] = r.max_abs_drift;
  j["final_x"] = r.final_state.x;
  j["final_v"] = r.final_state.v;
  return j;
}

inline ojson reversibility_to_json(const ReversibilityReport& r) {
  ojson j;
  j["forward_steps"] = r.forward_steps;
  j["diverged"] = r.diverged;
  j["error_x"] = r.error_x;
  j["error_v"] = r.error_v;
  j["turnaround_x"] = r.turnaround.x;
  j["turnaround_v"] = r.turnaround.v;
  j["returned_x"] = r.returned.x;
  j["returned_v"] = r.returned.v;
  return j;
}

inline ojson rmse_to_json(const RmseReport& r) {
  ojson j;
  j["train"] = {{"x", r.train_x}, {"v", r.train_v}, {"total", r.train_total}};
  j["val"] = {{"x", r.val_x}, {"v", r.val_v}, {"total", r.val_total}};
  j["test"] = {{"x", r.test_x}, {"v", r.test_v}, {"total", r.test_total}};
  return j;
}

inline ojson history_to_json(const std::vector<GenerationStats>& history) {
  ojson arr = ojson::array();
  for (const auto& g : history) {
    ojson j;
    j["generation"] = g.generation;
    j["best_objective"] = g.best_objective;
    j["mean_objective"] = g.mean_objective;
    j["divergent"] = g.divergent;
    j["best_id"] = g.best_id;
    arr.push_back(std::move(j));
  }
  return arr;
}

inline ojson readout_to_json(const MeltLawReadout& law) {
  ojson j;
  j["genome_id"] = law.genome_id;
  j["bias"] = law.bias;
  j["bias_active"] = law.bias_active;
  ojson terms = ojson::array();
  for (const auto& t : law.terms) {
    ojson tj;
    tj["activation"] = melt_act_name(t.act);
    tj["in_weights"] = {t.in_w[0], t.in_w[1], t.in_w[2]};
    tj["in_active"] = {t.in_active[0], t.in_active[1], t.in_active[2]};
    tj["out_weight"] = t.out_w;
    terms.push_back(std::move(tj));
  }
  j["terms"] = std::move(terms);
  j["reduced_form"] = render_melting_law(law);
  j["temperature_form"] = render_melting_law_kelvin(law);
  return j;
}

}  // namespace pnn
