// Command-line driver. Ten subcommands cover the full workflow: simulate
// particle data, pretrain the force stand-in, fit the black-box baseline,
// evolve integrator networks, probe and extract them, and run the melting-law
// lane from materials ingest (local file or remote service) through evolution
// and complexity-accuracy analysis.
//
// Every invocation writes one run directory <out>/<mode>-<hash8>, where the
// hash covers the fully resolved configuration; re-running the same config
// reuses the same directory and reproduces the same bytes. Each run ends with
// manifest.json echoing that configuration. Exit codes: 0 success, 1 bad
// invocation, 2 bad data, 3 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli_common.hpp"
#include "pnn/baseline.hpp"
#include "pnn/evolve.hpp"
#include "pnn/extract.hpp"
#include "pnn/materials_client.hpp"
#include "pnn/pareto.hpp"
#include "pnn/reference_genomes.hpp"
#include "pnn/rollout.hpp"
#include "pnn/serialize.hpp"

namespace fs = std::filesystem;
using pnn::ojson;
using pnncli::ConfigBuilder;
using pnncli::RunContext;
using pnncli::UsageError;

namespace {

// ---------------------------------------------------------------------------
// Shared option groups and config readers.

void add_common(ConfigBuilder& b) {
  b.add<std::string>("--out", "out", "runs",
                     "parent directory for run outputs");
  b.add<int>("--threads", "threads", 0,
             "worker thread cap (0 = all hardware threads)");
}

pnn::ErrorSource parse_error_source(const ojson& cfg) {
  const std::string s = cfg.at("error_source").get<std::string>();
  if (s == "test") return pnn::ErrorSource::Test;
  if (s == "val") return pnn::ErrorSource::Val;
  if (s == "train") return pnn::ErrorSource::Train;
  throw UsageError("error_source must be test, val, or train, got '" + s +
                   "'");
}

void add_ga_options(ConfigBuilder& b) {
  b.add<int>("--pop", "pop", 200, "population size");
  b.add<int>("--gens", "gens", 50, "number of generations");
  b.add<double>("--crossover", "crossover", 0.7,
                "two-point crossover probability");
  b.add<double>("--mutation", "mutation", 0.05,
                "per-locus mutation probability");
  b.add<int>("--tournament", "tournament", 3, "tournament size");
  b.add<int>("--elitism", "elitism", 2, "elites copied unchanged");
  b.add<int>("--hof", "hof", 10, "hall-of-fame size");
  b.add<double>("--parsimony", "parsimony", 1.0,
                "weight of structure cost against accuracy");
  b.add<double>("--f1-offset", "f1_offset", 13.0,
                "offset added to log10(mse) in the accuracy term");
  b.add<double>("--f1-floor", "f1_floor", 0.0,
                "lower clamp of the accuracy term");
  b.add<std::string>("--error-source", "error_source", "test",
                     "split feeding the accuracy term: test, val, or train");
  b.add<std::uint64_t>("--seed", "seed", 1, "run seed");
}

pnn::GaConfig ga_from_cfg(const ojson& cfg) {
  pnn::GaConfig gc;
  gc.population = cfg.at("pop").get<int>();
  gc.generations = cfg.at("gens").get<int>();
  gc.crossover_prob = cfg.at("crossover").get<double>();
  gc.mutation_prob = cfg.at("mutation").get<double>();
  gc.tournament_size = cfg.at("tournament").get<int>();
  gc.elitism = cfg.at("elitism").get<int>();
  gc.hof_size = cfg.at("hof").get<int>();
  gc.seed = cfg.at("seed").get<std::uint64_t>();
  gc.threads = cfg.at("threads").get<int>();
  return gc;
}

pnn::ObjectiveConfig objective_from_cfg(const ojson& cfg) {
  pnn::ObjectiveConfig oc;
  oc.parsimony = cfg.at("parsimony").get<double>();
  oc.f1_offset = cfg.at("f1_offset").get<double>();
  oc.f1_floor = cfg.at("f1_floor").get<double>();
  oc.source = parse_error_source(cfg);
  return oc;
}

// ---------------------------------------------------------------------------
// Run-directory loading. Consumers recover simulation metadata (timestep,
// damping) from the producing run's manifest rather than from flags, so a
// run directory is the complete interface between stages.

struct DataRun {
  pnn::DatasetBundle bundle;  // trajectories included, test orbit last
};

DataRun load_data_run(const std::string& dir) {
  const ojson manifest = pnncli::read_run_manifest(dir);
  if (manifest.at("mode").get<std::string>() != "gen-data")
    throw pnn::ValidationError(dir + " is not a gen-data run directory");
  const ojson& cfg = manifest.at("config");
  DataRun d;
  d.bundle =
      pnn::dataset_from_csv((fs::path(dir) / "dataset.csv").string());
  d.bundle.dt_data =
      cfg.at("dt_fine").get<double>() * cfg.at("stride").get<int>();
  d.bundle.gamma = cfg.at("gamma").get<double>();
  for (const auto& entry : manifest.at("artifacts")) {
    const std::string name = entry.get<std::string>();
    if (name.rfind("traj_", 0) == 0)
      d.bundle.trajectories.push_back(
          pnn::trajectory_from_csv((fs::path(dir) / name).string()));
  }
  if (d.bundle.trajectories.empty())
    throw pnn::ValidationError("no trajectory files listed in " + dir);
  return d;
}

/// Probes start from the held-out test orbit's turning point.
pnn::State probe_start(const DataRun& d) {
  const auto& row = d.bundle.trajectories.back().rows.front();
  return {row.x, row.v};
}

void write_probe_reports(RunContext& ctx, const pnn::StepMap& map,
                         const DataRun& d, int rollout_steps, int rev_steps,
                         ojson& report) {
  const pnn::LjPotential pot;
  const pnn::State start = probe_start(d);
  const pnn::RolloutReport roll = pnn::rollout(map, pot, start, rollout_steps);
  const pnn::ReversibilityReport rev =
      pnn::reversibility_probe(map, start, rev_steps);
  pnn::rollout_to_csv(ctx.path("rollout.csv"), roll);
  ctx.note("rollout.csv");
  pnn::reversibility_to_csv(ctx.path("reversibility.csv"), rev);
  ctx.note("reversibility.csv");
  report["rollout"] = pnn::rollout_to_json(roll);
  report["reversibility"] = pnn::reversibility_to_json(rev);
}

void finish(RunContext& ctx, const ojson& extra = ojson::object()) {
  pnncli::write_manifest(ctx, extra);
  std::cout << ctx.dir.string() << "\n";
}

// ---------------------------------------------------------------------------
// gen-data

void run_gen_data(const ojson& cfg) {
  RunContext ctx = pnncli::open_run("gen-data", cfg);
  pnn::SimConfig sim;
  sim.dt_fine = cfg.at("dt_fine").get<double>();
  sim.stride = cfg.at("stride").get<int>();
  sim.total_steps = cfg.at("total_steps").get<int>();
  sim.energies = cfg.at("energies").get<std::vector<double>>();
  sim.gamma = cfg.at("gamma").get<double>();
  sim.val_fraction = cfg.at("val_fraction").get<double>();
  sim.seed = cfg.at("seed").get<std::uint64_t>();

  const pnn::DatasetBundle b = pnn::generate_dataset(pnn::LjPotential{}, sim);
  pnn::dataset_to_csv(ctx.path("dataset.csv"), b);
  ctx.note("dataset.csv");
  for (std::size_t i = 0; i < b.trajectories.size(); ++i) {
    const std::string name = "traj_" + std::to_string(i) + ".csv";
    pnn::trajectory_to_csv(ctx.path(name), b.trajectories[i]);
    ctx.note(name);
  }
  ojson report;
  report["dt_data"] = b.dt_data;
  report["rows"] = {{"train", b.train.rows.size()},
                    {"val", b.val.rows.size()},
                    {"test", b.test.rows.size()}};
  report["trajectories"] = b.trajectories.size();
  pnn::write_json_file(ctx.path("report.json"), report);
  ctx.note("report.json");
  finish(ctx);
}

// ---------------------------------------------------------------------------
// pretrain-force

void run_pretrain_force(const ojson& cfg) {
  const std::string data =
      pnncli::require_path(cfg, "data", "data run directory");
  RunContext ctx = pnncli::open_run("pretrain-force", cfg);
  const DataRun d = load_data_run(data);

  const pnn::LjPotential pot;
  const auto samples = pnn::force_samples(pot, d.bundle.trajectories,
                                          cfg.at("sample_stride").get<int>());
  pnn::ForceFitConfig fc;
  fc.hidden = cfg.at("hidden").get<std::vector<int>>();
  fc.fit.epochs = cfg.at("epochs").get<int>();
  fc.fit.lr0 = cfg.at("lr0").get<double>();
  fc.fit.lr_final = cfg.at("lr_final").get<double>();
  fc.fit.patience = cfg.at("patience").get<int>();
  fc.val_fraction = cfg.at("val_fraction").get<double>();
  fc.min_samples = cfg.at("min_samples").get<std::size_t>();
  fc.seed = cfg.at("seed").get<std::uint64_t>();
  fc.max_retries = cfg.at("max_retries").get<int>();

  const pnn::ForceSubnet subnet = pnn::pretrain_force_subnet(samples, fc);
  pnn::write_json_file(ctx.path("force.json"), pnn::subnet_to_json(subnet));
  ctx.note("force.json");
  ojson report;
  report["fit_rmse"] = subnet.fit_rmse;
  report["samples"] = samples.size();
  report["trajectories"] = d.bundle.trajectories.size();
  pnn::write_json_file(ctx.path("report.json"), report);
  ctx.note("report.json");
  finish(ctx);
}

// ---------------------------------------------------------------------------
// baseline

void run_baseline(const ojson& cfg) {
  const std::string data =
      pnncli::require_path(cfg, "data", "data run directory");
  RunContext ctx = pnncli::open_run("baseline", cfg);
  const DataRun d = load_data_run(data);

  pnn::BaselineConfig bc;
  bc.hidden = cfg.at("hidden").get<std::vector<int>>();
  bc.fit.epochs = cfg.at("epochs").get<int>();
  bc.fit.lr0 = cfg.at("lr0").get<double>();
  bc.fit.lr_final = cfg.at("lr_final").get<double>();
  bc.fit.patience = cfg.at("patience").get<int>();
  bc.max_train_rows = cfg.at("max_train_rows").get<std::size_t>();
  bc.seed = cfg.at("seed").get<std::uint64_t>();
  bc.max_retries = cfg.at("max_retries").get<int>();

  const pnn::BaselineResult res = pnn::train_baseline(d.bundle, bc);
  ojson report;
  report["fit"] = {{"train_mse", res.fit.train_mse},
                   {"val_mse", res.fit.val_mse},
                   {"epochs_run", res.fit.epochs_run},
                   {"diverged", res.fit.diverged}};
  report["rmse"] = pnn::rmse_to_json(res.rmse);
  write_probe_reports(ctx, res.model.step_map(), d,
                      cfg.at("rollout_steps").get<int>(),
                      cfg.at("reversibility_steps").get<int>(), report);
  pnn::write_json_file(ctx.path("report.json"), report);
  ctx.note("report.json");
  finish(ctx);
}

// ---------------------------------------------------------------------------
// evolve

pnn::TrainConfig dynamics_train_from_cfg(const ojson& cfg) {
  pnn::TrainConfig tc = pnn::TrainConfig::dynamics_defaults();
  tc.epochs = cfg.at("epochs").get<int>();
  tc.lr0 = cfg.at("lr0").get<double>();
  tc.lr_final = cfg.at("lr_final").get<double>();
  tc.patience = cfg.at("patience").get<int>();
  tc.max_train_rows = cfg.at("max_train_rows").get<std::size_t>();
  tc.max_val_rows = cfg.at("max_val_rows").get<std::size_t>();
  tc.init_range = cfg.at("init_range").get<double>();
  return tc;
}

void write_history_csv(const std::string& path,
                       const std::vector<pnn::GenerationStats>& history) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"generation", "best_objective", "mean_objective"});
  for (const auto& h : history)
    rows.push_back({std::to_string(h.generation),
                    pnn::csv::fmt(h.best_objective),
                    pnn::csv::fmt(h.mean_objective)});
  pnn::csv::write_rows(path, rows);
}

std::vector<pnn::ParetoPoint> evaluation_points(const pnn::GaResult& res) {
  std::vector<pnn::ParetoPoint> pts;
  pts.reserve(res.evaluation_log.size());
  for (const auto& e : res.evaluation_log)
    pts.push_back(
        {e.genome_id, e.complexity, std::sqrt(e.test_mse), false});
  pnn::mark_pareto_front(pts);
  std::sort(pts.begin(), pts.end(),
            [](const pnn::ParetoPoint& a, const pnn::ParetoPoint& b) {
              if (a.complexity != b.complexity)
                return a.complexity < b.complexity;
              if (a.test_rmse != b.test_rmse) return a.test_rmse < b.test_rmse;
              return a.genome_id < b.genome_id;
            });
  return pts;
}

/// Shared tail of both evolution modes: history and evaluation CSVs, the
/// hall-of-fame files, and a manifest embedding history plus serialized
/// hall-of-fame networks. `force_rel` names the force stand-in relative to
/// the run root (empty for melting networks).
ojson write_ga_artifacts(RunContext& ctx, const pnn::GaResult& res,
                         const std::string& force_rel) {
  write_history_csv(ctx.path("history.csv"), res.history);
  ctx.note("history.csv");
  pnn::pareto_to_csv(ctx.path("evaluations.csv"), evaluation_points(res));
  ctx.note("evaluations.csv");

  fs::create_directories(ctx.dir / "hof");
  const auto subnet_path = [&](const std::string& prefix)
      -> std::optional<std::string> {
    if (force_rel.empty()) return std::nullopt;
    return prefix + force_rel;
  };
  ojson hof_entries = ojson::array();
  for (std::size_t k = 0; k < res.hall_of_fame.size(); ++k) {
    const auto& s = res.hall_of_fame[k];
    const ojson entry = pnn::network_to_json(s.net, subnet_path("../"),
                                             pnn::scored_metrics(s));
    const std::string rank =
        "hof/rank_" + std::string(k < 10 ? "0" : "") + std::to_string(k) +
        ".json";
    pnn::write_json_file(ctx.path(rank), entry);
    ctx.note(rank);
    if (k == 0) {
      pnn::write_json_file(ctx.path("hof/best.json"), entry);
      ctx.note("hof/best.json");
    }
    hof_entries.push_back(
        pnn::network_to_json(s.net, subnet_path(""), pnn::scored_metrics(s)));
  }

  ojson extra;
  extra["history"] = pnn::history_to_json(res.history);
  extra["hall_of_fame"] = std::move(hof_entries);
  ojson summary;
  summary["evaluations"] = res.evaluations;
  if (!res.hall_of_fame.empty())
    summary["best"] = pnn::scored_metrics(res.hall_of_fame.front());
  extra["summary"] = std::move(summary);
  return extra;
}

void run_evolve(const ojson& cfg) {
  const std::string data =
      pnncli::require_path(cfg, "data", "data run directory");
  const std::string force_path =
      pnncli::require_path(cfg, "force", "force stand-in file");
  RunContext ctx = pnncli::open_run("evolve", cfg);
  const DataRun d = load_data_run(data);
  const auto force = std::make_shared<const pnn::ForceSubnet>(
      pnn::subnet_from_json(pnn::read_json_file(force_path)));

  const pnn::Topology topo = pnn::Topology::dynamics(d.bundle.dt_data);
  const pnn::ObjectiveConfig ocfg = objective_from_cfg(cfg);
  const pnn::TrainConfig tcfg = dynamics_train_from_cfg(cfg);
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  const pnn::ScoreFn score = [&](const pnn::Genome& g) {
    return pnn::score_dynamics(g, topo, force, d.bundle, ocfg, tcfg, seed);
  };
  const pnn::GaResult res = pnn::run_ga(topo, score, ga_from_cfg(cfg));

  // The run directory is self-contained: hall-of-fame files re-bind against
  // this copy of the stand-in, not against the original path.
  pnn::write_json_file(ctx.path("force.json"), pnn::subnet_to_json(*force));
  ctx.note("force.json");
  finish(ctx, write_ga_artifacts(ctx, res, "force.json"));
}

// ---------------------------------------------------------------------------
// eval

void run_eval(const ojson& cfg) {
  const std::string data =
      pnncli::require_path(cfg, "data", "data run directory");
  RunContext ctx = pnncli::open_run("eval", cfg);
  const DataRun d = load_data_run(data);
  const double dt = d.bundle.dt_data;

  const std::string net_path = cfg.at("net").get<std::string>();
  pnn::PnnNetwork net = [&] {
    if (net_path.empty()) {
      // Reference configuration: the hand-wired second-order integrator with
      // the exact force law.
      pnn::PnnNetwork n = pnn::build_network(
          pnn::position_verlet_genome(), pnn::Topology::dynamics(dt),
          pnn::exact_lj_force(pnn::LjPotential{}), /*init_seed=*/0);
      n.set_trainable_values(pnn::position_verlet_ideal_values(dt, 1.0));
      return n;
    }
    const ojson j = pnn::read_json_file(net_path);
    pnn::PnnNetwork loaded = pnn::network_from_json(
        j, fs::path(net_path).parent_path().string(),
        pnn::exact_lj_force(pnn::LjPotential{}));
    if (loaded.topology.kind != pnn::TopologyKind::Dynamics)
      throw pnn::ValidationError("eval needs a dynamics network");
    if (loaded.topology.dt == dt) return loaded;
    // Symbolic timestep tags re-bind exactly at the dataset's step size;
    // trained values carry over unchanged.
    pnn::PnnNetwork rebound =
        pnn::build_network(loaded.genome, pnn::Topology::dynamics(dt),
                           loaded.force, /*init_seed=*/0);
    rebound.set_trainable_values(loaded.trainable_values());
    return rebound;
  }();

  const pnn::StepMap map = pnn::network_step_map(net);
  ojson report;
  report["dt"] = dt;
  report["rmse"] = pnn::rmse_to_json(pnn::rmse_report(map, d.bundle));
  write_probe_reports(ctx, map, d, cfg.at("rollout_steps").get<int>(),
                      cfg.at("reversibility_steps").get<int>(), report);
  pnn::write_json_file(ctx.path("report.json"), report);
  ctx.note("report.json");
  finish(ctx);
}

// ---------------------------------------------------------------------------
// extract

void run_extract(const ojson& cfg) {
  const std::string genome_path =
      pnncli::require_path(cfg, "genome", "network file");
  RunContext ctx = pnncli::open_run("extract", cfg);
  const ojson j = pnn::read_json_file(genome_path);
  const std::string base_dir = fs::path(genome_path).parent_path().string();
  const std::string kind = j.at("topology").get<std::string>();

  std::string text;
  ojson report;
  if (kind == "melting") {
    const pnn::PnnNetwork net = pnn::network_from_json(j, base_dir);
    const pnn::MeltLawReadout law = pnn::readout_melting_law(net);
    text = pnn::render_melting_law(law) + "\n" +
           pnn::render_melting_law_kelvin(law) + "\n";
    report["kind"] = "melting";
    report["readout"] = pnn::readout_to_json(law);
  } else {
    const double mass = cfg.at("mass").get<double>();
    const double gamma = cfg.at("gamma").get<double>();
    // Extraction reads wiring, never force values, so a zero stand-in is
    // enough when the file names none.
    const pnn::PnnNetwork net =
        pnn::network_from_json(j, base_dir, pnn::zero_force());
    const pnn::SymbolicStep sym = pnn::extract_symbolic(net);
    const pnn::TemplateMatch match = pnn::match_template(
        sym, mass, cfg.at("tolerance").get<double>(), gamma);
    text = pnn::render_equations(sym, pnn::RenderStyle::Raw, mass, gamma) +
           "\n\n" +
           pnn::render_equations(sym, pnn::RenderStyle::Factored, mass,
                                 gamma) +
           "\n\nclosest scheme: " + pnn::template_name(match.kind) +
           (match.matched ? " (matched" : " (not matched") +
           ", max coefficient deviation " + pnn::csv::fmt(match.max_deviation) +
           ")\n";
    report["kind"] = "dynamics";
    report["symbolic"] = pnn::symbolic_to_json(sym);
    report["match"] = pnn::match_to_json(match);
  }

  std::ofstream(ctx.path("equations.txt")) << text;
  ctx.note("equations.txt");
  pnn::write_json_file(ctx.path("extract.json"), report);
  ctx.note("extract.json");
  std::cout << text;
  finish(ctx);
}

// ---------------------------------------------------------------------------
// melt-features

void run_melt_features(const ojson& cfg) {
  const std::string materials =
      pnncli::require_path(cfg, "materials", "materials CSV");
  RunContext ctx = pnncli::open_run("melt-features", cfg);
  const pnn::MaterialsIngest ingest = pnn::materials_from_csv(materials);
  const pnn::FeatureIngest feats = pnn::featureize_materials(
      ingest.records, {}, cfg.at("allow_zero_shear").get<bool>());

  pnn::features_to_csv(ctx.path("features.csv"), feats.features);
  ctx.note("features.csv");
  ojson rejected = ojson::array();
  for (const auto& r : ingest.rejected)
    rejected.push_back({{"stage", "parse"},
                        {"row", r.row},
                        {"name", r.name},
                        {"reason", r.reason}});
  for (const auto& r : feats.rejected)
    rejected.push_back({{"stage", "featureize"},
                        {"row", r.row},
                        {"name", r.name},
                        {"reason", r.reason}});
  ojson report;
  report["accepted"] = feats.features.size();
  report["rejected"] = std::move(rejected);
  pnn::write_json_file(ctx.path("report.json"), report);
  ctx.note("report.json");
  if (feats.features.empty()) {
    pnncli::write_manifest(ctx);
    throw pnn::ValidationError("every row of " + materials +
                               " was rejected; see " +
                               ctx.path("report.json"));
  }
  finish(ctx);
}

// ---------------------------------------------------------------------------
// melt-evolve

void run_melt_evolve(const ojson& cfg) {
  const std::string features_path =
      pnncli::require_path(cfg, "features", "features CSV");
  RunContext ctx = pnncli::open_run("melt-evolve", cfg);
  const std::vector<pnn::MeltFeatures> feats =
      pnn::features_from_csv(features_path);

  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  const pnn::SplitIndices split = pnn::melt_split(
      feats.size(), cfg.at("val_fraction").get<double>(),
      cfg.at("test_fraction").get<double>(), seed);
  const auto train_set = pnn::gather_samples(feats, split.train);
  const auto val_set = pnn::gather_samples(feats, split.val);
  const auto test_set = pnn::gather_samples(feats, split.test);

  pnn::TrainConfig tcfg = pnn::TrainConfig::melting_defaults();
  tcfg.epochs = cfg.at("epochs").get<int>();
  tcfg.lr0 = cfg.at("lr0").get<double>();
  tcfg.lr_final = cfg.at("lr_final").get<double>();
  tcfg.patience = cfg.at("patience").get<int>();
  tcfg.init_range = cfg.at("init_range").get<double>();
  const pnn::ObjectiveConfig ocfg = objective_from_cfg(cfg);
  const pnn::ScoreFn score = [&](const pnn::Genome& g) {
    return pnn::score_melting(g, train_set, val_set, test_set, ocfg, tcfg,
                              seed);
  };
  const pnn::GaResult res =
      pnn::run_ga(pnn::Topology::melting(), score, ga_from_cfg(cfg));
  ojson extra = write_ga_artifacts(ctx, res, "");

  // Published-law comparison over the full feature set, with the Lindemann
  // constant fitted to the same rows.
  std::vector<pnn::MeltSample> all;
  all.reserve(feats.size());
  for (const auto& f : feats) all.push_back(pnn::to_sample(f));
  const double lindemann_C = pnn::fit_lindemann_constant(all);
  ojson laws;
  laws["lindemann_C"] = lindemann_C;
  ojson published = ojson::array();
  for (const pnn::MeltLaw law :
       {pnn::MeltLaw::ProportionalDebye, pnn::MeltLaw::ShearCorrected,
        pnn::MeltLaw::Lindemann, pnn::MeltLaw::BulkCorrected}) {
    published.push_back(
        {{"law", pnn::melt_law_name(law)},
         {"rmse_reduced", pnn::melt_law_rmse(law, all, lindemann_C)},
         {"rmse_kelvin",
          pnn::melt_law_rmse_kelvin(law, feats, lindemann_C)}});
  }
  laws["published"] = std::move(published);
  if (!res.hall_of_fame.empty()) {
    const auto& best = res.hall_of_fame.front();
    const pnn::MeltLawReadout law = pnn::readout_melting_law(best.net);
    laws["discovered"] = {{"reduced_form", pnn::render_melting_law(law)},
                          {"temperature_form",
                           pnn::render_melting_law_kelvin(law)},
                          {"objective", best.objective},
                          {"test_mse", best.test_mse}};
  }
  pnn::write_json_file(ctx.path("laws.json"), laws);
  ctx.note("laws.json");
  finish(ctx, extra);
}

// ---------------------------------------------------------------------------
// melt-fetch

void run_melt_fetch(const ojson& cfg) {
  const auto ids = cfg.at("ids").get<std::vector<std::string>>();
  if (ids.empty()) throw UsageError("no material ids given (--ids)");
  const std::string base_url =
      pnncli::require_path(cfg, "base_url", "service URL");
  RunContext ctx = pnncli::open_run("melt-fetch", cfg);

  pnn::FetchConfig fc;
  fc.base_url = base_url;
  fc.path_template = cfg.at("path_template").get<std::string>();
  fc.max_retries = cfg.at("max_retries").get<int>();
  fc.retry_delay_ms = cfg.at("retry_delay_ms").get<int>();
  fc.timeout_s = cfg.at("timeout").get<int>();
  const std::string cache = cfg.at("cache_dir").get<std::string>();
  if (!cache.empty()) {
    const fs::path p = cache;
    fc.cache_dir = (p.is_absolute() ? p : ctx.dir / p).string();
  }
  // The credential comes from the environment, never from config or flags,
  // so it cannot leak into manifests or shell history.
  const std::string key_env = cfg.at("api_key_env").get<std::string>();
  if (const char* key = std::getenv(key_env.c_str())) fc.api_key = key;

  const pnn::FetchOutcome outcome = pnn::fetch_materials(ids, fc);
  pnn::materials_to_csv(ctx.path("materials.csv"), outcome.records);
  ctx.note("materials.csv");
  ojson rejected = ojson::array();
  for (const auto& r : outcome.rejected)
    rejected.push_back({{"index", r.row},
                        {"id", r.row < ids.size() ? ids[r.row] : r.name},
                        {"reason", r.reason}});
  ojson report;
  report["fetched"] = outcome.records.size();
  report["from_cache"] = outcome.from_cache;
  report["from_network"] = outcome.from_network;
  report["rejected"] = std::move(rejected);
  pnn::write_json_file(ctx.path("report.json"), report);
  ctx.note("report.json");
  if (outcome.records.empty()) {
    pnncli::write_manifest(ctx);
    throw pnn::ValidationError("no material could be fetched; see " +
                               ctx.path("report.json"));
  }
  finish(ctx);
}

// ---------------------------------------------------------------------------
// pareto

void run_pareto(const ojson& cfg) {
  const std::string points_path =
      pnncli::require_path(cfg, "points", "evaluation CSV");
  RunContext ctx = pnncli::open_run("pareto", cfg);
  std::vector<pnn::ParetoPoint> pts = pnn::pareto_from_csv(points_path);
  pnn::mark_pareto_front(pts);
  std::sort(pts.begin(), pts.end(),
            [](const pnn::ParetoPoint& a, const pnn::ParetoPoint& b) {
              if (a.complexity != b.complexity)
                return a.complexity < b.complexity;
              if (a.test_rmse != b.test_rmse) return a.test_rmse < b.test_rmse;
              return a.genome_id < b.genome_id;
            });
  pnn::pareto_to_csv(ctx.path("pareto.csv"), pts);
  ctx.note("pareto.csv");
  std::size_t front = 0;
  for (const auto& p : pts) front += p.on_front ? 1 : 0;
  ojson report;
  report["points"] = pts.size();
  report["front_size"] = front;
  pnn::write_json_file(ctx.path("report.json"), report);
  ctx.note("report.json");
  finish(ctx);
}

// ---------------------------------------------------------------------------
// Wiring.

using Runner = void (*)(const ojson&);

ConfigBuilder* add_mode(CLI::App& app,
                        std::vector<std::unique_ptr<ConfigBuilder>>& keep,
                        const std::string& name, const std::string& desc,
                        Runner runner) {
  CLI::App* cmd = app.add_subcommand(name, desc);
  keep.push_back(std::make_unique<ConfigBuilder>(cmd));
  ConfigBuilder* b = keep.back().get();
  cmd->callback([b, runner] { runner(b->resolve()); });
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Evolves tiny mixed fixed/trainable networks into interpretable time "
      "integrators and melting-temperature laws"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  std::vector<std::unique_ptr<ConfigBuilder>> keep;

  {
    auto* b = add_mode(app, keep, "gen-data",
                       "Simulate trajectories and write the step dataset",
                       run_gen_data);
    add_common(*b);
    b->add<std::uint64_t>("--seed", "seed", 1, "run seed");
    b->add<double>("--dt-fine", "dt_fine", 1e-4, "fine integration timestep");
    b->add<int>("--stride", "stride", 10, "fine steps per data step");
    b->add<int>("--total-steps", "total_steps", 15000,
                "fine steps per trajectory");
    b->add<std::vector<double>>(
        "--energies", "energies", {-0.8, -0.7, -0.6, -0.5, -0.65},
        "total energies, one trajectory each; the last is the held-out "
        "test orbit (comma-separated)",
        /*comma_list=*/true);
    b->add<double>("--gamma", "gamma", 0.0, "velocity damping coefficient");
    b->add<double>("--val-fraction", "val_fraction", 0.20,
                   "fraction of step pairs held out for validation");
  }
  {
    auto* b = add_mode(app, keep, "pretrain-force",
                       "Fit the frozen force stand-in from trajectory data",
                       run_pretrain_force);
    add_common(*b);
    b->add<std::string>("--data", "data", "",
                        "gen-data run directory (required)");
    b->add<int>("--sample-stride", "sample_stride", 10,
                "keep every n-th trajectory row as a force sample");
    b->add<std::vector<int>>("--hidden", "hidden", {20, 20},
                             "hidden layer sizes (comma-separated)",
                             /*comma_list=*/true);
    b->add<int>("--epochs", "epochs", 6000, "training epochs");
    b->add<double>("--lr0", "lr0", 5e-3, "initial learning rate");
    b->add<double>("--lr-final", "lr_final", 1e-6, "final learning rate");
    b->add<int>("--patience", "patience", 800, "early-stopping patience");
    b->add<double>("--val-fraction", "val_fraction", 0.15,
                   "held-out fraction for early stopping");
    b->add<std::size_t>("--min-samples", "min_samples", 50,
                        "minimum force samples required");
    b->add<std::uint64_t>("--seed", "seed", 1, "run seed");
    b->add<int>("--max-retries", "max_retries", 3,
                "re-initializations after a divergent fit");
  }
  {
    auto* b = add_mode(app, keep, "baseline",
                       "Train the black-box step predictor and probe it",
                       run_baseline);
    add_common(*b);
    b->add<std::string>("--data", "data", "",
                        "gen-data run directory (required)");
    b->add<std::vector<int>>("--hidden", "hidden", {32, 32},
                             "hidden layer sizes (comma-separated)",
                             /*comma_list=*/true);
    b->add<int>("--epochs", "epochs", 6000, "training epochs");
    b->add<double>("--lr0", "lr0", 3e-3, "initial learning rate");
    b->add<double>("--lr-final", "lr_final", 1e-6, "final learning rate");
    b->add<int>("--patience", "patience", 800, "early-stopping patience");
    b->add<std::size_t>("--max-train-rows", "max_train_rows", 0,
                        "training row cap (0 = all)");
    b->add<std::uint64_t>("--seed", "seed", 1, "run seed");
    b->add<int>("--max-retries", "max_retries", 3,
                "re-initializations after a divergent fit");
    b->add<int>("--rollout-steps", "rollout_steps", 1000,
                "energy-drift probe length");
    b->add<int>("--reversibility-steps", "reversibility_steps", 1000,
                "time-reversal probe length per leg");
  }
  {
    auto* b = add_mode(app, keep, "evolve",
                       "Evolve integrator networks against the step dataset",
                       run_evolve);
    add_common(*b);
    b->add<std::string>("--data", "data", "",
                        "gen-data run directory (required)");
    b->add<std::string>("--force", "force", "",
                        "force stand-in JSON from pretrain-force (required)");
    add_ga_options(*b);
    b->add<int>("--epochs", "epochs", 2500, "per-genome training epochs");
    b->add<double>("--lr0", "lr0", 1e-2, "initial learning rate");
    b->add<double>("--lr-final", "lr_final", 1e-10, "final learning rate");
    b->add<int>("--patience", "patience", 400, "early-stopping patience");
    b->add<std::size_t>("--max-train-rows", "max_train_rows", 0,
                        "per-genome training row cap (0 = all)");
    b->add<std::size_t>("--max-val-rows", "max_val_rows", 0,
                        "per-genome validation row cap (0 = all)");
    b->add<double>("--init-range", "init_range", 0.1,
                   "uniform init range for trainable weights");
  }
  {
    auto* b = add_mode(app, keep, "eval",
                       "Probe a network (default: the hand-wired "
                       "second-order integrator with the exact force)",
                       run_eval);
    add_common(*b);
    b->add<std::string>("--data", "data", "",
                        "gen-data run directory (required)");
    b->add<std::string>("--net", "net", "",
                        "network JSON to evaluate (default: hand-wired "
                        "reference integrator)");
    b->add<int>("--rollout-steps", "rollout_steps", 1000,
                "energy-drift probe length");
    b->add<int>("--reversibility-steps", "reversibility_steps", 1000,
                "time-reversal probe length per leg");
  }
  {
    auto* b = add_mode(app, keep, "extract",
                       "Read a serialized network back as closed-form "
                       "update equations",
                       run_extract);
    add_common(*b);
    b->add<std::string>("--genome", "genome", "",
                        "network JSON file (required)");
    b->add<double>("--mass", "mass", 1.0, "particle mass for factoring");
    b->add<double>("--gamma", "gamma", 0.0,
                   "damping coefficient the data was generated with");
    b->add<double>("--tolerance", "tolerance", 1e-2,
                   "max coefficient deviation for a template match");
  }
  {
    auto* b = add_mode(app, keep, "melt-features",
                       "Validate a materials table and derive model features",
                       run_melt_features);
    add_common(*b);
    b->add<std::string>("--materials", "materials", "",
                        "materials CSV file (required)");
    b->add_flag("--allow-zero-shear", "allow_zero_shear", false,
                "accept rows with zero shear modulus (longitudinal-only "
                "sound speed)");
  }
  {
    auto* b = add_mode(app, keep, "melt-evolve",
                       "Evolve melting-law networks against a feature table",
                       run_melt_evolve);
    add_common(*b);
    b->add<std::string>("--features", "features", "",
                        "features CSV from melt-features (required)");
    b->add<double>("--val-fraction", "val_fraction", 0.15,
                   "fraction of rows held out for validation");
    b->add<double>("--test-fraction", "test_fraction", 0.15,
                   "fraction of rows held out for testing");
    add_ga_options(*b);
    b->add<int>("--epochs", "epochs", 3000, "per-genome training epochs");
    b->add<double>("--lr0", "lr0", 0.3, "initial learning rate");
    b->add<double>("--lr-final", "lr_final", 1e-7, "final learning rate");
    b->add<int>("--patience", "patience", 500, "early-stopping patience");
    b->add<double>("--init-range", "init_range", 0.1,
                   "uniform init range for trainable weights");
  }
  {
    auto* b = add_mode(app, keep, "melt-fetch",
                       "Fetch material properties from a remote service",
                       run_melt_fetch);
    add_common(*b);
    b->add<std::vector<std::string>>("--ids", "ids", {},
                                     "material ids to fetch "
                                     "(comma-separated, required)",
                                     /*comma_list=*/true);
    b->add<std::string>("--base-url", "base_url", "",
                        "service base URL (required)");
    b->add<std::string>("--path-template", "path_template",
                        "/materials/{id}", "request path; {id} is replaced");
    b->add<std::string>("--cache-dir", "cache_dir", "cache",
                        "response cache (relative to the run directory; "
                        "empty disables)");
    b->add<std::string>("--api-key-env", "api_key_env",
                        "PNN_MATERIALS_API_KEY",
                        "environment variable holding the bearer token");
    b->add<int>("--max-retries", "max_retries", 3,
                "transport retries per id");
    b->add<int>("--retry-delay-ms", "retry_delay_ms", 200,
                "initial retry delay, doubled per attempt");
    b->add<int>("--timeout", "timeout", 5, "per-request timeout in seconds");
  }
  {
    auto* b = add_mode(app, keep, "pareto",
                       "Mark the complexity-accuracy front in an "
                       "evaluation CSV",
                       run_pareto);
    add_common(*b);
    b->add<std::string>("--points", "points", "",
                        "evaluation CSV from an evolution run (required)");
  }

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const pnn::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const pnn::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
