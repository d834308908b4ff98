#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "pnn/objective.hpp"
#include "pnn/train.hpp"

namespace pnn {

struct GaConfig {
  int population = 200;
  int generations = 50;
  double crossover_prob = 0.7;
  double mutation_prob = 0.05;  // per locus
  int tournament_size = 3;
  int elitism = 2;
  int hof_size = 10;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
};

struct ScoredIndividual {
  Genome genome;
  PnnNetwork net;  // trained weights
  double train_mse = std::numeric_limits<double>::infinity();
  double val_mse = std::numeric_limits<double>::infinity();
  double test_mse = std::numeric_limits<double>::infinity();
  int weight_score = 0;
  int activation_score = 0;
  int complexity = 0;
  double objective = std::numeric_limits<double>::infinity();
  bool diverged = false;
  int epochs_run = 0;
};

struct GenerationStats {
  int generation = 0;
  double best_objective = std::numeric_limits<double>::infinity();
  double mean_objective = std::numeric_limits<double>::infinity();  // finite only
  int divergent = 0;
  std::string best_id;
};

/// One line per unique genome ever scored, for complexity-accuracy fronts.
struct EvaluationSummary {
  std::string genome_id;
  int complexity = 0;
  double test_mse = std::numeric_limits<double>::infinity();
  double objective = std::numeric_limits<double>::infinity();
  bool diverged = false;
};

struct GaResult {
  std::vector<ScoredIndividual> hall_of_fame;  // best first
  std::vector<GenerationStats> history;
  std::vector<EvaluationSummary> evaluation_log;  // best objective first
  std::size_t evaluations = 0;  // unique genomes trained and scored
};

// ---------------------------------------------------------------------------
// Variation operators. The genome is treated as one allele string, weights
// then activations, so crossover cuts can land inside either segment.

namespace detail {

inline std::size_t genome_length(const Genome& g) {
  return g.weight_alleles.size() + g.activation_alleles.size();
}

inline std::uint8_t& locus(Genome& g, std::size_t i) {
  return i < g.weight_alleles.size()
             ? g.weight_alleles[i]
             : g.activation_alleles[i - g.weight_alleles.size()];
}

}  // namespace detail

/// Swaps the loci in [i, j) between two copies of the parents, with both cut
/// points drawn uniformly from [0, L]. Cuts at (0, L) swap everything; equal
/// cuts leave the parents unchanged.
inline std::pair<Genome, Genome> two_point_crossover(const Genome& a,
                                                     const Genome& b,
                                                     std::mt19937_64& rng) {
  if (a.kind != b.kind || detail::genome_length(a) != detail::genome_length(b))
    throw ValidationError("crossover parents have different layouts");
  Genome c = a, d = b;
  const std::size_t L = detail::genome_length(a);
  std::uniform_int_distribution<std::size_t> dist(0, L);
  std::size_t i = dist(rng), j = dist(rng);
  if (i > j) std::swap(i, j);
  for (std::size_t k = i; k < j; ++k)
    std::swap(detail::locus(c, k), detail::locus(d, k));
  return {c, d};
}

/// Per-locus resampling mutation. A mutated locus redraws uniformly from its
/// full allele range, so it may land on its current value by chance.
inline void mutate_genome(Genome& g, const Topology& topo, double prob,
                          std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> wdist(0, topo.weight_allele_count() - 1);
  std::uniform_int_distribution<int> adist(0,
                                           topo.activation_allele_count() - 1);
  for (auto& a : g.weight_alleles)
    if (coin(rng) < prob) a = static_cast<std::uint8_t>(wdist(rng));
  for (auto& a : g.activation_alleles)
    if (coin(rng) < prob) a = static_cast<std::uint8_t>(adist(rng));
}

// ---------------------------------------------------------------------------
// Scoring. A scored individual is a pure function of (genome, run seed) given
// fixed data and configuration: the trainable-weight initialization derives
// from the genome id, not from evaluation order. That makes the dedup cache
// exact and the outcome independent of scheduling.

inline std::uint64_t genome_init_seed(std::uint64_t run_seed, const Genome& g) {
  return derive_seed(run_seed, g.id());
}

inline ScoredIndividual score_dynamics(const Genome& g, const Topology& topo,
                                       std::shared_ptr<const ForceModel> force,
                                       const DatasetBundle& data,
                                       const ObjectiveConfig& ocfg,
                                       const TrainConfig& tcfg,
                                       std::uint64_t run_seed) {
  ScoredIndividual s;
  s.genome = g;
  s.weight_score = genome_weight_score(g);
  s.activation_score = genome_activation_score(g);
  s.complexity = s.weight_score + s.activation_score;

  PnnNetwork net = build_network(g, topo, std::move(force),
                                 genome_init_seed(run_seed, g),
                                 tcfg.init_range);
  TrainResult tr = train_network(net, data.train, data.val, tcfg);
  s.net = tr.net;
  s.epochs_run = tr.epochs_run;
  if (tr.diverged) {
    s.diverged = true;
    return s;  // all errors and the objective stay +inf
  }
  s.train_mse = dynamics_mse(tr.net, data.train);
  s.val_mse = data.val.empty() ? s.train_mse : dynamics_mse(tr.net, data.val);
  s.test_mse = dynamics_mse(tr.net, data.test);
  const double err = ocfg.source == ErrorSource::Test    ? s.test_mse
                     : ocfg.source == ErrorSource::Val ? s.val_mse
                                                       : s.train_mse;
  if (!std::isfinite(err)) {
    s.diverged = true;
    return s;
  }
  s.objective = objective_value(err, g, ocfg);
  return s;
}

inline ScoredIndividual score_melting(const Genome& g,
                                      const std::vector<MeltSample>& train_set,
                                      const std::vector<MeltSample>& val_set,
                                      const std::vector<MeltSample>& test_set,
                                      const ObjectiveConfig& ocfg,
                                      const TrainConfig& tcfg,
                                      std::uint64_t run_seed) {
  ScoredIndividual s;
  s.genome = g;
  s.weight_score = genome_weight_score(g);
  s.activation_score = genome_activation_score(g);
  s.complexity = s.weight_score + s.activation_score;

  PnnNetwork net =
      build_network(g, Topology::melting(), nullptr,
                    genome_init_seed(run_seed, g), tcfg.init_range);
  TrainResult tr = train_network(net, train_set, val_set, tcfg);
  s.net = tr.net;
  s.epochs_run = tr.epochs_run;
  if (tr.diverged) {
    s.diverged = true;
    return s;
  }
  s.train_mse = melting_mse(tr.net, train_set);
  s.val_mse = val_set.empty() ? s.train_mse : melting_mse(tr.net, val_set);
  s.test_mse = test_set.empty() ? s.val_mse : melting_mse(tr.net, test_set);
  const double err = ocfg.source == ErrorSource::Test    ? s.test_mse
                     : ocfg.source == ErrorSource::Val ? s.val_mse
                                                       : s.train_mse;
  if (!std::isfinite(err)) {
    s.diverged = true;
    return s;
  }
  s.objective = objective_value(err, g, ocfg);
  return s;
}

// ---------------------------------------------------------------------------
// The evolutionary loop: tournament selection with elitism, two-point
// crossover, per-locus mutation, and a run-wide hall of fame de-duplicated
// by genome id.

using ScoreFn = std::function<ScoredIndividual(const Genome&)>;

namespace detail {

struct CacheEntry {
  std::shared_ptr<const ScoredIndividual> scored;
};

inline bool better(const ScoredIndividual& a, const ScoredIndividual& b) {
  if (a.objective != b.objective) return a.objective < b.objective;
  return a.genome.id() < b.genome.id();
}

}  // namespace detail

inline GaResult run_ga(const Topology& topo, const ScoreFn& score,
                       const GaConfig& cfg) {
  if (cfg.population < 2) throw ValidationError("population must be >= 2");
  if (cfg.generations < 1) throw ValidationError("need at least 1 generation");
  if (cfg.elitism < 0 || cfg.elitism >= cfg.population)
    throw ValidationError("elite count must lie in [0, population)");
  if (cfg.tournament_size < 1)
    throw ValidationError("tournament size must be >= 1");

  auto rng = make_engine(derive_seed(cfg.seed, "ga-loop"));
  std::unordered_map<std::string, std::shared_ptr<const ScoredIndividual>>
      cache;

  auto score_population = [&](const std::vector<Genome>& pop) {
    // Collect genomes not seen before; each is scored exactly once per run.
    std::vector<Genome> pending;
    for (const auto& g : pop) {
      const std::string id = g.id();
      if (!cache.count(id)) {
        cache.emplace(id, nullptr);
        pending.push_back(g);
      }
    }
    std::vector<std::shared_ptr<const ScoredIndividual>> fresh(pending.size());
    unsigned n_threads = cfg.threads > 0
                             ? static_cast<unsigned>(cfg.threads)
                             : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(
        n_threads, static_cast<unsigned>(std::max<std::size_t>(
                       pending.size(), 1)));
    if (n_threads <= 1) {
      for (std::size_t i = 0; i < pending.size(); ++i)
        fresh[i] = std::make_shared<const ScoredIndividual>(score(pending[i]));
    } else {
      std::vector<std::thread> workers;
      std::atomic<std::size_t> next{0};
      for (unsigned w = 0; w < n_threads; ++w)
        workers.emplace_back([&] {
          for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            fresh[i] =
                std::make_shared<const ScoredIndividual>(score(pending[i]));
          }
        });
      for (auto& t : workers) t.join();
    }
    for (std::size_t i = 0; i < pending.size(); ++i)
      cache[pending[i].id()] = fresh[i];
  };

  std::vector<Genome> pop;
  pop.reserve(cfg.population);
  for (int i = 0; i < cfg.population; ++i)
    pop.push_back(random_genome(topo, rng));

  GaResult result;
  for (int gen = 0; gen < cfg.generations; ++gen) {
    score_population(pop);
    std::vector<std::shared_ptr<const ScoredIndividual>> scored;
    scored.reserve(pop.size());
    for (const auto& g : pop) scored.push_back(cache.at(g.id()));

    GenerationStats stats;
    stats.generation = gen;
    double sum = 0.0;
    int finite = 0;
    const ScoredIndividual* best = nullptr;
    for (const auto& s : scored) {
      if (s->diverged) ++stats.divergent;
      if (std::isfinite(s->objective)) {
        sum += s->objective;
        ++finite;
      }
      if (!best || detail::better(*s, *best)) best = s.get();
    }
    stats.best_objective = best ? best->objective
                                : std::numeric_limits<double>::infinity();
    stats.best_id = best ? best->genome.id() : "";
    if (finite > 0) stats.mean_objective = sum / finite;
    result.history.push_back(stats);

    if (gen + 1 == cfg.generations) break;

    // Elites carry over unchanged; the rest through selection + variation.
    std::vector<std::shared_ptr<const ScoredIndividual>> ranked = scored;
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return detail::better(*a, *b); });
    std::vector<Genome> next;
    next.reserve(cfg.population);
    for (int e = 0; e < cfg.elitism; ++e) next.push_back(ranked[e]->genome);

    std::uniform_int_distribution<std::size_t> pick(0, scored.size() - 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    auto tournament = [&]() -> const Genome& {
      const ScoredIndividual* winner = nullptr;
      for (int k = 0; k < cfg.tournament_size; ++k) {
        const ScoredIndividual* c = scored[pick(rng)].get();
        if (!winner || detail::better(*c, *winner)) winner = c;
      }
      return winner->genome;
    };
    while (static_cast<int>(next.size()) < cfg.population) {
      Genome c1 = tournament();
      Genome c2 = tournament();
      if (coin(rng) < cfg.crossover_prob)
        std::tie(c1, c2) = two_point_crossover(c1, c2, rng);
      mutate_genome(c1, topo, cfg.mutation_prob, rng);
      mutate_genome(c2, topo, cfg.mutation_prob, rng);
      next.push_back(std::move(c1));
      if (static_cast<int>(next.size()) < cfg.population)
        next.push_back(std::move(c2));
    }
    pop = std::move(next);
  }

  // Hall of fame: best unique genomes over everything ever scored.
  std::vector<std::shared_ptr<const ScoredIndividual>> all;
  all.reserve(cache.size());
  for (const auto& [id, s] : cache) all.push_back(s);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return detail::better(*a, *b); });
  const std::size_t keep =
      std::min<std::size_t>(all.size(), static_cast<std::size_t>(cfg.hof_size));
  for (std::size_t i = 0; i < keep; ++i)
    result.hall_of_fame.push_back(*all[i]);
  result.evaluation_log.reserve(all.size());
  for (const auto& s : all)
    result.evaluation_log.push_back({s->genome.id(), s->complexity,
                                     s->test_mse, s->objective, s->diverged});
  result.evaluations = cache.size();
  return result;
}

}  // namespace pnn
