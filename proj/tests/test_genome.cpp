#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "pnn/evolve.hpp"
#include "pnn/genome.hpp"
#include "pnn/objective.hpp"
#include "pnn/reference_genomes.hpp"

using namespace pnn;

TEST_CASE("dynamics weight alleles resolve to their seven constants plus trainable") {
  const auto topo = Topology::dynamics(1e-3);
  CHECK(fixed_weight_value(topo, 0) == 0.0);
  CHECK(fixed_weight_value(topo, 1) == 0.5);
  CHECK(fixed_weight_value(topo, 2) == 1.0);
  CHECK(fixed_weight_value(topo, 3) == 2.0);
  CHECK(fixed_weight_value(topo, 4) == Catch::Approx(5e-4).epsilon(1e-15));
  CHECK(fixed_weight_value(topo, 5) == Catch::Approx(1e-3).epsilon(1e-15));
  CHECK(fixed_weight_value(topo, 6) == Catch::Approx(2e-3).epsilon(1e-15));
  CHECK(weight_allele_trainable(topo.kind, 7));
  CHECK_FALSE(weight_allele_trainable(topo.kind, 3));
  CHECK_THROWS_AS(fixed_weight_value(topo, 7), ValidationError);
}

TEST_CASE("melting weight alleles are zero, one, trainable") {
  const auto topo = Topology::melting();
  CHECK(fixed_weight_value(topo, 0) == 0.0);
  CHECK(fixed_weight_value(topo, 1) == 1.0);
  CHECK(weight_allele_trainable(topo.kind, 2));
  CHECK_THROWS_AS(fixed_weight_value(topo, 2), ValidationError);
}

TEST_CASE("fixed-value tags round-trip through their codes") {
  for (std::uint8_t c = 0; c < 7; ++c)
    CHECK(weight_allele_from_tag(TopologyKind::Dynamics,
                                 weight_allele_tag(TopologyKind::Dynamics, c)) ==
          c);
  for (std::uint8_t c = 0; c < 2; ++c)
    CHECK(weight_allele_from_tag(TopologyKind::Melting,
                                 weight_allele_tag(TopologyKind::Melting, c)) ==
          c);
  CHECK_THROWS_AS(weight_allele_from_tag(TopologyKind::Dynamics, "3dt"),
                  ValidationError);
}

TEST_CASE("gene scores: pruned 0, fixed constant 1, trainable 2") {
  CHECK(weight_allele_score(TopologyKind::Dynamics, 0) == 0);
  for (std::uint8_t c = 1; c < 7; ++c)
    CHECK(weight_allele_score(TopologyKind::Dynamics, c) == 1);
  CHECK(weight_allele_score(TopologyKind::Dynamics, 7) == 2);
  CHECK(weight_allele_score(TopologyKind::Melting, 0) == 0);
  CHECK(weight_allele_score(TopologyKind::Melting, 1) == 1);
  CHECK(weight_allele_score(TopologyKind::Melting, 2) == 2);
}

TEST_CASE("activation scores grade interpretability") {
  CHECK(act_score(Act::Linear) == 0);
  CHECK(act_score(Act::Relu) == 1);
  CHECK(act_score(Act::Tanh) == 2);
  CHECK(act_score(Act::Elu) == 3);
  CHECK(melt_act_score(MeltAct::Linear) == 0);
  CHECK(melt_act_score(MeltAct::Reciprocal) == 1);
  CHECK(melt_act_score(MeltAct::Square) == 1);
}

TEST_CASE("hand-wired genomes have their hand-counted complexities") {
  CHECK(genome_complexity(zero_map_genome()) == 0);
  CHECK(genome_complexity(identity_genome()) == 8);
  CHECK(genome_complexity(free_flight_genome()) == 9);
  CHECK(genome_complexity(euler_genome()) == 11);
  CHECK(genome_complexity(position_verlet_genome()) == 14);
  CHECK(genome_complexity(position_verlet_genome(true)) == 15);
  CHECK(genome_complexity(damped_verlet_genome()) == 17);
  // All-linear yardsticks carry no activation cost at all.
  CHECK(genome_activation_score(position_verlet_genome()) == 0);
}

TEST_CASE("genome ids are stable, format-checked, and locus-sensitive") {
  const auto topo = Topology::dynamics(1e-3);
  auto rng = make_engine(11);
  for (int trial = 0; trial < 100; ++trial) {
    Genome g = random_genome(topo, rng);
    const std::string id = g.id();
    REQUIRE(id.size() == 16);
    for (char c : id) CHECK(std::isxdigit(static_cast<unsigned char>(c)));
    CHECK(id == g.id());

    Genome h = g;
    std::uniform_int_distribution<std::size_t> pick(0, 25);
    const std::size_t locus = pick(rng);
    auto& cell = locus < 20 ? h.weight_alleles[locus]
                            : h.activation_alleles[locus - 20];
    const int range = locus < 20 ? 8 : 4;
    cell = static_cast<std::uint8_t>((cell + 1) % range);
    CHECK(h.id() != g.id());
  }
}

TEST_CASE("validation names the offending slot") {
  const auto topo = Topology::dynamics(1e-3);
  Genome g = position_verlet_genome();
  CHECK_NOTHROW(validate_genome(g, topo));

  Genome wrong_count = g;
  wrong_count.weight_alleles.pop_back();
  CHECK_THROWS_AS(validate_genome(wrong_count, topo), ValidationError);

  Genome bad_allele = g;
  bad_allele.weight_alleles[5] = 8;
  CHECK_THROWS_WITH(validate_genome(bad_allele, topo),
                    Catch::Matchers::ContainsSubstring("5"));

  Genome bad_act = g;
  bad_act.activation_alleles[2] = 4;
  CHECK_THROWS_WITH(validate_genome(bad_act, topo),
                    Catch::Matchers::ContainsSubstring("2"));

  Genome wrong_kind = g;
  wrong_kind.kind = TopologyKind::Melting;
  CHECK_THROWS_AS(validate_genome(wrong_kind, Topology::melting()),
                  ValidationError);
}

TEST_CASE("random genomes stay in range and reach every allele") {
  const auto topo = Topology::dynamics(1e-3);
  auto rng = make_engine(3);
  std::set<int> seen_w, seen_a;
  for (int i = 0; i < 500; ++i) {
    const Genome g = random_genome(topo, rng);
    REQUIRE(g.weight_alleles.size() == 20);
    REQUIRE(g.activation_alleles.size() == 6);
    for (auto a : g.weight_alleles) {
      CHECK(a < 8);
      seen_w.insert(a);
    }
    for (auto a : g.activation_alleles) {
      CHECK(a < 4);
      seen_a.insert(a);
    }
  }
  CHECK(seen_w.size() == 8);
  CHECK(seen_a.size() == 4);
}

TEST_CASE("crossover redistributes loci without inventing new ones") {
  const auto topo = Topology::dynamics(1e-3);
  auto rng = make_engine(19);
  for (int trial = 0; trial < 200; ++trial) {
    const Genome a = random_genome(topo, rng);
    const Genome b = random_genome(topo, rng);
    auto [c, d] = two_point_crossover(a, b, rng);
    for (std::size_t k = 0; k < 20; ++k) {
      const auto pair_in = std::minmax(a.weight_alleles[k], b.weight_alleles[k]);
      const auto pair_out = std::minmax(c.weight_alleles[k], d.weight_alleles[k]);
      CHECK(pair_in == pair_out);
    }
    for (std::size_t k = 0; k < 6; ++k) {
      const auto pair_in =
          std::minmax(a.activation_alleles[k], b.activation_alleles[k]);
      const auto pair_out =
          std::minmax(c.activation_alleles[k], d.activation_alleles[k]);
      CHECK(pair_in == pair_out);
    }
  }
}

TEST_CASE("crossover can produce a full swap and a no-op") {
  const auto topo = Topology::dynamics(1e-3);
  auto rng = make_engine(23);
  const Genome a = zero_map_genome();
  Genome b = position_verlet_genome();
  bool saw_full_swap = false, saw_noop = false;
  for (int trial = 0; trial < 2000 && !(saw_full_swap && saw_noop); ++trial) {
    auto [c, d] = two_point_crossover(a, b, rng);
    if (c == b && d == a) saw_full_swap = true;
    if (c == a && d == b) saw_noop = true;
  }
  CHECK(saw_full_swap);
  CHECK(saw_noop);
  (void)topo;
}

TEST_CASE("mutation respects its probability limits") {
  const auto topo = Topology::dynamics(1e-3);
  auto rng = make_engine(29);
  Genome g = position_verlet_genome();

  Genome untouched = g;
  mutate_genome(untouched, topo, 0.0, rng);
  CHECK(untouched == g);

  // With probability one, every locus is redrawn; values may repeat by
  // chance but must all stay in range.
  int changed = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Genome m = g;
    mutate_genome(m, topo, 1.0, rng);
    for (auto a : m.weight_alleles) CHECK(a < 8);
    for (auto a : m.activation_alleles) CHECK(a < 4);
    if (!(m == g)) ++changed;
  }
  CHECK(changed == 50);  // 26 loci redrawn; all-same is vanishingly unlikely
}

TEST_CASE("the combined objective adds accuracy to weighted structure cost") {
  ObjectiveConfig cfg;
  cfg.parsimony = 1.0;
  cfg.f1_offset = 13.0;
  cfg.f1_floor = 0.0;
  const Genome g = position_verlet_genome();  // complexity 14
  // Error 1e-10 -> accuracy term 3; total 17.
  CHECK(objective_value(1e-10, g, cfg) == Catch::Approx(17.0).epsilon(1e-9));
  // The floor clamps once the error is small enough.
  CHECK(objective_value(1e-20, g, cfg) == Catch::Approx(14.0).margin(1e-6));
  // Parsimony weight scales only the structure part.
  cfg.parsimony = 0.5;
  CHECK(objective_value(1e-10, g, cfg) == Catch::Approx(10.0).epsilon(1e-9));
  // Divergent error dominates everything.
  cfg.parsimony = 1.0;
  CHECK(std::isinf(objective_value(
      std::numeric_limits<double>::infinity(), g, cfg)));
}

TEST_CASE("accuracy term is monotone in the error") {
  ObjectiveConfig cfg;
  double prev = accuracy_term(0.0, cfg);
  for (double e = 1e-28; e < 1.0; e *= 10.0) {
    const double cur = accuracy_term(e, cfg);
    CHECK(cur >= prev);
    prev = cur;
  }
}
