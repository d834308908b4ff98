#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "pnn/reference_genomes.hpp"
#include "pnn/train.hpp"

using namespace pnn;

namespace {

const double kDt = 1e-3;

std::shared_ptr<const ForceModel> sine_force() {
  return std::make_shared<CallableForce>(
      [](double q) { return std::sin(q); },
      [](double q) { return std::cos(q); });
}

StepDataset random_batch(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> ux(0.9, 1.4);
  std::uniform_real_distribution<double> uv(-1.0, 1.0);
  std::uniform_real_distribution<double> eps(-0.01, 0.01);
  StepDataset d;
  for (std::size_t i = 0; i < n; ++i) {
    StepPair p;
    p.x_t = ux(rng);
    p.v_t = uv(rng);
    p.x_next = p.x_t + eps(rng);
    p.v_next = p.v_t + eps(rng);
    d.rows.push_back(p);
  }
  return d;
}

/// Central differences straddling a relu/elu kink measure the wrong slope,
/// so random-genome checks only run where every kinked pre-activation is
/// safely one-sided across the whole batch.
bool clear_of_kinks(const PnnNetwork& net, const StepDataset& batch,
                    double margin) {
  DynamicsTrace t;
  for (const auto& p : batch.rows) {
    net.forward_traced(p.x_t, p.v_t, t, false);
    const double z[6] = {t.z1[0], t.z1[1], t.z2[0], t.z2[1], t.z3[0], t.z3[1]};
    for (int s = 0; s < 6; ++s) {
      const Act a = net.act(s);
      if ((a == Act::Relu || a == Act::Elu) && std::abs(z[s]) < margin)
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("dynamics gradients match central differences on random genomes") {
  const auto topo = Topology::dynamics(kDt);
  auto rng = make_engine(42);
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 25; ++trial) {
    const Genome g = random_genome(topo, rng);
    const auto net = build_network(g, topo, sine_force(), 1000 + trial, 0.4);
    if (net.trainable_count() == 0) continue;
    const StepDataset batch = random_batch(rng, 8);
    if (!clear_of_kinks(net, batch, 1e-3)) continue;
    const double worst = gradient_check(net, batch);
    INFO("trial " << trial << " genome " << g.id());
    REQUIRE(worst < 1e-5);
    ++checked;
  }
  REQUIRE(checked == 25);
}

TEST_CASE("melting gradients match central differences on random genomes") {
  const auto topo = Topology::melting();
  auto rng = make_engine(7);
  std::uniform_real_distribution<double> ux(0.5, 2.0);
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 25; ++trial) {
    const Genome g = random_genome(topo, rng);
    auto net = build_network(g, topo, nullptr, 500 + trial, 0.4);
    if (net.trainable_count() == 0) continue;
    std::vector<MeltSample> batch;
    for (int i = 0; i < 10; ++i)
      batch.push_back({ux(rng), ux(rng), ux(rng), ux(rng)});
    // Reciprocal neurons blow up near zero pre-activation; demand a margin.
    bool ok = true;
    MeltingTrace t;
    for (const auto& s : batch) {
      net.forward_melt_traced(s.x1, s.x2, s.x3, t);
      for (int j = 0; j < 3 && ok; ++j)
        if (net.melt_act(j) == MeltAct::Reciprocal && std::abs(t.z[j]) < 1e-2)
          ok = false;
    }
    if (!ok) continue;
    const double worst = gradient_check(net, batch);
    INFO("trial " << trial << " genome " << g.id());
    REQUIRE(worst < 1e-5);
    ++checked;
  }
  REQUIRE(checked == 25);
}

TEST_CASE("the half-step-drift gradient is exact to rounding") {
  // Loss is quadratic in the lone trainable gene (it multiplies the force
  // term linearly), so the central difference has no truncation error.
  const LjPotential pot;
  auto net = build_network(position_verlet_genome(), Topology::dynamics(kDt),
                           exact_lj_force(pot), 3);
  net.set_slot(12, 3e-7);
  auto rng = make_engine(5);
  const StepDataset batch = random_batch(rng, 16);
  CHECK(gradient_check(net, batch) < 1e-8);
}

TEST_CASE("training recovers the position-force coefficient") {
  const LjPotential pot;
  SimConfig sim;
  sim.total_steps = 3000;
  const DatasetBundle data = generate_dataset(pot, sim);
  auto net = build_network(position_verlet_genome(), Topology::dynamics(kDt),
                           exact_lj_force(pot), 17);
  const TrainConfig cfg = TrainConfig::dynamics_defaults();
  const TrainResult r = train_network(net, data.train, data.val, cfg);
  REQUIRE_FALSE(r.diverged);
  const double ideal = kDt * kDt / 2.0;
  const double got = r.net.weights[12].value;
  INFO("trained " << got << " ideal " << ideal);
  CHECK(std::abs(got - ideal) / ideal < 5e-3);
  // The residual floor is the scheme's own local truncation error against
  // the finely integrated data, around 1.4e-14 here.
  CHECK(r.train_mse < 1e-12);
  CHECK(r.val_mse < 1e-12);
  CHECK(r.epochs_run > 0);
}

TEST_CASE("fixed-only networks skip the optimizer untouched") {
  const LjPotential pot;
  auto rng = make_engine(9);
  const StepDataset train = random_batch(rng, 20);
  const StepDataset val = random_batch(rng, 8);
  const auto net = build_network(identity_genome(), Topology::dynamics(kDt),
                                 exact_lj_force(pot), 1);
  const TrainResult r = train_network(net, train, val, TrainConfig{});
  CHECK(r.epochs_run == 0);
  CHECK_FALSE(r.diverged);
  CHECK(r.train_mse == dynamics_mse(net, train));
  CHECK(r.val_mse == dynamics_mse(net, val));
  for (std::size_t i = 0; i < net.weights.size(); ++i)
    CHECK(r.net.weights[i].value == net.weights[i].value);
}

TEST_CASE("a non-finite loss aborts training as divergent") {
  auto inf_force = std::make_shared<CallableForce>(
      [](double) { return std::numeric_limits<double>::infinity(); },
      [](double) { return 0.0; });
  auto net = build_network(position_verlet_genome(), Topology::dynamics(kDt),
                           inf_force, 1);
  auto rng = make_engine(2);
  const StepDataset train = random_batch(rng, 10);
  const TrainResult r = train_network(net, train, {}, TrainConfig{});
  CHECK(r.diverged);
  CHECK(std::isinf(r.train_mse));
  CHECK(std::isinf(r.val_mse));
}

namespace {

PnnNetwork melt_net(std::vector<std::uint8_t> w, std::vector<std::uint8_t> a,
                    std::uint64_t seed) {
  Genome g;
  g.kind = TopologyKind::Melting;
  g.weight_alleles = std::move(w);
  g.activation_alleles = std::move(a);
  return build_network(g, Topology::melting(), nullptr, seed);
}

std::vector<MeltSample> linear_law_samples(std::vector<MeltSample>& val) {
  // y = 17.5 + 0.002 x2, the shape of the published second law.
  std::vector<MeltSample> train;
  auto rng = make_engine(31);
  std::uniform_real_distribution<double> ux2(100.0, 1200.0);
  for (int i = 0; i < 48; ++i) {
    const double x2 = ux2(rng);
    MeltSample s{1e-3, x2, 500.0, 17.5 + 0.002 * x2};
    (i % 6 == 0 ? val : train).push_back(s);
  }
  return train;
}

}  // namespace

TEST_CASE("a fixed-tap law is recovered exactly in one solve") {
  // Trainables live only in the linear readout, so a single least-squares
  // pass reproduces the generating coefficients to machine precision.
  std::vector<MeltSample> val;
  const auto train = linear_law_samples(val);
  auto net = melt_net({0, 1, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 2}, {0, 0, 0}, 1);
  const TrainResult r =
      train_network(net, train, val, TrainConfig::melting_defaults());
  REQUIRE_FALSE(r.diverged);
  CHECK(r.epochs_run == 1);
  CHECK(r.net.weights[9].value == Catch::Approx(0.002).epsilon(1e-12));
  CHECK(r.net.weights[12].value == Catch::Approx(17.5).epsilon(1e-12));
  CHECK(r.train_mse < 1e-24);
}

TEST_CASE("melting training fits a linear law through a trainable tap") {
  std::vector<MeltSample> val;
  const auto train = linear_law_samples(val);
  auto net = melt_net({0, 2, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 2}, {0, 0, 0}, 21);
  const TrainResult r =
      train_network(net, train, val, TrainConfig::melting_defaults());
  REQUIRE_FALSE(r.diverged);
  INFO("slope " << r.net.weights[1].value << " bias "
                << r.net.weights[12].value);
  CHECK(std::abs(r.net.weights[1].value - 0.002) / 0.002 < 5e-3);
  CHECK(std::abs(r.net.weights[12].value - 17.5) / 17.5 < 5e-3);
  CHECK(r.train_mse < 1e-10);
}

TEST_CASE("a reciprocal three-term law is recovered exactly") {
  // y = 11.9 + 0.000499 x3 + 0.00796 / x1, the shape of the published
  // fourth law, at realistic reduced-feature scales.
  std::vector<MeltSample> train, val;
  auto rng = make_engine(77);
  std::uniform_real_distribution<double> ux1(1.2e-3, 3.5e-3);
  std::uniform_real_distribution<double> ux3(2e3, 3e4);
  for (int i = 0; i < 48; ++i) {
    const double x1 = ux1(rng), x3 = ux3(rng);
    MeltSample s{x1, 700.0, x3, 11.9 + 0.000499 * x3 + 0.00796 / x1};
    (i % 6 == 0 ? val : train).push_back(s);
  }
  auto net = melt_net({0, 0, 1, 1, 0, 0, 0, 0, 0, 2, 2, 0, 2}, {0, 1, 0}, 2);
  const TrainResult r =
      train_network(net, train, val, TrainConfig::melting_defaults());
  REQUIRE_FALSE(r.diverged);
  CHECK(r.epochs_run == 1);
  CHECK(r.net.weights[9].value == Catch::Approx(0.000499).epsilon(1e-10));
  CHECK(r.net.weights[10].value == Catch::Approx(0.00796).epsilon(1e-10));
  CHECK(r.net.weights[12].value == Catch::Approx(11.9).epsilon(1e-10));
  CHECK(r.train_mse < 1e-24);
}

TEST_CASE("a dead readout column falls back to the ridge solve") {
  // Neuron 1 has only fixed-zero taps, so its trainable readout weight rides
  // a singular normal system; the fallback pins it at zero instead of
  // failing the whole fit.
  std::vector<MeltSample> val;
  const auto train = linear_law_samples(val);
  auto net = melt_net({0, 1, 0, 0, 0, 0, 0, 0, 0, 2, 2, 0, 2}, {0, 0, 0}, 3);
  const TrainResult r =
      train_network(net, train, val, TrainConfig::melting_defaults());
  REQUIRE_FALSE(r.diverged);
  CHECK(r.epochs_run == 1);
  CHECK(std::abs(r.net.weights[10].value) < 1e-6);
  // The ridge nudges the surviving coefficients a hair off exact.
  CHECK(r.net.weights[9].value == Catch::Approx(0.002).epsilon(1e-4));
  CHECK(r.net.weights[12].value == Catch::Approx(17.5).epsilon(1e-4));
}

TEST_CASE("row caps thin with an even, ordered stride") {
  const auto idx = detail::thinned_indices(1000, 100);
  REQUIRE(idx.size() == 100);
  for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
    CHECK(idx[k] < idx[k + 1]);
    CHECK(idx[k + 1] - idx[k] == 10);
  }
  CHECK(detail::thinned_indices(50, 100).size() == 50);
  CHECK(detail::thinned_indices(50, 0).size() == 50);

  auto rng = make_engine(4);
  const StepDataset big = random_batch(rng, 300);
  const LjPotential pot;
  const auto net = build_network(free_flight_genome(), Topology::dynamics(kDt),
                                 exact_lj_force(pot), 1);
  TrainConfig cfg;
  cfg.max_train_rows = 40;
  const TrainResult r = train_network(net, big, {}, cfg);
  CHECK(r.train_mse == dynamics_mse(net, detail::thin_dataset(big, 40)));
}

TEST_CASE("gradient checks refuse meaningless inputs") {
  const LjPotential pot;
  const auto topo = Topology::dynamics(kDt);
  const auto fixed_net =
      build_network(identity_genome(), topo, exact_lj_force(pot), 1);
  auto rng = make_engine(6);
  const StepDataset batch = random_batch(rng, 4);
  CHECK_THROWS_AS(gradient_check(fixed_net, batch), ValidationError);

  auto verlet = build_network(position_verlet_genome(), topo,
                              exact_lj_force(pot), 1);
  StepDataset bad;
  bad.rows.push_back({-1.0, 0.0, -1.0, 0.0});  // force domain violation
  CHECK_THROWS_AS(gradient_check(verlet, bad), NumericError);
}

TEST_CASE("trainers reject mismatched topologies and empty data") {
  const LjPotential pot;
  auto rng = make_engine(8);
  const StepDataset batch = random_batch(rng, 4);
  Genome g;
  g.kind = TopologyKind::Melting;
  g.weight_alleles.assign(13, 0);
  g.activation_alleles.assign(3, 0);
  const auto melt_net = build_network(g, Topology::melting(), nullptr, 1);
  CHECK_THROWS_AS(train_network(melt_net, batch, {}, TrainConfig{}),
                  ValidationError);
  const auto dyn_net = build_network(identity_genome(), Topology::dynamics(kDt),
                                     exact_lj_force(pot), 1);
  CHECK_THROWS_AS(train_network(dyn_net, StepDataset{}, {}, TrainConfig{}),
                  ValidationError);
  CHECK_THROWS_AS(
      train_network(dyn_net, std::vector<MeltSample>{}, {}, TrainConfig{}),
      ValidationError);
}
