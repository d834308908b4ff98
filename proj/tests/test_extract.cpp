#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "pnn/extract.hpp"
#include "pnn/reference_genomes.hpp"

using namespace pnn;

namespace {

const double kDt = 1e-3;

std::shared_ptr<const ForceModel> sine_force() {
  return std::make_shared<CallableForce>(
      [](double q) { return std::sin(q); },
      [](double q) { return std::cos(q); });
}

PnnNetwork net_for(const Genome& g, std::uint64_t seed = 3,
                   double init_range = 0.5) {
  return build_network(g, Topology::dynamics(kDt), sine_force(), seed,
                       init_range);
}

}  // namespace

TEST_CASE("the half-step-drift scheme extracts to its exact coefficients") {
  auto net = net_for(position_verlet_genome());
  net.set_trainable_values(position_verlet_ideal_values(kDt, 1.0));
  const auto s = extract_symbolic(net);

  REQUIRE(s.dt == kDt);
  REQUIRE(s.m_xx == 1.0);
  REQUIRE(s.m_xv == kDt);
  REQUIRE(s.m_vx == 0.0);
  REQUIRE(s.m_vv == 1.0);
  REQUIRE(s.f_x == 0.5 * kDt * kDt);
  REQUIRE(s.f_v == kDt);
  REQUIRE(s.force_engaged);
  REQUIRE(s.q_x == 1.0);
  REQUIRE(s.q_v == 0.5 * kDt);

  const auto m = match_template(s, 1.0);
  REQUIRE(m.kind == StepTemplate::PositionVerlet);
  REQUIRE(m.matched);
  REQUIRE(m.max_deviation == 0.0);
}

TEST_CASE("each hand-wired scheme matches its own template") {
  struct Case {
    Genome g;
    StepTemplate expect;
  };
  const Case cases[] = {
      {zero_map_genome(), StepTemplate::ZeroMap},
      {identity_genome(), StepTemplate::Identity},
      {free_flight_genome(), StepTemplate::FreeFlight},
      {euler_genome(), StepTemplate::EulerExplicit},
  };
  for (const auto& c : cases) {
    const auto s = extract_symbolic(net_for(c.g));
    const auto m = match_template(s, 1.0);
    CAPTURE(template_name(c.expect));
    REQUIRE(m.kind == c.expect);
    REQUIRE(m.matched);
    REQUIRE(m.max_deviation == 0.0);
  }
}

TEST_CASE("the Euler scheme reads the force at the old position only") {
  const auto s = extract_symbolic(net_for(euler_genome()));
  REQUIRE(s.force_engaged);
  REQUIRE(s.q_x == 1.0);
  REQUIRE(s.q_v == 0.0);
  REQUIRE(s.f_x == 0.0);
  REQUIRE(s.f_v == kDt);
}

TEST_CASE("forceless schemes report a disengaged force term") {
  for (const auto& g : {zero_map_genome(), identity_genome(),
                        free_flight_genome()}) {
    const auto s = extract_symbolic(net_for(g));
    REQUIRE_FALSE(s.force_engaged);
    REQUIRE(s.f_x == 0.0);
    REQUIRE(s.f_v == 0.0);
    REQUIRE(s.q_x == 0.0);
    REQUIRE(s.q_v == 0.0);
  }
}

TEST_CASE("template matching tolerates small coefficient error and no more") {
  auto net = net_for(position_verlet_genome());

  SECTION("0.4% off still matches at the default tolerance") {
    net.set_trainable_values({0.5 * kDt * kDt * 1.004});
    const auto m = match_template(extract_symbolic(net), 1.0);
    REQUIRE(m.kind == StepTemplate::PositionVerlet);
    REQUIRE(m.matched);
    REQUIRE(m.max_deviation == Catch::Approx(0.004));
  }

  SECTION("0.6% off fails a strict 5e-3 tolerance but stays closest") {
    net.set_trainable_values({0.5 * kDt * kDt * 1.006});
    const auto m = match_template(extract_symbolic(net), 1.0, 5e-3);
    REQUIRE(m.kind == StepTemplate::PositionVerlet);
    REQUIRE_FALSE(m.matched);
    REQUIRE(m.max_deviation == Catch::Approx(0.006));
    REQUIRE(m.deviations.at("f_x") == Catch::Approx(0.006));
  }

  SECTION("2% off fails the default tolerance") {
    net.set_trainable_values({0.5 * kDt * kDt * 1.02});
    const auto m = match_template(extract_symbolic(net), 1.0);
    REQUIRE(m.kind == StepTemplate::PositionVerlet);
    REQUIRE_FALSE(m.matched);
  }

  SECTION("a missing term counts at its natural size, not its tiny value") {
    // Dropping the dt^2/2m position-force term turns the scheme into Euler's;
    // the metric must see that as a full-size structural change even though
    // the coefficient itself is only ~5e-7.
    net.set_trainable_values({0.0});
    const auto m =
        match_template_exact(extract_symbolic(net), StepTemplate::PositionVerlet,
                             1.0);
    REQUIRE(m.deviations.at("f_x") == Catch::Approx(1.0));
    REQUIRE_FALSE(m.matched);
  }
}

TEST_CASE("strong damping separates the damped template from the plain one") {
  const double gamma = 20.0;
  auto net = net_for(damped_verlet_genome());
  net.set_trainable_values(damped_verlet_ideal_values(kDt, 1.0, gamma));
  const auto s = extract_symbolic(net);

  SECTION("with the friction known, the damped form matches exactly") {
    const auto m = match_template(s, 1.0, 5e-3, gamma);
    REQUIRE(m.kind == StepTemplate::PositionVerletDamped);
    REQUIRE(m.matched);
    REQUIRE(m.max_deviation < 1e-12);
  }

  SECTION("searching only frictionless templates fails to match") {
    const auto m = match_template(s, 1.0, 5e-3, 0.0);
    REQUIRE_FALSE(m.matched);
    // The velocity contraction 1 - gamma dt/m = 0.98 is 2% off identity.
    REQUIRE(m.max_deviation > 0.01);
  }

  SECTION("checking one named template directly") {
    const auto m = match_template_exact(s, StepTemplate::PositionVerletDamped,
                                        1.0, 5e-3, gamma);
    REQUIRE(m.matched);
    const auto wrong = match_template_exact(s, StepTemplate::Identity, 1.0);
    REQUIRE_FALSE(wrong.matched);
  }
}

TEST_CASE("extraction refuses non-linear activations and names the gene") {
  auto g = position_verlet_genome();
  g.activation_alleles[3] = 2;  // tanh in the second hidden pair
  REQUIRE_THROWS_AS(extract_symbolic(net_for(g)), ExtractNotApplicable);
  REQUIRE_THROWS_WITH(extract_symbolic(net_for(g)),
                      Catch::Matchers::ContainsSubstring("activation gene 3") &&
                          Catch::Matchers::ContainsSubstring("tanh"));
}

TEST_CASE("extraction rejects non-dynamics networks") {
  Genome g;
  g.kind = TopologyKind::Melting;
  g.weight_alleles.assign(13, 0);
  g.activation_alleles.assign(3, 0);
  auto net = build_network(g, Topology::melting(), nullptr, 1);
  REQUIRE_THROWS_AS(extract_symbolic(net), ValidationError);
}

TEST_CASE("the extracted closed form reproduces the network map") {
  // Any all-linear genome collapses to the same closed form the network
  // computes numerically; spot-check random genomes at random states.
  const auto topo = Topology::dynamics(kDt);
  auto rng = make_engine(99);
  std::uniform_real_distribution<double> ux(0.8, 1.5);
  std::uniform_real_distribution<double> uv(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Genome g = random_genome(topo, rng);
    g.activation_alleles.assign(6, 0);
    auto net = build_network(g, topo, sine_force(), derive_seed(99, trial), 0.5);
    const auto s = extract_symbolic(net);
    for (int probe = 0; probe < 4; ++probe) {
      const double x = ux(rng), v = uv(rng);
      const auto [nx, nv] = net.forward(x, v);
      double fx = 0.0, fv = 0.0;
      if (s.force_engaged) {
        const double F = std::sin(s.q_x * x + s.q_v * v);
        fx = s.f_x * F;
        fv = s.f_v * F;
      }
      const double ex = s.m_xx * x + s.m_xv * v + fx;
      const double ev = s.m_vx * x + s.m_vv * v + fv;
      REQUIRE(nx == Catch::Approx(ex).margin(1e-10));
      REQUIRE(nv == Catch::Approx(ev).margin(1e-10));
      ++checked;
    }
  }
  REQUIRE(checked == 200);
}

TEST_CASE("equations render as readable update rules") {
  auto net = net_for(position_verlet_genome());
  net.set_trainable_values(position_verlet_ideal_values(kDt, 1.0));
  const auto s = extract_symbolic(net);

  SECTION("raw coefficients") {
    REQUIRE(render_equations(s, RenderStyle::Raw) ==
            "x(t+dt) = x(t) + 0.001 v(t) + 5e-07 F(x(t) + 0.0005 v(t))\n"
            "v(t+dt) = v(t) + 0.001 F(x(t) + 0.0005 v(t))");
  }

  SECTION("factored against the scheme ideals") {
    REQUIRE(render_equations(s, RenderStyle::Factored) ==
            "x(t+dt) = x(t) + v(t) dt + F(x(t) + v(t) dt/2) dt^2/2m\n"
            "v(t+dt) = v(t) + F(x(t) + v(t) dt/2) dt/m");
  }

  SECTION("an off-ideal coefficient shows up as a non-unit multiplier") {
    net.set_trainable_values({0.5 * kDt * kDt * 1.2});
    const auto off = extract_symbolic(net);
    const auto text = render_equations(off, RenderStyle::Factored);
    REQUIRE(text.find("1.2 F(x(t) + v(t) dt/2) dt^2/2m") != std::string::npos);
  }

  SECTION("simple maps stay simple") {
    REQUIRE(render_equations(extract_symbolic(net_for(zero_map_genome())),
                             RenderStyle::Raw) ==
            "x(t+dt) = 0\nv(t+dt) = 0");
    REQUIRE(render_equations(extract_symbolic(net_for(free_flight_genome())),
                             RenderStyle::Raw) ==
            "x(t+dt) = x(t) + 0.001 v(t)\nv(t+dt) = v(t)");
  }
}
