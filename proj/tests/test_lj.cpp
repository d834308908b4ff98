#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "pnn/lj.hpp"

using pnn::LjPotential;
using pnn::ValidationError;

TEST_CASE("potential minimum sits at 2^(1/6) sigma with depth -epsilon") {
  const LjPotential pot;
  const double xmin = pot.minimum_position();
  CHECK(xmin == Catch::Approx(std::pow(2.0, 1.0 / 6.0)).epsilon(1e-15));
  CHECK(pot.potential(xmin) == Catch::Approx(-1.0).epsilon(1e-14));
  CHECK(std::abs(pot.force(xmin)) < 1e-13);
}

TEST_CASE("force at sigma is 24 epsilon / sigma") {
  const LjPotential unit;
  CHECK(unit.force(1.0) == Catch::Approx(24.0).epsilon(1e-14));
  const LjPotential scaled{2.5, 3.0, 1.0};
  CHECK(scaled.force(3.0) == Catch::Approx(24.0 * 2.5 / 3.0).epsilon(1e-14));
}

TEST_CASE("force is the negative potential gradient") {
  const LjPotential pot;
  const double h = 1e-7;
  for (double x : {0.95, 1.0, 1.1, 1.3, 1.8, 2.5}) {
    const double fd = -(pot.potential(x + h) - pot.potential(x - h)) / (2 * h);
    CHECK(pot.force(x) == Catch::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("force slope matches a central difference of the force") {
  const LjPotential pot;
  const double h = 1e-7;
  for (double x : {0.95, 1.05, 1.2, 1.5, 2.0}) {
    const double fd = (pot.force(x + h) - pot.force(x - h)) / (2 * h);
    CHECK(pot.force_slope(x) == Catch::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("unit scaling moves force values the way dimensional analysis says") {
  const LjPotential unit;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> xs(0.85, 3.0);
  std::uniform_real_distribution<double> es(0.5, 4.0);
  for (int i = 0; i < 200; ++i) {
    const double x = xs(rng), eps = es(rng), sig = es(rng);
    const LjPotential scaled{eps, sig, 1.0};
    // F(sig * x; eps, sig) = (eps / sig) * F(x; 1, 1)
    CHECK(scaled.force(sig * x) ==
          Catch::Approx(eps / sig * unit.force(x)).margin(1e-12));
    CHECK(scaled.potential(sig * x) ==
          Catch::Approx(eps * unit.potential(x)).margin(1e-12));
  }
}

TEST_CASE("turning points solve V(x) = e on both sides of the minimum") {
  const LjPotential pot;
  for (double e : {-0.9, -0.8, -0.65, -0.5, -0.2, -0.05}) {
    const double xin = pot.inner_turning_point(e);
    const double xout = pot.outer_turning_point(e);
    CHECK(pot.potential(xin) == Catch::Approx(e).margin(1e-12));
    CHECK(pot.potential(xout) == Catch::Approx(e).margin(1e-12));
    CHECK(xin < pot.minimum_position());
    CHECK(xout > pot.minimum_position());
  }
}

TEST_CASE("inner turning point exists exactly down to the well floor") {
  const LjPotential pot;
  CHECK(pot.inner_turning_point(-1.0) ==
        Catch::Approx(pot.minimum_position()).epsilon(1e-7));
  CHECK_THROWS_AS(pot.inner_turning_point(-1.0 - 1e-9), ValidationError);
  CHECK_THROWS_AS(pot.outer_turning_point(0.0), ValidationError);
  CHECK_THROWS_AS(pot.outer_turning_point(0.5), ValidationError);
}

TEST_CASE("positions outside the domain throw, or go NaN in the total variant") {
  const LjPotential pot;
  CHECK_THROWS_AS(pot.force(0.0), ValidationError);
  CHECK_THROWS_AS(pot.force(-1.0), ValidationError);
  CHECK_THROWS_AS(pot.potential(-0.5), ValidationError);
  CHECK(std::isnan(pot.force_or_nan(0.0)));
  CHECK(std::isnan(pot.force_or_nan(-2.0)));
  CHECK(pot.force_or_nan(1.0) == pot.force(1.0));
}

TEST_CASE("total energy splits into kinetic plus potential") {
  const LjPotential pot;
  CHECK(pot.total_energy(1.2, 0.7) ==
        Catch::Approx(0.5 * 0.49 + pot.potential(1.2)).epsilon(1e-15));
  const LjPotential heavy{1.0, 1.0, 3.0};
  CHECK(heavy.total_energy(1.2, 0.7) ==
        Catch::Approx(0.5 * 3.0 * 0.49 + pot.potential(1.2)).epsilon(1e-15));
}

TEST_CASE("starting at a turning point reproduces the labelled energy") {
  const LjPotential pot;
  for (double e : {-0.8, -0.7, -0.6, -0.5}) {
    const double x0 = pot.inner_turning_point(e);
    CHECK(pot.total_energy(x0, 0.0) == Catch::Approx(e).margin(1e-12));
  }
}
