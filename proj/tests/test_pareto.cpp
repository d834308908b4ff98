#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "pnn/pareto.hpp"
#include "pnn/rng.hpp"

using namespace pnn;

namespace {

std::vector<ParetoPoint> random_points(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> cdist(0, 25);
  std::uniform_real_distribution<double> edist(0.0, 1.0);
  std::vector<ParetoPoint> pts;
  for (std::size_t i = 0; i < n; ++i)
    pts.push_back({"g" + std::to_string(i), cdist(rng), edist(rng), false});
  return pts;
}

/// Quadratic reference: a point is on the front iff no other point dominates
/// it, checked pair by pair with no shortcuts.
std::vector<bool> brute_force_front(const std::vector<ParetoPoint>& pts) {
  std::vector<bool> on(pts.size(), false);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!std::isfinite(pts[i].test_rmse)) continue;
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
      if (i == j || !std::isfinite(pts[j].test_rmse)) continue;
      const bool no_worse = pts[j].complexity <= pts[i].complexity &&
                            pts[j].test_rmse <= pts[i].test_rmse;
      const bool better = pts[j].complexity < pts[i].complexity ||
                          pts[j].test_rmse < pts[i].test_rmse;
      dominated = no_worse && better;
    }
    on[i] = !dominated;
  }
  return on;
}

}  // namespace

TEST_CASE("dominance is a strict partial order on the two axes") {
  const ParetoPoint a{"a", 1, 0.5, false};
  const ParetoPoint b{"b", 2, 0.3, false};
  const ParetoPoint c{"c", 3, 0.4, false};
  const ParetoPoint a2{"a2", 1, 0.5, false};

  CHECK_FALSE(pareto_dominates(a, b));
  CHECK_FALSE(pareto_dominates(b, a));
  CHECK(pareto_dominates(b, c));   // fewer parameters and lower error
  CHECK_FALSE(pareto_dominates(c, b));
  CHECK_FALSE(pareto_dominates(a, a2));  // exact tie dominates neither way
  CHECK_FALSE(pareto_dominates(a, a));   // irreflexive
}

TEST_CASE("the worked three-point front keeps the trade-off pair") {
  std::vector<ParetoPoint> pts{
      {"a", 1, 0.5, false}, {"b", 2, 0.3, false}, {"c", 3, 0.4, false}};
  mark_pareto_front(pts);
  CHECK(pts[0].on_front);
  CHECK(pts[1].on_front);
  CHECK_FALSE(pts[2].on_front);

  const auto front = pareto_front(pts);
  REQUIRE(front.size() == 2);
  CHECK(front[0].genome_id == "a");
  CHECK(front[1].genome_id == "b");
}

TEST_CASE("marking agrees with the all-pairs reference on random sets") {
  auto rng = make_engine(401);
  for (const std::size_t n : {1ul, 2ul, 50ul, 300ul, 1000ul}) {
    auto pts = random_points(rng, n);
    // Sprinkle degenerate cases: exact duplicates and non-finite errors.
    if (n >= 50) {
      pts[7] = pts[3];
      pts[7].genome_id = "dup";
      pts[11].test_rmse = std::numeric_limits<double>::infinity();
      pts[13].test_rmse = std::numeric_limits<double>::quiet_NaN();
    }
    const auto expect = brute_force_front(pts);
    const auto t0 = std::chrono::steady_clock::now();
    mark_pareto_front(pts);
    const auto t1 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < n; ++i) {
      INFO("n=" << n << " i=" << i);
      REQUIRE(pts[i].on_front == expect[i]);
    }
    CHECK(std::chrono::duration<double>(t1 - t0).count() < 10.0);
  }
}

TEST_CASE("duplicate points stand or fall together") {
  std::vector<ParetoPoint> pts{
      {"x", 2, 0.2, false}, {"y", 2, 0.2, false}, {"z", 5, 0.9, false}};
  mark_pareto_front(pts);
  CHECK(pts[0].on_front);
  CHECK(pts[1].on_front);
  CHECK_FALSE(pts[2].on_front);
}

TEST_CASE("non-finite errors neither join nor shape the front") {
  std::vector<ParetoPoint> pts{
      {"inf", 0, std::numeric_limits<double>::infinity(), false},
      {"nan", 0, std::numeric_limits<double>::quiet_NaN(), false},
      {"ok", 9, 0.5, false}};
  mark_pareto_front(pts);
  CHECK_FALSE(pts[0].on_front);
  CHECK_FALSE(pts[1].on_front);
  // The only finite point survives even though the NaN point has fewer
  // parameters: divergent candidates must not eclipse working ones.
  CHECK(pts[2].on_front);
}

TEST_CASE("front listing sorts by complexity, error, then id") {
  std::vector<ParetoPoint> pts{{"b", 1, 0.4, true},
                               {"a", 1, 0.4, true},
                               {"c", 0, 0.9, true},
                               {"d", 3, 0.1, true},
                               {"off", 9, 9.0, false}};
  const auto front = pareto_front(pts);
  REQUIRE(front.size() == 4);
  CHECK(front[0].genome_id == "c");
  CHECK(front[1].genome_id == "a");
  CHECK(front[2].genome_id == "b");
  CHECK(front[3].genome_id == "d");
}

TEST_CASE("pareto tables survive a csv round trip") {
  auto rng = make_engine(77);
  auto pts = random_points(rng, 64);
  mark_pareto_front(pts);
  const auto path =
      std::filesystem::temp_directory_path() / "pareto_rt.csv";
  pareto_to_csv(path.string(), pts);
  const auto back = pareto_from_csv(path.string());
  REQUIRE(back.size() == pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(back[i].genome_id == pts[i].genome_id);
    CHECK(back[i].complexity == pts[i].complexity);
    CHECK(back[i].test_rmse ==
          Catch::Approx(pts[i].test_rmse).epsilon(1e-12));
    CHECK(back[i].on_front == pts[i].on_front);
  }
  std::filesystem::remove(path);
}

TEST_CASE("a corrupt on_front flag is a file error") {
  const auto path =
      std::filesystem::temp_directory_path() / "pareto_bad.csv";
  {
    std::ofstream out(path);
    out << "genome_id,complexity,test_rmse,on_front\n";
    out << "g0,3,0.5,maybe\n";
  }
  REQUIRE_THROWS_WITH(pareto_from_csv(path.string()),
                      Catch::Matchers::ContainsSubstring("on_front"));
  std::filesystem::remove(path);
}
