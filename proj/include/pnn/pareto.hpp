#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pnn/csv_io.hpp"

namespace pnn {

/// One candidate on the accuracy-versus-structure plane.
struct ParetoPoint {
  std::string genome_id;
  int complexity = 0;
  double test_rmse = 0.0;
  bool on_front = false;
};

/// a dominates b when it is no worse on both axes and better on at least one.
inline bool pareto_dominates(const ParetoPoint& a, const ParetoPoint& b) {
  return a.complexity <= b.complexity && a.test_rmse <= b.test_rmse &&
         (a.complexity < b.complexity || a.test_rmse < b.test_rmse);
}

/// Flags the non-dominated points. Exact ties on both axes all stay on the
/// front; points with a non-finite error never do.
inline void mark_pareto_front(std::vector<ParetoPoint>& points) {
  for (auto& p : points) {
    if (!std::isfinite(p.test_rmse)) {
      p.on_front = false;
      continue;
    }
    p.on_front = std::none_of(points.begin(), points.end(),
                              [&](const ParetoPoint& q) {
                                return std::isfinite(q.test_rmse) &&
                                       pareto_dominates(q, p);
                              });
  }
}

/// The front only, sorted by complexity then error then id.
inline std::vector<ParetoPoint> pareto_front(
    const std::vector<ParetoPoint>& points) {
  std::vector<ParetoPoint> front;
  for (const auto& p : points)
    if (p.on_front) front.push_back(p);
  std::sort(front.begin(), front.end(),
            [](const ParetoPoint& a, const ParetoPoint& b) {
              if (a.complexity != b.complexity)
                return a.complexity < b.complexity;
              if (a.test_rmse != b.test_rmse) return a.test_rmse < b.test_rmse;
              return a.genome_id < b.genome_id;
            });
  return front;
}

inline void pareto_to_csv(const std::string& path,
                          const std::vector<ParetoPoint>& points) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"genome_id", "complexity", "test_rmse", "on_front"});
  for (const auto& p : points)
    rows.push_back({p.genome_id, std::to_string(p.complexity),
                    csv::fmt(p.test_rmse), p.on_front ? "true" : "false"});
  csv::write_rows(path, rows);
}

inline std::vector<ParetoPoint> pareto_from_csv(const std::string& path) {
  auto rows = csv::read_rows(path);
  csv::require_header(rows, {"genome_id", "complexity", "test_rmse", "on_front"},
                      path);
  std::vector<ParetoPoint> points;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 4)
      throw ValidationError("row " + std::to_string(i) + " in " + path +
                            " does not have 4 cells");
    ParetoPoint p;
    p.genome_id = rows[i][0];
    p.complexity =
        static_cast<int>(csv::parse_double(rows[i][1], path));
    p.test_rmse = csv::parse_double(rows[i][2], path);
    if (rows[i][3] == "true")
      p.on_front = true;
    else if (rows[i][3] == "false")
      p.on_front = false;
    else
      throw ValidationError("bad on_front flag '" + rows[i][3] + "' in " +
                            path);
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace pnn
