#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pnn/error.hpp"

namespace pnn::csv {

/// Shortest text form that round-trips a double exactly.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::string join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line;
}

/// Reads all non-empty lines, split into cells. Trailing '\r' is stripped
/// so files written on other platforms parse the same way.
inline std::vector<std::vector<std::string>> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split(line));
  }
  return rows;
}

inline void write_rows(const std::string& path,
                       const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open file for writing: " + path);
  for (const auto& row : rows) out << join(row) << '\n';
}

inline double parse_double(const std::string& cell, const std::string& context) {
  try {
    std::size_t pos = 0;
    double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("bad numeric value '" + cell + "' in " + context);
  }
}

inline void require_header(const std::vector<std::vector<std::string>>& rows,
                           const std::vector<std::string>& expected,
                           const std::string& path) {
  if (rows.empty() || rows.front() != expected)
    throw ValidationError("unexpected header in " + path + " (want '" +
                          join(expected) + "')");
}

}  // namespace pnn::csv
