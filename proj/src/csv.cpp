#include "evigp/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace evigp {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values) {
  if (!header.empty() && static_cast<int>(header.size()) != values.cols() && values.size() > 0)
    throw std::invalid_argument("write_csv: header width mismatch");
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("write_csv: cannot open " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  if (!header.empty()) out << '\n';
  for (int i = 0; i < values.rows(); ++i) {
    for (int j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      out << format_g17(values(i, j));
    }
    out << '\n';
  }
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("read_csv: cannot open " + path);
  CsvTable table;
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (first) {
      first = false;
      // Header row: any cell that fails to parse as a number marks it.
      std::vector<std::string> cells;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      bool numeric = true;
      for (const auto& c : cells) {
        char* end = nullptr;
        std::strtod(c.c_str(), &end);
        if (end == c.c_str() || *end != '\0') numeric = false;
      }
      if (!numeric) {
        table.header = cells;
        continue;
      }
      std::vector<double> row;
      for (const auto& c : cells) row.push_back(std::strtod(c.c_str(), nullptr));
      rows.push_back(std::move(row));
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    table.values.resize(0, static_cast<int>(table.header.size()));
    return table;
  }
  const std::size_t w = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != w) throw std::invalid_argument("read_csv: ragged rows in " + path);
  table.values.resize(static_cast<int>(rows.size()), static_cast<int>(w));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < w; ++j)
      table.values(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return table;
}

}  // namespace evigp
