#pragma once

#include <string>
#include <vector>

#include "evigp/linalg.hpp"

namespace evigp {

/// All CSV output uses %.17g so files round-trip doubles exactly.
std::string format_g17(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values);

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

CsvTable read_csv(const std::string& path);

}  // namespace evigp
