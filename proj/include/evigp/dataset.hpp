#pragma once

#include <string>

#include "evigp/linalg.hpp"

namespace evigp {

/// Training or testing data: inputs on the unit cube, responses unscaled.
struct Dataset {
  Matrix X;  // n x d, unit-cube coordinates
  Vector y;  // length n

  int n() const { return static_cast<int>(X.rows()); }
  int d() const { return static_cast<int>(X.cols()); }
};

/// CSV round-trip: header x1..xd,y; values with %.17g so replays are exact.
void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(const std::string& path);

}  // namespace evigp
