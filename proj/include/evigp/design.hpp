#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "evigp/linalg.hpp"

namespace evigp {

/// A space-filling design on the unit hypercube [0,1]^d.
/// Every column satisfies the Latin property: exactly one point per
/// stratum [(k-1)/n, k/n).
struct Design {
  Matrix points;       // n x d, entries in [0,1)
  int n = 0;
  int d = 0;
  std::uint64_t seed = 0;
};

/// Stratified random Latin hypercube: each column is an independent random
/// permutation of the n strata with a uniform draw inside each stratum.
Design random_lhs(int n, int d, std::uint64_t seed);

/// maximin_lhs with the per-restart history of the best minimum pairwise
/// distance; the trace is non-decreasing within each hill-climbing run.
struct MaximinResult {
  Design design;
  std::vector<double> trace;  // accepted-move min-distance history (all restarts)
  double min_distance = 0.0;
};

/// Best of `restarts` random LHS candidates, each refined by coordinate-swap
/// hill climbing that only accepts strict improvements of the minimum
/// pairwise Euclidean distance. Swapping two entries within a column keeps
/// the Latin property intact. The first candidate is bit-identical to
/// random_lhs(n, d, seed).
MaximinResult maximin_lhs_traced(int n, int d, std::uint64_t seed, int restarts = 10);
Design maximin_lhs(int n, int d, std::uint64_t seed, int restarts = 10);

/// Affine map of each design column from [0,1] to its physical [lo,hi].
Matrix scale_to_ranges(const Design& design,
                       const std::vector<std::array<double, 2>>& ranges);

/// Smallest pairwise Euclidean distance among rows.
double min_pairwise_distance(const Matrix& points);

/// True iff every column has exactly one entry per stratum.
bool latin_property_holds(const Matrix& points);

}  // namespace evigp
