#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "evigp/dataset.hpp"
#include "evigp/design.hpp"
#include "evigp/linalg.hpp"

namespace evigp {

/// One benchmark response surface: physical input ranges plus the noise
/// level of the data-generating process.
struct BenchmarkSpec {
  std::string name;  // toy | otl | borehole
  int d = 0;
  std::vector<std::array<double, 2>> ranges;
  double noise_sd = 0.0;
};

BenchmarkSpec toy_benchmark();
BenchmarkSpec otl_benchmark();
BenchmarkSpec borehole_benchmark();
BenchmarkSpec benchmark_by_name(const std::string& name);

double toy_fn(double x);
double otl_fn(const Vector& x);        // physical coordinates
double borehole_fn(const Vector& x);   // physical coordinates

/// Evaluate the named response on physical-coordinate rows.
Vector eval_benchmark(const BenchmarkSpec& spec, const Matrix& physical_X);

/// Unit-cube dataset with N(0, sigma^2) noise added to the response.
Dataset make_dataset(const BenchmarkSpec& spec, const Design& design, std::mt19937_64& rng);

/// Same, also returning the noiseless response values.
struct DatasetWithTruth {
  Dataset data;
  Vector y_true;
};
DatasetWithTruth make_dataset_with_truth(const BenchmarkSpec& spec, const Design& design,
                                         std::mt19937_64& rng);

/// sqrt(mean((pred - truth)^2)) / sample sd(truth).
double standardized_rmspe(const Vector& pred, const Vector& truth);

}  // namespace evigp
