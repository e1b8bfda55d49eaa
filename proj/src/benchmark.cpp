#include "evigp/benchmark.hpp"

#include <cmath>
#include <stdexcept>

namespace evigp {

BenchmarkSpec toy_benchmark() {
  return BenchmarkSpec{"toy", 1, {{0.0, 10.0}}, 0.5};
}

BenchmarkSpec otl_benchmark() {
  return BenchmarkSpec{"otl",
                       6,
                       {{50.0, 150.0},
                        {25.0, 70.0},
                        {0.5, 3.0},
                        {1.2, 2.5},
                        {0.25, 1.2},
                        {50.0, 300.0}},
                       0.02};
}

BenchmarkSpec borehole_benchmark() {
  return BenchmarkSpec{"borehole",
                       8,
                       {{0.05, 0.15},
                        {100.0, 50000.0},
                        {63070.0, 115600.0},
                        {990.0, 1110.0},
                        {63.1, 116.0},
                        {700.0, 820.0},
                        {1120.0, 1680.0},
                        {9855.0, 12045.0}},
                       0.02};
}

BenchmarkSpec benchmark_by_name(const std::string& name) {
  if (name == "toy") return toy_benchmark();
  if (name == "otl") return otl_benchmark();
  if (name == "borehole") return borehole_benchmark();
  throw std::invalid_argument("unknown benchmark: " + name);
}

double toy_fn(double x) { return x * std::sin(x); }

// Mid-band voltage of an output transformerless push-pull circuit.
// Inputs: Rb1, Rb2, Rf, Rc1, Rc2 (K-Ohms), I (current gain).
double otl_fn(const Vector& x) {
  if (x.size() != 6) throw std::invalid_argument("otl_fn: expected 6 inputs");
  const double Rb1 = x[0], Rb2 = x[1], Rf = x[2], Rc1 = x[3], Rc2 = x[4], I = x[5];
  const double Vb1 = 12.0 * Rb2 / (Rb1 + Rb2);
  const double a = I * (Rc2 + 9.0);
  const double denom = a + Rf;
  return (Vb1 + 0.74) * a / denom + 11.35 * Rf / denom + 0.74 * Rf * a / (denom * Rc1);
}

// Water flow through a borehole.
// Inputs: rw, r (m), Tu (m2/yr), Hu (m), Tl (m2/yr), Hl (m), L (m), Kw (m/yr).
double borehole_fn(const Vector& x) {
  if (x.size() != 8) throw std::invalid_argument("borehole_fn: expected 8 inputs");
  const double rw = x[0], r = x[1], Tu = x[2], Hu = x[3], Tl = x[4], Hl = x[5], L = x[6],
               Kw = x[7];
  if (r <= rw) throw std::invalid_argument("borehole_fn: needs r > rw");
  const double lnr = std::log(r / rw);
  const double numer = 2.0 * M_PI * Tu * (Hu - Hl);
  const double denom = lnr * (1.0 + 2.0 * L * Tu / (lnr * rw * rw * Kw) + Tu / Tl);
  return numer / denom;
}

Vector eval_benchmark(const BenchmarkSpec& spec, const Matrix& physical_X) {
  if (physical_X.cols() != spec.d)
    throw std::invalid_argument("eval_benchmark: dimension mismatch");
  const int n = static_cast<int>(physical_X.rows());
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    Vector row = physical_X.row(i).transpose();
    if (spec.name == "toy")
      y[i] = toy_fn(row[0]);
    else if (spec.name == "otl")
      y[i] = otl_fn(row);
    else if (spec.name == "borehole")
      y[i] = borehole_fn(row);
    else
      throw std::invalid_argument("eval_benchmark: unknown benchmark " + spec.name);
  }
  return y;
}

DatasetWithTruth make_dataset_with_truth(const BenchmarkSpec& spec, const Design& design,
                                         std::mt19937_64& rng) {
  if (design.d != spec.d) throw std::invalid_argument("make_dataset: dimension mismatch");
  Matrix physical = scale_to_ranges(design, spec.ranges);
  DatasetWithTruth out;
  out.y_true = eval_benchmark(spec, physical);
  out.data.X = design.points;  // unit-cube coordinates
  out.data.y = out.y_true;
  if (spec.noise_sd > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_sd);
    for (int i = 0; i < out.data.y.size(); ++i) out.data.y[i] += noise(rng);
  }
  return out;
}

Dataset make_dataset(const BenchmarkSpec& spec, const Design& design, std::mt19937_64& rng) {
  return make_dataset_with_truth(spec, design, rng).data;
}

double standardized_rmspe(const Vector& pred, const Vector& truth) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("standardized_rmspe: length mismatch");
  const int n = static_cast<int>(truth.size());
  if (n < 2) throw std::invalid_argument("standardized_rmspe: need at least 2 points");
  const double rmse = std::sqrt((pred - truth).squaredNorm() / n);
  const double mean = truth.mean();
  const double var = (truth.array() - mean).square().sum() / (n - 1);
  if (!(var > 0.0)) throw std::invalid_argument("standardized_rmspe: constant truth");
  return rmse / std::sqrt(var);
}

}  // namespace evigp
