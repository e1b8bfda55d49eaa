#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evigp/basis.hpp"
#include "evigp/dataset.hpp"
#include "evigp/evi.hpp"
#include "evigp/posterior.hpp"

namespace evigp {

/// Everything prediction needs: prior + basis + data plus the EVI output
/// (mode and/or particle ensemble).
struct FitResult {
  PriorConfig prior;
  BasisSpec basis;
  Dataset data;
  Matrix G;

  std::optional<HyperPoint> mode;              // EVI-MAP
  std::optional<ParticleEnsemble> ensemble;    // EVI-post
  std::vector<double> energy_trace;
  int epochs = 0;
  bool converged = false;
  bool warning = false;

  HyperPoint point_from_row(int i) const;      // ensemble row -> HyperPoint
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
  double lower = 0.0;   // central 95% bounds
  double upper = 0.0;
};

/// Posterior predictive mean/variance at one query point conditional on one
/// hyperparameter point. Non-informative fits plug in tau_hat^2.
Prediction predict_at(const FitResult& fit, const HyperPoint& point, const Vector& x_query);

/// MAP fits: predict_at the mode. Particle fits: mixture aggregation
/// (mean of means; mean of variances + variance of means), interval
/// mean +- 1.96 sd.
std::vector<Prediction> predict_aggregate(const FitResult& fit, const Matrix& X_query);

/// Convenience: aggregated predictive means only.
Vector predict_mean(const FitResult& fit, const Matrix& X_query);

struct IntervalReport {
  std::vector<std::string> labels;  // active terms, canonical order
  Vector estimate;
  Vector lower;
  Vector upper;
  std::vector<char> flagged;        // interval excludes zero
};

/// Central credible intervals for beta. MAP fits use the Gaussian
/// conditional at the mode; particle fits pool conditional draws
/// (`draw_reps` sweeps over the ensemble) and take empirical percentiles.
IntervalReport beta_intervals(const FitResult& fit, double level = 0.95,
                              int draw_reps = 100, std::uint64_t seed = 1234);

/// Deactivate unflagged terms; the intercept is always retained.
BasisSpec select_terms(const BasisSpec& basis, const std::vector<char>& flags);

struct CvResult {
  Vector nu_grid;
  Vector mean_rmspe;   // mean across folds per grid value
  double best_nu = 0.0;
};

/// 5-fold cross-validation for the shrinkage scale nu over an evenly spaced
/// grid (0 excluded: a zero-variance prior is degenerate). Folds come from a
/// seeded shuffle; each cell is an EVI-MAP fit with max_outer capped at 100.
/// Grid cells are visited in ascending order and warm-started from the
/// previous cell's mode, which leaves results deterministic.
CvResult cv_select_nu(const Dataset& data, const BasisSpec& basis,
                      const PriorConfig& prior_template, const EviConfig& evi_config,
                      const std::vector<std::array<double, 2>>& init_box,
                      double grid_lo = 0.05, double grid_hi = 5.0, double grid_step = 0.05,
                      int folds = 5, std::uint64_t seed = 0);

/// Fit drivers shared by the CLI and the benchmark harness.
FitResult fit_map(const Dataset& data, const BasisSpec& basis, const PriorConfig& prior,
                  const EviConfig& evi_config,
                  const std::vector<std::array<double, 2>>& init_box,
                  double step_size, std::uint64_t seed);

FitResult fit_post(const Dataset& data, const BasisSpec& basis, const PriorConfig& prior,
                   const EviConfig& evi_config,
                   const std::vector<std::array<double, 2>>& init_box,
                   int n_particles, double h, double step_size, std::uint64_t seed);

}  // namespace evigp
