#include "evigp/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "evigp/benchmark.hpp"
#include "evigp/kernel.hpp"

namespace evigp {

namespace {

// Acklam's rational approximation to the standard normal quantile,
// refined by one Halley step; good to ~1e-15 on (0,1).
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

double empirical_quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  std::sort(v.begin(), v.end());
  const double h = q * (static_cast<double>(v.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

// Per-hyperparameter-point prediction state: one factorization, then O(n^2)
// per query, shared by the single-point and the aggregated paths.
struct PredictCore {
  const FitResult& fit;
  CovFactor F;
  Matrix B;              // A^{-1} G
  Eigen::LLT<Matrix> Qllt;
  Vector beta_hat;
  Vector resid_weights;  // A^{-1}(y - G beta_hat)
  KernelParams params;
  double tau2 = 0.0;

  PredictCore(const FitResult& f, const HyperPoint& point)
      : fit(f), F(cov_factor(f.data, KernelParams{point.omega()}, point.eta(),
                             f.prior.jitter)) {
    params.omega = point.omega();
    B = F.solve(f.G);
    Matrix Q = f.G.transpose() * B;
    Q = ((Q + Q.transpose()) / 2.0).eval();
    Qllt.compute(Q);
    if (Qllt.info() != Eigen::Success) {
      Matrix Qj = Q + 1e-12 * Q.diagonal().mean() * Matrix::Identity(Q.rows(), Q.cols());
      Qllt.compute(Qj);
      if (Qllt.info() != Eigen::Success)
        throw NumericalError("predict: G'A^-1G is not positive definite");
    }
    BetaConditional cond = beta_conditional(f.data, f.G, f.prior, point);
    beta_hat = cond.beta_hat;
    if (f.prior.informative) {
      tau2 = point.tau2();
    } else {
      tau2 = tau2_conditional(f.data, f.G, f.prior, point).scale;
    }
    resid_weights = F.solve(Vector(f.data.y - f.G * beta_hat));
  }

  Prediction at(const Vector& x_query) const {
    Vector k = cross_kernel(x_query, fit.data.X, params);
    Vector g = eval_basis(fit.basis, x_query);
    Prediction pred;
    pred.mean = g.dot(beta_hat) + k.dot(resid_weights);
    Vector Ak = F.solve(k);
    Vector c = g - fit.G.transpose() * Ak;
    const double kAk = k.dot(Ak);
    const double cQc = c.dot(Qllt.solve(c));
    double bracket = 1.0 - kAk + cQc;
    const double slack = 1e-6 * (1.0 + std::abs(kAk) + std::abs(cQc));
    if (bracket < 0.0) {
      if (bracket < -slack)
        throw NumericalError("predict: negative predictive variance beyond tolerance");
      bracket = 0.0;
    }
    pred.variance = tau2 * bracket;
    const double half = 1.959963984540054 * std::sqrt(std::max(pred.variance, 0.0));
    pred.lower = pred.mean - half;
    pred.upper = pred.mean + half;
    return pred;
  }
};

}  // namespace

HyperPoint FitResult::point_from_row(int i) const {
  if (!ensemble) throw std::logic_error("point_from_row: no particle ensemble in fit");
  if (i < 0 || i >= ensemble->N()) throw std::out_of_range("point_from_row: bad index");
  Vector row = ensemble->particles.row(i).transpose();
  return HyperPoint::from_flat(row, data.d(), prior.informative);
}

Prediction predict_at(const FitResult& fit, const HyperPoint& point, const Vector& x_query) {
  if (x_query.size() != fit.data.d())
    throw std::invalid_argument("predict_at: query dimension mismatch");
  PredictCore core(fit, point);
  return core.at(x_query);
}

std::vector<Prediction> predict_aggregate(const FitResult& fit, const Matrix& X_query) {
  if (X_query.cols() != fit.data.d())
    throw std::invalid_argument("predict_aggregate: query dimension mismatch");
  const int m = static_cast<int>(X_query.rows());
  std::vector<Prediction> out(m);

  if (fit.ensemble && fit.ensemble->N() > 0) {
    const int N = fit.ensemble->N();
    Matrix means(N, m), vars(N, m);
    for (int i = 0; i < N; ++i) {
      PredictCore core(fit, fit.point_from_row(i));
      for (int j = 0; j < m; ++j) {
        Prediction p = core.at(X_query.row(j).transpose());
        means(i, j) = p.mean;
        vars(i, j) = p.variance;
      }
    }
    for (int j = 0; j < m; ++j) {
      if (N == 1) {
        // bitwise-identical to the single-point path
        out[j].mean = means(0, j);
        out[j].variance = vars(0, j);
      } else {
        const double mbar = means.col(j).mean();
        const double within = vars.col(j).mean();
        const double between = (means.col(j).array() - mbar).square().sum() / N;
        out[j].mean = mbar;
        out[j].variance = within + between;
      }
      const double half = 1.959963984540054 * std::sqrt(std::max(out[j].variance, 0.0));
      out[j].lower = out[j].mean - half;
      out[j].upper = out[j].mean + half;
    }
    return out;
  }

  if (!fit.mode) throw std::logic_error("predict_aggregate: fit has neither mode nor ensemble");
  PredictCore core(fit, *fit.mode);
  for (int j = 0; j < m; ++j) out[j] = core.at(X_query.row(j).transpose());
  return out;
}

Vector predict_mean(const FitResult& fit, const Matrix& X_query) {
  std::vector<Prediction> preds = predict_aggregate(fit, X_query);
  Vector mu(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) mu[i] = preds[i].mean;
  return mu;
}

IntervalReport beta_intervals(const FitResult& fit, double level, int draw_reps,
                              std::uint64_t seed) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("beta_intervals: level in (0,1)");
  IntervalReport rep;
  rep.labels = active_labels(fit.basis);
  const int p = fit.basis.n_active();
  rep.estimate.resize(p);
  rep.lower.resize(p);
  rep.upper.resize(p);
  rep.flagged.assign(p, 0);

  if (fit.ensemble && fit.ensemble->N() > 0) {
    const int N = fit.ensemble->N();
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> draws(p);
    for (int i = 0; i < N; ++i) {
      HyperPoint point = fit.point_from_row(i);
      BetaConditional cond = beta_conditional(fit.data, fit.G, fit.prior, point);
      Tau2Conditional tc;
      if (!fit.prior.informative) tc = tau2_conditional(fit.data, fit.G, fit.prior, point);
      for (int r = 0; r < draw_reps; ++r) {
        BetaConditional use = cond;
        if (!fit.prior.informative) {
          // tau^2 cascade: rescale the plug-in covariance by a fresh draw
          const double t = sample_tau2(tc, rng);
          use.sigma_beta = cond.sigma_beta * (t / tc.scale);
        }
        Vector b = sample_beta(use, rng);
        for (int j = 0; j < p; ++j) draws[j].push_back(b[j]);
      }
    }
    const double alpha = (1.0 - level) / 2.0;
    for (int j = 0; j < p; ++j) {
      rep.estimate[j] =
          std::accumulate(draws[j].begin(), draws[j].end(), 0.0) / draws[j].size();
      rep.lower[j] = empirical_quantile(draws[j], alpha);
      rep.upper[j] = empirical_quantile(draws[j], 1.0 - alpha);
      rep.flagged[j] = (rep.lower[j] > 0.0 || rep.upper[j] < 0.0) ? 1 : 0;
    }
    return rep;
  }

  if (!fit.mode) throw std::logic_error("beta_intervals: fit has neither mode nor ensemble");
  BetaConditional cond = beta_conditional(fit.data, fit.G, fit.prior, *fit.mode);
  const double z = normal_quantile(0.5 + level / 2.0);
  for (int j = 0; j < p; ++j) {
    const double sd = std::sqrt(std::max(cond.sigma_beta(j, j), 0.0));
    rep.estimate[j] = cond.beta_hat[j];
    rep.lower[j] = cond.beta_hat[j] - z * sd;
    rep.upper[j] = cond.beta_hat[j] + z * sd;
    rep.flagged[j] = (rep.lower[j] > 0.0 || rep.upper[j] < 0.0) ? 1 : 0;
  }
  return rep;
}

BasisSpec select_terms(const BasisSpec& basis, const std::vector<char>& flags) {
  if (static_cast<int>(flags.size()) != basis.n_active())
    throw std::invalid_argument("select_terms: one flag per active term required");
  BasisSpec out = basis;
  int j = 0;
  for (int t = 0; t < basis.n_terms(); ++t) {
    if (!basis.active[t]) continue;
    const bool keep = flags[j] != 0 || term_order(basis, t) == 0;
    out.active[t] = keep ? 1 : 0;
    ++j;
  }
  return out;
}

namespace {

std::vector<std::array<double, 2>> augment_box(const std::vector<std::array<double, 2>>& box,
                                               const Dataset& data,
                                               const PriorConfig& prior) {
  const int D = data.d() + 1 + (prior.informative ? 1 : 0);
  if (static_cast<int>(box.size()) == D) return box;
  if (prior.informative && static_cast<int>(box.size()) == data.d() + 1) {
    // Data-adaptive tau^2 coordinate: bracket the response variance.
    const double mean = data.y.mean();
    double vy = (data.y.array() - mean).square().sum() / std::max(1, data.n() - 1);
    if (!(vy > 0.0)) vy = 1.0;
    auto out = box;
    out.push_back({0.25 * vy, 4.0 * vy});
    return out;
  }
  throw std::invalid_argument("fit: init box size does not match the parameter dimension");
}

}  // namespace

FitResult fit_map(const Dataset& data, const BasisSpec& basis, const PriorConfig& prior,
                  const EviConfig& evi_config,
                  const std::vector<std::array<double, 2>>& init_box, double step_size,
                  std::uint64_t seed) {
  FitResult fit;
  fit.prior = prior;
  fit.basis = basis;
  fit.data = data;
  fit.G = design_matrix(basis, data.X);
  PosteriorTarget target(data, fit.G, prior, /*include_jacobian=*/false);
  TargetFn fn = [&target](const Vector& x, Vector* g) { return target.value_grad(x, g); };

  auto box = augment_box(init_box, data, prior);
  std::mt19937_64 rng(seed);
  ParticleEnsemble start = init_particles(1, target.dim(), box, 1.0, step_size, rng);
  // Single-particle proximal point with the movement penalty on the natural
  // parameter scale (the self-interaction term is inert at N = 1). A
  // log-scale penalty would meter progress in log units and crawl toward
  // modes with near-zero coordinates.
  start.kde_on_exp = true;
  EviResult er = evi_im(start, fn, evi_config);

  fit.mode = HyperPoint::from_flat(er.ensemble.particles.row(0).transpose(), data.d(),
                                   prior.informative);
  fit.energy_trace = er.energy_trace;
  fit.epochs = er.epochs;
  fit.converged = er.converged;
  fit.warning = er.warning;
  return fit;
}

FitResult fit_post(const Dataset& data, const BasisSpec& basis, const PriorConfig& prior,
                   const EviConfig& evi_config,
                   const std::vector<std::array<double, 2>>& init_box, int n_particles,
                   double h, double step_size, std::uint64_t seed) {
  if (n_particles < 1) throw std::invalid_argument("fit_post: need at least one particle");
  FitResult fit;
  fit.prior = prior;
  fit.basis = basis;
  fit.data = data;
  fit.G = design_matrix(basis, data.X);
  PosteriorTarget target(data, fit.G, prior, /*include_jacobian=*/false);
  TargetFn fn = [&target](const Vector& x, Vector* g) { return target.value_grad(x, g); };

  auto box = augment_box(init_box, data, prior);
  std::mt19937_64 rng(seed);
  ParticleEnsemble start = init_particles(n_particles, target.dim(), box, h, step_size, rng);
  // The posterior density (and the bandwidth h) live on the natural parameter
  // scale; the log coordinates exist for the optimizer. Without this, the
  // log-space entropy term pays particles to wander down directions such as
  // eta -> 0 where the natural-scale posterior is flat but the log-space
  // volume is infinite.
  start.kde_on_exp = true;
  EviResult er = evi_im(start, fn, evi_config);

  fit.ensemble = er.ensemble;
  fit.energy_trace = er.energy_trace;
  fit.epochs = er.epochs;
  fit.converged = er.converged;
  fit.warning = er.warning;
  return fit;
}

CvResult cv_select_nu(const Dataset& data, const BasisSpec& basis,
                      const PriorConfig& prior_template, const EviConfig& evi_config,
                      const std::vector<std::array<double, 2>>& init_box, double grid_lo,
                      double grid_hi, double grid_step, int folds, std::uint64_t seed) {
  if (!prior_template.informative)
    throw std::invalid_argument("cv_select_nu: shrinkage scale applies to the informative regime");
  if (folds < 2 || data.n() < folds)
    throw std::invalid_argument("cv_select_nu: need 2 <= folds <= n");
  if (!(grid_lo > 0.0) || !(grid_step > 0.0) || grid_hi < grid_lo)
    throw std::invalid_argument("cv_select_nu: bad grid");

  std::vector<double> grid;
  for (double nu = grid_lo; nu <= grid_hi + 1e-9; nu += grid_step) grid.push_back(nu);

  std::vector<int> order(data.n());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  EviConfig cv_cfg = evi_config;
  cv_cfg.max_outer = std::min(cv_cfg.max_outer, 100);

  Matrix scores(static_cast<int>(grid.size()), folds);
  for (int f = 0; f < folds; ++f) {
    const int lo = static_cast<int>(static_cast<long long>(f) * data.n() / folds);
    const int hi = static_cast<int>(static_cast<long long>(f + 1) * data.n() / folds);
    const int n_te = hi - lo;
    const int n_tr = data.n() - n_te;
    Dataset train, test;
    train.X.resize(n_tr, data.d());
    train.y.resize(n_tr);
    test.X.resize(n_te, data.d());
    test.y.resize(n_te);
    int it = 0, ie = 0;
    for (int i = 0; i < data.n(); ++i) {
      const int idx = order[i];
      if (i >= lo && i < hi) {
        test.X.row(ie) = data.X.row(idx);
        test.y[ie++] = data.y[idx];
      } else {
        train.X.row(it) = data.X.row(idx);
        train.y[it++] = data.y[idx];
      }
    }

    Matrix G = design_matrix(basis, train.X);
    auto box = augment_box(init_box, train, prior_template);
    std::mt19937_64 fold_rng(seed ^ (0x9e3779b97f4a7c15ULL * (f + 1)));
    ParticleEnsemble start = init_particles(1, static_cast<int>(box.size()), box, 1.0,
                                             /*step_size=*/0.1, fold_rng);
    start.kde_on_exp = true;  // same natural-scale movement metric as fit_map

    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      PriorConfig prior = prior_template;
      prior.nu2 = grid[gi] * grid[gi];
      PosteriorTarget target(train, G, prior, /*include_jacobian=*/false);
      TargetFn fn = [&target](const Vector& x, Vector* g) { return target.value_grad(x, g); };
      EviResult er = evi_im(start, fn, cv_cfg);
      start.particles = er.ensemble.particles;  // ascending-grid warm start

      FitResult fit;
      fit.prior = prior;
      fit.basis = basis;
      fit.data = train;
      fit.G = G;
      fit.mode = HyperPoint::from_flat(start.particles.row(0).transpose(), train.d(), true);
      Vector pred = predict_mean(fit, test.X);
      scores(static_cast<int>(gi), f) = standardized_rmspe(pred, test.y);
    }
  }

  CvResult res;
  res.nu_grid.resize(static_cast<int>(grid.size()));
  res.mean_rmspe.resize(static_cast<int>(grid.size()));
  int best = 0;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    res.nu_grid[static_cast<int>(gi)] = grid[gi];
    res.mean_rmspe[static_cast<int>(gi)] = scores.row(static_cast<int>(gi)).mean();
    if (res.mean_rmspe[static_cast<int>(gi)] < res.mean_rmspe[best]) best = static_cast<int>(gi);
  }
  res.best_nu = grid[best];
  return res;
}

}  // namespace evigp
