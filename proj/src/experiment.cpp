#include "evigp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace evigp {

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return 0.0;
  const double h = q * (static_cast<double>(v.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

}  // namespace

int basis_degree_for(const std::string& mean_model) {
  if (mean_model == "constant") return 0;
  if (mean_model == "linear") return 1;
  if (mean_model == "quadratic" || mean_model == "selected") return 2;
  throw std::invalid_argument("unknown mean model: " + mean_model);
}

ExperimentConfig default_experiment(const std::string& benchmark) {
  ExperimentConfig cfg;
  cfg.benchmark = benchmark;
  if (benchmark == "toy") {
    cfg.mean_model = "constant";
    cfg.method = "post";
    cfg.n_train = 11;
    cfg.n_test = 100;
    cfg.reps = 100;
    cfg.n_particles = 100;
    cfg.h = 0.02;
    cfg.step_size = 1.0;
    cfg.informative = false;
    cfg.a_eta = 1.0;
    cfg.b_eta = 0.5;
    cfg.df_tau2 = 0.0;
  } else if (benchmark == "otl" || benchmark == "borehole") {
    cfg.mean_model = "quadratic";
    cfg.method = "map";
    cfg.n_train = 200;
    cfg.n_test = (benchmark == "otl") ? 1000 : 100;
    cfg.reps = 100;
    cfg.n_particles = 100;
    cfg.h = 0.001;
    cfg.step_size = 0.1;
    cfg.informative = true;
    cfg.a_eta = 1.0;
    cfg.b_eta = 2.0;
    cfg.df_tau2 = 7.0;
    cfg.nu = (benchmark == "otl") ? 4.35 : 4.55;
  } else {
    throw std::invalid_argument("unknown benchmark: " + benchmark);
  }
  resolve_experiment(cfg);
  return cfg;
}

void resolve_experiment(ExperimentConfig& cfg) {
  BenchmarkSpec spec = benchmark_by_name(cfg.benchmark);
  const int d = spec.d;
  basis_degree_for(cfg.mean_model);  // validates

  if (cfg.a_omega.size() == 0) {
    cfg.a_omega = Vector::Ones(d);
    if (cfg.benchmark != "toy") cfg.a_omega[0] = 4.0;
  }
  if (cfg.b_omega.size() == 0) {
    // The toy study works on [0,10] scaled into the unit cube; the squared
    // distances shrink by 100, so the rate 0.5 on the original scale becomes
    // 0.005 on the cube scale.
    const double b = (cfg.benchmark == "toy") ? 0.005 : 2.0;
    cfg.b_omega = Vector::Constant(d, b);
  }
  if (static_cast<int>(cfg.a_omega.size()) != d || static_cast<int>(cfg.b_omega.size()) != d)
    throw std::invalid_argument("resolve_experiment: omega prior vectors must have length d");

  if (cfg.init_box.empty()) {
    if (cfg.benchmark == "toy") {
      // [0,0.1] for omega on the original [0,10] axis maps to [0,10] on the
      // unit cube; the eta box is scale-free. The lower omega edge is raised
      // to 6: the marginal posterior of this problem has a degenerate local
      // basin at omega -> 0 (the fully-correlated rank-one limit, which
      // predicts a flat trend-only surface), and its ridge sits near omega ~ 3
      // for n = 11 draws, so any start or early-epoch repulsion shove that
      // lands below the ridge collapses to a trend-only fit. Starting in the
      // upper part of the bracket keeps starts, and particles extruded by the
      // initial crowding, on the informative side.
      cfg.init_box = {{6.0, 10.0}, {0.1, 0.4}};
    } else {
      cfg.init_box.assign(d + 1, {0.0, 0.1});
    }
  }

  if (cfg.mean_model == "selected" && cfg.selected_terms.empty()) {
    if (cfg.benchmark == "otl")
      cfg.selected_terms = {"x2", "x2^2"};
    else if (cfg.benchmark == "borehole")
      cfg.selected_terms = {"1", "x1", "x4", "x1*x4"};
    else
      throw std::invalid_argument("resolve_experiment: no default selected terms for " +
                                  cfg.benchmark);
  }

  if (cfg.n_train < 2 || cfg.n_test < 2)
    throw std::invalid_argument("resolve_experiment: need n_train, n_test >= 2");
  if (cfg.reps < 1) throw std::invalid_argument("resolve_experiment: reps >= 1");
  if (cfg.method != "post" && cfg.method != "map")
    throw std::invalid_argument("resolve_experiment: method must be post or map");
}

BasisSpec experiment_basis(const ExperimentConfig& cfg, int d) {
  BasisSpec basis = build_basis(d, basis_degree_for(cfg.mean_model));
  if (cfg.mean_model == "selected") {
    std::vector<char> keep(basis.n_terms(), 0);
    for (const auto& label : cfg.selected_terms) {
      bool found = false;
      for (int t = 0; t < basis.n_terms(); ++t)
        if (term_label(basis, t) == label) {
          keep[t] = 1;
          found = true;
          break;
        }
      if (!found)
        throw std::invalid_argument("unknown selected term label: " + label);
    }
    for (int t = 0; t < basis.n_terms(); ++t) {
      const bool intercept = term_order(basis, t) == 0;
      basis.active[t] = (keep[t] || intercept) ? 1 : 0;
    }
  }
  return basis;
}

PriorConfig experiment_prior(const ExperimentConfig& cfg, const BasisSpec& basis) {
  PriorConfig prior;
  prior.a_omega = cfg.a_omega;
  prior.b_omega = cfg.b_omega;
  prior.a_eta = cfg.a_eta;
  prior.b_eta = cfg.b_eta;
  prior.df_tau2 = cfg.df_tau2;
  prior.informative = cfg.informative;
  prior.jitter = cfg.jitter;
  if (cfg.informative) {
    prior.nu2 = cfg.nu * cfg.nu;
    prior.r_diag = hierarchy_R(basis, cfg.hierarchy_r).diag;
  }
  return prior;
}

FitResult fit_experiment(const ExperimentConfig& cfg, const Dataset& data) {
  BasisSpec basis = experiment_basis(cfg, data.d());
  PriorConfig prior = experiment_prior(cfg, basis);
  if (cfg.method == "map")
    return fit_map(data, basis, prior, cfg.evi, cfg.init_box, cfg.step_size, cfg.seed);
  return fit_post(data, basis, prior, cfg.evi, cfg.init_box, cfg.n_particles, cfg.h,
                  cfg.step_size, cfg.seed);
}

RepOutcome run_replication(const ExperimentConfig& cfg_in, std::uint64_t rep_seed) {
  RepOutcome out;
  try {
    ExperimentConfig cfg = cfg_in;
    resolve_experiment(cfg);
    BenchmarkSpec spec = benchmark_by_name(cfg.benchmark);

    Design train_design = maximin_lhs(cfg.n_train, spec.d, rep_seed, cfg.design_restarts);
    Design test_design =
        maximin_lhs(cfg.n_test, spec.d, rep_seed ^ 0x5DEECE66DULL, cfg.design_restarts);

    std::mt19937_64 noise_rng(rep_seed ^ 0x9E3779B97F4A7C15ULL);
    DatasetWithTruth train = make_dataset_with_truth(spec, train_design, noise_rng);
    DatasetWithTruth test = make_dataset_with_truth(spec, test_design, noise_rng);

    cfg.seed = rep_seed;
    FitResult fit = fit_experiment(cfg, train.data);
    Vector pred = predict_mean(fit, test.data.X);
    const Vector& target = cfg.score_noiseless ? test.y_true : test.data.y;
    out.rmspe = standardized_rmspe(pred, target);
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

BenchmarkRun run_benchmark(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  resolve_experiment(cfg);
  BenchmarkRun run;
  run.reps.resize(cfg.reps);
  parallel_for(cfg.reps, cfg.threads,
               [&](int r) { run.reps[r] = run_replication(cfg, cfg.seed + r); });
  for (const auto& rep : run.reps) {
    if (rep.failed)
      ++run.failures;
    else
      run.rmspes.push_back(rep.rmspe);
  }
  if (!run.rmspes.empty()) {
    run.mean = std::accumulate(run.rmspes.begin(), run.rmspes.end(), 0.0) /
               static_cast<double>(run.rmspes.size());
    std::vector<double> sorted = run.rmspes;
    std::sort(sorted.begin(), sorted.end());
    run.q1 = quantile_sorted(sorted, 0.25);
    run.median = quantile_sorted(sorted, 0.5);
    run.q3 = quantile_sorted(sorted, 0.75);
  }
  return run;
}

SelectionOutcome run_selection(const ExperimentConfig& cfg_in, const Dataset& data) {
  ExperimentConfig cfg = cfg_in;
  resolve_experiment(cfg);
  if (!cfg.informative)
    throw std::invalid_argument("run_selection: requires the informative regime");

  SelectionOutcome out;
  BasisSpec full = build_basis(data.d(), 2);
  PriorConfig prior_full = experiment_prior(cfg, full);

  CvResult cv_full = cv_select_nu(data, full, prior_full, cfg.evi, cfg.init_box);
  out.nu_full = cv_full.best_nu;
  prior_full.nu2 = out.nu_full * out.nu_full;

  FitResult fit_full =
      fit_map(data, full, prior_full, cfg.evi, cfg.init_box, cfg.step_size, cfg.seed);
  out.report = beta_intervals(fit_full);
  out.reduced_basis = select_terms(full, out.report.flagged);

  PriorConfig prior_red = experiment_prior(cfg, out.reduced_basis);
  CvResult cv_red = cv_select_nu(data, out.reduced_basis, prior_red, cfg.evi, cfg.init_box);
  out.nu_reduced = cv_red.best_nu;
  prior_red.nu2 = out.nu_reduced * out.nu_reduced;

  if (cfg.method == "map")
    out.final_fit = fit_map(data, out.reduced_basis, prior_red, cfg.evi, cfg.init_box,
                            cfg.step_size, cfg.seed);
  else
    out.final_fit = fit_post(data, out.reduced_basis, prior_red, cfg.evi, cfg.init_box,
                             cfg.n_particles, cfg.h, cfg.step_size, cfg.seed);
  return out;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace evigp
