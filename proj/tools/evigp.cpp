// Command-line driver: fit / predict / benchmark / select / cv-nu.
//
// Config files are JSON mirroring ExperimentConfig (see README for the
// schema); --seed/--out/--threads override file values. Exit codes:
// 0 success, 1 numerical failure, 2 usage or config error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "evigp/csv.hpp"
#include "evigp/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace evigp;

namespace {

struct CliContext {
  ExperimentConfig cfg;
  std::optional<std::string> dataset_path;
  json raw;
  fs::path out;
};

Vector json_to_vector(const json& j, int d, const char* key) {
  if (j.is_number()) return Vector::Constant(d, j.get<double>());
  if (j.is_array()) {
    Vector v(static_cast<int>(j.size()));
    for (int i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
    return v;
  }
  throw std::invalid_argument(std::string("config: ") + key + " must be a number or array");
}

json vector_to_json(const Vector& v) {
  json j = json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

json matrix_to_json(const Matrix& m) {
  json j = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    j.push_back(row);
  }
  return j;
}

Matrix json_to_matrix(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("config: expected an array of rows");
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  return m;
}

void apply_scalar_overrides(ExperimentConfig& cfg, const json& j) {
  if (j.contains("mean_model")) cfg.mean_model = j["mean_model"].get<std::string>();
  if (j.contains("method")) cfg.method = j["method"].get<std::string>();
  if (j.contains("selected_terms"))
    cfg.selected_terms = j["selected_terms"].get<std::vector<std::string>>();
  if (j.contains("n_train")) cfg.n_train = j["n_train"].get<int>();
  if (j.contains("n_test")) cfg.n_test = j["n_test"].get<int>();
  if (j.contains("reps")) cfg.reps = j["reps"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("design_restarts")) cfg.design_restarts = j["design_restarts"].get<int>();
  if (j.contains("n_particles")) cfg.n_particles = j["n_particles"].get<int>();
  if (j.contains("h")) cfg.h = j["h"].get<double>();
  if (j.contains("step_size")) cfg.step_size = j["step_size"].get<double>();
  if (j.contains("a_eta")) cfg.a_eta = j["a_eta"].get<double>();
  if (j.contains("b_eta")) cfg.b_eta = j["b_eta"].get<double>();
  if (j.contains("df_tau2")) cfg.df_tau2 = j["df_tau2"].get<double>();
  if (j.contains("informative")) cfg.informative = j["informative"].get<bool>();
  if (j.contains("nu")) cfg.nu = j["nu"].get<double>();
  if (j.contains("hierarchy_r")) cfg.hierarchy_r = j["hierarchy_r"].get<double>();
  if (j.contains("jitter")) cfg.jitter = j["jitter"].get<double>();
  if (j.contains("score_noiseless")) cfg.score_noiseless = j["score_noiseless"].get<bool>();
  if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  if (j.contains("evi")) {
    const json& e = j["evi"];
    if (e.contains("max_outer")) cfg.evi.max_outer = e["max_outer"].get<int>();
    if (e.contains("max_inner")) cfg.evi.max_inner = e["max_inner"].get<int>();
    if (e.contains("tol")) cfg.evi.tol = e["tol"].get<double>();
    if (e.contains("lbfgs_history")) cfg.evi.lbfgs_history = e["lbfgs_history"].get<int>();
    if (e.contains("wolfe_c1")) cfg.evi.wolfe_c1 = e["wolfe_c1"].get<double>();
    if (e.contains("wolfe_c2")) cfg.evi.wolfe_c2 = e["wolfe_c2"].get<double>();
    if (e.contains("grad_tol")) cfg.evi.grad_tol = e["grad_tol"].get<double>();
  }
  if (j.contains("init_box")) {
    cfg.init_box.clear();
    for (const auto& pair : j["init_box"])
      cfg.init_box.push_back({pair[0].get<double>(), pair[1].get<double>()});
  }
}

// Priors that need the input dimension; used once d is known.
void apply_dim_overrides(ExperimentConfig& cfg, const json& j, int d) {
  if (j.contains("a_omega")) cfg.a_omega = json_to_vector(j["a_omega"], d, "a_omega");
  if (j.contains("b_omega")) cfg.b_omega = json_to_vector(j["b_omega"], d, "b_omega");
}

// Defaults for a dataset loaded from disk (no named benchmark to copy from).
void resolve_generic(ExperimentConfig& cfg, int d) {
  if (cfg.a_omega.size() == 0) cfg.a_omega = Vector::Ones(d);
  if (cfg.b_omega.size() == 0) cfg.b_omega = Vector::Constant(d, 2.0);
  if (static_cast<int>(cfg.a_omega.size()) != d || static_cast<int>(cfg.b_omega.size()) != d)
    throw std::invalid_argument("config: omega prior vectors must have length d");
  if (cfg.init_box.empty()) cfg.init_box.assign(d + 1, {0.0, 0.1});
}

CliContext build_context(const std::string& config_path, const std::string& out_dir,
                         std::optional<std::uint64_t> seed_flag,
                         std::optional<int> threads_flag) {
  CliContext ctx;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::invalid_argument("cannot open config: " + config_path);
    in >> ctx.raw;
  }
  if (ctx.raw.contains("dataset"))
    ctx.dataset_path = ctx.raw["dataset"].get<std::string>();

  std::string bench = ctx.raw.value("benchmark", ctx.dataset_path ? "" : "toy");
  if (!bench.empty()) {
    ctx.cfg = default_experiment(bench);
    apply_scalar_overrides(ctx.cfg, ctx.raw);
    apply_dim_overrides(ctx.cfg, ctx.raw, benchmark_by_name(bench).d);
    resolve_experiment(ctx.cfg);
  } else {
    apply_scalar_overrides(ctx.cfg, ctx.raw);
    ctx.cfg.benchmark.clear();
  }

  if (seed_flag) ctx.cfg.seed = *seed_flag;
  if (threads_flag) {
    ctx.cfg.threads = *threads_flag;
  } else if (!ctx.raw.contains("threads")) {
    if (const char* env = std::getenv("EVIGP_THREADS")) ctx.cfg.threads = std::atoi(env);
  }
  if (ctx.cfg.threads < 1) ctx.cfg.threads = 1;

  ctx.out = out_dir;
  fs::create_directories(ctx.out);
  return ctx;
}

// Training data: either the configured CSV or one generated replication
// (design seed = cfg.seed, matching replication 0 of a benchmark run).
Dataset load_or_generate(CliContext& ctx) {
  if (ctx.dataset_path) {
    Dataset data = read_dataset_csv(*ctx.dataset_path);
    apply_dim_overrides(ctx.cfg, ctx.raw, data.d());
    resolve_generic(ctx.cfg, data.d());
    return data;
  }
  BenchmarkSpec spec = benchmark_by_name(ctx.cfg.benchmark);
  Design design =
      maximin_lhs(ctx.cfg.n_train, spec.d, ctx.cfg.seed, ctx.cfg.design_restarts);
  std::mt19937_64 noise_rng(ctx.cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  return make_dataset(spec, design, noise_rng);
}

json prior_to_json(const PriorConfig& p) {
  json j;
  j["a_omega"] = vector_to_json(p.a_omega);
  j["b_omega"] = vector_to_json(p.b_omega);
  j["a_eta"] = p.a_eta;
  j["b_eta"] = p.b_eta;
  j["df_tau2"] = p.df_tau2;
  j["informative"] = p.informative;
  j["nu2"] = p.nu2;
  if (p.r_diag.size() > 0) j["r_diag"] = vector_to_json(p.r_diag);
  j["jitter"] = p.jitter;
  return j;
}

PriorConfig prior_from_json(const json& j) {
  PriorConfig p;
  p.a_omega = json_to_vector(j.at("a_omega"), 0, "a_omega");
  p.b_omega = json_to_vector(j.at("b_omega"), 0, "b_omega");
  p.a_eta = j.at("a_eta").get<double>();
  p.b_eta = j.at("b_eta").get<double>();
  p.df_tau2 = j.at("df_tau2").get<double>();
  p.informative = j.at("informative").get<bool>();
  p.nu2 = j.value("nu2", 1.0);
  if (j.contains("r_diag")) p.r_diag = json_to_vector(j["r_diag"], 0, "r_diag");
  p.jitter = j.value("jitter", 1e-10);
  return p;
}

void write_fit_artifact(const fs::path& dir, const CliContext& ctx, const FitResult& fit) {
  write_dataset_csv((dir / "train.csv").string(), fit.data);

  json j;
  j["schema"] = "evigp-fit-v1";
  if (!ctx.cfg.benchmark.empty()) j["benchmark"] = ctx.cfg.benchmark;
  j["mean_model"] = ctx.cfg.mean_model;
  j["method"] = ctx.cfg.method;
  j["train_csv"] = "train.csv";
  j["basis"] = {{"d", fit.basis.d},
                {"degree", fit.basis.degree},
                {"active", json(std::vector<int>(fit.basis.active.begin(),
                                                 fit.basis.active.end()))}};
  j["prior"] = prior_to_json(fit.prior);
  j["h"] = ctx.cfg.h;
  j["step_size"] = ctx.cfg.step_size;
  if (fit.mode) j["mode"] = vector_to_json(fit.mode->flat());
  if (fit.ensemble) j["particles"] = matrix_to_json(fit.ensemble->particles);
  j["energy_trace"] = fit.energy_trace;
  j["epochs"] = fit.epochs;
  j["converged"] = fit.converged;
  j["warning"] = fit.warning;

  IntervalReport rep = beta_intervals(fit);
  j["beta"] = {{"labels", rep.labels},
               {"estimate", vector_to_json(rep.estimate)},
               {"lower", vector_to_json(rep.lower)},
               {"upper", vector_to_json(rep.upper)},
               {"flagged", json(std::vector<int>(rep.flagged.begin(), rep.flagged.end()))}};
  if (fit.mode) {
    BetaConditional cond = beta_conditional(fit.data, fit.G, fit.prior, *fit.mode);
    j["beta_hat"] = vector_to_json(cond.beta_hat);
    j["sigma_beta"] = matrix_to_json(cond.sigma_beta);
  }

  std::ofstream out(dir / "fit.json");
  out << j.dump(2) << '\n';
}

FitResult load_fit_artifact(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open fit artifact: " + path.string());
  json j;
  in >> j;
  if (j.value("schema", "") != "evigp-fit-v1")
    throw std::invalid_argument("unrecognized fit artifact schema");

  FitResult fit;
  const json& jb = j.at("basis");
  fit.basis = build_basis(jb.at("d").get<int>(), jb.at("degree").get<int>());
  const auto active = jb.at("active").get<std::vector<int>>();
  if (static_cast<int>(active.size()) != fit.basis.n_terms())
    throw std::invalid_argument("fit artifact: active mask size mismatch");
  for (std::size_t i = 0; i < active.size(); ++i)
    fit.basis.active[i] = active[i] ? 1 : 0;

  fit.prior = prior_from_json(j.at("prior"));
  fit.data = read_dataset_csv((path.parent_path() / j.at("train_csv").get<std::string>()).string());
  fit.G = design_matrix(fit.basis, fit.data.X);

  if (j.contains("mode"))
    fit.mode = HyperPoint::from_flat(json_to_vector(j["mode"], 0, "mode"), fit.data.d(),
                                     fit.prior.informative);
  if (j.contains("particles")) {
    ParticleEnsemble ens;
    ens.particles = json_to_matrix(j["particles"]);
    ens.h = j.value("h", 0.02);
    ens.step_size = j.value("step_size", 1.0);
    fit.ensemble = ens;
  }
  if (j.contains("energy_trace"))
    fit.energy_trace = j["energy_trace"].get<std::vector<double>>();
  fit.epochs = j.value("epochs", 0);
  fit.converged = j.value("converged", false);
  fit.warning = j.value("warning", false);
  return fit;
}

void write_interval_csv(const fs::path& path, const IntervalReport& rep) {
  std::ofstream out(path);
  out << "term,lower,upper,flagged\n";
  for (std::size_t i = 0; i < rep.labels.size(); ++i)
    out << rep.labels[i] << ',' << format_g17(rep.lower[i]) << ','
        << format_g17(rep.upper[i]) << ',' << int(rep.flagged[i]) << '\n';
}

void write_cv_csv(const fs::path& path, const CvResult& cv) {
  std::ofstream out(path);
  out << "nu,mean_rmspe\n";
  for (int i = 0; i < cv.nu_grid.size(); ++i)
    out << format_g17(cv.nu_grid[i]) << ',' << format_g17(cv.mean_rmspe[i]) << '\n';
}

int cmd_fit(CliContext& ctx) {
  Dataset data = load_or_generate(ctx);
  FitResult fit = fit_experiment(ctx.cfg, data);
  write_fit_artifact(ctx.out, ctx, fit);
  std::cout << "fit: " << (fit.mode ? "mode" : "ensemble") << " written to "
            << (ctx.out / "fit.json").string() << " (epochs " << fit.epochs
            << (fit.converged ? ", converged" : ", max epochs") << ")\n";
  if (fit.warning) {
    std::ofstream diag(ctx.out / "diagnostics.txt");
    diag << "EVI aborted on a numerical error before reaching the stopping rule;\n"
            "the artifact holds the last valid state.\n";
    std::cerr << "fit: numerical warning; see diagnostics.txt\n";
    return 1;
  }
  return 0;
}

int cmd_predict(CliContext& ctx) {
  if (!ctx.raw.contains("fit") || !ctx.raw.contains("query"))
    throw std::invalid_argument("predict: config needs \"fit\" and \"query\" paths");
  FitResult fit = load_fit_artifact(ctx.raw["fit"].get<std::string>());
  CsvTable query = read_csv(ctx.raw["query"].get<std::string>());
  const int d = fit.data.d();
  if (query.values.rows() > 0 && query.values.cols() < d)
    throw std::invalid_argument("predict: query needs x1..x" + std::to_string(d) +
                                " columns");
  Matrix X = query.values.rows() > 0 ? Matrix(query.values.leftCols(d)) : Matrix(0, d);
  std::vector<Prediction> preds = predict_aggregate(fit, X);

  std::ofstream out(ctx.out / "predictions.csv");
  for (int c = 0; c < d; ++c) out << 'x' << (c + 1) << ',';
  out << "mean,variance,lower95,upper95\n";
  for (int i = 0; i < static_cast<int>(preds.size()); ++i) {
    for (int c = 0; c < d; ++c) out << format_g17(X(i, c)) << ',';
    out << format_g17(preds[i].mean) << ',' << format_g17(preds[i].variance) << ','
        << format_g17(preds[i].lower) << ',' << format_g17(preds[i].upper) << '\n';
  }
  std::cout << "predict: " << preds.size() << " rows written to "
            << (ctx.out / "predictions.csv").string() << '\n';
  return 0;
}

int cmd_benchmark(CliContext& ctx) {
  if (ctx.cfg.benchmark.empty())
    throw std::invalid_argument("benchmark: config must name a benchmark");
  BenchmarkRun run = run_benchmark(ctx.cfg);

  {
    std::ofstream out(ctx.out / "rmspe_reps.csv");
    out << "rep,seed,rmspe,failed\n";
    for (std::size_t r = 0; r < run.reps.size(); ++r) {
      out << r << ',' << (ctx.cfg.seed + r) << ',';
      if (run.reps[r].failed)
        out << "nan,1\n";
      else
        out << format_g17(run.reps[r].rmspe) << ",0\n";
    }
  }
  {
    std::ofstream out(ctx.out / "summary.csv");
    out << "benchmark,mean_model,method,reps,failures,mean,q1,median,q3\n";
    out << ctx.cfg.benchmark << ',' << ctx.cfg.mean_model << ',' << ctx.cfg.method << ','
        << run.reps.size() << ',' << run.failures << ',' << format_g17(run.mean) << ','
        << format_g17(run.q1) << ',' << format_g17(run.median) << ','
        << format_g17(run.q3) << '\n';
  }
  if (run.failures > 0) {
    std::ofstream log(ctx.out / "errors.txt");
    for (std::size_t r = 0; r < run.reps.size(); ++r)
      if (run.reps[r].failed) log << "rep " << r << ": " << run.reps[r].error << '\n';
  }
  std::cout << "benchmark " << ctx.cfg.benchmark << " (" << ctx.cfg.mean_model << ", "
            << ctx.cfg.method << "): mean RMSPE " << run.mean << " over "
            << run.rmspes.size() << " reps";
  if (run.failures > 0) std::cout << " (" << run.failures << " failed)";
  std::cout << '\n';
  return run.rmspes.empty() ? 1 : 0;
}

int cmd_select(CliContext& ctx) {
  if (basis_degree_for(ctx.cfg.mean_model) == 0) {
    std::cout << "select: constant mean has no candidate terms; nothing to select\n";
    return 0;
  }
  Dataset data = load_or_generate(ctx);
  SelectionOutcome sel = run_selection(ctx.cfg, data);

  write_interval_csv(ctx.out / "intervals.csv", sel.report);
  {
    std::ofstream out(ctx.out / "selection.json");
    json j;
    j["nu_full"] = sel.nu_full;
    j["nu_reduced"] = sel.nu_reduced;
    j["kept_terms"] = active_labels(sel.reduced_basis);
    out << j.dump(2) << '\n';
  }
  CliContext final_ctx = ctx;
  final_ctx.cfg.mean_model = "selected";
  final_ctx.cfg.selected_terms = active_labels(sel.reduced_basis);
  write_fit_artifact(ctx.out, final_ctx, sel.final_fit);

  std::cout << "select: kept {";
  const auto kept = active_labels(sel.reduced_basis);
  for (std::size_t i = 0; i < kept.size(); ++i) std::cout << (i ? ", " : "") << kept[i];
  std::cout << "}; nu_full " << sel.nu_full << ", nu_reduced " << sel.nu_reduced << '\n';
  if (sel.final_fit.warning) return 1;
  return 0;
}

int cmd_cv_nu(CliContext& ctx) {
  if (!ctx.cfg.informative)
    throw std::invalid_argument("cv-nu: requires the informative regime");
  Dataset data = load_or_generate(ctx);
  BasisSpec basis = experiment_basis(ctx.cfg, data.d());
  PriorConfig prior = experiment_prior(ctx.cfg, basis);
  CvResult cv = cv_select_nu(data, basis, prior, ctx.cfg.evi, ctx.cfg.init_box, 0.05, 5.0,
                             0.05, 5, ctx.cfg.seed);
  write_cv_csv(ctx.out / "cv_curve.csv", cv);
  {
    std::ofstream out(ctx.out / "cv_result.json");
    json j;
    j["best_nu"] = cv.best_nu;
    out << j.dump(2) << '\n';
  }
  std::cout << "cv-nu: best nu " << cv.best_nu << " (curve in cv_curve.csv)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian process regression fit and benchmark driver using "
               "energetic variational inference"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed_flag;
  std::optional<int> threads_flag;
  std::uint64_t seed_value = 0;
  int threads_value = 0;

  app.add_option("--config", config_path, "JSON config file");
  auto* seed_opt = app.add_option("--seed", seed_value, "seed override");
  auto* threads_opt =
      app.add_option("--threads", threads_value, "worker threads (default: EVIGP_THREADS or 1)");
  app.add_option("--out", out_dir, "output directory (default: out)");

  auto* c_fit = app.add_subcommand("fit", "fit one model and write the artifact");
  auto* c_predict = app.add_subcommand("predict", "predict from a fit artifact at query points");
  auto* c_bench = app.add_subcommand("benchmark", "replicated RMSPE study");
  auto* c_select = app.add_subcommand("select", "interval-based mean-term selection pipeline");
  auto* c_cv = app.add_subcommand("cv-nu", "cross-validate the shrinkage scale nu");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (seed_opt->count() > 0) seed_flag = seed_value;
  if (threads_opt->count() > 0) threads_flag = threads_value;

  try {
    CliContext ctx = build_context(config_path, out_dir, seed_flag, threads_flag);
    if (c_fit->parsed()) return cmd_fit(ctx);
    if (c_predict->parsed()) return cmd_predict(ctx);
    if (c_bench->parsed()) return cmd_benchmark(ctx);
    if (c_select->parsed()) return cmd_select(ctx);
    if (c_cv->parsed()) return cmd_cv_nu(ctx);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
