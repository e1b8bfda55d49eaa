#include "evigp/evi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evigp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Pairwise KDE weights: Kmat(i,j) = exp(-||e_i-e_j||^2/(2h)), S_i = sum_j Kmat(i,j),
// where e_i is the coordinate row mapped to the scale the density lives on.
struct KdeCore {
  Matrix E;  // KDE-scale coordinates (equal to X unless kde_on_exp)
  Matrix Kmat;
  Vector S;
};

KdeCore kde_core(const Matrix& X, double h, bool on_exp) {
  const int N = static_cast<int>(X.rows());
  KdeCore core;
  core.E = on_exp ? X.array().exp().matrix() : X;
  Vector sq = core.E.rowwise().squaredNorm();
  Matrix D2 =
      sq.replicate(1, N) + sq.transpose().replicate(N, 1) - 2.0 * core.E * core.E.transpose();
  D2 = D2.cwiseMax(0.0);
  core.Kmat = (-D2.array() / (2.0 * h)).exp().matrix();
  core.S = core.Kmat.rowwise().sum();
  return core;
}

// Gradient rows of the interaction part of F_h with respect to the particle
// coordinates X, scaled by N. On the KDE scale the rows are
// row_l = -(1/h) sum_j K_lj (1/S_l + 1/S_j) (e_l - e_j); when the density
// lives on exp(X) the chain rule multiplies row l elementwise by e_l.
Matrix kde_grad_rows(const KdeCore& core, double h, bool on_exp) {
  const int N = static_cast<int>(core.E.rows());
  Vector invS = core.S.cwiseInverse();
  Matrix W = core.Kmat.array() *
             (invS.replicate(1, N) + invS.transpose().replicate(N, 1)).array();
  Vector wsum = W.rowwise().sum();
  Matrix rows = -(1.0 / h) * (wsum.asDiagonal() * core.E - W * core.E);
  if (on_exp) rows = rows.cwiseProduct(core.E);
  return rows;
}

}  // namespace

std::pair<double, Vector> kde_kernel(const Vector& u, const Vector& v, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("kde_kernel: bandwidth must be positive");
  if (u.size() != v.size()) throw std::invalid_argument("kde_kernel: dimension mismatch");
  const double val = std::exp(-(u - v).squaredNorm() / (2.0 * h));
  Vector grad = -(u - v) * (val / h);
  return {val, std::move(grad)};
}

double free_energy(const ParticleEnsemble& ensemble, const TargetFn& V) {
  const int N = ensemble.N();
  if (N < 1) throw std::invalid_argument("free_energy: empty ensemble");
  KdeCore core = kde_core(ensemble.particles, ensemble.h, ensemble.kde_on_exp);
  double acc = 0.0;
  for (int i = 0; i < N; ++i) {
    double v = V(ensemble.particles.row(i).transpose(), nullptr);
    if (!std::isfinite(v)) throw NumericalError("free_energy: non-finite target value");
    acc += std::log(core.S[i] / N) + v;
  }
  return acc / N;
}

Matrix free_energy_grad(const ParticleEnsemble& ensemble, const TargetFn& V) {
  const int N = ensemble.N();
  const int D = ensemble.D();
  if (N < 1) throw std::invalid_argument("free_energy_grad: empty ensemble");
  KdeCore core = kde_core(ensemble.particles, ensemble.h, ensemble.kde_on_exp);
  Matrix rows = kde_grad_rows(core, ensemble.h, ensemble.kde_on_exp);
  Vector g(D);
  for (int i = 0; i < N; ++i) {
    V(ensemble.particles.row(i).transpose(), &g);
    if (!g.allFinite()) throw NumericalError("free_energy_grad: non-finite target gradient");
    rows.row(i) += g.transpose();
  }
  return rows / N;
}

double proximal_objective(const Matrix& candidate, const Matrix& anchor, double step_size,
                          double h, const TargetFn& V, bool kde_on_exp) {
  if (candidate.rows() != anchor.rows() || candidate.cols() != anchor.cols())
    throw std::invalid_argument("proximal_objective: shape mismatch");
  if (!(step_size > 0.0))
    throw std::invalid_argument("proximal_objective: step size must be positive");
  const int N = static_cast<int>(candidate.rows());
  ParticleEnsemble tmp{candidate, h, step_size, 0, kde_on_exp};
  // The movement penalty is measured on the same scale the density lives on;
  // otherwise a fixed step bound in log coordinates permits arbitrarily large
  // natural-scale moves at large parameter values.
  double pen;
  if (kde_on_exp)
    pen = (candidate.array().exp() - anchor.array().exp()).matrix().squaredNorm() /
          (2.0 * step_size * N);
  else
    pen = (candidate - anchor).squaredNorm() / (2.0 * step_size * N);
  return pen + free_energy(tmp, V);
}

namespace {

// Fused proximal objective over flattened coordinates: evaluates V (and its
// gradient) once per particle per call.
struct InnerObjective {
  const Vector& anchor;
  int N, D;
  double h, step_size;
  bool kde_on_exp;
  const TargetFn& V;

  double operator()(const Vector& z, Vector* grad) const {
    Eigen::Map<const Matrix> X(z.data(), N, D);
    KdeCore core = kde_core(X, h, kde_on_exp);

    double vsum = 0.0;
    Matrix vgrads;
    Vector g(D);
    if (grad) vgrads.resize(N, D);
    for (int i = 0; i < N; ++i) {
      double v = grad ? V(X.row(i).transpose(), &g) : V(X.row(i).transpose(), nullptr);
      if (!std::isfinite(v)) return kInf;
      if (grad) {
        if (!g.allFinite()) return kInf;
        vgrads.row(i) = g.transpose();
      }
      vsum += v;
    }
    double F = (core.S.array() / N).log().sum() / N + vsum / N;
    Eigen::Map<const Matrix> anchor_m(anchor.data(), N, D);
    double pen;
    if (kde_on_exp)
      pen = (core.E - anchor_m.array().exp().matrix()).squaredNorm() /
            (2.0 * step_size * N);
    else
      pen = (z - anchor).squaredNorm() / (2.0 * step_size * N);
    if (grad) {
      Matrix rows = kde_grad_rows(core, h, kde_on_exp);
      rows += vgrads;
      rows /= N;
      Matrix pen_rows;
      if (kde_on_exp)
        pen_rows = (core.E - anchor_m.array().exp().matrix()).cwiseProduct(core.E) /
                   (step_size * N);
      else
        pen_rows = (Matrix(X) - anchor_m) / (step_size * N);
      Matrix full = rows + pen_rows;
      *grad = Eigen::Map<Vector>(full.data(), N * D);
    }
    return F + pen;
  }
};

}  // namespace

EviResult evi_im(const ParticleEnsemble& init, const TargetFn& V, const EviConfig& config) {
  const int N = init.N();
  const int D = init.D();
  if (N < 1 || D < 1) throw std::invalid_argument("evi_im: empty ensemble");
  if (!(init.h > 0.0) || !(init.step_size > 0.0))
    throw std::invalid_argument("evi_im: h and step_size must be positive");

  EviResult res;
  res.ensemble = init;
  Vector z = Eigen::Map<const Vector>(init.particles.data(), N * D);

  res.energy_trace.push_back(free_energy(res.ensemble, V));

  for (int epoch = 0; epoch < config.max_outer; ++epoch) {
    Vector anchor = z;
    InnerObjective inner{anchor, N, D, init.h, init.step_size, init.kde_on_exp, V};
    TargetFn inner_fn = [&inner](const Vector& zz, Vector* gg) { return inner(zz, gg); };

    LbfgsResult lb;
    try {
      lb = lbfgs_minimize(inner_fn, anchor, config);
    } catch (const NumericalError&) {
      res.warning = true;
      break;
    }

    Eigen::Map<const Matrix> Xnew(lb.x.data(), N, D);
    Eigen::Map<const Matrix> Xold(z.data(), N, D);
    double disp = 0.0, pen = 0.0;
    if (init.kde_on_exp) {
      Matrix En = Xnew.array().exp().matrix(), Eo = Xold.array().exp().matrix();
      for (int i = 0; i < N; ++i) disp += (En.row(i) - Eo.row(i)).norm();
      pen = (En - Eo).squaredNorm() / (2.0 * init.step_size * N);
    } else {
      for (int i = 0; i < N; ++i) disp += (Xnew.row(i) - Xold.row(i)).norm();
      pen = (lb.x - anchor).squaredNorm() / (2.0 * init.step_size * N);
    }
    disp /= N;

    z = lb.x;
    res.ensemble.particles = Xnew;
    res.ensemble.epoch = epoch + 1;
    res.epochs = epoch + 1;

    // F at the accepted iterate, recovered from the inner objective value;
    // the warm start at the anchor makes this trace non-increasing.
    res.energy_trace.push_back(lb.f - pen);

    if (disp < config.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

MapResult evi_map(const Vector& x0, const TargetFn& V, const EviConfig& config,
                  double step_size) {
  ParticleEnsemble single;
  single.particles = x0.transpose();
  single.h = 1.0;  // inert at N=1: the self-interaction term is identically zero
  single.step_size = step_size;
  EviResult res = evi_im(single, V, config);
  MapResult out;
  out.x = res.ensemble.particles.row(0).transpose();
  out.v_trace = res.energy_trace;
  out.epochs = res.epochs;
  out.converged = res.converged;
  out.warning = res.warning;
  return out;
}

ParticleEnsemble init_particles(int N, int D, const std::vector<std::array<double, 2>>& box,
                                double h, double step_size, std::mt19937_64& rng) {
  if (N < 1 || D < 1) throw std::invalid_argument("init_particles: N and D must be >= 1");
  if (static_cast<int>(box.size()) != D)
    throw std::invalid_argument("init_particles: box must have one [lo,hi] per coordinate");
  std::vector<std::array<double, 2>> eff = box;
  for (auto& b : eff) {
    if (!(b[0] < b[1])) throw std::invalid_argument("init_particles: box needs lo < hi");
    if (b[0] < 0.0) throw std::invalid_argument("init_particles: box must be non-negative");
    if (b[0] == 0.0) b[0] = 1e-4;
    if (!(b[0] < b[1]))
      throw std::invalid_argument("init_particles: box upper bound too small after clamping");
  }
  ParticleEnsemble ens;
  ens.particles.resize(N, D);
  ens.h = h;
  ens.step_size = step_size;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < D; ++j) {
      double u = eff[j][0] + (eff[j][1] - eff[j][0]) * unif(rng);
      ens.particles(i, j) = std::log(u);
    }
  return ens;
}

}  // namespace evigp
