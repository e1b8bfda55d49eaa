#include <cmath>
#include <random>

#include "doctest.h"
#include "evigp/evi.hpp"
#include "support.hpp"

using namespace evigp;
using testsupport::central_difference;

namespace {

// Quadratic bowl with analytic gradient, the workhorse target below.
TargetFn bowl(Vector center) {
  return [c = std::move(center)](const Vector& x, Vector* g) {
    if (g) *g = x - c;
    return 0.5 * (x - c).squaredNorm();
  };
}

// Double-loop re-derivation of F_h, independent of the vectorized library path.
double brute_free_energy(const ParticleEnsemble& ens, const TargetFn& V) {
  const int N = ens.N();
  double acc = 0.0;
  for (int i = 0; i < N; ++i) {
    Vector zi = ens.particles.row(i).transpose();
    if (ens.kde_on_exp) zi = zi.array().exp();
    double mix = 0.0;
    for (int j = 0; j < N; ++j) {
      Vector zj = ens.particles.row(j).transpose();
      if (ens.kde_on_exp) zj = zj.array().exp();
      mix += std::exp(-(zi - zj).squaredNorm() / (2.0 * ens.h));
    }
    acc += std::log(mix / N) + V(ens.particles.row(i).transpose(), nullptr);
  }
  return acc / N;
}

ParticleEnsemble random_ensemble(int N, int D, double h, unsigned seed, bool on_exp) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ParticleEnsemble ens;
  ens.particles.resize(N, D);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < D; ++j) ens.particles(i, j) = u(rng);
  ens.h = h;
  ens.kde_on_exp = on_exp;
  return ens;
}

}  // namespace

TEST_CASE("kde_kernel value and gradient") {
  Vector u(2), v(2);
  u << 0.3, -0.5;
  v << -0.2, 0.1;
  const double h = 0.7;
  auto [val, grad] = kde_kernel(u, v, h);
  CHECK(val == doctest::Approx(std::exp(-(u - v).squaredNorm() / (2.0 * h))).epsilon(1e-14));
  // central difference in u
  auto f = [&](const Vector& x) { return kde_kernel(x, v, h).first; };
  Vector fd = central_difference(f, u, 1e-6);
  CHECK((grad - fd).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(kde_kernel(u, u, h).first == 1.0);
  CHECK_THROWS_AS(kde_kernel(u, v, 0.0), std::invalid_argument);
}

TEST_CASE("free_energy matches a double-loop oracle on both density scales") {
  TargetFn V = bowl(Vector::Zero(3));
  for (bool on_exp : {false, true}) {
    ParticleEnsemble ens = random_ensemble(7, 3, 0.4, 91 + on_exp, on_exp);
    CHECK(free_energy(ens, V) ==
          doctest::Approx(brute_free_energy(ens, V)).epsilon(1e-12));
  }
}

TEST_CASE("free_energy_grad matches central differences on both density scales") {
  Vector c(2);
  c << 0.4, -0.2;
  TargetFn V = bowl(c);
  for (bool on_exp : {false, true}) {
    ParticleEnsemble ens = random_ensemble(6, 2, 0.5, 123 + on_exp, on_exp);
    Matrix g = free_energy_grad(ens, V);
    for (int i = 0; i < ens.N(); ++i)
      for (int j = 0; j < ens.D(); ++j) {
        ParticleEnsemble pp = ens, pm = ens;
        pp.particles(i, j) += 1e-6;
        pm.particles(i, j) -= 1e-6;
        double fd = (free_energy(pp, V) - free_energy(pm, V)) / 2e-6;
        CHECK(g(i, j) == doctest::Approx(fd).epsilon(1e-5));
      }
  }
}

TEST_CASE("proximal_objective is the free energy plus the scale-matched penalty") {
  TargetFn V = bowl(Vector::Zero(2));
  ParticleEnsemble cand = random_ensemble(5, 2, 0.3, 7, false);
  ParticleEnsemble anch = random_ensemble(5, 2, 0.3, 8, false);
  const double step = 0.25;

  double plain = proximal_objective(cand.particles, anch.particles, step, 0.3, V, false);
  double want = brute_free_energy(cand, V) +
                (cand.particles - anch.particles).squaredNorm() / (2.0 * step * 5);
  CHECK(plain == doctest::Approx(want).epsilon(1e-12));

  cand.kde_on_exp = true;
  double natural = proximal_objective(cand.particles, anch.particles, step, 0.3, V, true);
  double pen = (cand.particles.array().exp() - anch.particles.array().exp())
                   .matrix()
                   .squaredNorm() /
               (2.0 * step * 5);
  CHECK(natural == doctest::Approx(brute_free_energy(cand, V) + pen).epsilon(1e-12));
}

TEST_CASE("lbfgs_minimize solves quadratics and Rosenbrock") {
  EviConfig cfg;
  Vector c(3);
  c << 1.0, -2.0, 0.5;
  LbfgsResult r = lbfgs_minimize(bowl(c), Vector::Zero(3), cfg);
  CHECK(r.converged);
  CHECK((r.x - c).norm() < 1e-6);

  TargetFn rosen = [](const Vector& x, Vector* g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    if (g) {
      (*g)[0] = -2.0 * a - 400.0 * x[0] * b;
      (*g)[1] = 200.0 * b;
    }
    return a * a + 100.0 * b * b;
  };
  Vector x0(2);
  x0 << -1.2, 1.0;
  LbfgsResult rr = lbfgs_minimize(rosen, x0, cfg);
  CHECK(rr.f < 1e-10);
  CHECK((rr.x - Vector::Ones(2)).norm() < 1e-4);
  CHECK(rr.f <= rosen(x0, nullptr));  // never returns worse than the start
}

TEST_CASE("proximal point on a half-norm-squared target halves the iterate exactly") {
  TargetFn V = bowl(Vector::Zero(2));
  Vector x0(2);
  x0 << 8.0, -6.0;
  EviConfig cfg;
  MapResult mr = evi_map(x0, V, cfg, 1.0);
  CHECK(mr.converged);
  // v_trace[k] must equal V(x0 / 2^k) with no floating-point slack
  Vector expect = x0;
  for (std::size_t k = 0; k < mr.v_trace.size(); ++k) {
    CHECK(mr.v_trace[k] == 0.5 * expect.squaredNorm());
    expect /= 2.0;
  }
  CHECK(mr.x[0] == x0[0] * std::ldexp(1.0, -mr.epochs));
  CHECK(mr.x[1] == x0[1] * std::ldexp(1.0, -mr.epochs));
}

TEST_CASE("evi_im with one particle reproduces evi_map bitwise") {
  Vector c(2);
  c << 0.3, -0.8;
  TargetFn V = bowl(c);
  Vector x0(2);
  x0 << 2.0, 2.0;
  EviConfig cfg;
  MapResult mr = evi_map(x0, V, cfg, 0.3);

  ParticleEnsemble single;
  single.particles = x0.transpose();
  single.h = 1.0;
  single.step_size = 0.3;
  EviResult er = evi_im(single, V, cfg);
  CHECK(er.ensemble.particles(0, 0) == mr.x[0]);
  CHECK(er.ensemble.particles(0, 1) == mr.x[1]);
  CHECK(er.energy_trace == mr.v_trace);
  CHECK(er.epochs == mr.epochs);
}

TEST_CASE("evi_im energy trace is non-increasing and the ensemble contracts to a bowl") {
  TargetFn V = bowl(Vector::Zero(2));
  ParticleEnsemble ens = random_ensemble(20, 2, 0.05, 55, false);
  ens.particles *= 3.0;
  ens.step_size = 0.5;
  EviConfig cfg;
  cfg.max_outer = 60;
  EviResult er = evi_im(ens, V, cfg);
  REQUIRE(!er.energy_trace.empty());
  for (std::size_t k = 1; k < er.energy_trace.size(); ++k)
    CHECK(er.energy_trace[k] <= er.energy_trace[k - 1] + 1e-10);
  // particles end up well inside the basin
  CHECK(er.ensemble.particles.rowwise().norm().maxCoeff() < 2.0);
}

TEST_CASE("init_particles draws inside the box, stores logs, and clamps a zero bound") {
  std::mt19937_64 rng(99);
  auto box = std::vector<std::array<double, 2>>{{0.0, 0.1}, {0.1, 0.4}};
  ParticleEnsemble ens = init_particles(50, 2, box, 0.02, 1.0, rng);
  CHECK(ens.N() == 50);
  CHECK(ens.h == 0.02);
  Matrix nat = ens.particles.array().exp();
  CHECK((nat.col(0).array() >= 1e-4).all());  // zero lower bound clamped
  CHECK((nat.col(0).array() <= 0.1).all());
  CHECK((nat.col(1).array() >= 0.1).all());
  CHECK((nat.col(1).array() <= 0.4).all());

  std::mt19937_64 rng2(99);
  ParticleEnsemble again = init_particles(50, 2, box, 0.02, 1.0, rng2);
  CHECK(again.particles == ens.particles);

  std::mt19937_64 rng3(1);
  CHECK_THROWS_AS(init_particles(5, 2, {{0.5, 0.1}, {0.1, 0.4}}, 0.02, 1.0, rng3),
                  std::invalid_argument);
}
