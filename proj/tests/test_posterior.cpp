#include <cmath>
#include <random>

#include "doctest.h"
#include "evigp/posterior.hpp"
#include "support.hpp"

using namespace evigp;
using testsupport::central_difference;
using testsupport::max_relative_error;
using testsupport::random_posterior_instance;
using testsupport::TwoPointOracle;

TEST_CASE("HyperPoint flat round-trips in both regimes") {
  HyperPoint pt;
  pt.log_omega = Vector::LinSpaced(3, -1.0, 1.0);
  pt.log_eta = -2.5;
  pt.has_tau2 = true;
  pt.log_tau2 = 0.7;
  HyperPoint back = HyperPoint::from_flat(pt.flat(), 3, true);
  CHECK(back.log_omega == pt.log_omega);
  CHECK(back.log_eta == pt.log_eta);
  CHECK(back.log_tau2 == pt.log_tau2);

  pt.has_tau2 = false;
  HyperPoint back2 = HyperPoint::from_flat(pt.flat(), 3, false);
  CHECK(back2.dim() == 4);
  CHECK_THROWS_AS(HyperPoint::from_flat(pt.flat(), 2, false), std::invalid_argument);
}

TEST_CASE("PriorConfig::validate rejects malformed priors") {
  PriorConfig prior;
  prior.a_omega = Vector::Constant(2, 1.0);
  prior.b_omega = Vector::Constant(2, 1.0);
  CHECK_NOTHROW(prior.validate(2, 1));
  CHECK_THROWS_AS(prior.validate(3, 1), std::invalid_argument);

  PriorConfig bad = prior;
  bad.b_eta = 0.0;
  CHECK_THROWS_AS(bad.validate(2, 1), std::invalid_argument);

  PriorConfig inf = prior;
  inf.informative = true;
  inf.nu2 = 1.0;
  CHECK_THROWS_AS(inf.validate(2, 2), std::invalid_argument);  // missing r_diag
  inf.r_diag = Vector::Constant(2, 0.5);
  CHECK_NOTHROW(inf.validate(2, 2));
}

TEST_CASE("cov_factor escalates jitter on a singular kernel and reports it") {
  Matrix K = Matrix::Ones(3, 3);  // rank one
  CovFactor f = cov_factor(K, 0.0, 1e-8);
  CHECK(f.jitter_used >= 1e-8);
  CHECK(std::isfinite(f.log_det()));
  // eigenvalues of ones(3) + jI are {3+j, j, j}
  const double j = f.jitter_used;
  CHECK(f.log_det() == doctest::Approx(std::log(3.0 + j) + 2.0 * std::log(j)).epsilon(1e-9));
}

TEST_CASE("cov_factor log_det and solve agree with dense arithmetic") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix X(6, 2);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 2; ++j) X(i, j) = u(rng);
  Matrix K = kernel_matrix(X, KernelParams{Vector::Constant(2, 2.0)});
  const double eta = 0.3;
  CovFactor f = cov_factor(K, eta, 1e-12);
  Matrix A = K + (eta + f.jitter_used) * Matrix::Identity(6, 6);
  CHECK(f.log_det() == doctest::Approx(std::log(A.determinant())).epsilon(1e-10));
  Vector b = Vector::LinSpaced(6, -1.0, 1.0);
  CHECK((f.solve(b) - A.inverse() * b).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("grad_log_posterior matches central differences in both regimes") {
  for (bool informative : {false, true}) {
    for (unsigned seed = 1; seed <= 8; ++seed) {
      auto inst = random_posterior_instance(seed + (informative ? 100 : 0), informative);
      PosteriorTarget target(inst.data, inst.G, inst.prior);
      auto f = [&](const Vector& x) { return target.value_grad(x, nullptr); };
      Vector analytic;
      target.value_grad(inst.point.flat(), &analytic);
      Vector fd = central_difference(f, inst.point.flat());
      CHECK(max_relative_error(analytic, fd) < 1e-5);
    }
  }
}

TEST_CASE("gradients also hold for the natural-measure target") {
  for (bool informative : {false, true}) {
    for (unsigned seed = 31; seed <= 36; ++seed) {
      auto inst = random_posterior_instance(seed + (informative ? 500 : 0), informative);
      PosteriorTarget target(inst.data, inst.G, inst.prior, /*include_jacobian=*/false);
      auto f = [&](const Vector& x) { return target.value_grad(x, nullptr); };
      Vector analytic;
      target.value_grad(inst.point.flat(), &analytic);
      Vector fd = central_difference(f, inst.point.flat());
      CHECK(max_relative_error(analytic, fd) < 1e-5);
    }
  }
}

TEST_CASE("the two reference measures differ by exactly the sum of log coordinates") {
  auto inst = random_posterior_instance(77, true);
  PosteriorTarget with(inst.data, inst.G, inst.prior, true);
  PosteriorTarget without(inst.data, inst.G, inst.prior, false);
  const Vector x = inst.point.flat();
  const double gap = with.value_grad(x, nullptr) - without.value_grad(x, nullptr);
  CHECK(gap == doctest::Approx(-x.sum()).epsilon(1e-10));
}

TEST_CASE("two-point instance matches the scalar oracle") {
  TwoPointOracle oracle{0.15, 0.85, 1.2, -0.4, 1.5, 0.8, 1.0, 0.5, 0.0, 1e-10};
  Dataset data;
  data.X.resize(2, 1);
  data.X << oracle.x1, oracle.x2;
  data.y.resize(2);
  data.y << oracle.y1, oracle.y2;
  Matrix G = Matrix::Ones(2, 1);
  PriorConfig prior;
  prior.a_omega = Vector::Constant(1, oracle.a_omega);
  prior.b_omega = Vector::Constant(1, oracle.b_omega);
  prior.a_eta = oracle.a_eta;
  prior.b_eta = oracle.b_eta;
  prior.jitter = oracle.jitter;

  HyperPoint pt;
  pt.log_omega = Vector::Constant(1, std::log(2.0));
  pt.log_eta = std::log(0.25);

  const double got = log_posterior(data, G, prior, pt);
  const double want = oracle.neg_log_posterior(2.0, 0.25, true);
  CHECK(got == doctest::Approx(want).epsilon(1e-12));

  BetaConditional bc = beta_conditional(data, G, prior, pt);
  CHECK(bc.beta_hat[0] == doctest::Approx(oracle.beta_hat).epsilon(1e-12));
  CHECK(bc.sigma_beta(0, 0) == doctest::Approx(oracle.tau2_hat / oracle.Q).epsilon(1e-12));

  Tau2Conditional tc = tau2_conditional(data, G, prior, pt);
  CHECK(tc.df == doctest::Approx(oracle.dfpost));
  CHECK(tc.scale == doctest::Approx(oracle.tau2_hat).epsilon(1e-12));
}

TEST_CASE("informative beta conditional agrees with a dense-inverse derivation") {
  auto inst = random_posterior_instance(42, true);
  BetaConditional cond = beta_conditional(inst.data, inst.G, inst.prior, inst.point);

  // direct path: explicit inverses, no Cholesky
  KernelParams kp{inst.point.omega()};
  Matrix A = kernel_matrix(inst.data.X, kp);
  A.diagonal().array() += inst.point.eta() + inst.prior.jitter;
  Matrix Ainv = A.inverse();
  Matrix Q = inst.G.transpose() * Ainv * inst.G;
  Vector w = inst.G.transpose() * Ainv * inst.data.y;
  const double tau2 = inst.point.tau2();
  Matrix M = Q / tau2;
  for (int t = 0; t < M.rows(); ++t) M(t, t) += 1.0 / (inst.prior.nu2 * inst.prior.r_diag[t]);
  Matrix Sigma = M.inverse();
  Vector bhat = Sigma * w / tau2;

  CHECK((cond.beta_hat - bhat).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((cond.sigma_beta - Sigma).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("sample_tau2 reproduces the scaled inverse-chi-square mean") {
  Tau2Conditional cond{5.0, 2.0};
  std::mt19937_64 rng(2024);
  double acc = 0.0;
  const int R = 60000;
  for (int r = 0; r < R; ++r) acc += sample_tau2(cond, rng);
  // E = df*scale/(df-2) = 10/3
  CHECK(acc / R == doctest::Approx(10.0 / 3.0).epsilon(0.05));
}

TEST_CASE("sample_beta reproduces its conditional moments") {
  BetaConditional cond;
  cond.beta_hat = Vector::Constant(2, 0.0);
  cond.beta_hat << 1.0, -2.0;
  cond.sigma_beta.resize(2, 2);
  cond.sigma_beta << 0.5, 0.2, 0.2, 0.3;
  std::mt19937_64 rng(77);
  Matrix draws(20000, 2);
  for (int r = 0; r < draws.rows(); ++r) draws.row(r) = sample_beta(cond, rng).transpose();
  Vector mean = draws.colwise().mean().transpose();
  CHECK((mean - cond.beta_hat).cwiseAbs().maxCoeff() < 0.03);
  Matrix centered = draws.rowwise() - mean.transpose();
  Matrix cov = centered.transpose() * centered / (draws.rows() - 1.0);
  CHECK((cov - cond.sigma_beta).cwiseAbs().maxCoeff() < 0.03);
}

TEST_CASE("non-informative regime rejects n <= p") {
  auto inst = random_posterior_instance(5, false);
  Matrix G = Matrix::Ones(inst.data.n(), inst.data.n());  // p = n
  CHECK_THROWS_AS(PosteriorTarget(inst.data, G, inst.prior), std::invalid_argument);
}
