#pragma once

// Shared fixtures for the unit and acceptance binaries: a scalar-arithmetic
// re-derivation of the n=2 conjugacy quantities, finite-difference helpers,
// and random posterior instances. Everything here is written against the
// model equations directly -- no calls into the library's linear-algebra
// paths -- so agreement is evidence, not circularity.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "evigp/dataset.hpp"
#include "evigp/linalg.hpp"
#include "evigp/posterior.hpp"

namespace testsupport {

using evigp::Dataset;
using evigp::Matrix;
using evigp::Vector;

// ---------------------------------------------------------------------------
// Dense oracle for n=2, d=1, p=1 (constant mean), non-informative prior.
// Every matrix is 2x2 and inverted by the adjugate formula in raw doubles.
struct TwoPointOracle {
  // instance
  double x1, x2, y1, y2;
  double a_omega, b_omega, a_eta, b_eta, df_tau2, jitter;

  // scratch filled by factor(): A^{-1} entries and derived scalars
  double i11 = 0, i12 = 0, i22 = 0;  // A^{-1}
  double Q = 0, w = 0, s2 = 0, dfpost = 0, tau2_hat = 0, beta_hat = 0;

  void factor(double omega, double eta) {
    const double dlt = x1 - x2;
    const double k12 = std::exp(-omega * dlt * dlt);
    const double a11 = 1.0 + eta + jitter;
    const double a12 = k12;
    const double det = a11 * a11 - a12 * a12;
    i11 = a11 / det;
    i22 = a11 / det;
    i12 = -a12 / det;

    // G = (1,1)'
    Q = i11 + 2.0 * i12 + i22;
    w = (i11 + i12) * y1 + (i12 + i22) * y2;
    const double yAy = y1 * (i11 * y1 + i12 * y2) + y2 * (i12 * y1 + i22 * y2);
    s2 = yAy - w * w / Q;
    dfpost = df_tau2 + 2.0 - 1.0;
    tau2_hat = (1.0 + s2) / dfpost;
    beta_hat = w / Q;
  }

  // V = -log p(log omega, log eta | y) up to the same dropped constants the
  // library uses; include_jacobian selects the reference measure.
  double neg_log_posterior(double omega, double eta, bool include_jacobian) {
    factor(omega, eta);
    const double dlt = x1 - x2;
    const double k12 = std::exp(-omega * dlt * dlt);
    const double a11 = 1.0 + eta + jitter;
    const double logdetA = std::log(a11 * a11 - k12 * k12);
    const double shift = include_jacobian ? 0.0 : 1.0;
    double V = 0.5 * dfpost * std::log1p(s2) + 0.5 * std::log(Q) + 0.5 * logdetA;
    V += b_omega * omega - (a_omega - shift) * std::log(omega);
    V += b_eta * eta - (a_eta - shift) * std::log(eta);
    return V;
  }

  // predictive mean / variance at scalar query x under (omega, eta)
  void predict(double omega, double eta, double x, double* mean, double* var) {
    factor(omega, eta);
    const double k1 = std::exp(-omega * (x - x1) * (x - x1));
    const double k2 = std::exp(-omega * (x - x2) * (x - x2));
    const double r1 = y1 - beta_hat, r2 = y2 - beta_hat;
    *mean = beta_hat + k1 * (i11 * r1 + i12 * r2) + k2 * (i12 * r1 + i22 * r2);
    const double Ak1 = i11 * k1 + i12 * k2;
    const double Ak2 = i12 * k1 + i22 * k2;
    const double kAk = k1 * Ak1 + k2 * Ak2;
    const double c = 1.0 - (Ak1 + Ak2);
    *var = tau2_hat * (1.0 - kAk + c * c / Q);
  }
};

// ---------------------------------------------------------------------------
// Central finite differences.
inline Vector central_difference(const std::function<double(const Vector&)>& f,
                                 const Vector& x, double eps = 1e-5) {
  Vector g(x.size());
  for (int j = 0; j < x.size(); ++j) {
    Vector xp = x, xm = x;
    xp[j] += eps;
    xm[j] -= eps;
    g[j] = (f(xp) - f(xm)) / (2.0 * eps);
  }
  return g;
}

inline double max_relative_error(const Vector& got, const Vector& want) {
  double worst = 0.0;
  for (int j = 0; j < got.size(); ++j) {
    const double scale = std::max(1.0, std::abs(want[j]));
    worst = std::max(worst, std::abs(got[j] - want[j]) / scale);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Random posterior instances for gradient sweeps.
struct RandomInstance {
  Dataset data;
  Matrix G;
  evigp::PriorConfig prior;
  evigp::HyperPoint point;
};

inline RandomInstance random_posterior_instance(unsigned seed, bool informative) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 3);

  RandomInstance inst;
  const int d = dim(rng);
  const int n = 6 + static_cast<int>(rng() % 5);
  inst.data.X.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) inst.data.X(i, j) = u01(rng);
  inst.data.y.resize(n);
  for (int i = 0; i < n; ++i) inst.data.y[i] = 2.0 * u01(rng) - 1.0 + std::sin(6.0 * inst.data.X(i, 0));

  const int p = 1 + (informative ? d : std::min(d, n - 2));
  inst.G.resize(n, p);
  inst.G.col(0).setOnes();
  for (int t = 1; t < p; ++t) inst.G.col(t) = inst.data.X.col((t - 1) % d);

  inst.prior.a_omega = Vector::Constant(d, 1.0 + u01(rng));
  inst.prior.b_omega = Vector::Constant(d, 0.5 + u01(rng));
  inst.prior.a_eta = 1.0 + u01(rng);
  inst.prior.b_eta = 0.5 + u01(rng);
  inst.prior.informative = informative;
  if (informative) {
    inst.prior.df_tau2 = 3.0 + 2.0 * u01(rng);
    inst.prior.nu2 = 0.5 + 2.0 * u01(rng);
    inst.prior.r_diag = Vector::Constant(p, 1.0);
    for (int t = 1; t < p; ++t) inst.prior.r_diag[t] = 0.3 + 0.5 * u01(rng);
  } else {
    inst.prior.df_tau2 = (rng() % 2 == 0) ? 0.0 : 2.0 * u01(rng);
  }

  inst.point.log_omega = Vector::Zero(d);
  for (int j = 0; j < d; ++j) inst.point.log_omega[j] = 2.0 * u01(rng) - 0.5;
  inst.point.log_eta = -2.0 + 2.0 * u01(rng);
  inst.point.has_tau2 = informative;
  if (informative) inst.point.log_tau2 = 2.0 * u01(rng) - 1.0;
  return inst;
}

}  // namespace testsupport
