#include "evigp/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace evigp {

namespace {

// Sign of the completed-square cross-term in the beta-marginalized density.
// +1 is the direct-marginalization convention: the quadratic form in the
// non-informative regime reduces to the GLS residual y'A{-1}y - w'Q{-1}w,
// and with a flat mean and n = p the marginal is then independent of y, as
// it must be. -1 keeps the cross-term added instead of subtracted.
constexpr double kCompletedSquareSign = 1.0;

constexpr double kMaxJitter = 1e-6;
constexpr double kParamOverflowGuard = 1e150;
constexpr double kInf = std::numeric_limits<double>::infinity();

double gamma_neglog(const Vector& a_eff, const Vector& b, const Vector& theta,
                    const Vector& log_theta) {
  // -log Gamma(theta; a, b) [- log(theta) when the log-coordinate Jacobian is
  // folded in], dropping constants: b*theta - a_eff*log(theta) per
  // coordinate, where a_eff = a with the Jacobian and a - 1 without.
  return (b.array() * theta.array() - a_eff.array() * log_theta.array()).sum();
}

bool llt_ok(const Eigen::LLT<Matrix>& llt) {
  return llt.info() == Eigen::Success &&
         (llt.matrixLLT().diagonal().array() > 0.0).all();
}

}  // namespace

void PriorConfig::validate(int d, int p) const {
  if (static_cast<int>(a_omega.size()) != d || static_cast<int>(b_omega.size()) != d)
    throw std::invalid_argument("PriorConfig: omega prior vectors must have length d");
  for (int j = 0; j < d; ++j)
    if (!(a_omega[j] > 0.0) || !(b_omega[j] > 0.0))
      throw std::invalid_argument("PriorConfig: omega Gamma shape/rate must be positive");
  if (!(a_eta > 0.0) || !(b_eta > 0.0))
    throw std::invalid_argument("PriorConfig: eta Gamma shape/rate must be positive");
  if (!(df_tau2 >= 0.0))
    throw std::invalid_argument("PriorConfig: df_tau2 must be non-negative");
  if (!(jitter >= 0.0))
    throw std::invalid_argument("PriorConfig: jitter must be non-negative");
  if (informative) {
    if (!(nu2 > 0.0))
      throw std::invalid_argument("PriorConfig: nu^2 must be positive");
    if (static_cast<int>(r_diag.size()) != p)
      throw std::invalid_argument("PriorConfig: R diagonal must have length p");
    for (int t = 0; t < p; ++t)
      if (!(r_diag[t] > 0.0))
        throw std::invalid_argument("PriorConfig: R diagonal must be positive");
  }
}

Vector HyperPoint::flat() const {
  Vector v(dim());
  v.head(log_omega.size()) = log_omega;
  v[log_omega.size()] = log_eta;
  if (has_tau2) v[log_omega.size() + 1] = log_tau2;
  return v;
}

HyperPoint HyperPoint::from_flat(const Vector& v, int d, bool has_tau2) {
  if (static_cast<int>(v.size()) != d + 1 + (has_tau2 ? 1 : 0))
    throw std::invalid_argument("HyperPoint: flat vector has wrong dimension");
  HyperPoint pt;
  pt.log_omega = v.head(d);
  pt.log_eta = v[d];
  pt.has_tau2 = has_tau2;
  if (has_tau2) pt.log_tau2 = v[d + 1];
  return pt;
}

double CovFactor::log_det() const {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

CovFactor cov_factor(const Matrix& K, double eta, double jitter) {
  if (!(eta > 0.0) && !(jitter > 0.0))
    throw std::invalid_argument("cov_factor: need eta > 0 or jitter > 0");
  const int n = static_cast<int>(K.rows());
  double j = jitter;
  while (true) {
    Matrix A = K;
    A.diagonal().array() += eta + j;
    CovFactor f;
    f.llt.compute(A);
    if (f.llt.info() == Eigen::Success) {
      // A Cholesky that "succeeds" with a non-positive pivot is still junk;
      // check the diagonal explicitly.
      if ((f.llt.matrixLLT().diagonal().array() > 0.0).all()) {
        f.jitter_used = j;
        return f;
      }
    }
    if (j >= kMaxJitter || j <= 0.0) {
      std::ostringstream msg;
      msg << "cov_factor: factorization failed (n=" << n << ", eta=" << eta
          << ", jitter reached " << j << ")";
      throw NumericalError(msg.str());
    }
    j = std::min(j * 10.0, kMaxJitter);
  }
}

CovFactor cov_factor(const Dataset& data, const KernelParams& params, double eta,
                     double jitter) {
  return cov_factor(kernel_matrix(data.X, params), eta, jitter);
}

PosteriorTarget::PosteriorTarget(const Dataset& data, Matrix G, PriorConfig prior,
                                 bool include_jacobian)
    : data_(data), G_(std::move(G)), prior_(std::move(prior)),
      include_jacobian_(include_jacobian) {
  d_ = data_.d();
  p_ = static_cast<int>(G_.cols());
  if (G_.rows() != data_.n())
    throw std::invalid_argument("PosteriorTarget: G row count must equal n");
  prior_.validate(d_, p_);
  if (!prior_.informative && data_.n() <= p_)
    throw std::invalid_argument(
        "PosteriorTarget: the non-informative regime needs n > p");
  sqdiff_ = squared_diff_stack(data_.X);
}

double PosteriorTarget::value_grad(const Vector& x, Vector* grad) const {
  const int n = data_.n();
  HyperPoint pt = HyperPoint::from_flat(x, d_, prior_.informative);

  const Vector omega = pt.omega();
  const double eta = pt.eta();
  if (!omega.allFinite() || !std::isfinite(eta) || omega.maxCoeff() > kParamOverflowGuard ||
      eta > kParamOverflowGuard)
    return kInf;
  double tau2 = 1.0;
  if (prior_.informative) {
    tau2 = pt.tau2();
    if (!std::isfinite(tau2) || tau2 > kParamOverflowGuard || tau2 <= 0.0) return kInf;
  }

  // K and A = K + eta I (+ jitter)
  Matrix S = Matrix::Zero(n, n);
  for (int j = 0; j < d_; ++j) S.noalias() += omega[j] * sqdiff_[j];
  Matrix K = (-S.array()).exp().matrix();
  CovFactor F = cov_factor(K, eta, prior_.jitter);

  const Vector& y = data_.y;
  Vector alpha = F.solve(y);
  Matrix B = F.solve(G_);
  Vector w = G_.transpose() * alpha;
  Matrix Q = G_.transpose() * B;
  Q = 0.5 * (Q + Q.transpose()).eval();
  const double yAy = y.dot(alpha);
  const double logdetA = F.log_det();

  const double cs = kCompletedSquareSign;
  const double shape_shift = include_jacobian_ ? 0.0 : 1.0;
  const double tau2_log_coef = 0.5 * (n + prior_.df_tau2) + shape_shift;
  const Vector log_omega = pt.log_omega;
  const Vector a_omega_eff = prior_.a_omega.array() - shape_shift;
  const double a_eta_eff = prior_.a_eta - shape_shift;
  const double prior_terms =
      gamma_neglog(a_omega_eff, prior_.b_omega, omega, log_omega) +
      prior_.b_eta * eta - a_eta_eff * pt.log_eta;

  double V = 0.0;
  Vector cm;        // solve of the small system; e = B*cm
  Vector e;
  Matrix Msmall;    // informative: M = Q/tau2 + (nu^2 R)^{-1}; else chol(Q) used
  Eigen::LLT<Matrix> small_llt;
  double s2 = 0.0, wsolw = 0.0, dfpost = 0.0;

  if (!prior_.informative) {
    small_llt.compute(Q);
    if (!llt_ok(small_llt))
      throw NumericalError("posterior: G'A^{-1}G is rank deficient");
    cm = small_llt.solve(w);
    wsolw = w.dot(cm);
    s2 = yAy - cs * wsolw;
    dfpost = prior_.df_tau2 + n - p_;
    const double logdetQ = 2.0 * small_llt.matrixLLT().diagonal().array().log().sum();
    V = 0.5 * dfpost * std::log1p(s2) + 0.5 * logdetQ + 0.5 * logdetA + prior_terms;
  } else {
    Msmall = Q / tau2;
    for (int t = 0; t < p_; ++t) Msmall(t, t) += 1.0 / (prior_.nu2 * prior_.r_diag[t]);
    small_llt.compute(Msmall);
    if (!llt_ok(small_llt))
      throw NumericalError("posterior: beta precision matrix is not PD");
    cm = small_llt.solve(w);
    wsolw = w.dot(cm);
    const double logdetM = 2.0 * small_llt.matrixLLT().diagonal().array().log().sum();
    const double t4 = tau2 * tau2;
    V = 0.5 * logdetA + 0.5 * logdetM + tau2_log_coef * pt.log_tau2 +
        (1.0 + yAy) / (2.0 * tau2) - cs * 0.5 * wsolw / t4 + prior_terms;
  }

  if (!std::isfinite(V)) return kInf;
  if (!grad) return V;

  // Gradient via trace identities; every quadratic/trace term against
  // dA/d(omega_j) = -(D_j o K) reduces to an elementwise sum with D_j.
  e = B * cm;
  Matrix Ainv = F.solve(Matrix(Matrix::Identity(n, n)));
  Matrix WA = Ainv.array() * K.array();             // tr(A^{-1}(D o K)) pieces
  Matrix small_inv_Bt = small_llt.solve(B.transpose());
  Matrix PB = B * small_inv_Bt;                      // B (small)^{-1} B'
  Matrix WB = PB.array() * K.array();
  Matrix Caa = (alpha * alpha.transpose()).array() * K.array();
  Matrix Cea = (e * alpha.transpose()).array() * K.array();
  Matrix Cee = (e * e.transpose()).array() * K.array();

  grad->resize(dim());
  const double t4 = tau2 * tau2;

  for (int j = 0; j < d_; ++j) {
    const Matrix& D = sqdiff_[j];
    const double sWA = (WA.array() * D.array()).sum();
    const double sWB = (WB.array() * D.array()).sum();
    const double sCaa = (Caa.array() * D.array()).sum();
    const double sCea = (Cea.array() * D.array()).sum();
    const double sCee = (Cee.array() * D.array()).sum();

    double dV;
    if (!prior_.informative) {
      // d s2 = d(y'A^{-1}y) - cs * d(w'Q^{-1}w)
      const double d_yAy = sCaa;
      const double d_wQw = 2.0 * sCea - sCee;
      const double d_s2 = d_yAy - cs * d_wQw;
      dV = 0.5 * dfpost * d_s2 / (1.0 + s2) + 0.5 * sWB - 0.5 * sWA;
    } else {
      const double d_yAy = sCaa;
      const double d_wMw = 2.0 * sCea - sCee / tau2;
      dV = -0.5 * sWA + 0.5 * sWB / tau2 + d_yAy / (2.0 * tau2) -
           cs * 0.5 * d_wMw / t4;
    }
    dV += prior_.b_omega[j] - a_omega_eff[j] / omega[j];
    (*grad)[j] = omega[j] * dV;
  }

  // eta coordinate: dA/d(eta) = I
  {
    const double trAinv = Ainv.trace();
    const double trPB = PB.trace();
    const double aa = alpha.squaredNorm();
    const double ea = e.dot(alpha);
    const double ee = e.squaredNorm();

    double dV;
    if (!prior_.informative) {
      const double d_yAy = -aa;
      const double d_wQw = -2.0 * ea + ee;
      const double d_s2 = d_yAy - cs * d_wQw;
      dV = 0.5 * dfpost * d_s2 / (1.0 + s2) - 0.5 * trPB + 0.5 * trAinv;
    } else {
      const double d_yAy = -aa;
      const double d_wMw = -2.0 * ea + ee / tau2;
      dV = 0.5 * trAinv - 0.5 * trPB / tau2 + d_yAy / (2.0 * tau2) -
           cs * 0.5 * d_wMw / t4;
    }
    dV += prior_.b_eta - a_eta_eff / eta;
    (*grad)[d_] = eta * dV;
  }

  if (prior_.informative) {
    const double trMiQ = small_llt.solve(Q).trace();
    const double cQc = cm.dot(Q * cm);
    double dV = -0.5 * trMiQ / t4 + tau2_log_coef / tau2 -
                (1.0 + yAy) / (2.0 * t4) + cs * wsolw / (t4 * tau2) -
                cs * 0.5 * cQc / (t4 * t4);
    (*grad)[d_ + 1] = tau2 * dV;
  }

  if (!grad->allFinite()) throw NumericalError("posterior: non-finite gradient");
  return V;
}

double PosteriorTarget::value(const HyperPoint& point) const {
  return value_grad(point.flat(), nullptr);
}

Vector PosteriorTarget::gradient(const HyperPoint& point) const {
  Vector g;
  value_grad(point.flat(), &g);
  return g;
}

double log_posterior(const Dataset& data, const Matrix& G, const PriorConfig& prior,
                     const HyperPoint& point) {
  PosteriorTarget target(data, G, prior);
  double v = target.value(point);
  if (!std::isfinite(v)) throw NumericalError("log_posterior: non-finite value");
  return v;
}

Vector grad_log_posterior(const Dataset& data, const Matrix& G, const PriorConfig& prior,
                          const HyperPoint& point) {
  PosteriorTarget target(data, G, prior);
  return target.gradient(point);
}

namespace {

struct Solves {
  CovFactor F;
  Vector alpha;
  Matrix B;
  Vector w;
  Matrix Q;
};

Solves base_solves(const Dataset& data, const Matrix& G, const PriorConfig& prior,
                   const HyperPoint& point) {
  KernelParams kp{point.omega()};
  Solves s{cov_factor(data, kp, point.eta(), prior.jitter), {}, {}, {}, {}};
  s.alpha = s.F.solve(data.y);
  s.B = s.F.solve(G);
  s.w = G.transpose() * s.alpha;
  s.Q = G.transpose() * s.B;
  s.Q = 0.5 * (s.Q + s.Q.transpose()).eval();
  return s;
}

double tau2_scale(const Dataset& data, const Matrix& G, const PriorConfig& prior,
                  const Solves& s) {
  const int n = data.n();
  const int p = static_cast<int>(G.cols());
  Eigen::LLT<Matrix> qllt(s.Q);
  if (!llt_ok(qllt))
    throw NumericalError("tau2_conditional: G'A^{-1}G is rank deficient");
  const double wQw = s.w.dot(qllt.solve(s.w));
  const double s2 = data.y.dot(s.alpha) - kCompletedSquareSign * wQw;
  const double df = prior.df_tau2 + n - p;
  return (1.0 + s2) / df;
}

}  // namespace

BetaConditional beta_conditional(const Dataset& data, const Matrix& G,
                                 const PriorConfig& prior, const HyperPoint& point) {
  const int p = static_cast<int>(G.cols());
  prior.validate(data.d(), p);
  Solves s = base_solves(data, G, prior, point);

  BetaConditional cond;
  cond.informative = prior.informative;
  if (prior.informative) {
    const double tau2 = point.tau2();
    if (!point.has_tau2)
      throw std::invalid_argument("beta_conditional: informative regime needs log_tau2");
    Matrix M = s.Q / tau2;
    for (int t = 0; t < p; ++t) M(t, t) += 1.0 / (prior.nu2 * prior.r_diag[t]);
    Eigen::LLT<Matrix> mllt(M);
    if (!llt_ok(mllt))
      throw NumericalError("beta_conditional: precision matrix not PD");
    cond.sigma_beta = mllt.solve(Matrix::Identity(p, p));
    cond.sigma_beta = 0.5 * (cond.sigma_beta + cond.sigma_beta.transpose()).eval();
    cond.beta_hat = mllt.solve(s.w) / tau2;
  } else {
    if (data.n() <= p)
      throw std::invalid_argument("beta_conditional: non-informative regime needs n > p");
    Eigen::LLT<Matrix> qllt(s.Q);
    if (!llt_ok(qllt))
      throw NumericalError("beta_conditional: G'A^{-1}G is rank deficient");
    cond.beta_hat = qllt.solve(s.w);
    const double tau2 = tau2_scale(data, G, prior, s);
    cond.sigma_beta = tau2 * qllt.solve(Matrix::Identity(p, p));
    cond.sigma_beta = 0.5 * (cond.sigma_beta + cond.sigma_beta.transpose()).eval();
  }
  return cond;
}

Tau2Conditional tau2_conditional(const Dataset& data, const Matrix& G,
                                 const PriorConfig& prior, const HyperPoint& point) {
  const int p = static_cast<int>(G.cols());
  prior.validate(data.d(), p);
  if (prior.informative)
    throw std::invalid_argument("tau2_conditional: defined for the non-informative regime");
  if (data.n() <= p)
    throw std::invalid_argument("tau2_conditional: needs n > p");
  Solves s = base_solves(data, G, prior, point);
  Tau2Conditional cond;
  cond.df = prior.df_tau2 + data.n() - p;
  cond.scale = tau2_scale(data, G, prior, s);
  return cond;
}

Vector sample_beta(const BetaConditional& cond, std::mt19937_64& rng) {
  const int p = static_cast<int>(cond.beta_hat.size());
  Eigen::LLT<Matrix> llt(cond.sigma_beta);
  if (llt.info() != Eigen::Success) {
    Matrix jittered = cond.sigma_beta;
    jittered.diagonal().array() += 1e-12 * std::max(1.0, cond.sigma_beta.diagonal().maxCoeff());
    llt.compute(jittered);
    if (llt.info() != Eigen::Success)
      throw NumericalError("sample_beta: covariance is not positive definite");
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector z(p);
  for (int i = 0; i < p; ++i) z[i] = gauss(rng);
  return cond.beta_hat + Matrix(llt.matrixL()) * z;
}

double sample_tau2(const Tau2Conditional& cond, std::mt19937_64& rng) {
  if (!(cond.df > 0.0) || !(cond.scale > 0.0))
    throw std::invalid_argument("sample_tau2: invalid conditional");
  std::chi_squared_distribution<double> chi2(cond.df);
  double draw = chi2(rng);
  if (draw <= 0.0) draw = std::numeric_limits<double>::min();
  return cond.df * cond.scale / draw;
}

}  // namespace evigp
