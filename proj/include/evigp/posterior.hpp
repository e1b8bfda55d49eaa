#pragma once

#include <optional>
#include <random>
#include <vector>

#include "evigp/basis.hpp"
#include "evigp/dataset.hpp"
#include "evigp/kernel.hpp"
#include "evigp/linalg.hpp"

namespace evigp {

/// Prior configuration for (beta, omega, tau^2, eta).
///   omega_i ~ Gamma(a_omega[i], b_omega[i])         (shape/rate)
///   eta     ~ Gamma(a_eta, b_eta)
///   tau^2   ~ Inverse-chi^2(df_tau2), density ~ (t)^-(df/2+1) exp(-1/(2t))
///   beta    ~ MVN(0, nu^2 R)  (informative)  or  flat  (non-informative)
struct PriorConfig {
  Vector a_omega;
  Vector b_omega;
  double a_eta = 1.0;
  double b_eta = 1.0;
  double df_tau2 = 0.0;
  bool informative = false;
  double nu2 = 1.0;    // nu^2, informative regime only
  Vector r_diag;       // HierarchyR diagonal, informative regime only
  double jitter = 1e-10;

  void validate(int d, int p) const;
};

/// One point of the non-conjugate block in log coordinates:
/// (log omega_1..d, log eta) plus log tau^2 in the informative regime.
struct HyperPoint {
  Vector log_omega;
  double log_eta = 0.0;
  double log_tau2 = 0.0;
  bool has_tau2 = false;

  int dim() const { return static_cast<int>(log_omega.size()) + 1 + (has_tau2 ? 1 : 0); }
  Vector flat() const;
  static HyperPoint from_flat(const Vector& v, int d, bool has_tau2);

  Vector omega() const { return log_omega.array().exp(); }
  double eta() const { return std::exp(log_eta); }
  double tau2() const { return std::exp(log_tau2); }
};

/// Cholesky factor of K_n + eta I + jitter I with jitter escalation.
struct CovFactor {
  Eigen::LLT<Matrix> llt;
  double jitter_used = 0.0;

  Vector solve(const Vector& b) const { return llt.solve(b); }
  Matrix solve(const Matrix& B) const { return llt.solve(B); }
  double log_det() const;  // log det of the factored matrix
};

/// Factor K_n + eta I. Jitter escalates tenfold up to 1e-6 before failing.
CovFactor cov_factor(const Matrix& K, double eta, double jitter);
CovFactor cov_factor(const Dataset& data, const KernelParams& params, double eta,
                     double jitter);

/// Conditional posterior of beta given (omega, eta[, tau^2]).
struct BetaConditional {
  Vector beta_hat;
  Matrix sigma_beta;
  bool informative = false;
};

BetaConditional beta_conditional(const Dataset& data, const Matrix& G,
                                 const PriorConfig& prior, const HyperPoint& point);

/// Scaled Inverse-chi^2 conditional for tau^2 (non-informative regime).
struct Tau2Conditional {
  double df = 0.0;
  double scale = 0.0;  // tau_hat^2
};

Tau2Conditional tau2_conditional(const Dataset& data, const Matrix& G,
                                 const PriorConfig& prior, const HyperPoint& point);

/// V(x) = -log posterior density of the log-coordinate block, up to an
/// additive constant. Includes the change-of-variables Jacobian so particle
/// densities are with respect to the log coordinates.
double log_posterior(const Dataset& data, const Matrix& G, const PriorConfig& prior,
                     const HyperPoint& point);

/// Analytic gradient of V in log coordinates, layout
/// [d/dlog omega_1..d, d/dlog eta, (d/dlog tau2)].
Vector grad_log_posterior(const Dataset& data, const Matrix& G,
                          const PriorConfig& prior, const HyperPoint& point);

Vector sample_beta(const BetaConditional& cond, std::mt19937_64& rng);
double sample_tau2(const Tau2Conditional& cond, std::mt19937_64& rng);

/// Evaluation engine behind log_posterior/grad_log_posterior. Caches the
/// per-dataset squared-difference stack so repeated evaluations (the EVI
/// inner loops) only pay for factorizations.
class PosteriorTarget {
 public:
  /// include_jacobian selects the reference measure of the density V
  /// represents. true: density of the log-transformed parameters (the extra
  /// sum of log-coordinates folded in), what log_posterior exposes. false:
  /// the posterior density over the natural (omega, eta[, tau^2]) scale,
  /// merely *evaluated* through log coordinates; the mode of this target is
  /// the natural-scale MAP, which is what the fit drivers optimize.
  PosteriorTarget(const Dataset& data, Matrix G, PriorConfig prior,
                  bool include_jacobian = true);

  // V and (optionally) its gradient at the flattened log-coordinate point.
  double value_grad(const Vector& x, Vector* grad) const;

  double value(const HyperPoint& point) const;
  Vector gradient(const HyperPoint& point) const;

  int dim() const { return d_ + 1 + (prior_.informative ? 1 : 0); }
  int input_dim() const { return d_; }
  const PriorConfig& prior() const { return prior_; }
  const Matrix& G() const { return G_; }
  const Dataset& data() const { return data_; }

 private:
  Dataset data_;
  Matrix G_;
  PriorConfig prior_;
  bool include_jacobian_ = true;
  int d_ = 0;
  int p_ = 0;
  std::vector<Matrix> sqdiff_;  // per-dimension (x_ij - x_kj)^2
};

}  // namespace evigp
