#pragma once

#include <array>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "evigp/linalg.hpp"

namespace evigp {

/// Objective callback: returns the value at x and, when grad != nullptr,
/// writes the gradient into *grad.
using TargetFn = std::function<double(const Vector&, Vector*)>;

/// N particles in a D-dimensional coordinate space plus the sampler scales.
/// step_size is the proximal step of the outer loop (the implicit-Euler
/// time step); it is distinct from the GP variance tau^2.
///
/// kde_on_exp selects the scale on which the entropy term models the particle
/// density: false measures kernel separations between the particle coordinates
/// themselves; true measures them between exp(particles), i.e. the natural
/// positive-scale parameters the log coordinates represent. The latter keeps
/// the optimizer unconstrained in log space while the density (and the
/// bandwidth h) lives on the natural scale, where flat log-space tails such as
/// eta -> 0 compress to a point instead of absorbing particles.
struct ParticleEnsemble {
  Matrix particles;  // N x D
  double h = 0.02;
  double step_size = 1.0;
  int epoch = 0;
  bool kde_on_exp = false;

  int N() const { return static_cast<int>(particles.rows()); }
  int D() const { return static_cast<int>(particles.cols()); }
};

struct EviConfig {
  int max_outer = 500;
  int max_inner = 100;
  double tol = 1e-8;        // mean particle displacement between epochs
  int lbfgs_history = 50;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  double grad_tol = 1e-8;   // inner-solver gradient-norm stop
};

/// Isotropic smoothing kernel K_h(u,v) = exp(-||u-v||^2 / (2h)) and its
/// gradient with respect to u.
std::pair<double, Vector> kde_kernel(const Vector& u, const Vector& v, double h);

/// F_h = (1/N) sum_i [ ln((1/N) sum_j K_h(x_i,x_j)) + V(x_i) ].
double free_energy(const ParticleEnsemble& ensemble, const TargetFn& V);

/// Exact gradient of F_h; row i is d F_h / d x_i.
Matrix free_energy_grad(const ParticleEnsemble& ensemble, const TargetFn& V);

/// J_m = (1/(2 step_size)) (1/N) sum_i ||x_i - anchor_i||^2 + F_h(x).
double proximal_objective(const Matrix& candidate, const Matrix& anchor,
                          double step_size, double h, const TargetFn& V,
                          bool kde_on_exp = false);

struct LbfgsResult {
  Vector x;
  double f = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;          // hit the gradient-norm tolerance
  bool line_search_failed = false;
  std::vector<double> trace;       // objective at accepted iterates
};

/// Limited-memory BFGS with two-loop recursion and a strong-Wolfe
/// bracket/zoom line search. Returns the best iterate seen; the objective at
/// the returned point never exceeds the objective at x0.
LbfgsResult lbfgs_minimize(const TargetFn& fg, const Vector& x0, const EviConfig& config);

struct EviResult {
  ParticleEnsemble ensemble;
  std::vector<double> energy_trace;  // F_h after each outer epoch (front = initial)
  int epochs = 0;
  bool converged = false;
  bool warning = false;  // inner solver aborted; ensemble is last valid state
};

/// Implicit-Euler outer loop: each epoch jointly minimizes J_m over all
/// N*D coordinates, then re-anchors. Stops when the mean displacement
/// (1/N) sum_i ||x_i(t) - x_i(t-1)|| drops below config.tol.
EviResult evi_im(const ParticleEnsemble& init, const TargetFn& V, const EviConfig& config);

struct MapResult {
  Vector x;
  std::vector<double> v_trace;  // V after each epoch (front = initial)
  int epochs = 0;
  bool converged = false;
  bool warning = false;
};

/// Proximal point algorithm: the N=1 specialization of evi_im (identical
/// iterates by construction).
MapResult evi_map(const Vector& x0, const TargetFn& V, const EviConfig& config,
                  double step_size);

/// Uniform draws inside a natural-scale box, stored as logs. A lower bound
/// of 0 is replaced by 1e-4 before the log map.
ParticleEnsemble init_particles(int N, int D, const std::vector<std::array<double, 2>>& box,
                                double h, double step_size, std::mt19937_64& rng);

}  // namespace evigp
