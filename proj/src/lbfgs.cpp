#include "evigp/evi.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace evigp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LinePoint {
  double a = 0.0;
  double f = kInf;
  double dphi = 0.0;
  Vector x, g;
  bool valid = false;
};

class WolfeSearch {
 public:
  WolfeSearch(const TargetFn& fg, const Vector& x0, double f0, const Vector& g0,
              const Vector& dir, double c1, double c2)
      : fg_(fg), x0_(x0), f0_(f0), dir_(dir), c1_(c1), c2_(c2) {
    dphi0_ = g0.dot(dir);
  }

  LinePoint eval(double a) {
    LinePoint p;
    p.a = a;
    p.x = x0_ + a * dir_;
    p.g.resize(x0_.size());
    double f = fg_(p.x, &p.g);
    if (std::isfinite(f) && p.g.allFinite()) {
      p.f = f;
      p.dphi = p.g.dot(dir_);
      p.valid = true;
    }
    return p;
  }

  bool sufficient_decrease(const LinePoint& p) const {
    return p.valid && p.f <= f0_ + c1_ * p.a * dphi0_;
  }
  bool curvature_ok(const LinePoint& p) const {
    return p.valid && std::abs(p.dphi) <= -c2_ * dphi0_;
  }

  // Bracket then zoom; returns an accepted point or invalid if no
  // strong-Wolfe point was found within the budget.
  LinePoint search() {
    const double a_max = 1e10;
    LinePoint prev;
    prev.a = 0.0;
    prev.f = f0_;
    prev.dphi = dphi0_;
    prev.valid = true;
    double a = 1.0;
    for (int i = 0; i < 30; ++i) {
      LinePoint cur = eval(a);
      if (!cur.valid || !sufficient_decrease(cur) || (i > 0 && cur.f >= prev.f))
        return zoom(prev, cur);
      if (curvature_ok(cur)) return cur;
      if (cur.dphi >= 0.0) return zoom(cur, prev);
      prev = cur;
      a = std::min(2.0 * a, a_max);
      if (prev.a >= a_max) break;
    }
    return LinePoint{};
  }

 private:
  // lo satisfies sufficient decrease; a Wolfe point is bracketed by [lo, hi].
  LinePoint zoom(LinePoint lo, LinePoint hi) {
    for (int it = 0; it < 40; ++it) {
      double a = interpolate(lo, hi);
      LinePoint cand = eval(a);
      if (!cand.valid || !sufficient_decrease(cand) || cand.f >= lo.f) {
        if (!cand.valid) {
          cand = LinePoint{};
          cand.a = a;
        }
        hi = cand;
      } else {
        if (curvature_ok(cand)) return cand;
        if (cand.dphi * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = cand;
      }
      if (std::abs(hi.a - lo.a) < 1e-16 * std::max(1.0, std::abs(lo.a))) break;
    }
    // Fall back to the best sufficient-decrease point even without the
    // curvature condition; it still strictly decreases the objective.
    if (lo.valid && lo.a > 0.0 && lo.f < f0_) return lo;
    return LinePoint{};
  }

  double interpolate(const LinePoint& lo, const LinePoint& hi) const {
    const double span = hi.a - lo.a;
    // Quadratic model from (f_lo, dphi_lo, f_hi) when hi is informative;
    // bisection otherwise, with safeguards keeping the step interior.
    double a = lo.a + 0.5 * span;
    if (hi.valid && std::isfinite(hi.f)) {
      const double denom = 2.0 * (hi.f - lo.f - lo.dphi * span);
      if (std::abs(denom) > 1e-300) {
        double cand = lo.a - lo.dphi * span * span / denom;
        const double b1 = lo.a + 0.1 * span;
        const double b2 = lo.a + 0.9 * span;
        if (std::isfinite(cand)) a = std::clamp(cand, std::min(b1, b2), std::max(b1, b2));
      }
    }
    return a;
  }

  const TargetFn& fg_;
  Vector x0_;
  double f0_;
  Vector dir_;
  double c1_, c2_;
  double dphi0_ = 0.0;
};

}  // namespace

LbfgsResult lbfgs_minimize(const TargetFn& fg, const Vector& x0, const EviConfig& config) {
  const int D = static_cast<int>(x0.size());
  Vector x = x0;
  Vector g(D);
  double f = fg(x, &g);
  if (!std::isfinite(f) || !g.allFinite())
    throw NumericalError("lbfgs: objective not finite at the start point");

  LbfgsResult res;
  res.trace.push_back(f);
  Vector best_x = x;
  double best_f = f;

  std::deque<Vector> S, Y;
  std::deque<double> rho;

  for (int iter = 0; iter < config.max_inner; ++iter) {
    const double gnorm = g.norm();
    if (gnorm < config.grad_tol) {
      res.converged = true;
      break;
    }

    // Two-loop recursion.
    Vector q = g;
    const int m = static_cast<int>(S.size());
    std::vector<double> alpha_coef(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha_coef[i] = rho[i] * S[i].dot(q);
      q -= alpha_coef[i] * Y[i];
    }
    double gamma = 1.0;
    if (m > 0) {
      const double yy = Y.back().squaredNorm();
      if (yy > 0.0) gamma = std::clamp(S.back().dot(Y.back()) / yy, 1e-12, 1e12);
    }
    q *= gamma;
    for (int i = 0; i < m; ++i) {
      const double beta = rho[i] * Y[i].dot(q);
      q += (alpha_coef[i] - beta) * S[i];
    }
    Vector d = -q;
    if (d.dot(g) >= -1e-16 * d.norm() * gnorm) d = -g;  // enforce descent

    WolfeSearch search(fg, x, f, g, d, config.wolfe_c1, config.wolfe_c2);
    LinePoint accepted = search.search();
    if (!accepted.valid) {
      // One tiny fallback step along the direction before giving up; the
      // target can be extremely flat far from the data.
      LinePoint tiny = search.eval(1e-6);
      if (tiny.valid && tiny.f < f) {
        accepted = tiny;
      } else {
        res.line_search_failed = true;
        break;
      }
    }

    Vector s = accepted.x - x;
    Vector yv = accepted.g - g;
    const double sy = s.dot(yv);
    if (sy > 1e-10 * s.norm() * yv.norm()) {
      S.push_back(std::move(s));
      Y.push_back(std::move(yv));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > config.lbfgs_history) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }

    x = accepted.x;
    f = accepted.f;
    g = accepted.g;
    res.trace.push_back(f);
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
    res.iterations = iter + 1;
  }

  if (f <= best_f) {
    best_f = f;
    best_x = x;
  }
  res.x = best_x;
  res.f = best_f;
  if (best_x == x) {
    res.grad_norm = g.norm();
  } else {
    Vector gb(D);
    fg(best_x, &gb);
    res.grad_norm = gb.norm();
  }
  if (res.grad_norm < config.grad_tol) res.converged = true;
  return res;
}

}  // namespace evigp
