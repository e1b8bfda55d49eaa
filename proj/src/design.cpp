#include "evigp/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace evigp {

namespace {

constexpr int kMaxSweeps = 30;
constexpr int kSampledMovesPerSweep = 20000;
constexpr int kExhaustiveMoveLimit = 40000;

// Within-stratum positions probed by slide moves, as fractions of the cell
// width. The top candidate stays strictly inside the cell so the Latin
// property is preserved under floor-based stratum assignment.
constexpr double kSlideFractions[] = {0.0,       1.0 / 8, 2.0 / 8, 3.0 / 8, 4.0 / 8,
                                      5.0 / 8,   6.0 / 8, 7.0 / 8, 255.0 / 256};

// Per-row record of the three nearest neighbours (squared distance, index).
// Three witnesses are enough to answer "nearest neighbour excluding up to
// two rows" without a rescan.
struct Witness {
  std::array<std::pair<double, int>, 3> nn;
};

Witness build_witness(const Matrix& D2, int r) {
  const int n = static_cast<int>(D2.rows());
  Witness w;
  w.nn.fill({std::numeric_limits<double>::infinity(), -1});
  for (int s = 0; s < n; ++s) {
    if (s == r) continue;
    double d = D2(r, s);
    if (d < w.nn[2].first) {
      w.nn[2] = {d, s};
      if (w.nn[2].first < w.nn[1].first) std::swap(w.nn[1], w.nn[2]);
      if (w.nn[1].first < w.nn[0].first) std::swap(w.nn[0], w.nn[1]);
    }
  }
  return w;
}

double row_min_excluding(const Witness& w, int a, int b) {
  for (const auto& [d, idx] : w.nn) {
    if (idx != a && idx != b) return d;
  }
  return std::numeric_limits<double>::infinity();
}

struct Climber {
  Matrix P;
  Matrix D2;
  std::vector<Witness> wit;
  double min_sq;

  explicit Climber(const Matrix& points) : P(points) {
    const int n = static_cast<int>(P.rows());
    D2.resize(n, n);
    D2.setZero();
    for (int i = 0; i < n; ++i)
      for (int k = i + 1; k < n; ++k) {
        double d = (P.row(i) - P.row(k)).squaredNorm();
        D2(i, k) = D2(k, i) = d;
      }
    wit.resize(n);
    min_sq = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      wit[i] = build_witness(D2, i);
      min_sq = std::min(min_sq, wit[i].nn[0].first);
    }
  }

  // Minimum over pairs not touching rows a or b.
  double untouched_min(int a, int b) const {
    double m = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(P.rows());
    for (int r = 0; r < n; ++r) {
      if (r == a || r == b) continue;
      m = std::min(m, row_min_excluding(wit[r], a, b));
    }
    return m;
  }

  // Attempt the swap of rows a,b in column j; apply only on strict
  // improvement of the global minimum distance. Returns true if applied.
  bool try_swap(int j, int a, int b) {
    const int n = static_cast<int>(P.rows());
    const double va = P(a, j), vb = P(b, j);
    if (va == vb) return false;

    double touched = D2(a, b);  // unchanged by a same-column swap
    for (int s = 0; s < n; ++s) {
      if (s == a || s == b) continue;
      const double vs = P(s, j);
      double da = D2(a, s) - (va - vs) * (va - vs) + (vb - vs) * (vb - vs);
      double db = D2(b, s) - (vb - vs) * (vb - vs) + (va - vs) * (va - vs);
      touched = std::min(touched, std::min(da, db));
      if (touched <= min_sq) return false;  // cannot strictly improve
    }
    double candidate = std::min(touched, untouched_min(a, b));
    if (candidate <= min_sq) return false;

    apply_swap(j, a, b);
    min_sq = candidate;
    return true;
  }

  void apply_swap(int j, int a, int b) {
    const int n = static_cast<int>(P.rows());
    const double va = P(a, j), vb = P(b, j);
    P(a, j) = vb;
    P(b, j) = va;
    for (int s = 0; s < n; ++s) {
      if (s == a || s == b) continue;
      const double vs = P(s, j);
      double da = D2(a, s) - (va - vs) * (va - vs) + (vb - vs) * (vb - vs);
      double db = D2(b, s) - (vb - vs) * (vb - vs) + (va - vs) * (va - vs);
      D2(a, s) = D2(s, a) = da;
      D2(b, s) = D2(s, b) = db;
    }
    refresh_witnesses(a, b);
  }

  // Attempt to move P(a,j) to position c inside the same stratum; apply only
  // on strict improvement of the global minimum distance. A same-column swap
  // can never change the point set when d == 1, so slides are what give the
  // optimizer traction on within-cell positions.
  bool try_slide(int a, int j, double c) {
    const int n = static_cast<int>(P.rows());
    const double va = P(a, j);
    if (va == c) return false;

    double touched = std::numeric_limits<double>::infinity();
    for (int s = 0; s < n; ++s) {
      if (s == a) continue;
      const double vs = P(s, j);
      double ds = D2(a, s) - (va - vs) * (va - vs) + (c - vs) * (c - vs);
      touched = std::min(touched, ds);
      if (touched <= min_sq) return false;
    }
    double candidate = std::min(touched, untouched_min(a, -1));
    if (candidate <= min_sq) return false;

    P(a, j) = c;
    for (int s = 0; s < n; ++s) {
      if (s == a) continue;
      const double vs = P(s, j);
      double ds = D2(a, s) - (va - vs) * (va - vs) + (c - vs) * (c - vs);
      D2(a, s) = D2(s, a) = ds;
    }
    refresh_witnesses(a, -1);
    min_sq = candidate;
    return true;
  }

 private:
  void refresh_witnesses(int a, int b) {
    const int n = static_cast<int>(P.rows());
    for (int r = 0; r < n; ++r) {
      if (r == a || r == b) {
        wit[r] = build_witness(D2, r);
        continue;
      }
      bool stale = false;
      for (const auto& [dist, idx] : wit[r].nn)
        if (idx == a || idx == b) stale = true;
      if (!stale && (D2(r, a) < wit[r].nn[2].first ||
                     (b >= 0 && D2(r, b) < wit[r].nn[2].first)))
        stale = true;
      if (stale) wit[r] = build_witness(D2, r);
    }
  }
};

}  // namespace

Design random_lhs(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("random_lhs: n and d must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix points(n, d);
  std::vector<int> perm(n);
  for (int j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i) points(i, j) = (perm[i] + unif(rng)) / n;
  }
  return Design{std::move(points), n, d, seed};
}

MaximinResult maximin_lhs_traced(int n, int d, std::uint64_t seed, int restarts) {
  if (n < 2) throw std::invalid_argument("maximin_lhs: need n >= 2");
  if (d < 1) throw std::invalid_argument("maximin_lhs: need d >= 1");
  if (restarts < 1) throw std::invalid_argument("maximin_lhs: need restarts >= 1");

  const long long all_moves = static_cast<long long>(d) * n * (n - 1) / 2;
  const bool exhaustive = all_moves <= kExhaustiveMoveLimit;

  MaximinResult best;
  double best_sq = -1.0;
  for (int k = 0; k < restarts; ++k) {
    Design cand = random_lhs(n, d, seed + static_cast<std::uint64_t>(k));
    Climber climber(cand.points);
    std::vector<double> trace{std::sqrt(climber.min_sq)};
    std::mt19937_64 move_rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(k) + 1);
    std::uniform_int_distribution<int> pick_col(0, d - 1);
    std::uniform_int_distribution<int> pick_row(0, n - 1);

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
      bool improved = false;
      if (exhaustive) {
        for (int j = 0; j < d; ++j)
          for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b)
              if (climber.try_swap(j, a, b)) {
                trace.push_back(std::sqrt(climber.min_sq));
                improved = true;
              }
        for (int j = 0; j < d; ++j)
          for (int a = 0; a < n; ++a) {
            const int stratum = std::min(static_cast<int>(std::floor(climber.P(a, j) * n)),
                                         n - 1);
            for (double f : kSlideFractions)
              if (climber.try_slide(a, j, (stratum + f) / n)) {
                trace.push_back(std::sqrt(climber.min_sq));
                improved = true;
              }
            if (stratum == n - 1 && climber.try_slide(a, j, 1.0)) {
              trace.push_back(std::sqrt(climber.min_sq));
              improved = true;
            }
          }
      } else {
        for (int m = 0; m < kSampledMovesPerSweep; ++m) {
          int j = pick_col(move_rng);
          int a = pick_row(move_rng);
          int b = pick_row(move_rng);
          if (a == b) continue;
          if (climber.try_swap(j, a, b)) {
            trace.push_back(std::sqrt(climber.min_sq));
            improved = true;
          }
        }
      }
      if (!improved) break;
    }

    if (climber.min_sq > best_sq) {
      best_sq = climber.min_sq;
      best.design = Design{climber.P, n, d, seed};
      best.trace = std::move(trace);
      best.min_distance = std::sqrt(climber.min_sq);
    }
  }
  return best;
}

Design maximin_lhs(int n, int d, std::uint64_t seed, int restarts) {
  return maximin_lhs_traced(n, d, seed, restarts).design;
}

Matrix scale_to_ranges(const Design& design, const std::vector<std::array<double, 2>>& ranges) {
  if (static_cast<int>(ranges.size()) != design.d)
    throw std::invalid_argument("scale_to_ranges: ranges count must equal design dimension");
  for (const auto& r : ranges)
    if (!(r[0] < r[1]))
      throw std::invalid_argument("scale_to_ranges: each range needs lo < hi");
  Matrix out = design.points;
  for (int j = 0; j < design.d; ++j) {
    out.col(j) = (ranges[j][0] + (ranges[j][1] - ranges[j][0]) * out.col(j).array()).matrix();
  }
  return out;
}

double min_pairwise_distance(const Matrix& points) {
  const int n = static_cast<int>(points.rows());
  if (n < 2) throw std::invalid_argument("min_pairwise_distance: need at least two points");
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k)
      best = std::min(best, (points.row(i) - points.row(k)).squaredNorm());
  return std::sqrt(best);
}

bool latin_property_holds(const Matrix& points) {
  const int n = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  std::vector<int> count(n);
  for (int j = 0; j < d; ++j) {
    std::fill(count.begin(), count.end(), 0);
    for (int i = 0; i < n; ++i) {
      double v = points(i, j);
      if (v < 0.0 || v > 1.0) return false;
      int stratum = std::min(static_cast<int>(std::floor(v * n)), n - 1);
      ++count[stratum];
    }
    for (int k = 0; k < n; ++k)
      if (count[k] != 1) return false;
  }
  return true;
}

}  // namespace evigp
