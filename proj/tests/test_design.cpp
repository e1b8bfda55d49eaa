#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "evigp/design.hpp"

using namespace evigp;

namespace {

// Independent O(n^2) distance scan, no shortcuts shared with the library.
double brute_min_dist(const Matrix& P) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < P.rows(); ++i)
    for (int k = i + 1; k < P.rows(); ++k) {
      double s = 0.0;
      for (int j = 0; j < P.cols(); ++j) s += (P(i, j) - P(k, j)) * (P(i, j) - P(k, j));
      best = std::min(best, std::sqrt(s));
    }
  return best;
}

}  // namespace

TEST_CASE("random_lhs entries live in [0,1)") {
  Design d = random_lhs(37, 5, 99);
  REQUIRE(d.points.rows() == 37);
  REQUIRE(d.points.cols() == 5);
  CHECK((d.points.array() >= 0.0).all());
  CHECK((d.points.array() < 1.0).all());
}

TEST_CASE("random_lhs satisfies the Latin property") {
  for (std::uint64_t seed : {1ull, 7ull, 42ull}) {
    Design d = random_lhs(25, 3, seed);
    CHECK(latin_property_holds(d.points));
    // one point per stratum, per column, checked independently
    for (int j = 0; j < 3; ++j) {
      std::set<int> bins;
      for (int i = 0; i < 25; ++i) bins.insert(static_cast<int>(d.points(i, j) * 25));
      CHECK(bins.size() == 25);
    }
  }
}

TEST_CASE("random_lhs is deterministic in the seed") {
  Design a = random_lhs(20, 4, 314);
  Design b = random_lhs(20, 4, 314);
  CHECK(a.points == b.points);
  Design c = random_lhs(20, 4, 315);
  CHECK(a.points != c.points);
}

TEST_CASE("latin_property_holds rejects a doubled stratum") {
  Design d = random_lhs(10, 2, 5);
  Matrix broken = d.points;
  broken(0, 0) = broken(1, 0);  // two points in one stratum
  CHECK(latin_property_holds(d.points));
  CHECK(!latin_property_holds(broken));
}

TEST_CASE("min_pairwise_distance agrees with a brute-force scan") {
  Design d = random_lhs(30, 4, 1234);
  CHECK(min_pairwise_distance(d.points) == doctest::Approx(brute_min_dist(d.points)).epsilon(1e-14));
}

TEST_CASE("maximin_lhs keeps the Latin property and never does worse than its seed design") {
  for (std::uint64_t seed : {3ull, 17ull}) {
    Design plain = random_lhs(21, 3, seed);
    MaximinResult mm = maximin_lhs_traced(21, 3, seed, 5);
    CHECK(latin_property_holds(mm.design.points));
    // restart 0 starts from exactly `plain`, so the optimum cannot be worse
    CHECK(mm.min_distance >= min_pairwise_distance(plain.points));
    CHECK(mm.min_distance == doctest::Approx(brute_min_dist(mm.design.points)).epsilon(1e-14));
    CHECK(!mm.trace.empty());
  }
}

TEST_CASE("maximin_lhs is deterministic and seed-sensitive") {
  Design a = maximin_lhs(15, 2, 7, 4);
  Design b = maximin_lhs(15, 2, 7, 4);
  CHECK(a.points == b.points);
  Design c = maximin_lhs(15, 2, 8, 4);
  CHECK(a.points != c.points);
}

TEST_CASE("maximin_lhs handles one dimension") {
  Design d = maximin_lhs(11, 1, 17, 10);
  CHECK(latin_property_holds(d.points));
  CHECK(min_pairwise_distance(d.points) > 0.0);
}

TEST_CASE("scale_to_ranges is the per-column affine map") {
  Design d = random_lhs(12, 2, 9);
  Matrix phys = scale_to_ranges(d, {{-1.0, 3.0}, {50.0, 150.0}});
  for (int i = 0; i < 12; ++i) {
    CHECK(phys(i, 0) == doctest::Approx(-1.0 + 4.0 * d.points(i, 0)).epsilon(1e-14));
    CHECK(phys(i, 1) == doctest::Approx(50.0 + 100.0 * d.points(i, 1)).epsilon(1e-14));
  }
}
