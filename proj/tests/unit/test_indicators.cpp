#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "minishrink/indicators.hpp"

using namespace minishrink;

namespace {

using Point = std::vector<double>;
using Front = std::vector<Point>;

// inclusion-exclusion over box intersections; exact for any dimension, used
// as an independent oracle for small point sets
double hv_inclusion_exclusion(const Front& pts, const Point& ref) {
  const std::size_t n = pts.size();
  const std::size_t k = ref.size();
  double total = 0.0;
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    double vol = 1.0;
    for (std::size_t j = 0; j < k && vol > 0.0; ++j) {
      double lo = -1e300;
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (std::size_t{1} << i)) lo = std::max(lo, pts[i][j]);
      vol *= std::max(0.0, ref[j] - lo);
    }
    total += (std::popcount(mask) % 2 == 1) ? vol : -vol;
  }
  return total;
}

// permutation-test oracle: U from pairwise comparisons, two-sided p by
// enumerating all label assignments of the pooled sample
double pairwise_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a)
    for (double y : b) {
      if (x > y) u += 1.0;
      else if (x == y) u += 0.5;
    }
  return u;
}

double mwu_exact_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t na = a.size(), n = a.size() + b.size();
  std::vector<double> pool(a);
  pool.insert(pool.end(), b.begin(), b.end());
  const double mean = static_cast<double>(na) * static_cast<double>(b.size()) / 2.0;
  const double observed = std::abs(pairwise_u(a, b) - mean);

  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(na), true);
  std::sort(pick.begin(), pick.end());  // lowest permutation for next_permutation
  long hits = 0, total = 0;
  do {
    std::vector<double> xa, xb;
    for (std::size_t i = 0; i < n; ++i) (pick[i] ? xa : xb).push_back(pool[i]);
    if (std::abs(pairwise_u(xa, xb) - mean) >= observed - 1e-12) ++hits;
    ++total;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("dominates is a strict partial order") {
  CHECK(dominates(Point{1, 1}, Point{1, 2}));
  CHECK(dominates(Point{1, 1}, Point{2, 2}));
  CHECK(!dominates(Point{1, 2}, Point{2, 1}));
  CHECK(!dominates(Point{1, 1}, Point{1, 1}));  // irreflexive on equals
  CHECK_THROWS_AS(dominates(Point{1, 2}, Point{1, 2, 3}), std::invalid_argument);

  std::mt19937_64 rng(5);
  auto rand_point = [&] {
    Point p(3);
    for (auto& x : p) x = static_cast<double>(rng() % 4);
    return p;
  };
  for (int t = 0; t < 300; ++t) {
    Point a = rand_point(), b = rand_point(), c = rand_point();
    CHECK(!dominates(a, a));
    if (dominates(a, b)) CHECK(!dominates(b, a));
    if (dominates(a, b) && dominates(b, c)) CHECK(dominates(a, c));
  }
}

TEST_CASE("nondominated_indices keeps exactly the front, duplicates included") {
  Front pts = {{1, 1}, {1, 2}, {2, 2}, {0, 3}, {1, 1}};
  auto nd = nondominated_indices(pts);
  CHECK(nd == std::vector<std::size_t>{0, 3, 4});
  CHECK(nondominated_indices({}).empty());
}

TEST_CASE("hypervolume: worked examples") {
  CHECK(hypervolume({{0.5, 0.5}}, {1, 1}) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(hypervolume({{0, 0.5}, {0.5, 0}}, {1, 1}) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(hypervolume({}, {1, 1}) == doctest::Approx(0.0));
  // dominated points contribute nothing
  CHECK(hypervolume({{0.5, 0.5}, {0.6, 0.6}}, {1, 1}) == doctest::Approx(0.25).epsilon(1e-15));
  // points at or beyond the reference contribute nothing
  CHECK(hypervolume({{0.5, 0.5}, {1.0, 0.2}, {2.0, 0.1}}, {1, 1}) ==
        doctest::Approx(0.25).epsilon(1e-15));
  // coordinates below zero are fine (no implicit origin)
  CHECK(hypervolume({{-1.0, -1.0}}, {1, 1}) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK_THROWS_AS(hypervolume({{1, 2, 3}}, {1, 1}), std::invalid_argument);
}

TEST_CASE("hypervolume: monotone under added non-dominated points") {
  std::mt19937_64 rng(9);
  auto unit = [&] { return static_cast<double>(rng() % 1000) / 1000.0; };
  for (int t = 0; t < 50; ++t) {
    Front f;
    for (int i = 0; i < 6; ++i) f.push_back({unit(), unit(), unit()});
    const double before = hypervolume(f, {1, 1, 1});
    f.push_back({unit(), unit(), unit()});
    CHECK(hypervolume(f, {1, 1, 1}) >= before - 1e-12);
  }
}

TEST_CASE("hypervolume matches inclusion-exclusion for k in 2..4") {
  std::mt19937_64 rng(31);
  auto unit = [&] { return static_cast<double>(rng() % 100) / 100.0; };
  for (std::size_t k = 2; k <= 4; ++k) {
    for (int t = 0; t < 60; ++t) {
      Front f;
      const int n = 1 + static_cast<int>(rng() % 9);
      for (int i = 0; i < n; ++i) {
        Point p(k);
        for (auto& x : p) x = unit();
        f.push_back(p);
      }
      Point ref(k, 1.0);
      CHECK(hypervolume(f, ref) ==
            doctest::Approx(hv_inclusion_exclusion(f, ref)).epsilon(1e-12));
    }
  }
}

TEST_CASE("normalize_fronts maps the combined non-dominated range onto [0,1]") {
  Front a = {{0, 10}, {5, 5}};
  Front b = {{10, 0}, {6, 4}, {20, 30}};  // last point is dominated, ignored for bounds
  auto norm = normalize_fronts({a, b});
  REQUIRE(norm.size() == 2);
  CHECK(norm[0].ideal == Point{0, 0});
  CHECK(norm[0].nadir == Point{10, 10});
  CHECK(norm[0].points[0] == Point{0, 1});
  CHECK(norm[0].points[1] == Point{0.5, 0.5});
  CHECK(norm[1].points[0] == Point{1, 0});
  // out-of-range points clip into the unit box
  CHECK(norm[1].points[2] == Point{1, 1});

  // zero-range dimensions collapse to 0; the other dimensions still stretch
  auto flat = normalize_fronts({{{3, 1, 5}, {3, 2, 4}}});
  CHECK(flat[0].points[0] == Point{0, 0, 1});
  CHECK(flat[0].points[1] == Point{0, 1, 0});
}

TEST_CASE("pfs contribution against the combined front") {
  std::map<std::string, Front> two = {{"A", {{1, 1}}}, {"B", {{2, 2}}}};
  auto pfs = pfs_contribution(two);
  CHECK(pfs["A"].count == 1);
  CHECK(pfs["A"].percent == doctest::Approx(100.0));
  CHECK(pfs["B"].count == 0);
  CHECK(pfs["B"].percent == doctest::Approx(0.0));

  // duplicate points across algorithms are credited to both
  std::map<std::string, Front> dup = {{"A", {{1, 1}}}, {"B", {{1, 1}}}};
  auto p2 = pfs_contribution(dup);
  CHECK(p2["A"].count == 1);
  CHECK(p2["B"].count == 1);
  CHECK(p2["A"].percent == doctest::Approx(50.0));

  // duplicates within one algorithm count once
  std::map<std::string, Front> self_dup = {{"A", {{1, 1}, {1, 1}}}};
  CHECK(pfs_contribution(self_dup)["A"].count == 1);

  // 39 + 63 mutually non-dominated points -> 38.24% / 61.76%
  Front fa, fb;
  for (int i = 0; i <= 38; ++i) fa.push_back({double(i), double(101 - i)});
  for (int i = 39; i <= 101; ++i) fb.push_back({double(i), double(101 - i)});
  auto mix = pfs_contribution({{"A", fa}, {"B", fb}});
  CHECK(mix["A"].count == 39);
  CHECK(mix["B"].count == 63);
  CHECK(mix["A"].percent == doctest::Approx(100.0 * 39 / 102).epsilon(1e-12));
  CHECK(mix["B"].percent == doctest::Approx(100.0 * 63 / 102).epsilon(1e-12));
  CHECK(std::abs(mix["A"].percent - 38.24) < 0.005);
  CHECK(std::abs(mix["B"].percent - 61.76) < 0.005);
}

TEST_CASE("mann-whitney u: exact worked examples") {
  auto r = mann_whitney_u(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6});
  CHECK(r.u == doctest::Approx(0.0));
  CHECK(r.p_two_sided == doctest::Approx(0.1).epsilon(1e-12));

  auto tie = mann_whitney_u(std::vector<double>{1, 1, 1}, std::vector<double>{1, 1, 1});
  CHECK(tie.u == doctest::Approx(4.5));  // n_a * n_b / 2
  CHECK(tie.p_two_sided == doctest::Approx(1.0));

  CHECK_THROWS_AS(mann_whitney_u(std::vector<double>{}, std::vector<double>{1}),
                  std::invalid_argument);
}

TEST_CASE("mann-whitney u: exact path matches a permutation oracle") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 40; ++t) {
    std::vector<double> a(2 + rng() % 4), b(2 + rng() % 4);
    for (auto& x : a) x = static_cast<double>(rng() % 5);
    for (auto& x : b) x = static_cast<double>(rng() % 5);
    auto got = mann_whitney_u(a, b);
    CHECK(got.u == doctest::Approx(pairwise_u(a, b)).epsilon(1e-12));
    CHECK(got.p_two_sided == doctest::Approx(mwu_exact_oracle(a, b)).epsilon(1e-9));
  }
}

TEST_CASE("mann-whitney u: normal approximation for larger samples") {
  std::vector<double> lo, hi, same_a, same_b, flat_a, flat_b;
  for (int i = 0; i < 25; ++i) {
    lo.push_back(i);
    hi.push_back(i + 100);
    same_a.push_back(i);
    same_b.push_back(i);
    flat_a.push_back(5.0);
    flat_b.push_back(5.0);
  }
  CHECK(mann_whitney_u(lo, hi).p_two_sided < 1e-6);
  CHECK(mann_whitney_u(lo, hi).u == doctest::Approx(0.0));
  CHECK(mann_whitney_u(same_a, same_b).p_two_sided == doctest::Approx(1.0).epsilon(1e-6));
  // fully tied data has zero rank variance; p degenerates to 1
  CHECK(mann_whitney_u(flat_a, flat_b).p_two_sided == doctest::Approx(1.0));

  // U counts from either side always sum to n_a * n_b
  auto ab = mann_whitney_u(lo, hi);
  auto ba = mann_whitney_u(hi, lo);
  CHECK(ab.u + ba.u == doctest::Approx(25.0 * 25.0));
}

TEST_CASE("cliffs delta: examples, antisymmetry, magnitude labels") {
  auto sep = cliffs_delta(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6});
  CHECK(sep.delta == doctest::Approx(-1.0));
  CHECK(sep.magnitude == EffectMagnitude::large);

  auto same = cliffs_delta(std::vector<double>{7, 7}, std::vector<double>{7, 7, 7});
  CHECK(same.delta == doctest::Approx(0.0));
  CHECK(same.magnitude == EffectMagnitude::negligible);

  auto mixed = cliffs_delta(std::vector<double>{1, 2}, std::vector<double>{1, 3});
  CHECK(mixed.delta == doctest::Approx(-0.25));
  CHECK(mixed.magnitude == EffectMagnitude::small);

  std::mt19937_64 rng(13);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(3 + rng() % 5), b(3 + rng() % 5);
    for (auto& x : a) x = static_cast<double>(rng() % 6);
    for (auto& x : b) x = static_cast<double>(rng() % 6);
    CHECK(cliffs_delta(a, b).delta == doctest::Approx(-cliffs_delta(b, a).delta));
  }

  // magnitude thresholds at |delta| = 0.147 / 0.33 / 0.474
  auto with_delta = [](double target) {
    // n values against one midpoint: delta = (wins - losses) / n
    std::vector<double> a;
    const int n = 1000;
    const int wins = static_cast<int>(std::lround((target + 1.0) / 2.0 * n));
    for (int i = 0; i < n; ++i) a.push_back(i < wins ? 2.0 : 0.0);
    return cliffs_delta(a, std::vector<double>{1.0});
  };
  CHECK(with_delta(0.10).magnitude == EffectMagnitude::negligible);
  CHECK(with_delta(0.20).magnitude == EffectMagnitude::small);
  CHECK(with_delta(0.40).magnitude == EffectMagnitude::medium);
  CHECK(with_delta(0.60).magnitude == EffectMagnitude::large);

  CHECK(std::string(to_string(EffectMagnitude::negligible)) == "negligible");
  CHECK(std::string(to_string(EffectMagnitude::small)) == "small");
  CHECK(std::string(to_string(EffectMagnitude::medium)) == "medium");
  CHECK(std::string(to_string(EffectMagnitude::large)) == "large");
}
