#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flexweld/dimension.hpp"

using namespace flexweld;

namespace {

bool inside_some_anchor(const SAdditiveLayout& lay, const GridSquare& q) {
  for (const complexd& a : lay.anchors) {
    if (q.lo.real() >= a.real() - 1e-12 && q.lo.imag() >= a.imag() - 1e-12 &&
        q.lo.real() + q.side <= a.real() + 0.2 + 1e-12 &&
        q.lo.imag() + q.side <= a.imag() + 0.2 + 1e-12)
      return true;
  }
  return false;
}

std::vector<GridSquare> rect_to_squares(const std::array<double, 4>& r,
                                        double h) {
  std::vector<GridSquare> out;
  for (double x = r[0]; x < r[2]; x += h)
    for (double y = r[1]; y < r[3]; y += h)
      out.push_back({complexd(x, y), std::min(h, r[2] - x)});
  return out;
}

}  // namespace

TEST_CASE("layout identity and feasibility are exact") {
  for (double s : {1.2, 1.5, 1.8}) {
    CAPTURE(s);
    auto lay = s_additive_squares(s, 32);
    CHECK(lay.n >= 32);
    double ident = 4.0 * lay.n * std::pow(std::sqrt(2.0) * lay.x, s);
    CHECK(std::abs(ident - 1.0) <= 1e-12);
    CHECK(lay.n * lay.x * lay.x <= 1.0 / 25.0);
    CHECK(lay.placements.size() == 4u * lay.n);
    for (const auto& q : lay.placements) CHECK(inside_some_anchor(lay, q));
  }
}

TEST_CASE("placements have disjoint interiors and banded neighbor distance") {
  for (double s : {1.2, 1.5}) {
    CAPTURE(s);
    auto lay = s_additive_squares(s, 32);
    double mind = 1e30;
    for (size_t i = 0; i < lay.placements.size(); ++i)
      for (size_t j = i + 1; j < lay.placements.size(); ++j) {
        const auto &a = lay.placements[i], &b = lay.placements[j];
        bool overlap = a.lo.real() < b.lo.real() + b.side &&
                       b.lo.real() < a.lo.real() + a.side &&
                       a.lo.imag() < b.lo.imag() + b.side &&
                       b.lo.imag() < a.lo.imag() + a.side;
        CHECK(!overlap);
        mind = std::min(mind, std::abs(a.lo - b.lo));
      }
    double band = std::pow(lay.x, s / 2.0);
    CHECK(mind >= band / 4.0);
    CHECK(mind <= 4.0 * band);
  }
}

TEST_CASE("n selection: forced minimum and infeasible small n") {
  auto lay = s_additive_squares(1.5, 150);
  CHECK(lay.n == 150);
  CHECK(lay.x == doctest::Approx(0.009939).epsilon(1e-3));
  // n = 1 gives x ~ 0.28 with n x^2 ~ 0.079 > 1/25, so it must be rejected.
  CHECK(s_additive_squares(1.5, 1).n > 1);
  CHECK_THROWS(s_additive_squares(1.0, 32));
  CHECK_THROWS(s_additive_squares(2.0, 32));
  CHECK_THROWS(s_additive_squares(1.5, 0));
}

TEST_CASE("layouts are deterministic per seed") {
  auto a = s_additive_squares(1.5, 32, 5);
  auto b = s_additive_squares(1.5, 32, 5);
  auto c = s_additive_squares(1.5, 32, 6);
  REQUIRE(a.placements.size() == b.placements.size());
  bool all_equal = true, any_diff = false;
  for (size_t i = 0; i < a.placements.size(); ++i) {
    if (a.placements[i].lo != b.placements[i].lo) all_equal = false;
    if (a.placements[i].lo != c.placements[i].lo) any_diff = true;
  }
  CHECK(all_equal);
  CHECK(any_diff);  // jitter responds to the seed
}

TEST_CASE("separation check: bounded ratio, non-growing envelope") {
  for (double s : {1.2, 1.5, 1.8}) {
    CAPTURE(s);
    auto lay = s_additive_squares(s, 32);
    auto rep = separation_check(lay, 1000, 7);
    CHECK(rep.pass);
    CHECK(rep.ratio_slope <= 0.05);
    CHECK(rep.max_ratio <= rep.fitted_const + 1e-12);
    CHECK(rep.max_ratio < 30.0);
    CHECK(rep.sigma_slope >= 1.2);
    CHECK(rep.sigma_slope <= 2.1);
  }
}

TEST_CASE("mattila tree: conditions hold at depth 0 and beyond") {
  auto t0 = mattila_build(1.5, 0, 2);
  CHECK(t0.levels.size() == 1);
  CHECK(t0.levels[0].size() == 1);

  auto t = mattila_build(1.5, 3, 2);
  CHECK(t.containment);
  CHECK(t.decreasing);
  CHECK(t.additivity_dev <= 1e-9);
  // Explicit additivity at the root from materialized child diameters.
  double sum = 0.0;
  for (const auto& q : t.levels[1])
    sum += std::pow(std::sqrt(2.0) * q.side, 1.5);
  CHECK(sum == doctest::Approx(std::pow(std::sqrt(2.0), 1.5)).epsilon(1e-9));
  // Level max diameters strictly decreasing at the fixed per-level ratio.
  for (size_t k = 1; k < t.level_diameter.size(); ++k) {
    CHECK(t.level_diameter[k] < t.level_diameter[k - 1]);
    CHECK(t.level_diameter[k] / t.level_diameter[k - 1] ==
          doctest::Approx(t.ratio).epsilon(1e-12));
  }
  // Children lie inside their own parent square.
  int branch = t.branching;
  for (size_t i = 0; i < t.levels[2].size(); ++i) {
    const auto& child = t.levels[2][i];
    const auto& par = t.levels[1][i / branch];
    CHECK(child.lo.real() >= par.lo.real() - 1e-12);
    CHECK(child.lo.imag() >= par.lo.imag() - 1e-12);
    CHECK(child.lo.real() + child.side <= par.lo.real() + par.side + 1e-12);
    CHECK(child.lo.imag() + child.side <= par.lo.imag() + par.side + 1e-12);
  }
  CHECK_THROWS(mattila_build(1.5, 6, 2));
}

TEST_CASE("natural measure conserves mass and follows the gauge") {
  auto t = mattila_build(1.5, 4, 2);
  auto mu = natural_measure(t);
  CHECK(mu.level_mass[0] == doctest::Approx(1.0));
  CHECK(mu.branch_mass * t.branching == doctest::Approx(1.0).epsilon(1e-12));
  for (int k = 1; k <= t.depth; ++k) {
    // Conservation along every root-to-leaf path.
    CHECK(mu.level_mass[k] * t.branching ==
          doctest::Approx(mu.level_mass[k - 1]).epsilon(1e-12));
    // Leaf mass proportional to d^s.
    double gauge = std::pow(t.level_diameter[k] / t.level_diameter[0], mu.s);
    CHECK(mu.level_mass[k] == doctest::Approx(gauge).epsilon(1e-9));
  }
}

TEST_CASE("frostman check: sup mu(D)/r^s stable across scales") {
  auto t = mattila_build(1.5, 3, 2);
  auto mu = natural_measure(t);
  auto rep = frostman_check(t, mu, 80, 11);
  REQUIRE(rep.scale.size() >= 3);
  CHECK(rep.pass);
  CHECK(rep.max_adjacent_ratio <= 2.0);
  for (double v : rep.sup_ratio) {
    CHECK(v > 0.0);
    CHECK(v < 50.0);
  }
}

TEST_CASE("box dimension of known sets") {
  std::vector<complexd> seg, fill;
  for (int i = 0; i < 10000; ++i) seg.push_back(complexd(i / 9999.0, 0.0));
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j) fill.push_back(complexd(i / 100.0, j / 100.0));
  std::vector<double> scales = {0.2, 0.1, 0.05, 0.025};
  auto b1 = box_dim(seg, {0.1, 0.05, 0.025, 0.0125, 0.00625});
  CHECK(std::abs(b1.estimate - 1.0) <= 0.05);
  auto b2 = box_dim(fill, scales);
  CHECK(std::abs(b2.estimate - 2.0) <= 0.05);
  CHECK(b2.fit_r2 >= 0.98);
  CHECK_THROWS(box_dim(seg, {0.1, 0.05}));  // fewer than 4 scales
}

TEST_CASE("depth-4 trees have box dimension s") {
  for (double s : {1.2, 1.5, 1.8}) {
    CAPTURE(s);
    auto t = mattila_build(s, 4, 2);
    auto bd = tree_box_dim(t);
    CHECK(std::abs(bd.estimate - s) <= 0.1);
    CHECK(bd.fit_r2 >= 0.98);
  }
}

TEST_CASE("connect_squares: corridors, covering budget, shape") {
  std::vector<GridSquare> sq = {{complexd(0.15, 0.40), 0.1},
                                {complexd(0.45, 0.62), 0.1},
                                {complexd(0.72, 0.35), 0.1}};
  auto c = connect_squares(1.0, sq, 1.5, 1e-3);
  CHECK(c.covering_cost <= 1e-3);
  CHECK(c.corridors.size() == sq.size());  // joins + exit stub
  CHECK(!c.covering.empty());
  CHECK(c.shape.R > c.shape.T);
  // Each corridor (union of its rectangles) meets one or two squares.
  for (const auto& corr : c.corridors) {
    int met = 0;
    for (const auto& q : sq) {
      bool touch = false;
      for (const auto& r : corr)
        touch = touch || (r[0] <= q.lo.real() + q.side + 1e-12 &&
                          q.lo.real() <= r[2] + 1e-12 &&
                          r[1] <= q.lo.imag() + q.side + 1e-12 &&
                          q.lo.imag() <= r[3] + 1e-12);
      if (touch) ++met;
    }
    CHECK(met >= 1);
    CHECK(met <= 2);
  }
}

TEST_CASE("connect_squares: halved width scales the cost by 2^{s-1}") {
  std::vector<GridSquare> sq = {{complexd(0.2, 0.45), 0.1},
                                {complexd(0.6, 0.45), 0.1}};
  double s = 1.5;
  auto c1 = connect_squares(1.0, sq, s, 10.0, 0.01);
  auto c2 = connect_squares(1.0, sq, s, 10.0, 0.005);
  CHECK(c1.corridors.size() == 2);  // one joining corridor + exit stub
  double ratio = c2.covering_cost / c1.covering_cost;
  CHECK(ratio == doctest::Approx(std::pow(2.0, 1.0 - s)).epsilon(0.1));
}

TEST_CASE("connect_squares: corridors are dimension-negligible") {
  std::vector<GridSquare> sq = {{complexd(0.15, 0.40), 0.1},
                                {complexd(0.45, 0.62), 0.1},
                                {complexd(0.72, 0.35), 0.1}};
  auto c = connect_squares(1.0, sq, 1.5, 10.0, 0.005);
  std::vector<double> scales = {0.1, 0.05, 0.025, 0.0125};
  auto base = box_dim(sq, scales);
  std::vector<GridSquare> with = sq;
  for (const auto& corr : c.corridors)
    for (const auto& r : corr)
      for (const auto& piece : rect_to_squares(r, c.width)) with.push_back(piece);
  auto aug = box_dim(with, scales);
  CHECK(aug.estimate - base.estimate <= 0.05);
}

TEST_CASE("connect_squares rejects bad input") {
  std::vector<GridSquare> overlap = {{complexd(0.2, 0.4), 0.2},
                                     {complexd(0.3, 0.7), 0.2}};
  CHECK_THROWS_AS(connect_squares(1.0, overlap, 1.5, 1e-3), std::runtime_error);
  std::vector<GridSquare> one = {{complexd(0.2, 0.4), 0.2}};
  CHECK_THROWS(connect_squares(1.0, one, 1.5, 1e-3));
  std::vector<GridSquare> touch = {{complexd(0.2, 0.4), 0.1},
                                   {complexd(0.9, 0.4), 0.1}};
  CHECK_THROWS(connect_squares(1.0, touch, 1.5, 1e-3));  // touches x = T
}
