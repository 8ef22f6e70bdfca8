#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flexweld/modulus.hpp"

using namespace flexweld;

namespace {

MarkedQuadrilateral rect_quad(double w, double h, complexd org = {0, 0}) {
  Polyline p{{org, org + complexd(w, 0), org + complexd(w, h), org + complexd(0, h)},
             true};
  return {p, {0, 1, 2, 3}};
}

Polyline circle(double R, int n, complexd c = {0, 0}) {
  Polyline p;
  p.closed = true;
  for (int i = 0; i < n; ++i) {
    double t = 2 * M_PI * i / n;
    p.vertices.push_back(c + complexd(R * std::cos(t), R * std::sin(t)));
  }
  return p;
}

}  // namespace

TEST_CASE("rectangle moduli") {
  CHECK(quad_modulus(rect_quad(1, 1)).modulus == doctest::Approx(1.0).epsilon(0.005));
  CHECK(quad_modulus(rect_quad(3, 1)).modulus == doctest::Approx(3.0).epsilon(0.005));
}

TEST_CASE("modulus is rigid-motion and scale invariant") {
  double base = quad_modulus(rect_quad(2, 1)).modulus;
  // Translated.
  CHECK(quad_modulus(rect_quad(2, 1, {5, -3})).modulus ==
        doctest::Approx(base).epsilon(0.005));
  // Rotated by 30 degrees and scaled by 2.5.
  complexd rot = 2.5 * std::polar(1.0, M_PI / 6);
  Polyline p;
  p.closed = true;
  for (const auto& z : rect_quad(2, 1).boundary.vertices) p.vertices.push_back(rot * z);
  CHECK(quad_modulus({p, {0, 1, 2, 3}}).modulus == doctest::Approx(base).epsilon(0.005));
}

TEST_CASE("reciprocity under marking swap") {
  for (double w : {2.0, 3.0}) {
    auto q = rect_quad(w, 1);
    double M = quad_modulus(q).modulus;
    MarkedQuadrilateral swapped = q;
    swapped.vertex_indices = {1, 2, 3, 0};
    double Ms = quad_modulus(swapped).modulus;
    CHECK(M * Ms == doctest::Approx(1.0).epsilon(0.01));
  }
}

TEST_CASE("L-shaped hexagon matches the frozen fine-mesh oracle") {
  // Frozen oracle: target_divisions=48 graded run gives 0.577377.
  Polyline L{{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}, true};
  MarkedQuadrilateral q{L, {0, 1, 4, 5}};
  CHECK(quad_modulus(q).modulus == doctest::Approx(0.577377).epsilon(0.01));
}

TEST_CASE("modulus monotone when the quadrilateral is enlarged along b-sides") {
  double m3 = quad_modulus(rect_quad(3, 1)).modulus;
  double m4 = quad_modulus(rect_quad(4, 1)).modulus;
  double m5 = quad_modulus(rect_quad(5, 1)).modulus;
  CHECK(m4 >= m3 - 0.005);
  CHECK(m5 >= m4 - 0.005);
}

TEST_CASE("degenerate markings rejected") {
  Polyline p{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}, true};
  MarkedQuadrilateral q{p, {0, 0, 2, 3}};
  CHECK_THROWS(quad_modulus(q));
  Polyline bow{{{0, 0}, {1, 1}, {1, 0}, {0, 1}}, true};
  CHECK_THROWS(quad_modulus({bow, {0, 1, 2, 3}}));
}

TEST_CASE("quad uniformization of rectangles is the identity") {
  auto qu = quad_uniformize(rect_quad(3, 1));
  CHECK(qu.modulus == doctest::Approx(3.0).epsilon(0.005));
  CHECK(qu.conj_residual < 0.01);
  double worst = 0;
  for (double x : {0.3, 1.5, 2.7})
    for (double y : {0.2, 0.5, 0.8}) {
      complexd w;
      REQUIRE(qu.to_rect({x, y}, &w));
      worst = std::max(worst, std::abs(w - complexd(x, y)));
    }
  CHECK(worst <= 1e-3);
  // Round trip through the inverse.
  complexd z;
  REQUIRE(qu.from_rect({1.5, 0.5}, &z));
  CHECK(std::abs(z - complexd(1.5, 0.5)) <= 2e-3);
}

TEST_CASE("uniformization undoes a rotation") {
  complexd rot = std::polar(1.0, M_PI / 4);
  Polyline p;
  p.closed = true;
  for (const auto& z : rect_quad(1, 1).boundary.vertices) p.vertices.push_back(rot * z);
  auto qu = quad_uniformize({p, {0, 1, 2, 3}});
  double worst = 0;
  for (double x : {0.25, 0.5, 0.75})
    for (double y : {0.25, 0.5, 0.75}) {
      complexd w;
      REQUIRE(qu.to_rect(rot * complexd(x, y), &w));
      worst = std::max(worst, std::abs(w - complexd(x, y)));
    }
  CHECK(worst <= 2e-3);
}

TEST_CASE("annular sector agrees with the logarithm map") {
  // Sector 1 <= r <= R, 0 <= theta <= alpha; modulus of the arc-joining
  // family is alpha / log R.
  double R = 2.2, alpha = 1.1;
  int n = 48;
  Polyline p;
  p.closed = true;
  std::vector<int> marks;
  marks.push_back(0);
  for (int i = 0; i <= n; ++i)  // inner arc, a1
    p.vertices.push_back(std::polar(1.0, alpha * i / n));
  marks.push_back(static_cast<int>(p.vertices.size()) - 1);
  p.vertices.push_back(std::polar(R, alpha));  // radial side b1
  marks.push_back(static_cast<int>(p.vertices.size()) - 1);
  for (int i = n - 1; i >= 0; --i)  // outer arc, a2 (reversed)
    p.vertices.push_back(std::polar(R, alpha * i / n));
  marks.push_back(static_cast<int>(p.vertices.size()) - 1);
  MarkedQuadrilateral q{p, {marks[0], marks[1], marks[2], marks[3]}};
  CHECK(quad_modulus(q).modulus == doctest::Approx(alpha / std::log(R)).epsilon(0.01));
}

TEST_CASE("annulus modulus formula") {
  CHECK(annulus_modulus(circle(1.0, 128), circle(2.0, 192)).modulus ==
        doctest::Approx(std::log(2.0) / (2 * M_PI)).epsilon(0.005));
  CHECK(annulus_modulus(circle(1.0, 128), circle(std::exp(1.0), 192)).modulus ==
        doctest::Approx(1.0 / (2 * M_PI)).epsilon(0.005));
  CHECK(annulus_modulus(circle(1.0, 128), circle(10.0, 256)).modulus ==
        doctest::Approx(std::log(10.0) / (2 * M_PI)).epsilon(0.005));
}

TEST_CASE("annulus rejects bad nesting") {
  CHECK_THROWS(annulus_modulus(circle(1.0, 64), circle(1.0, 64)));
  CHECK_THROWS(annulus_modulus(circle(2.0, 64), circle(1.0, 64)));
  CHECK_THROWS(annulus_modulus(circle(1.0, 64, {1.5, 0}), circle(2.0, 64)));
}

TEST_CASE("rectangle harmonic measure bounds and monotonicity") {
  double prev = 1e300;
  for (double L : {1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0}) {
    double w = rect_harmonic_measure(L);
    CHECK(w < prev);
    prev = w;
    if (L >= 2.0 && (L == 2.0 || L == 3.0 || L == 4.0)) {
      double lo = std::exp(-M_PI * L / 2);
      CHECK(w >= lo);
      CHECK(w <= 8.0 / M_PI * lo);
    }
  }
  CHECK_THROWS(rect_harmonic_measure(0.0));
}

TEST_CASE("left and right end measures agree by symmetry") {
  // One-end problems on the structured rectangle mesh, L = 2.
  double L = 2.0;
  int ny = 32, nx = 2 * static_cast<int>(L) * ny / 2 * 2;
  Mesh m;
  auto idx = [&](int i, int j) { return i * (ny + 1) + j; };
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j)
      m.p.emplace_back(-L + 2 * L * i / nx, -1.0 + 2.0 * j / ny);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      m.tri.push_back({idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)});
      m.tri.push_back({idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)});
    }
  for (int i = 0; i < nx; ++i) {
    m.bedge[std::minmax(idx(i, 0), idx(i + 1, 0))] = 0;
    m.bedge[std::minmax(idx(i, ny), idx(i + 1, ny))] = 0;
  }
  for (int j = 0; j < ny; ++j) {
    m.bedge[std::minmax(idx(0, j), idx(0, j + 1))] = 1;       // left end
    m.bedge[std::minmax(idx(nx, j), idx(nx, j + 1))] = 2;     // right end
  }
  double wl = solve_laplace(m, {{0, 0.0}, {1, 1.0}}).u[idx(nx / 2, ny / 2)];
  double wr = solve_laplace(m, {{0, 0.0}, {2, 1.0}}).u[idx(nx / 2, ny / 2)];
  CHECK(std::abs(wl - wr) <= 1e-6);
}

TEST_CASE("serial and parallel rules") {
  auto rep = modulus_rules_check(1234);
  CHECK(rep.serial_equality_dev <= 0.01);
  CHECK(rep.serial_wiggly_margin > 0.0);
  CHECK(rep.parallel_margin >= -0.01);
  CHECK(rep.pass);
}
