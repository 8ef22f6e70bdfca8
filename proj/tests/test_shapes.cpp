#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flexweld/shapes.hpp"

using namespace flexweld;

namespace {

constexpr double kPi = 3.14159265358979323846;

Polyline line(std::initializer_list<complexd> pts) {
  Polyline p;
  p.vertices = pts;
  return p;
}

// Region with two triangular notches pinching toward each other at mid-span,
// leaving a vertical gap of width w.
ShapeSpec pinched(double T, double w) {
  double c = T / 2;
  Polyline g1 = line({{0, 0}, {c - 0.5, 0}, {c, 0.5 - w / 2}, {c + 0.5, 0}, {T, 0}});
  Polyline g2 = line({{0, 1}, {c - 0.5, 1}, {c, 0.5 + w / 2}, {c + 0.5, 1}, {T, 1}});
  return shape_from_paths(T, g1, g2);
}

std::vector<double> identity_samples(int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = i / (n - 1.0);
  return g;
}

}  // namespace

TEST_CASE("full rectangle returns R = T") {
  double T = 6.0;
  ShapeSpec s = shape_from_paths(T, line({{0, 0}, {T, 0}}), line({{0, 1}, {T, 1}}));
  CHECK(s.R == doctest::Approx(T).epsilon(0.005));
  CHECK(leftover_percentage(s) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("halving the pinch gap strictly increases R") {
  double r1 = pinched(6.0, 0.5).R;
  double r2 = pinched(6.0, 0.25).R;
  double r3 = pinched(6.0, 0.125).R;
  CHECK(r2 > r1);
  CHECK(r3 > r2);
  CHECK(r1 > 6.0);
}

TEST_CASE("path validation rejects bad inputs") {
  double T = 4.0;
  // Intersecting paths.
  CHECK_THROWS(shape_from_paths(T, line({{0, 0}, {2, 0.8}, {T, 0.2}}),
                                line({{0, 1}, {2, 0.2}, {T, 0.8}})));
  // Non-simple gamma1.
  CHECK_THROWS(shape_from_paths(
      T, line({{0, 0}, {3, 0.5}, {1, 0.5}, {2, 0.0}, {T, 0}}),
      line({{0, 1}, {T, 1}})));
  // Wrong endpoint edge.
  CHECK_THROWS(shape_from_paths(T, line({{0, 0}, {3, 0}}), line({{0, 1}, {T, 1}})));
  // Im p1 >= Im p2.
  CHECK_THROWS(shape_from_paths(T, line({{0, 0}, {T, 0.8}}), line({{0, 1}, {T, 0.2}})));
}

TEST_CASE("strip interpolation: identity data gives zero dilatation") {
  auto g = identity_samples(33);
  StripInterp s = strip_interpolation(4.0, 4.0, g, g);
  CHECK(s.sup_mu <= 1e-14);
  // Boundary matching at x = 1 and x = M.
  CHECK(s.value[10 * s.nx].real() == doctest::Approx(1.0));
  CHECK(s.value[10 * s.nx + s.nx - 1].real() == doctest::Approx(4.0));
}

TEST_CASE("strip interpolation: modulus perturbation bound") {
  auto g = identity_samples(33);
  double M = 5.0;
  StripInterp s = strip_interpolation(M, M + 0.01, g, g);
  CHECK(s.sup_mu <= 2 * 0.01 / (M - 1) + 1e-12);
  CHECK(s.sup_mu > 0);
}

TEST_CASE("strip interpolation rejects bad input") {
  auto g = identity_samples(9);
  CHECK_THROWS(strip_interpolation(1.0, 1.0, g, g));
  auto bad = g;
  bad[4] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(strip_interpolation(3.0, 3.0, g, bad));
  CHECK_THROWS(strip_interpolation(3.0, 3.0, g, identity_samples(8)));
}

TEST_CASE("strip interpolation preserves mirror symmetry") {
  int n = 33;
  std::vector<double> g0(n), g1(n);
  for (int i = 0; i < n; ++i) {
    double t = i / (n - 1.0);
    g0[i] = t + 0.01 * std::sin(2 * kPi * t);  // odd around t = 1/2
    g1[i] = t + 0.03 * std::sin(2 * kPi * t);
  }
  StripInterp s = strip_interpolation(3.0, 3.02, g0, g1);
  for (int iy = 0; iy < s.ny; ++iy)
    for (int ix = 0; ix < s.nx; ++ix) {
      complexd a = s.mu[iy * s.nx + ix];
      complexd b = s.mu[(s.ny - 1 - iy) * s.nx + ix];
      CHECK(std::abs(b - std::conj(a)) <= 1e-12);
    }
}

TEST_CASE("leftover percentage by exact polygon area") {
  double T = 6.0;
  // Top notch occupying half the height over [0.5, T].
  ShapeSpec s = shape_from_paths(
      T, line({{0, 0}, {T, 0}}),
      line({{0, 1}, {0.5, 1}, {0.5, 0.5}, {T, 0.5}}));
  double expect = 0.5 * (T - 0.5) / T;
  CHECK(leftover_percentage(s) == doctest::Approx(expect).epsilon(1e-9));
  CHECK(leftover_percentage(s) < 1.0);
}

TEST_CASE("M_for_eps thresholds") {
  CHECK(M_for_eps(0.3) == 2);   // log(1/0.3)=1.20 < pi/2
  CHECK(M_for_eps(0.03) == 3);  // 3.51 between pi/2 and pi+log 2
  CHECK(M_for_eps(0.009) == 4);
  CHECK_THROWS(M_for_eps(0.0));
  CHECK_THROWS(M_for_eps(1.5));
}

TEST_CASE("shape_with_leftover hits the target") {
  ShapeSpec s = shape_with_leftover(0.03, 0.5, 25.0);  // minimal T is 24
  CHECK(std::abs(leftover_percentage(s) - 0.5) <= 1e-3);
  CHECK(s.R > s.T);
}

TEST_CASE("shape_with_leftover: small leftover approaches the rectangle") {
  ShapeSpec s = shape_with_leftover(0.03, 0.002, 25.0);
  CHECK(std::abs(leftover_percentage(s) - 0.002) <= 1e-3);
  CHECK(s.R == doctest::Approx(s.T).epsilon(0.005));
}

TEST_CASE("shape_with_leftover reports the minimal feasible T") {
  CHECK(min_feasible_T(0.03, 0.5) == doctest::Approx(24.0));
  bool threw = false;
  try {
    shape_with_leftover(0.03, 0.5, 23.0);
  } catch (const InfeasibleShape& e) {
    threw = true;
    CHECK(e.min_T == doctest::Approx(24.0));
    CHECK(std::string(e.what()).find("24") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("admissibility bound formula on a plain rectangle") {
  double T = 11.0;
  ShapeSpec s = shape_from_paths(T, line({{0, 0}, {T, 0}}), line({{0, 1}, {T, 1}}));
  AdmissibilityReport r = admissibility(s, 5.0);
  CHECK(r.epsilon_bound == doctest::Approx(std::exp(-2 * kPi) / 5).epsilon(1e-9));
  CHECK(r.epsilon_bound == doctest::Approx(0.000374).epsilon(0.01));
  CHECK(r.measured_sup_dilatation < 0.05);
  CHECK(r.support_leakage <= 1e-9);
}

TEST_CASE("admissibility of a comb shape") {
  ShapeSpec s = shape_with_leftover(0.03, 0.25, 17.0);
  MeshOptions opt;
  opt.target_divisions = 16;
  AdmissibilityReport r = admissibility(s, 3.0, opt);
  CHECK(r.corrector_identity_dev <= 1e-3);
  CHECK(r.vertex_fix_dev <= 1e-6);
  CHECK(r.support_leakage <= 1e-9);
  CHECK(r.support_box[1] == doctest::Approx(3.0));
  CHECK(std::abs(r.M_tilde - r.M_used) <= 0.05);
  // Convergence guard: doubling the measurement grid moves the sup by <10%.
  CHECK(std::abs(r.refined_sup_dilatation - r.measured_sup_dilatation) <=
        0.1 * std::max(r.measured_sup_dilatation, 1e-6));
  // Containment precondition violations.
  CHECK_THROWS(admissibility(s, 8.0));  // teeth enter [0,16]x[0,1]
  CHECK_THROWS(admissibility(s, 9.0));  // 2M >= T
}

TEST_CASE("decay family follows the strip law") {
  AdmissibilityReport anchor;
  {
    MeshOptions opt;
    opt.target_divisions = 16;
    anchor = admissibility(decay_anchor_shape(), 2.0, opt);
  }
  auto fam = dilatation_decay_family(anchor, 3, 8);
  REQUIRE(fam.size() == 6);
  double law = std::exp(-kPi / 2);
  for (size_t i = 1; i < fam.size(); ++i) {
    double ratio = fam[i].sup_mu / fam[i - 1].sup_mu;
    CHECK(std::abs(ratio - law) <= 0.25 * law);
    CHECK(fam[i].sup_mu < fam[i - 1].sup_mu);  // M doubled => sup decreases
  }
  // v_y band with a single constant fitted across the family.
  double C = 0;
  for (const auto& f : fam)
    for (double vy : f.vy)
      C = std::max(C, std::abs(vy - 1.0) * std::exp(kPi * f.M / 2));
  CHECK(C > 0);
  for (const auto& f : fam) {
    double bound = 3 * C * std::exp(-kPi * f.M / 2);
    for (double vy : f.vy) {
      CHECK(vy >= 1 - bound);
      CHECK(vy <= 1 + bound);
    }
  }
}

TEST_CASE("uniform R family: common modulus and preserved leftover") {
  auto [R, specs] = uniform_R_family({25.0, 26.0}, 0.03, 0.3);
  REQUIRE(specs.size() == 2);
  for (const auto& s : specs) {
    CHECK(std::abs(s.R - R) <= 0.01 * R);
    CHECK(std::abs(leftover_percentage(s) - 0.3) <= 5e-3);
  }
  CHECK(std::abs(specs[0].R - specs[1].R) <= 0.01 * R);
}

TEST_CASE("uniform R family: equal lengths need no retuning") {
  auto [R, specs] = uniform_R_family({25.0, 25.0}, 0.03, 0.3);
  CHECK(specs[0].R == doctest::Approx(specs[1].R));
  CHECK(R == doctest::Approx(specs[0].R));
}

TEST_CASE("uniform R family: out-of-reach modulus difference errors") {
  CHECK_THROWS_AS(uniform_R_family({25.0, 30.0}, 0.03, 0.3), std::runtime_error);
}
