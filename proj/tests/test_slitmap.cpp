#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flexweld/slitmap.hpp"

using namespace flexweld;

namespace {

SlitMapConfig cfg_for(int N) {
  SlitMapConfig cfg;
  cfg.N = N;
  cfg.A = N + 1.0;
  cfg.M = N;
  cfg.delta = 0.002;
  cfg.samples = 16 * N;
  return cfg;
}

const SlitDomain& domain16() {
  static SlitDomain sd = [] {
    auto cfg = cfg_for(16);
    return slit_map(build_E(cfg.N, cfg.A), cfg);
  }();
  return sd;
}

const SlitDomain& domain32() {
  static SlitDomain sd = [] {
    auto cfg = cfg_for(32);
    return slit_map(build_E(cfg.N, cfg.A), cfg);
  }();
  return sd;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_THROWS(cfg_for(4).validate());
  auto bad = cfg_for(16);
  bad.A = 15.0;
  CHECK_THROWS(bad.validate());
  bad = cfg_for(16);
  bad.delta = 0.2;
  CHECK_THROWS(bad.validate());
  bad = cfg_for(16);
  bad.M = 1;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("build_E places one arc per partition interval") {
  ArcSet E = build_E(8, 9.0);
  REQUIRE(E.arcs().size() == 8);
  for (int k = 0; k < 8; ++k) {
    double m = E.arcs()[k].midpoint().theta;
    CHECK(m >= kTwoPi * k / 8);
    CHECK(m < kTwoPi * (k + 1) / 8);
  }
}

TEST_CASE("build_E hits the induced capacity target") {
  int N = 16;
  double A = 17.0;
  ArcSet E = build_E(N, A);
  double target = std::exp(-(A - std::log(N)) / N);
  CHECK(capacity(E).capacity == doctest::Approx(target).epsilon(0.05));
}

TEST_CASE("build_E total length decreases in the Robin target") {
  double prev = 1e300;
  for (double A : {17.0, 18.0, 19.0, 20.0, 21.0}) {
    double len = build_E(16, A).total_length();
    CHECK(len < prev);
    prev = len;
  }
}

TEST_CASE("build_E rejects infeasible targets") {
  CHECK_THROWS(build_E(8, 0.1));   // below log N: capacity target above 1
  CHECK_THROWS(build_E(4, 10.0));  // N too small
}

TEST_CASE("symmetric input gives a rotationally symmetric slit domain") {
  const SlitDomain& sd = domain16();
  REQUIRE(sd.slits.size() == 16);
  double r0 = std::abs(sd.tips[0]);
  for (int k = 0; k < 16; ++k) {
    CHECK(std::abs(sd.tips[k]) == doctest::Approx(r0).epsilon(1e-6));
    // Slit angles on the uniform grid at multiples of 2*pi/N.
    double want = kTwoPi * ((k + 1) % 16) / 16;
    double d = std::abs(Angle(sd.slit_angles[k] - want).theta);
    CHECK(std::min(d, kTwoPi - d) <= 1e-6);
  }
}

TEST_CASE("calibration points map to themselves in argument") {
  const SlitDomain& sd = domain16();
  for (const Arc& a : sd.E.arcs()) {
    double c = a.midpoint().theta;
    auto [r, ang] = sd.boundary_polar(c);
    CHECK(std::abs(std::polar(1.0, ang) - std::polar(1.0, c)) <= 1e-6);
  }
}

TEST_CASE("accumulated argument is monotone with total increase 2*pi") {
  const SlitDomain& sd = domain16();
  double prev = -1e300, first = 0, last = 0;
  for (size_t i = 0; i < sd.boundary_map.size(); ++i) {
    // Recover the accumulated value through the generating rule.
    double ang = sd.boundary_polar(sd.boundary_map[i].first.theta).second;
    CHECK(ang >= prev - 1e-12);
    if (i == 0) first = ang;
    last = ang;
    prev = ang;
  }
  double span = sd.boundary_map.back().first.theta - sd.boundary_map.front().first.theta;
  CHECK(last - first == doctest::Approx(span).epsilon(0.05));
}

TEST_CASE("gaps map to constant-argument radial slits") {
  const SlitDomain& sd = domain16();
  const auto& arcs = sd.E.arcs();
  for (int k = 0; k < 3; ++k) {
    double glo = arcs[k].hi.theta, ghi = arcs[k + 1].lo.theta;
    double a0 = sd.boundary_polar(glo + 0.2 * (ghi - glo)).second;
    double a1 = sd.boundary_polar(glo + 0.55 * (ghi - glo)).second;
    double a2 = sd.boundary_polar(glo + 0.9 * (ghi - glo)).second;
    CHECK(std::abs(a1 - a0) <= 1e-6);
    CHECK(std::abs(a2 - a0) <= 1e-6);
  }
}

TEST_CASE("U is continuous across the circle") {
  const SlitDomain& sd = domain16();
  for (double theta : {0.3, 1.7, 4.0}) {
    double on = 2.0 * potential_G(sd.mu, std::polar(1.0, theta));
    double in = potential_U(sd.mu, std::polar(1.0 - 1e-4, theta));
    double out_v = potential_U(sd.mu, std::polar(1.0 + 1e-4, theta));
    CHECK(std::abs(in - on) <= 2e-3);
    CHECK(std::abs(out_v - on) <= 2e-3);
  }
}

TEST_CASE("disk sandwich holds with one fitted constant") {
  // Fit c as the smallest constant covering both N=16 and N=32, then check
  // the two-sided band with that single value.
  auto c_needed = [](const SlitDomain& sd) {
    double worst = 0;
    int N = sd.cfg.N;
    for (const auto& [th, w] : sd.boundary_map)
      if (sd.E.contains(th))
        worst = std::max(worst, std::abs(std::log(std::abs(w)) - sd.cfg.A / N) * N /
                                    std::log(static_cast<double>(N)));
    return worst;
  };
  double c = std::max(c_needed(domain16()), c_needed(domain32())) * 1.05;
  CHECK(c > 0);
  CHECK(c < 50.0);
  for (const SlitDomain* sd : {&domain16(), &domain32()}) {
    int N = sd->cfg.N;
    double half = c * std::log(static_cast<double>(N)) / N;
    double lo = std::exp(sd->cfg.A / N - half), hi = std::exp(sd->cfg.A / N + half);
    for (const auto& [th, w] : sd->boundary_map)
      if (sd->E.contains(th)) {
        CHECK(std::abs(w) >= lo);
        CHECK(std::abs(w) <= hi);
      }
  }
}

TEST_CASE("interior map fixes 0 and approaches the identity on compacts") {
  auto dev = [](const SlitDomain& sd) {
    double worst = 0;
    for (int i = 0; i < 64; ++i) {
      complexd z = std::polar(0.5 * (i % 8 + 1) / 8.0, kTwoPi * i / 64.0);
      worst = std::max(worst, std::abs(sd.interior(z) - z));
    }
    return worst;
  };
  CHECK(std::abs(domain16().interior(complexd(0.0, 0.0))) <= 1e-12);
  double d16 = dev(domain16()), d32 = dev(domain32());
  CHECK(d32 < d16);
  CHECK(d16 < 0.05);
}

TEST_CASE("marked tips sit near roots of unity") {
  SlitDomain sd = domain16();
  auto tips = marked_tips(sd, 16, 0.095);
  REQUIRE(tips.size() == 16);
  for (int k = 0; k < 16; ++k)
    CHECK(std::abs(tips[k] - std::polar(1.0, kTwoPi * k / 16)) <= 0.095);
  CHECK_THROWS(marked_tips(sd, 17, 0.095));
  CHECK_THROWS(marked_tips(sd, 16, 1e-6));
}

TEST_CASE("sector quadrilaterals: symmetry and modulus band") {
  SlitDomain sd = domain16();
  CHECK_THROWS(sector_quads(sd));  // marked tips not computed yet
  marked_tips(sd, 16, 0.095);
  auto secs = sector_quads(sd);
  REQUIRE(secs.size() == 16);
  double m0 = secs[0].modulus;
  for (const auto& s : secs) {
    CHECK(s.modulus == doctest::Approx(m0).epsilon(0.01));
    CHECK(s.ratio >= 0.5);
    CHECK(s.ratio <= 2.0);
  }
}
