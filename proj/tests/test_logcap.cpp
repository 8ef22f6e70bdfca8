#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "flexweld/geom.hpp"
#include "flexweld/logcap.hpp"

using namespace flexweld;

namespace {

// Robin constant of a panel geometry scaled by lambda about the origin.
double gamma_scaled(std::vector<Panel> panels, double lambda) {
  for (auto& p : panels) {
    p.a *= lambda;
    p.b *= lambda;
    p.mid *= lambda;
  }
  return panel_robin_constant(panels);
}

double set_diameter(const std::vector<Panel>& panels) {
  double d = 0;
  for (size_t i = 0; i < panels.size(); ++i)
    for (size_t j = i; j < panels.size(); ++j)
      d = std::max(d, std::abs(panels[i].mid - panels[j].mid));
  return d;
}

}  // namespace

TEST_CASE("capacity of the full circle") {
  auto r = capacity(ArcSet::full_circle());
  CHECK(r.capacity == doctest::Approx(1.0).epsilon(0.01));
  CHECK(r.capacity == doctest::Approx(std::exp(-r.robin)));
}

TEST_CASE("capacity of the half circle matches the frozen oracle") {
  // Frozen fine-discretization oracle (2048 graded panels): 0.70722344.
  auto r = capacity(ArcSet::from_arcs({{Angle(0.0), Angle(M_PI)}}));
  CHECK(r.capacity == doctest::Approx(0.70722344).epsilon(0.01));
}

TEST_CASE("small arc capacity scales nearly linearly") {
  auto c1 = capacity(ArcSet::from_arcs({{Angle(0.0), Angle(0.01)}})).capacity;
  auto c2 = capacity(ArcSet::from_arcs({{Angle(0.0), Angle(0.02)}})).capacity;
  double ratio = c2 / c1;
  CHECK(ratio >= 1.8);
  CHECK(ratio <= 2.2);
}

TEST_CASE("segment capacity |a-b|/4") {
  CHECK(capacity_segment({0, 0}, {1, 0}) == doctest::Approx(0.25).epsilon(0.01));
  CHECK(capacity_segment({0, 0}, {4, 0}) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(capacity_segment({1, 2}, {1 - 3, 2 + 4 * 1.0}) ==
        doctest::Approx(5.0 / 4).epsilon(0.01));
  CHECK_THROWS(capacity_segment({1, 1}, {1, 1}));
}

TEST_CASE("equilibrium measure symmetries") {
  SUBCASE("full circle is uniform") {
    auto mu = equilibrium_measure(ArcSet::full_circle(), 64, 1.0);
    double expect = 1.0 / mu.panels.size();
    for (const auto& p : mu.panels)
      CHECK(p.mass == doctest::Approx(expect).epsilon(1e-6));
  }
  SUBCASE("symmetric arc: reflection symmetry, mass grows to endpoints") {
    ArcSet E = ArcSet::from_arcs({{Angle(-1.0), Angle(1.0)}});
    auto mu = equilibrium_measure(E, 64, 1.0);
    size_t n = mu.panels.size();
    for (size_t i = 0; i < n / 2; ++i)
      CHECK(mu.panels[i].mass ==
            doctest::Approx(mu.panels[n - 1 - i].mass).epsilon(1e-5));
    // Density (mass / panel width) increases toward the endpoint.
    auto density = [&](size_t i) {
      return mu.panels[i].mass / std::abs(mu.panels[i].b - mu.panels[i].a);
    };
    CHECK(density(0) > density(n / 2));
    CHECK(density(n - 1) > density(n / 2));
  }
  SUBCASE("antipodal congruent arcs split mass evenly") {
    ArcSet E = ArcSet::from_arcs(
        {{Angle(-0.5), Angle(0.5)}, {Angle(M_PI - 0.5), Angle(M_PI + 0.5)}});
    auto mu = equilibrium_measure(E, 32, 1.0);
    double first = 0;
    for (const auto& p : mu.panels)
      if (Arc{Angle(-0.5), Angle(0.5)}.contains(Angle(p.theta_mid)))
        first += p.mass;
    CHECK(first == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(mu.total_mass == doctest::Approx(1.0));
  }
  SUBCASE("energy history is non-increasing") {
    std::vector<double> hist;
    equilibrium_measure(ArcSet::from_arcs({{Angle(0.2), Angle(2.2)}}), 48, 1.0,
                        &hist);
    REQUIRE(!hist.empty());
    for (size_t i = 1; i < hist.size(); ++i) CHECK(hist[i] <= hist[i - 1] + 1e-15);
  }
  CHECK_THROWS(equilibrium_measure(ArcSet{}, 16, 1.0));
  CHECK_THROWS(equilibrium_measure(ArcSet::full_circle(), 3, 1.0));
}

TEST_CASE("potential of the uniform circle measure") {
  auto mu = equilibrium_measure(ArcSet::full_circle(), 512, 1.0);
  CHECK(potential_G(mu, {0.5, 0.0}) == doctest::Approx(0.0).epsilon(1e-3));
  CHECK(std::abs(potential_G(mu, {0.5, 0.0})) < 1e-3);
  CHECK(potential_G(mu, {2.0, 0.0}) == doctest::Approx(std::log(0.5)).epsilon(1e-3));
}

TEST_CASE("symmetrized potential U") {
  auto mu = equilibrium_measure(ArcSet::from_arcs({{Angle(0.0), Angle(1.5)}}), 64, 1.0);
  complexd z{0.4, 0.3};
  complexd zr = complexd(1, 0) / std::conj(z);
  CHECK(potential_U(mu, z) == doctest::Approx(potential_U(mu, zr)).epsilon(1e-12));
  complexd on_circle = std::polar(1.0, 2.5);
  CHECK(potential_U(mu, on_circle) ==
        doctest::Approx(2.0 * potential_G(mu, on_circle)).epsilon(1e-9));
  CHECK_THROWS(potential_U(mu, {0.0, 0.0}));
}

TEST_CASE("conjugate increments equal 2 pi mu(I)") {
  int N = 8;
  std::vector<Arc> arcs;
  for (int k = 0; k < N; ++k) {
    double c = kTwoPi * k / N;
    arcs.push_back({Angle(c), Angle(c + 0.3)});
  }
  ArcSet E = ArcSet::from_arcs(arcs);
  auto mu = equilibrium_measure(E, 16, 1.0);
  auto inc = conjugate_increments(mu, E);
  REQUIRE(inc.size() == size_t(N));
  double total = 0;
  for (const auto& [arc, d] : inc) {
    total += d;
    CHECK(d == doctest::Approx(kTwoPi / N).epsilon(1e-3));
  }
  CHECK(total == doctest::Approx(kTwoPi).epsilon(1e-9));
}

TEST_CASE("equilibrium potential is constant on the support") {
  ArcSet E = ArcSet::from_arcs({{Angle(0.3), Angle(1.8)}, {Angle(3.0), Angle(4.0)}});
  auto mu = equilibrium_measure(E, 64, 1.0);
  double wmax = 0;
  for (const auto& p : mu.panels) wmax = std::max(wmax, std::abs(p.b - p.a));
  double tol = 5.0 * wmax * std::log(1.0 / wmax);
  double lo = 1e300, hi = -1e300;
  for (const auto& p : mu.panels) {
    double g = potential_G(mu, p.mid);
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  CHECK(hi - lo <= tol);
}

TEST_CASE("capacity monotone under inclusion") {
  ArcSet small = ArcSet::from_arcs({{Angle(0.5), Angle(1.0)}});
  ArcSet big = ArcSet::from_arcs({{Angle(0.3), Angle(1.4)}, {Angle(3.0), Angle(3.6)}});
  CHECK(capacity(small).capacity <= capacity(big).capacity + 1e-6);
}

TEST_CASE("capacity scales with similarity") {
  auto panels = panelize_arcset(ArcSet::from_arcs({{Angle(0.2), Angle(1.7)}}), 128);
  double g1 = gamma_scaled(panels, 1.0);
  for (double lam : {0.5, 2.0, 3.7}) {
    double g2 = gamma_scaled(panels, lam);
    CHECK(std::exp(-g2) == doctest::Approx(lam * std::exp(-g1)).epsilon(0.01));
  }
}

TEST_CASE("subadditivity of reciprocal Robin constants") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(0.0, kTwoPi), len(0.05, 0.4);
  for (int trial = 0; trial < 15; ++trial) {
    int k = 2 + int(rng() % 3);
    std::vector<Arc> arcs;
    for (int i = 0; i < k; ++i) {
      double lo = pos(rng);
      arcs.push_back({Angle(lo), Angle(lo + len(rng))});
    }
    ArcSet E = ArcSet::from_arcs(arcs);
    auto union_panels = panelize_arcset(E, 96);
    double lam = 1.0 / std::max(1.0, set_diameter(union_panels));
    double gE = gamma_scaled(union_panels, lam);
    double sum_inv = 0;
    for (const auto& a : E.arcs()) {
      auto p = panelize_arcset(ArcSet::from_arcs({a}), 48);
      sum_inv += 1.0 / gamma_scaled(p, lam);
    }
    CHECK(1.0 / gE <= sum_inv + 1e-6);
  }
}

TEST_CASE("log-singular generator produces valid certificates") {
  auto r2 = make_log_singular_homeo(2, 42);
  CHECK(r2.cert.cap_E <= 0.5);
  CHECK(r2.cert.cap_image_complement <= 0.5);
  CHECK(r2.cert.valid());

  double prevE = 1e300, prevI = 1e300;
  for (int level = 1; level <= 6; ++level) {
    auto r = make_log_singular_homeo(level, 42);
    CHECK(r.cert.valid());
    CHECK(r.cert.cap_E <= prevE + 1e-9);
    CHECK(r.cert.cap_image_complement <= prevI + 1e-9);
    prevE = r.cert.cap_E;
    prevI = r.cert.cap_image_complement;
  }
}

TEST_CASE("verify_log_singular accepts the generator, rejects rigid maps") {
  auto gen = make_log_singular_homeo(3, 11);
  auto cert = verify_log_singular(gen.h, 3);
  REQUIRE(cert.has_value());
  CHECK(cert->valid());

  CHECK(!verify_log_singular(CircleHomeo::identity(), 3).has_value());
  CHECK(!verify_log_singular(CircleHomeo::rotation(1.0), 3).has_value());
  CHECK(!verify_log_singular(CircleHomeo::identity(), 10).has_value());
}

TEST_CASE("far-set capacity") {
  SUBCASE("bounded samples give the empty set") {
    std::vector<std::pair<Angle, complexd>> samples;
    for (int j = 0; j < 128; ++j)
      samples.push_back({Angle(kTwoPi * j / 128), complexd(1.0, 0.0)});
    auto [E, cap] = far_set_capacity(samples, 1.0, 10.0);
    CHECK(E.empty());
    CHECK(cap == 0.0);
  }
  SUBCASE("R below 1 rejected") {
    std::vector<std::pair<Angle, complexd>> samples{{Angle(0.0), complexd(1, 0)}};
    CHECK_THROWS(far_set_capacity(samples, 1.0, 0.5));
  }
  SUBCASE("Koebe-type samples decay like R^{-1/2}") {
    // f(z) = z/(1-z)^2 on the circle; d(f(0), boundary) = 1/4.
    int n = 4096;
    std::vector<std::pair<Angle, complexd>> samples;
    for (int j = 0; j < n; ++j) {
      double t = kTwoPi * (j + 0.5) / n;
      complexd z = std::polar(1.0, t);
      samples.push_back({Angle(t), z / ((1.0 - z) * (1.0 - z))});
    }
    std::vector<double> logR, logc;
    for (double R : {4.0, 16.0, 64.0}) {
      auto [E, cap] = far_set_capacity(samples, 0.25, R);
      REQUIRE(!E.empty());
      CHECK(cap <= 1.0 + 1e-9);
      logR.push_back(std::log(R));
      logc.push_back(std::log(cap));
    }
    double mx = 0, my = 0;
    for (size_t i = 0; i < 3; ++i) {
      mx += logR[i] / 3;
      my += logc[i] / 3;
    }
    double num = 0, den = 0;
    for (size_t i = 0; i < 3; ++i) {
      num += (logR[i] - mx) * (logc[i] - my);
      den += (logR[i] - mx) * (logR[i] - mx);
    }
    CHECK(num / den <= -0.45);
  }
}
