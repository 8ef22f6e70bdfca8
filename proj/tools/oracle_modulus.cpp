// Convergence study for the FEM modulus machinery and fine-mesh oracle for
// the L-shaped hexagon used in the test suite.
#include <cmath>
#include <cstdio>

#include "flexweld/modulus.hpp"

using namespace flexweld;

int main() {
  {
    Polyline rect{{{0, 0}, {3, 0}, {3, 1}, {0, 1}}, true};
    MarkedQuadrilateral q{rect, {0, 1, 2, 3}};
    for (int td : {8, 12, 16, 24}) {
      MeshOptions opt;
      opt.target_divisions = td;
      auto r = quad_modulus(q, opt);
      std::printf("rect3x1 td=%2d M=%.6f err=%.2e est=%.2e\n", td, r.modulus,
                  r.modulus - 3.0, r.estimated_error);
    }
  }
  {
    // L-shaped hexagon, a1 = bottom edge, a2 = upper-left edge.
    Polyline L{{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}, true};
    MarkedQuadrilateral q{L, {0, 1, 4, 5}};
    for (int td : {8, 12, 16, 24, 32, 48}) {
      MeshOptions opt;
      opt.target_divisions = td;
      auto r = quad_modulus(q, opt);
      std::printf("Lshape td=%2d M=%.6f est=%.2e\n", td, r.modulus,
                  r.estimated_error);
    }
  }
  {
    auto circle = [](double R, int n) {
      Polyline p;
      p.closed = true;
      for (int i = 0; i < n; ++i) {
        double t = 2 * M_PI * i / n;
        p.vertices.push_back({R * std::cos(t), R * std::sin(t)});
      }
      return p;
    };
    for (double R : {2.0, std::exp(1.0), 10.0}) {
      auto r = annulus_modulus(circle(1.0, 128), circle(R, 192));
      double exact = std::log(R) / (2 * M_PI);
      std::printf("annulus R=%.3f M=%.6f exact=%.6f rel=%.2e\n", R, r.modulus,
                  exact, (r.modulus - exact) / exact);
    }
  }
  for (double L : {2.0, 3.0, 4.0}) {
    double w = rect_harmonic_measure(L);
    double lo = std::exp(-M_PI * L / 2), hi = 8.0 / M_PI * lo;
    std::printf("hm L=%.1f w=%.6e band=[%.6e, %.6e] in=%d\n", L, w, lo, hi,
                w >= lo && w <= hi);
  }
  return 0;
}
