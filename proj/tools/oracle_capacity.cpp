// Resolution study for the capacity solver: prints Robin constants for the
// unit segment, the full circle, and arcs, across panel counts, so the
// extrapolation order and frozen test values can be fixed.
#include <cmath>
#include <cstdio>

#include "flexweld/geom.hpp"
#include "flexweld/logcap.hpp"

using namespace flexweld;

int main() {
  std::printf("segment [0,1], exact gamma = log 4 = %.10f\n", std::log(4.0));
  for (int n : {32, 64, 128, 256, 512, 1024}) {
    auto p = panelize_segment({0, 0}, {1, 0}, n);
    double g = panel_robin_constant(p);
    std::printf("  n=%5d gamma=%.10f cap=%.8f err=%.3e\n", n, g, std::exp(-g),
                std::exp(-g) - 0.25);
  }
  std::printf("full circle, exact gamma = 0\n");
  for (int n : {32, 64, 128, 256, 512}) {
    auto p = panelize_arcset(ArcSet::full_circle(), n);
    double g = panel_robin_constant(p);
    std::printf("  n=%5d gamma=%.10f cap=%.8f\n", n, g, std::exp(-g));
  }
  std::printf("arc of angle pi, exact cap = sin(pi/4) = %.10f\n",
              std::sin(M_PI / 4.0));
  for (int n : {64, 128, 256, 512, 1024, 2048}) {
    auto p = panelize_arcset(ArcSet::from_arcs({{Angle(0.0), Angle(M_PI)}}), n);
    double g = panel_robin_constant(p);
    std::printf("  n=%5d gamma=%.10f cap=%.8f err=%.3e\n", n, g, std::exp(-g),
                std::exp(-g) - std::sin(M_PI / 4.0));
  }
  std::printf("arc angle 0.01 vs 0.02, exact caps %.8e %.8e ratio 2 approx\n",
              std::sin(0.01 / 4), std::sin(0.02 / 4));
  for (int n : {64, 128}) {
    auto p1 = panelize_arcset(ArcSet::from_arcs({{Angle(0.0), Angle(0.01)}}), n);
    auto p2 = panelize_arcset(ArcSet::from_arcs({{Angle(0.0), Angle(0.02)}}), n);
    double c1 = std::exp(-panel_robin_constant(p1));
    double c2 = std::exp(-panel_robin_constant(p2));
    std::printf("  n=%d caps %.8e %.8e ratio %.5f\n", n, c1, c2, c2 / c1);
  }
  return 0;
}
