#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "flexweld/modulus.hpp"

namespace flexweld::detail {

// Piecewise-linear evaluation accelerator over an arbitrary triangulation
// (physical mesh or its rectangle image), with a global min-violation
// fallback for boundary roundoff.
struct TriLocator {
  std::vector<Eigen::Vector2d> pts;
  std::vector<std::array<int, 3>> tri;
  double x0 = 0, y0 = 0, cs = 1;
  int ncx = 1, ncy = 1;
  std::vector<std::vector<int>> cells;

  void build(std::vector<Eigen::Vector2d> p, std::vector<std::array<int, 3>> t) {
    pts = std::move(p);
    tri = std::move(t);
    double x1 = -1e300, y1 = -1e300;
    x0 = 1e300;
    y0 = 1e300;
    for (const auto& q : pts) {
      x0 = std::min(x0, q.x());
      x1 = std::max(x1, q.x());
      y0 = std::min(y0, q.y());
      y1 = std::max(y1, q.y());
    }
    double w = std::max(x1 - x0, 1e-12), h = std::max(y1 - y0, 1e-12);
    cs = std::max(std::sqrt(w * h / std::max<size_t>(tri.size(), 1)), 1e-9) * 2;
    ncx = std::max(1, static_cast<int>(std::ceil(w / cs)));
    ncy = std::max(1, static_cast<int>(std::ceil(h / cs)));
    cells.assign(static_cast<size_t>(ncx) * ncy, {});
    for (int k = 0; k < static_cast<int>(tri.size()); ++k) {
      double bx0 = 1e300, bx1 = -1e300, by0 = 1e300, by1 = -1e300;
      for (int v : tri[k]) {
        bx0 = std::min(bx0, pts[v].x());
        bx1 = std::max(bx1, pts[v].x());
        by0 = std::min(by0, pts[v].y());
        by1 = std::max(by1, pts[v].y());
      }
      int i0 = cell_x(bx0), i1 = cell_x(bx1), j0 = cell_y(by0), j1 = cell_y(by1);
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) cells[j * ncx + i].push_back(k);
    }
  }

  int cell_x(double x) const {
    return std::clamp(static_cast<int>((x - x0) / cs), 0, ncx - 1);
  }
  int cell_y(double y) const {
    return std::clamp(static_cast<int>((y - y0) / cs), 0, ncy - 1);
  }

  bool bary(int k, double x, double y, double* l) const {
    const auto& t = tri[k];
    const auto &a = pts[t[0]], &b = pts[t[1]], &c = pts[t[2]];
    double det = (b.x() - a.x()) * (c.y() - a.y()) -
                 (b.y() - a.y()) * (c.x() - a.x());
    if (std::abs(det) < 1e-300) return false;
    l[1] = ((x - a.x()) * (c.y() - a.y()) - (y - a.y()) * (c.x() - a.x())) / det;
    l[2] = ((b.x() - a.x()) * (y - a.y()) - (b.y() - a.y()) * (x - a.x())) / det;
    l[0] = 1.0 - l[1] - l[2];
    return true;
  }

  // Best-violation triangle (0 for interior points); fills barycentrics.
  double locate(double x, double y, int* kbest, double* l) const {
    double best = 1e300, lt[3];
    const auto& cand = cells[cell_y(y) * ncx + cell_x(x)];
    for (int k : cand) {
      if (!bary(k, x, y, lt)) continue;
      double viol = -std::min({lt[0], lt[1], lt[2]});
      if (viol < best) {
        best = viol;
        *kbest = k;
        l[0] = lt[0];
        l[1] = lt[1];
        l[2] = lt[2];
      }
    }
    if (best <= 1e-9) return best;
    for (int k = 0; k < static_cast<int>(tri.size()); ++k) {
      if (!bary(k, x, y, lt)) continue;
      double viol = -std::min({lt[0], lt[1], lt[2]});
      if (viol < best) {
        best = viol;
        *kbest = k;
        l[0] = lt[0];
        l[1] = lt[1];
        l[2] = lt[2];
      }
    }
    return best;
  }

  double eval(const Eigen::VectorXd& f, int k, const double* l) const {
    const auto& t = tri[k];
    return l[0] * f[t[0]] + l[1] * f[t[1]] + l[2] * f[t[2]];
  }
};

inline TriLocator physical_locator(const Mesh& m) {
  TriLocator loc;
  loc.build(m.p, m.tri);
  return loc;
}

// Locator over the (v,u) image of the uniformization, for inverse lookups.
inline TriLocator image_locator(const QuadUniformization& qu) {
  std::vector<Eigen::Vector2d> img(qu.mesh.p.size());
  for (size_t i = 0; i < img.size(); ++i) img[i] = {qu.v[i], qu.u[i]};
  TriLocator loc;
  loc.build(std::move(img), qu.mesh.tri);
  return loc;
}

}  // namespace flexweld::detail
