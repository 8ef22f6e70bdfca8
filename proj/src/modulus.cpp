#include "flexweld/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace flexweld {

namespace {

// Build the labeled base mesh for a marked quadrilateral, refined to the
// target size with bisection grading near the marked vertices.
Mesh quad_base_mesh(const MarkedQuadrilateral& Q, const MeshOptions& opt) {
  Q.validate();
  std::vector<complexd> verts = Q.boundary.vertices;
  std::array<int, 4> vi = Q.vertex_indices;
  // Ensure counterclockwise orientation.
  double s = 0;
  size_t n = verts.size();
  for (size_t i = 0; i < n; ++i) {
    const auto& a = verts[i];
    const auto& b = verts[(i + 1) % n];
    s += a.real() * b.imag() - b.real() * a.imag();
  }
  if (s < 0) {
    std::reverse(verts.begin(), verts.end());
    int N = static_cast<int>(n);
    // Old side a1 ran V0 -> V1; reversed it runs (N-1-V1) -> (N-1-V0).
    vi = {N - 1 - vi[1], N - 1 - vi[0], N - 1 - vi[3], N - 1 - vi[2]};
  }
  // Label each boundary edge with its side id.
  std::vector<int> labels(n, -1);
  for (int sd = 0; sd < 4; ++sd) {
    int i0 = vi[sd], i1 = vi[(sd + 1) % 4];
    for (int i = i0; i != i1; i = (i + 1) % static_cast<int>(n))
      labels[i] = sd;
  }
  std::vector<Eigen::Vector2d> poly;
  for (const auto& z : verts) poly.emplace_back(z.real(), z.imag());
  Mesh m = triangulate_polygon(poly, labels);

  double diam = 0;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      diam = std::max(diam, std::abs(verts[i] - verts[j]));
  double target = diam / opt.target_divisions;
  for (int r = 0; r < opt.max_uniform && mesh_max_edge(m) > target; ++r) {
    m = refine_uniform(m);
    improve_mesh(m, 1);
  }
  std::vector<Eigen::Vector2d> corners;
  for (int k = 0; k < 4; ++k)
    corners.emplace_back(verts[vi[k]].real(), verts[vi[k]].imag());
  double rad = 2.0 * mesh_max_edge(m);
  for (int pass = 0; pass < opt.corner_passes; ++pass) {
    m = refine_near(m, corners, rad);
    m = refine_near(m, corners, rad);
    // Keep quality up between passes: Rivara closure cascades on slivers.
    improve_mesh(m, 1);
    rad *= 0.5;
  }
  improve_mesh(m, 2);
  return m;
}

double quad_energy(const Mesh& m) {
  // u = 0 on side a1 (label 0), u = 1 on side a2 (label 2).
  return solve_laplace(m, {{0, 0.0}, {2, 1.0}}).energy;
}

}  // namespace

ModulusReport quad_modulus(const MarkedQuadrilateral& Q, MeshOptions opt) {
  Mesh coarse = quad_base_mesh(Q, opt);
  Mesh fine = refine_uniform(coarse);
  improve_mesh(fine, 1);
  double e1 = quad_energy(coarse);
  double e2 = quad_energy(fine);
  ModulusReport r;
  // Energy converges ~ O(h^2) on the graded meshes; Richardson at order 2.
  r.modulus = (4.0 * e2 - e1) / 3.0;
  r.mesh_sizes[0] = mesh_max_edge(coarse);
  r.mesh_sizes[1] = mesh_max_edge(fine);
  r.extrapolated = true;
  r.estimated_error = std::abs(r.modulus - e2);
  if (r.modulus <= 0) throw std::runtime_error("quad_modulus: degenerate result");
  return r;
}

bool QuadUniformization::to_rect(const complexd& z, complexd* w) const {
  double uu, vv;
  Eigen::Vector2d q(z.real(), z.imag());
  if (!eval_field(mesh, u, q, &uu)) return false;
  if (!eval_field(mesh, v, q, &vv)) return false;
  *w = complexd(vv, uu);
  return true;
}

bool QuadUniformization::from_rect(const complexd& w, complexd* z) const {
  // Point location in the (v,u) image triangulation, nearest-triangle
  // fallback for boundary roundoff.
  double best_violation = 1e300;
  complexd best{};
  for (const auto& tr : mesh.tri) {
    Eigen::Vector2d a(v[tr[0]], u[tr[0]]);
    Eigen::Vector2d b(v[tr[1]], u[tr[1]]);
    Eigen::Vector2d c(v[tr[2]], u[tr[2]]);
    double det = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
    if (std::abs(det) < 1e-300) continue;
    double l1 = ((w.real() - a.x()) * (c.y() - a.y()) -
                 (w.imag() - a.y()) * (c.x() - a.x())) /
                det;
    double l2 = ((b.x() - a.x()) * (w.imag() - a.y()) -
                 (b.y() - a.y()) * (w.real() - a.x())) /
                det;
    double l0 = 1.0 - l1 - l2;
    double viol = -std::min({l0, l1, l2});
    if (viol < best_violation) {
      best_violation = viol;
      complexd p0(mesh.p[tr[0]].x(), mesh.p[tr[0]].y());
      complexd p1(mesh.p[tr[1]].x(), mesh.p[tr[1]].y());
      complexd p2(mesh.p[tr[2]].x(), mesh.p[tr[2]].y());
      best = l0 * p0 + l1 * p1 + l2 * p2;
    }
  }
  if (best_violation > 0.1) return false;
  *z = best;
  return true;
}

std::vector<std::pair<complexd, complexd>> QuadUniformization::boundary_table(
    int samples) const {
  std::vector<std::pair<complexd, complexd>> out;
  for (int i = 0; i < samples; ++i) {
    double vv = modulus * i / (samples - 1.0);
    complexd z;
    if (from_rect({vv, 0.0}, &z)) out.push_back({z, complexd(vv, 0.0)});
  }
  return out;
}

QuadUniformization quad_uniformize(const MarkedQuadrilateral& Q, MeshOptions opt) {
  QuadUniformization qu;
  qu.mesh = quad_base_mesh(Q, opt);
  qu.mesh = refine_uniform(qu.mesh);
  improve_mesh(qu.mesh, 1);
  auto fem = solve_laplace(qu.mesh, {{0, 0.0}, {2, 1.0}});
  qu.u = fem.u;
  qu.modulus = quad_modulus(Q, opt).modulus;

  // Anchor the conjugate at the first marked vertex (maps to rectangle
  // corner (0,0)).
  complexd v0 = Q.boundary.vertices[Q.vertex_indices[0]];
  int anchor = 0;
  double bd = 1e300;
  for (size_t i = 0; i < qu.mesh.p.size(); ++i) {
    double d = std::hypot(qu.mesh.p[i].x() - v0.real(), qu.mesh.p[i].y() - v0.imag());
    if (d < bd) {
      bd = d;
      anchor = static_cast<int>(i);
    }
  }
  auto [v, res] = harmonic_conjugate(qu.mesh, qu.u, anchor);
  qu.conj_residual = res;
  // Orient so v increases toward b1 (the side after a1).
  complexd v1 = Q.boundary.vertices[Q.vertex_indices[1]];
  double vv1 = 0;
  Eigen::Vector2d q1(v1.real(), v1.imag());
  eval_field(qu.mesh, v, q1, &vv1);
  if (vv1 < 0) v = -v;
  // Normalize the range to [0, M] exactly at the anchor corners.
  double vmin = v.minCoeff();
  v.array() -= vmin;
  double vmax = v.maxCoeff();
  if (vmax > 0) v *= qu.modulus / vmax;
  qu.v = v;
  return qu;
}

AnnulusField annulus_field(const Polyline& inner, const Polyline& outer,
                           MeshOptions opt) {
  if (!inner.closed || !outer.closed)
    throw std::invalid_argument("annulus: curves must be closed");
  // Nesting / disjointness checks.
  for (const auto& z : inner.vertices)
    if (!point_in_polygon(z, outer))
      throw std::invalid_argument("annulus: inner not inside outer");
  size_t ni = inner.vertices.size(), no = outer.vertices.size();
  for (size_t i = 0; i < ni; ++i)
    for (size_t j = 0; j < no; ++j)
      if (segments_intersect(inner.vertices[i], inner.vertices[(i + 1) % ni],
                             outer.vertices[j], outer.vertices[(j + 1) % no]))
        throw std::invalid_argument("annulus: curves intersect");

  auto ccw = [](const Polyline& p) {
    double s = 0;
    size_t n = p.vertices.size();
    for (size_t i = 0; i < n; ++i) {
      const auto& a = p.vertices[i];
      const auto& b = p.vertices[(i + 1) % n];
      s += a.real() * b.imag() - b.real() * a.imag();
    }
    return s > 0;
  };
  std::vector<Eigen::Vector2d> out_pts, in_pts;
  auto push = [](std::vector<Eigen::Vector2d>& v, const Polyline& p, bool fwd) {
    size_t n = p.vertices.size();
    for (size_t i = 0; i < n; ++i) {
      const auto& z = p.vertices[fwd ? i : n - 1 - i];
      v.emplace_back(z.real(), z.imag());
    }
  };
  push(out_pts, outer, ccw(outer));
  push(in_pts, inner, ccw(inner));

  Mesh m = triangulate_with_hole(out_pts, in_pts, 1, 0);
  double diam = 0;
  for (const auto& a : out_pts)
    for (const auto& b : out_pts) diam = std::max(diam, (a - b).norm());
  double target = diam / opt.target_divisions;
  for (int r = 0; r < opt.max_uniform && mesh_max_edge(m) > target; ++r) {
    m = refine_uniform(m);
    improve_mesh(m, 1);
  }
  improve_mesh(m, 2);
  AnnulusField f;
  f.mesh = m;
  auto fem = solve_laplace(m, {{0, 0.0}, {1, 1.0}});
  f.u = fem.u;
  f.energy = fem.energy;
  return f;
}

ModulusReport annulus_modulus(const Polyline& inner, const Polyline& outer,
                              MeshOptions opt) {
  AnnulusField coarse = annulus_field(inner, outer, opt);
  Mesh fine_mesh = refine_uniform(coarse.mesh);
  improve_mesh(fine_mesh, 1);
  auto fem = solve_laplace(fine_mesh, {{0, 0.0}, {1, 1.0}});
  double e1 = coarse.energy, e2 = fem.energy;
  double e = (4.0 * e2 - e1) / 3.0;
  if (e <= 0) throw std::runtime_error("annulus_modulus: degenerate result");
  ModulusReport r;
  r.modulus = 1.0 / e;
  r.mesh_sizes[0] = mesh_max_edge(coarse.mesh);
  r.mesh_sizes[1] = mesh_max_edge(fine_mesh);
  r.extrapolated = true;
  r.estimated_error = std::abs(r.modulus - 1.0 / e2);
  return r;
}

namespace {

double rect_hm_value(double L, int ny) {
  int nx = static_cast<int>(std::ceil(L * ny));
  if (nx % 2) ++nx;
  Mesh m;
  auto idx = [&](int i, int j) { return i * (ny + 1) + j; };
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j)
      m.p.emplace_back(-L + 2.0 * L * i / nx, -1.0 + 2.0 * j / ny);
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
    m.bedge[std::minmax(idx(0, j), idx(0, j + 1))] = 1;
    m.bedge[std::minmax(idx(nx, j), idx(nx, j + 1))] = 1;
  }
  auto fem = solve_laplace(m, {{0, 0.0}, {1, 1.0}});
  return fem.u[idx(nx / 2, ny / 2)];
}

}  // namespace

double rect_harmonic_measure(double L) {
  if (L <= 0) throw std::invalid_argument("rect_harmonic_measure: L <= 0");
  double v1 = rect_hm_value(L, 32);
  double v2 = rect_hm_value(L, 64);
  return (4.0 * v2 - v1) / 3.0;
}

namespace {

MarkedQuadrilateral vmarked_rect_like(std::vector<complexd> left,
                                      std::vector<complexd> right,
                                      double y0 = 0.0, double y1 = 1.0) {
  // Quadrilateral with a1 = left chain (top->bottom), a2 = right chain
  // (bottom->top), joined by straight horizontal b-sides.
  (void)y0;
  (void)y1;
  std::vector<complexd> verts;
  // a1: left top -> left bottom; b1: bottom; a2: right bottom -> right top;
  // b2: top.
  for (const auto& z : left) verts.push_back(z);
  for (const auto& z : right) verts.push_back(z);
  MarkedQuadrilateral q;
  q.boundary = Polyline{verts, true};
  q.vertex_indices = {0, static_cast<int>(left.size()) - 1,
                      static_cast<int>(left.size()),
                      static_cast<int>(verts.size()) - 1};
  return q;
}

}  // namespace

RulesReport modulus_rules_check(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> alen(2.0, 4.0), split(0.3, 0.7);
  RulesReport rep;
  rep.serial_wiggly_margin = 1e300;
  rep.parallel_margin = 1e300;

  for (int trial = 0; trial < 3; ++trial) {
    double a = alen(rng);
    double m1 = a * split(rng);
    // Extremal length of the left-right family: lambda = 1/M with a-sides
    // vertical; for [0,a]x[0,1] this is a.
    auto lam = [&](double x0, double x1) {
      auto q = vmarked_rect_like({{x0, 1.0}, {x0, 0.0}}, {{x1, 0.0}, {x1, 1.0}});
      return 1.0 / quad_modulus(q).modulus;
    };
    double l = lam(0, a), l1 = lam(0, m1), l2 = lam(m1, a);
    rep.serial_equality_dev =
        std::max(rep.serial_equality_dev, std::abs(l - (l1 + l2)) / l);

    // Wiggly divider: strict inequality lambda > l1 + l2.
    std::vector<complexd> cut;
    int kk = 9;
    for (int i = 0; i <= kk; ++i) {
      double y = double(i) / kk;
      double x = m1 + 0.18 * std::sin(3.0 * M_PI * y);
      cut.push_back({x, y});
    }
    std::vector<complexd> cut_down(cut.rbegin(), cut.rend());
    auto qL = vmarked_rect_like({{0.0, 1.0}, {0.0, 0.0}}, cut);
    auto qR = vmarked_rect_like(cut_down, {{a, 0.0}, {a, 1.0}});
    double w1 = 1.0 / quad_modulus(qL).modulus;
    double w2 = 1.0 / quad_modulus(qR).modulus;
    rep.serial_wiggly_margin =
        std::min(rep.serial_wiggly_margin, l - (w1 + w2));
  }
  {
    // Parallel rule: stacked halves of the unit square, left-right family.
    auto q = vmarked_rect_like({{0.0, 1.0}, {0.0, 0.0}}, {{1.0, 0.0}, {1.0, 1.0}});
    double M = quad_modulus(q).modulus;
    auto qb = vmarked_rect_like({{0.0, 0.5}, {0.0, 0.0}}, {{1.0, 0.0}, {1.0, 0.5}});
    auto qt = vmarked_rect_like({{0.0, 1.0}, {0.0, 0.5}}, {{1.0, 0.5}, {1.0, 1.0}});
    double M1 = quad_modulus(qb).modulus;
    double M2 = quad_modulus(qt).modulus;
    rep.parallel_margin = (M - (M1 + M2)) / M;
  }
  rep.pass = rep.serial_equality_dev <= 0.01 && rep.serial_wiggly_margin > 0 &&
             rep.parallel_margin >= -0.01;
  return rep;
}

}  // namespace flexweld
