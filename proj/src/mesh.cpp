#include "flexweld/mesh.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <list>
#include <stdexcept>

namespace flexweld {

namespace {

double tri_cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                 const Eigen::Vector2d& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

bool point_in_tri(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                  const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                  double eps) {
  double d1 = tri_cross(a, b, p);
  double d2 = tri_cross(b, c, p);
  double d3 = tri_cross(c, a, p);
  return d1 > eps && d2 > eps && d3 > eps;
}

double tri_area(const Mesh& m, const std::array<int, 3>& t) {
  return 0.5 * tri_cross(m.p[t[0]], m.p[t[1]], m.p[t[2]]);
}

}  // namespace

Mesh triangulate_polygon(const std::vector<Eigen::Vector2d>& poly,
                         const std::vector<int>& edge_labels) {
  size_t n = poly.size();
  if (n < 3 || edge_labels.size() != n)
    throw std::invalid_argument("triangulate_polygon: bad input");

  Mesh m;
  // Canonicalize exactly-coincident points to one id so keyhole bridges heal.
  std::vector<int> id(n);
  std::map<std::pair<double, double>, int> seen;
  for (size_t i = 0; i < n; ++i) {
    auto key = std::make_pair(poly[i].x(), poly[i].y());
    auto it = seen.find(key);
    if (it == seen.end()) {
      id[i] = static_cast<int>(m.p.size());
      seen[key] = id[i];
      m.p.push_back(poly[i]);
    } else {
      id[i] = it->second;
    }
  }
  double scale = 0;
  for (size_t i = 0; i < n; ++i)
    scale = std::max(scale, (poly[i] - poly[(i + 1) % n]).norm());
  double eps = 1e-14 * scale * scale;

  for (size_t i = 0; i < n; ++i) {
    if (edge_labels[i] >= 0) {
      int a = id[i], b = id[(i + 1) % n];
      if (a != b) m.bedge[std::minmax(a, b)] = edge_labels[i];
    }
  }

  // Ear clipping over polygon positions (repeated ids allowed).
  std::vector<int> ring(n);
  for (size_t i = 0; i < n; ++i) ring[i] = id[i];
  auto emit = [&](int a, int b, int c) {
    if (tri_cross(m.p[a], m.p[b], m.p[c]) > eps) m.tri.push_back({a, b, c});
  };
  int guard = static_cast<int>(n) * static_cast<int>(n) + 64;
  while (ring.size() > 3 && guard-- > 0) {
    size_t sz = ring.size();
    int best = -1;
    double best_quality = -1e300;
    for (size_t i = 0; i < sz; ++i) {
      int a = ring[(i + sz - 1) % sz], b = ring[i], c = ring[(i + 1) % sz];
      if (a == b || b == c || a == c) {  // collapsed corner: remove freely
        best = static_cast<int>(i);
        best_quality = 1e300;
        break;
      }
      double cr = tri_cross(m.p[a], m.p[b], m.p[c]);
      if (cr <= eps) continue;  // reflex or degenerate
      bool blocked = false;
      for (size_t j = 0; j < sz; ++j) {
        int q = ring[j];
        if (q == a || q == b || q == c) continue;
        if (point_in_tri(m.p[q], m.p[a], m.p[b], m.p[c], -eps)) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      // Prefer well-shaped ears.
      double peri = (m.p[a] - m.p[b]).norm() + (m.p[b] - m.p[c]).norm() +
                    (m.p[c] - m.p[a]).norm();
      double quality = cr / (peri * peri + 1e-300);
      if (quality > best_quality) {
        best_quality = quality;
        best = static_cast<int>(i);
      }
    }
    if (best < 0) {
      // Fallback: clip the most convex corner even if blocked (degenerate
      // inputs); keeps the algorithm terminating.
      double bc = -1e300;
      for (size_t i = 0; i < sz; ++i) {
        int a = ring[(i + sz - 1) % sz], b = ring[i], c = ring[(i + 1) % sz];
        double cr = tri_cross(m.p[a], m.p[b], m.p[c]);
        if (cr > bc) {
          bc = cr;
          best = static_cast<int>(i);
        }
      }
    }
    size_t i = static_cast<size_t>(best);
    int a = ring[(i + sz - 1) % sz], b = ring[i], c = ring[(i + 1) % sz];
    if (!(a == b || b == c || a == c)) emit(a, b, c);
    ring.erase(ring.begin() + i);
  }
  if (ring.size() == 3) emit(ring[0], ring[1], ring[2]);
  if (m.tri.empty()) throw std::runtime_error("triangulation failed");
  return m;
}

Mesh triangulate_with_hole(const std::vector<Eigen::Vector2d>& outer,
                           const std::vector<Eigen::Vector2d>& inner_ccw,
                           int outer_label, int inner_label) {
  // Hole boundary traversed clockwise inside the keyhole polygon.
  std::vector<Eigen::Vector2d> inner(inner_ccw.rbegin(), inner_ccw.rend());
  // Bridge from the rightmost inner vertex to the nearest visible outer
  // vertex to its right.
  size_t ii = 0;
  for (size_t i = 1; i < inner.size(); ++i)
    if (inner[i].x() > inner[ii].x()) ii = i;
  auto visible = [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    auto hits = [&](const std::vector<Eigen::Vector2d>& ring) {
      size_t n = ring.size();
      for (size_t k = 0; k < n; ++k) {
        const Eigen::Vector2d &c = ring[k], &d = ring[(k + 1) % n];
        if ((c - a).norm() < 1e-15 || (d - a).norm() < 1e-15 ||
            (c - b).norm() < 1e-15 || (d - b).norm() < 1e-15)
          continue;
        if (segments_intersect({a.x(), a.y()}, {b.x(), b.y()}, {c.x(), c.y()},
                               {d.x(), d.y()}))
          return true;
      }
      return false;
    };
    return !hits(outer) && !hits(inner);
  };
  size_t jo = 0;
  double bestd = 1e300;
  for (size_t j = 0; j < outer.size(); ++j) {
    if (outer[j].x() <= inner[ii].x()) continue;
    double d = (outer[j] - inner[ii]).norm();
    if (d < bestd && visible(inner[ii], outer[j])) {
      bestd = d;
      jo = j;
    }
  }
  if (bestd == 1e300) throw std::runtime_error("keyhole bridge not found");
  std::vector<Eigen::Vector2d> poly;
  std::vector<int> labels;
  // outer[jo..] ++ outer[..jo] ++ outer[jo] -> inner[ii..] ++ inner[..ii]
  // -> inner[ii] -> back to outer[jo].
  size_t no = outer.size(), ni = inner.size();
  for (size_t k = 0; k < no; ++k) {
    poly.push_back(outer[(jo + k) % no]);
    labels.push_back(outer_label);
  }
  poly.push_back(outer[jo]);
  labels.push_back(-1);  // bridge out
  for (size_t k = 0; k < ni; ++k) {
    poly.push_back(inner[(ii + k) % ni]);
    labels.push_back(inner_label);
  }
  poly.push_back(inner[ii]);
  labels.push_back(-1);  // bridge back
  return triangulate_polygon(poly, labels);
}

Mesh refine_uniform(const Mesh& m) {
  Mesh out;
  out.p = m.p;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    int idx = static_cast<int>(out.p.size());
    out.p.push_back(0.5 * (m.p[a] + m.p[b]));
    midpoint[key] = idx;
    auto be = m.bedge.find(key);
    if (be != m.bedge.end()) {
      out.bedge[std::minmax(a, idx)] = be->second;
      out.bedge[std::minmax(idx, b)] = be->second;
    }
    return idx;
  };
  for (const auto& t : m.tri) {
    int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
    out.tri.push_back({t[0], ab, ca});
    out.tri.push_back({ab, t[1], bc});
    out.tri.push_back({ca, bc, t[2]});
    out.tri.push_back({ab, bc, ca});
  }
  return out;
}

namespace {

struct Bisector {
  Mesh& m;
  std::map<std::pair<int, int>, std::vector<int>> edge2tri;
  std::vector<char> alive;

  explicit Bisector(Mesh& mesh) : m(mesh) {
    alive.assign(m.tri.size(), 1);
    for (size_t t = 0; t < m.tri.size(); ++t) add_edges(static_cast<int>(t));
  }
  void add_edges(int t) {
    for (int e = 0; e < 3; ++e) {
      auto key = std::minmax(m.tri[t][e], m.tri[t][(e + 1) % 3]);
      edge2tri[key].push_back(t);
    }
  }
  std::pair<int, int> longest_edge(int t) const {
    double best = -1;
    std::pair<int, int> be{-1, -1};
    for (int e = 0; e < 3; ++e) {
      int a = m.tri[t][e], b = m.tri[t][(e + 1) % 3];
      double len = (m.p[a] - m.p[b]).squaredNorm();
      if (len > best) {
        best = len;
        be = {a, b};
      }
    }
    return be;
  }
  int neighbor_across(int t, std::pair<int, int> e) {
    auto key = std::minmax(e.first, e.second);
    for (int q : edge2tri[key])
      if (q != t && alive[q]) return q;
    return -1;
  }
  // Bisect triangle t across its longest edge, propagating to keep the mesh
  // conforming (Rivara).
  void bisect(int t, int depth = 0) {
    if (!alive[t] || depth > 64) return;
    auto e = longest_edge(t);
    int nb = neighbor_across(t, e);
    if (nb >= 0) {
      auto enb = longest_edge(nb);
      if (std::minmax(enb.first, enb.second) != std::minmax(e.first, e.second)) {
        bisect(nb, depth + 1);
        if (!alive[t]) return;
        e = longest_edge(t);
        nb = neighbor_across(t, e);
      }
    }
    int a = e.first, b = e.second;
    int midv = static_cast<int>(m.p.size());
    m.p.push_back(0.5 * (m.p[a] + m.p[b]));
    auto bkey = std::minmax(a, b);
    auto be = m.bedge.find(bkey);
    if (be != m.bedge.end()) {
      m.bedge[std::minmax(a, midv)] = be->second;
      m.bedge[std::minmax(midv, b)] = be->second;
      m.bedge.erase(be);
    }
    split_one(t, a, b, midv);
    if (nb >= 0 && alive[nb]) split_one(nb, a, b, midv);
  }
  void split_one(int t, int a, int b, int midv) {
    int c = -1;
    for (int v : m.tri[t])
      if (v != a && v != b) c = v;
    alive[t] = 0;
    auto mk = [&](int x, int y, int z) {
      // Preserve counterclockwise orientation.
      std::array<int, 3> tr{x, y, z};
      if (tri_area(m, tr) < 0) std::swap(tr[1], tr[2]);
      int idx = static_cast<int>(m.tri.size());
      m.tri.push_back(tr);
      alive.push_back(1);
      add_edges(idx);
    };
    mk(a, midv, c);
    mk(midv, b, c);
  }
  void finish() {
    std::vector<std::array<int, 3>> keep;
    for (size_t t = 0; t < m.tri.size(); ++t)
      if (alive[t]) keep.push_back(m.tri[t]);
    m.tri = std::move(keep);
  }
};

}  // namespace

Mesh refine_near(const Mesh& m_in, const std::vector<Eigen::Vector2d>& pts,
                 double radius) {
  Mesh m = m_in;
  Bisector bis(m);
  size_t original = m.tri.size();
  for (size_t t = 0; t < original; ++t) {
    if (!bis.alive[t]) continue;
    // Size criterion keeps repeated calls idempotent: already-graded
    // triangles (longest edge below radius/2) are left alone.
    double longest = 0;
    for (int e = 0; e < 3; ++e)
      longest = std::max(longest, (m.p[m.tri[t][e]] - m.p[m.tri[t][(e + 1) % 3]])
                                      .squaredNorm());
    if (longest < 0.25 * radius * radius) continue;
    Eigen::Vector2d cen =
        (m.p[m.tri[t][0]] + m.p[m.tri[t][1]] + m.p[m.tri[t][2]]) / 3.0;
    for (const auto& q : pts) {
      if ((cen - q).norm() < radius) {
        bis.bisect(static_cast<int>(t));
        break;
      }
    }
  }
  bis.finish();
  return m;
}

void improve_mesh(Mesh& m, int passes) {
  for (int pass = 0; pass < passes; ++pass) {
    // Lawson flips on interior edges.
    std::map<std::pair<int, int>, std::vector<int>> edge2tri;
    for (size_t t = 0; t < m.tri.size(); ++t)
      for (int e = 0; e < 3; ++e)
        edge2tri[std::minmax(m.tri[t][e], m.tri[t][(e + 1) % 3])].push_back(
            static_cast<int>(t));
    for (auto& [edge, ts] : edge2tri) {
      if (ts.size() != 2) continue;
      if (m.bedge.count(edge)) continue;
      int t1 = ts[0], t2 = ts[1];
      int a = edge.first, b = edge.second;
      // The map goes stale as flips happen; skip if either triangle no
      // longer contains this edge.
      auto has_edge = [&](int t) {
        int hits = 0;
        for (int v : m.tri[t])
          if (v == a || v == b) ++hits;
        return hits == 2;
      };
      if (!has_edge(t1) || !has_edge(t2)) continue;
      int c = -1, d = -1;
      for (int v : m.tri[t1])
        if (v != a && v != b) c = v;
      for (int v : m.tri[t2])
        if (v != a && v != b) d = v;
      if (c < 0 || d < 0 || c == d) continue;
      auto angle = [&](int apex) {
        Eigen::Vector2d u = m.p[a] - m.p[apex], w = m.p[b] - m.p[apex];
        return std::atan2(std::abs(u.x() * w.y() - u.y() * w.x()), u.dot(w));
      };
      if (angle(c) + angle(d) > M_PI + 1e-12) {
        std::array<int, 3> n1{c, a, d}, n2{c, d, b};
        if (tri_area(m, n1) < 0 && tri_area(m, n2) < 0) {
          std::swap(n1[1], n1[2]);  // sorted pair may be mirrored
          std::swap(n2[1], n2[2]);
          n1 = {c, b, d};
          n2 = {c, d, a};
        }
        if (tri_area(m, n1) > 1e-16 && tri_area(m, n2) > 1e-16) {
          m.tri[t1] = n1;
          m.tri[t2] = n2;
        }
      }
    }
    // Laplacian smoothing of interior vertices with fold-over guard.
    std::vector<char> on_boundary(m.p.size(), 0);
    for (const auto& [e, lab] : m.bedge) {
      on_boundary[e.first] = 1;
      on_boundary[e.second] = 1;
    }
    std::vector<std::vector<int>> v2t(m.p.size());
    for (size_t t = 0; t < m.tri.size(); ++t)
      for (int v : m.tri[t]) v2t[v].push_back(static_cast<int>(t));
    for (size_t v = 0; v < m.p.size(); ++v) {
      if (on_boundary[v] || v2t[v].empty()) continue;
      Eigen::Vector2d avg(0, 0);
      int cnt = 0;
      for (int t : v2t[v])
        for (int w : m.tri[t])
          if (w != static_cast<int>(v)) {
            avg += m.p[w];
            ++cnt;
          }
      avg /= cnt;
      Eigen::Vector2d old = m.p[v];
      m.p[v] = old + 0.5 * (avg - old);
      for (int t : v2t[v]) {
        if (tri_area(m, m.tri[t]) <= 1e-16) {
          m.p[v] = old;
          break;
        }
      }
    }
  }
}

FemResult solve_laplace(const Mesh& m, const std::map<int, double>& dirichlet) {
  int n = static_cast<int>(m.p.size());
  // Node constraints: lower label wins on conflicts (corner nodes).
  std::vector<int> node_label(n, -1);
  for (const auto& [edge, lab] : m.bedge) {
    if (!dirichlet.count(lab)) continue;
    for (int v : {edge.first, edge.second})
      if (node_label[v] < 0 || lab < node_label[v]) node_label[v] = lab;
  }
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  std::vector<char> fixed(n, 0);
  for (int v = 0; v < n; ++v)
    if (node_label[v] >= 0) {
      fixed[v] = 1;
      u[v] = dirichlet.at(node_label[v]);
    }

  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Matrix3d> local(m.tri.size());
  for (size_t t = 0; t < m.tri.size(); ++t) {
    const auto& tr = m.tri[t];
    Eigen::Vector2d p0 = m.p[tr[0]], p1 = m.p[tr[1]], p2 = m.p[tr[2]];
    double area = 0.5 * tri_cross(p0, p1, p2);
    if (area <= 0) continue;
    Eigen::Vector2d g[3];
    g[0] = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) / (2 * area);
    g[1] = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) / (2 * area);
    g[2] = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) / (2 * area);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) local[t](i, j) = area * g[i].dot(g[j]);
  }
  std::vector<int> reduced_id(n, -1);
  int nf = 0;
  for (int v = 0; v < n; ++v)
    if (!fixed[v]) reduced_id[v] = nf++;
  for (size_t t = 0; t < m.tri.size(); ++t) {
    const auto& tr = m.tri[t];
    if (tri_area(m, tr) <= 0) continue;
    for (int i = 0; i < 3; ++i) {
      if (fixed[tr[i]]) continue;
      int ri = reduced_id[tr[i]];
      for (int j = 0; j < 3; ++j) {
        double k = local[t](i, j);
        if (fixed[tr[j]])
          rhs[tr[i]] -= k * u[tr[j]];
        else
          trips.emplace_back(ri, reduced_id[tr[j]], k);
      }
    }
  }
  Eigen::SparseMatrix<double> K(nf, nf);
  K.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(K);
  Eigen::VectorXd rr(nf);
  for (int v = 0; v < n; ++v)
    if (!fixed[v]) rr[reduced_id[v]] = rhs[v];
  Eigen::VectorXd x = solver.solve(rr);
  for (int v = 0; v < n; ++v)
    if (!fixed[v]) u[v] = x[reduced_id[v]];

  double energy = 0;
  for (size_t t = 0; t < m.tri.size(); ++t) {
    const auto& tr = m.tri[t];
    if (tri_area(m, tr) <= 0) continue;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) energy += u[tr[i]] * local[t](i, j) * u[tr[j]];
  }
  FemResult r;
  r.u = std::move(u);
  r.energy = energy;
  return r;
}

std::pair<Eigen::VectorXd, double> harmonic_conjugate(const Mesh& m,
                                                      const Eigen::VectorXd& u,
                                                      int anchor_vertex) {
  int n = static_cast<int>(m.p.size());
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (const auto& tr : m.tri) {
    Eigen::Vector2d p0 = m.p[tr[0]], p1 = m.p[tr[1]], p2 = m.p[tr[2]];
    double area = 0.5 * tri_cross(p0, p1, p2);
    if (area <= 0) continue;
    Eigen::Vector2d g[3];
    g[0] = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) / (2 * area);
    g[1] = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) / (2 * area);
    g[2] = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) / (2 * area);
    Eigen::Vector2d gu = u[tr[0]] * g[0] + u[tr[1]] * g[1] + u[tr[2]] * g[2];
    Eigen::Vector2d rot(gu.y(), -gu.x());
    for (int i = 0; i < 3; ++i) {
      rhs[tr[i]] += area * g[i].dot(rot);
      for (int j = 0; j < 3; ++j)
        trips.emplace_back(tr[i], tr[j], area * g[i].dot(g[j]));
    }
  }
  // Pin the anchor.
  for (auto& t : trips)
    if (t.row() == anchor_vertex)
      t = Eigen::Triplet<double>(t.row(), t.col(), t.col() == anchor_vertex ? 1.0 : 0.0);
  rhs[anchor_vertex] = 0.0;
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.compute(K);
  Eigen::VectorXd v = solver.solve(rhs);

  double num = 0, den = 0;
  for (const auto& tr : m.tri) {
    Eigen::Vector2d p0 = m.p[tr[0]], p1 = m.p[tr[1]], p2 = m.p[tr[2]];
    double area = 0.5 * tri_cross(p0, p1, p2);
    if (area <= 0) continue;
    Eigen::Vector2d g[3];
    g[0] = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) / (2 * area);
    g[1] = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) / (2 * area);
    g[2] = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) / (2 * area);
    Eigen::Vector2d gu = u[tr[0]] * g[0] + u[tr[1]] * g[1] + u[tr[2]] * g[2];
    Eigen::Vector2d gv = v[tr[0]] * g[0] + v[tr[1]] * g[1] + v[tr[2]] * g[2];
    Eigen::Vector2d rot(gu.y(), -gu.x());
    num += area * (gv - rot).squaredNorm();
    den += area * rot.squaredNorm();
  }
  double residual = den > 0 ? std::sqrt(num / den) : 0.0;
  return {v, residual};
}

bool eval_field(const Mesh& m, const Eigen::VectorXd& u, const Eigen::Vector2d& z,
                double* out) {
  for (const auto& tr : m.tri) {
    Eigen::Vector2d a = m.p[tr[0]], b = m.p[tr[1]], c = m.p[tr[2]];
    double det = tri_cross(a, b, c);
    if (det <= 0) continue;
    double l0 = tri_cross(Eigen::Vector2d(z), b, c) / det;
    double l1 = tri_cross(a, Eigen::Vector2d(z), c) / det;
    double l2 = tri_cross(a, b, Eigen::Vector2d(z)) / det;
    double tol = -1e-10;
    if (l0 >= tol && l1 >= tol && l2 >= tol) {
      *out = l0 * u[tr[0]] + l1 * u[tr[1]] + l2 * u[tr[2]];
      return true;
    }
  }
  return false;
}

double mesh_max_edge(const Mesh& m) {
  double h = 0;
  for (const auto& tr : m.tri)
    for (int e = 0; e < 3; ++e)
      h = std::max(h, (m.p[tr[e]] - m.p[tr[(e + 1) % 3]]).norm());
  return h;
}

}  // namespace flexweld
