#include "flexweld/shapes.hpp"

#include "tri_locator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace flexweld {

namespace {

constexpr double kPi = 3.14159265358979323846;

void validate_path(const Polyline& g, const complexd& start, double T,
                   const char* name) {
  if (g.closed) throw std::invalid_argument(std::string(name) + " must be open");
  if (g.vertices.size() < 2)
    throw std::invalid_argument(std::string(name) + " needs at least 2 vertices");
  if (std::abs(g.vertices.front() - start) > 1e-12)
    throw std::invalid_argument(std::string(name) + " has wrong start point");
  complexd p = g.vertices.back();
  if (std::abs(p.real() - T) > 1e-12)
    throw std::invalid_argument(std::string(name) + " must end on the right edge");
  for (const complexd& v : g.vertices) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) ||
        v.real() < -1e-12 || v.real() > T + 1e-12 || v.imag() < -1e-12 ||
        v.imag() > 1 + 1e-12)
      throw std::invalid_argument(std::string(name) + " leaves [0,T]x[0,1]");
  }
  if (!g.is_simple())
    throw std::invalid_argument(std::string(name) + " is not simple");
}

using detail::TriLocator;
using detail::physical_locator;
using detail::image_locator;

Eigen::VectorXd coord_field(const Mesh& m, int axis) {
  Eigen::VectorXd f(m.p.size());
  for (size_t i = 0; i < m.p.size(); ++i) f[i] = axis == 0 ? m.p[i].x() : m.p[i].y();
  return f;
}

double lin_sample(const std::vector<double>& g, double t) {
  int n = static_cast<int>(g.size());
  double s = std::clamp(t, 0.0, 1.0) * (n - 1);
  int i = std::min(static_cast<int>(s), n - 2);
  double f = s - i;
  return (1 - f) * g[i] + f * g[i + 1];
}

// The three-zone corrector alpha: E^{-1} left of the sub-strip, the strip
// interpolation pushed through the sub-strip uniformization inside it, and
// the identity to the right.
struct Corrector {
  const QuadUniformization* qu = nullptr;  // whole region
  const QuadUniformization* qt = nullptr;  // sub-strip between Re=1 and E(Mc)
  TriLocator main_phys, qt_img;
  Eigen::VectorXd qt_px, qt_py;
  double Mc = 0, Mt = 0, guard = 0;
  std::vector<double> G0, G1;

  complexd apply(const complexd& z) const {
    if (z.real() >= guard) return z;
    int k;
    double l[3];
    main_phys.locate(z.real(), z.imag(), &k, l);
    double xr = main_phys.eval(qu->v, k, l);
    double yr = main_phys.eval(qu->u, k, l);
    if (xr >= Mc) return z;
    if (xr <= 1.0) return {xr, yr};
    double s = (xr - 1.0) / (Mc - 1.0);
    double gx = (Mt - 1.0) / (Mc - 1.0) * (xr - 1.0) + 1.0;
    double gy = s * lin_sample(G1, yr) + (1.0 - s) * lin_sample(G0, yr);
    qt_img.locate(gx - 1.0, gy, &k, l);
    return {qt_img.eval(qt_px, k, l), qt_img.eval(qt_py, k, l)};
  }
};

void comb_widths(double T, double M, double* gap_margin, double* wt, double* wg) {
  double X0 = 2 * M;
  double g = std::min(0.25, 0.01 * (T - X0));
  double W = T - X0 - 2 * g;
  double gap_frac = 0.01;
  *gap_margin = g;
  *wt = W * (1 - gap_frac) / 8;
  *wg = W * gap_frac / 7;
}

Polyline comb_gamma1(double T, double M, double depth) {
  double g, wt, wg;
  comb_widths(T, M, &g, &wt, &wg);
  Polyline out;
  out.vertices.emplace_back(0.0, 0.0);
  for (int j = 0; j < 8; ++j) {
    double xl = 2 * M + g + j * (wt + wg);
    if (depth > 1e-12) {
      out.vertices.emplace_back(xl, 0.0);
      out.vertices.emplace_back(xl, depth);
      out.vertices.emplace_back(xl + wt, depth);
      out.vertices.emplace_back(xl + wt, 0.0);
    }
  }
  out.vertices.emplace_back(T, 0.0);
  return out;
}

}  // namespace

ShapeSpec shape_from_paths(double T, Polyline gamma1, Polyline gamma2,
                           MeshOptions opt) {
  if (!(T > 0) || !std::isfinite(T))
    throw std::invalid_argument("shape_from_paths: T must be positive");
  validate_path(gamma1, {0.0, 0.0}, T, "gamma1");
  validate_path(gamma2, {0.0, 1.0}, T, "gamma2");
  complexd p1 = gamma1.vertices.back(), p2 = gamma2.vertices.back();
  if (!(p1.imag() < p2.imag() - 1e-12))
    throw std::invalid_argument("shape_from_paths: need Im p1 < Im p2");
  for (size_t i = 0; i + 1 < gamma1.vertices.size(); ++i)
    for (size_t j = 0; j + 1 < gamma2.vertices.size(); ++j)
      if (segments_intersect(gamma1.vertices[i], gamma1.vertices[i + 1],
                             gamma2.vertices[j], gamma2.vertices[j + 1]))
        throw std::invalid_argument("shape_from_paths: paths intersect");

  ShapeSpec spec;
  spec.T = T;
  spec.gamma1 = gamma1;
  spec.gamma2 = gamma2;
  std::vector<complexd> verts = gamma1.vertices;
  int idx_p1 = static_cast<int>(verts.size()) - 1;
  int idx_p2 = static_cast<int>(verts.size());
  for (auto it = gamma2.vertices.rbegin(); it != gamma2.vertices.rend(); ++it)
    verts.push_back(*it);
  int idx_i = static_cast<int>(verts.size()) - 1;
  spec.region.boundary.vertices = std::move(verts);
  spec.region.boundary.closed = true;
  spec.region.vertex_indices = {0, idx_p1, idx_p2, idx_i};
  spec.region.validate();
  if (!spec.region.boundary.is_simple())
    throw std::invalid_argument("shape_from_paths: region boundary not simple");
  spec.R = quad_modulus(spec.region, opt).modulus;
  return spec;
}

StripInterp strip_interpolation(double M, double M_tilde,
                                const std::vector<double>& G0,
                                const std::vector<double>& G1, int nx) {
  if (!(M > 1) || !std::isfinite(M) || !std::isfinite(M_tilde))
    throw std::invalid_argument("strip_interpolation: M must exceed 1");
  size_t n = G0.size();
  if (n < 2 || G1.size() != n)
    throw std::invalid_argument("strip_interpolation: bad sample arrays");
  for (size_t i = 0; i < n; ++i)
    if (!std::isfinite(G0[i]) || !std::isfinite(G1[i]))
      throw std::invalid_argument("strip_interpolation: non-finite samples");
  if (nx < 2) throw std::invalid_argument("strip_interpolation: nx too small");

  StripInterp out;
  out.M = M;
  out.M_tilde = M_tilde;
  out.G0 = G0;
  out.G1 = G1;
  out.nx = nx;
  out.ny = static_cast<int>(n);
  out.ts.resize(n);
  double dt = 1.0 / (n - 1.0);
  for (size_t i = 0; i < n; ++i) out.ts[i] = i * dt;
  std::vector<double> d0(n), d1(n);
  for (size_t i = 0; i < n; ++i) {
    size_t a = i == 0 ? 0 : i - 1, b = i + 1 == n ? i : i + 1;
    d0[i] = (G0[b] - G0[a]) / ((b - a) * dt);
    d1[i] = (G1[b] - G1[a]) / ((b - a) * dt);
  }
  size_t total = n * nx;
  out.value.resize(total);
  out.ux.resize(total);
  out.vx.resize(total);
  out.vy.resize(total);
  out.mu.resize(total);
  double ux = (M_tilde - 1.0) / (M - 1.0);
  for (size_t iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      double x = 1.0 + (M - 1.0) * ix / (nx - 1.0);
      double s = (x - 1.0) / (M - 1.0);
      size_t id = iy * nx + ix;
      out.value[id] = {ux * (x - 1.0) + 1.0, s * G1[iy] + (1.0 - s) * G0[iy]};
      out.ux[id] = ux;
      out.vx[id] = (G1[iy] - G0[iy]) / (M - 1.0);
      out.vy[id] = s * d1[iy] + (1.0 - s) * d0[iy];
      complexd gz(0.5 * (ux + out.vy[id]), 0.5 * out.vx[id]);
      complexd gzb(0.5 * (ux - out.vy[id]), 0.5 * out.vx[id]);
      if (std::norm(gz) <= std::norm(gzb))
        throw std::runtime_error("strip_interpolation: degenerate Jacobian");
      out.mu[id] = gzb / gz;
      out.sup_mu = std::max(out.sup_mu, std::abs(out.mu[id]));
    }
  }
  return out;
}

AdmissibilityReport admissibility(const ShapeSpec& spec, double M,
                                  MeshOptions opt) {
  if (!(M > 1)) throw std::invalid_argument("admissibility: M must exceed 1");
  if (!(2 * M < spec.T))
    throw std::invalid_argument("admissibility: need 2M < T");
  // Geometric containment of [0,2M]x[0,1]: no boundary edge may enter a
  // slightly shrunk copy of the block, and its corners must lie inside.
  {
    double s = 1e-7;
    const auto& bv = spec.region.boundary.vertices;
    std::array<complexd, 4> corners{complexd(s, s), complexd(2 * M - s, s),
                                    complexd(2 * M - s, 1 - s), complexd(s, 1 - s)};
    for (const auto& c : corners)
      if (!point_in_polygon(c, spec.region.boundary))
        throw std::invalid_argument("admissibility: [0,2M]x[0,1] not contained");
    size_t nb = bv.size();
    for (size_t i = 0; i < nb; ++i) {
      const complexd &a = bv[i], &b = bv[(i + 1) % nb];
      for (const auto& p : {a, b})
        if (p.real() > s && p.real() < 2 * M - s && p.imag() > s &&
            p.imag() < 1 - s)
          throw std::invalid_argument("admissibility: [0,2M]x[0,1] not contained");
      for (int e = 0; e < 4; ++e)
        if (segments_intersect(a, b, corners[e], corners[(e + 1) % 4]))
          throw std::invalid_argument("admissibility: [0,2M]x[0,1] not contained");
    }
  }

  QuadUniformization qu = quad_uniformize(spec.region, opt);

  // Sub-strip right end E(Mc + it): pull the cutoff left until the curve
  // stays inside {Re < M - 0.01} so the dilatation support fits the box.
  double Mc = M;
  const int nt = 49;
  std::vector<complexd> curve(nt);
  for (int attempt = 0;; ++attempt) {
    double max_re = -1e300;
    for (int i = 0; i < nt; ++i) {
      complexd z;
      if (!qu.from_rect({Mc, i / (nt - 1.0)}, &z))
        throw std::runtime_error("admissibility: sub-strip sampling failed");
      curve[i] = z;
      max_re = std::max(max_re, z.real());
    }
    if (max_re <= M - 0.01) break;
    Mc -= (max_re - (M - 0.01)) + 0.01;
    if (attempt >= 5 || Mc <= 1.5)
      throw std::runtime_error("admissibility: sub-strip cutoff failed");
  }
  curve.front() = {curve.front().real(), 0.0};
  curve.back() = {curve.back().real(), 1.0};

  MarkedQuadrilateral qt_quad;
  auto& qv = qt_quad.boundary.vertices;
  qv.emplace_back(1.0, 0.0);
  for (const auto& z : curve)
    if (qv.empty() || std::abs(z - qv.back()) > 1e-9) qv.push_back(z);
  int idx_a2 = static_cast<int>(qv.size()) - 1;
  qv.emplace_back(1.0, 1.0);
  qt_quad.boundary.closed = true;
  qt_quad.vertex_indices = {0, 1, idx_a2, static_cast<int>(qv.size()) - 1};
  qt_quad.validate();
  QuadUniformization qt = quad_uniformize(qt_quad, opt);

  AdmissibilityReport rep;
  rep.M = M;
  rep.M_used = Mc;
  rep.M_tilde = 1.0 + qt.modulus;
  rep.epsilon_bound = std::exp(-kPi * (M - 1) / 2) / M;
  rep.support_box = {0.0, M, 0.0, 1.0};

  Corrector cor;
  cor.qu = &qu;
  cor.qt = &qt;
  cor.main_phys = physical_locator(qu.mesh);
  cor.qt_img = image_locator(qt);
  cor.qt_px = coord_field(qt.mesh, 0);
  cor.qt_py = coord_field(qt.mesh, 1);
  cor.Mc = Mc;
  cor.Mt = rep.M_tilde;
  double max_curve_re = -1e300;
  for (const auto& z : curve) max_curve_re = std::max(max_curve_re, z.real());
  cor.guard = max_curve_re + 0.005;

  // Boundary data of the sub-strip uniformization along its two ends.
  TriLocator qt_phys = physical_locator(qt.mesh);
  const int ng = 65;
  cor.G0.resize(ng);
  cor.G1.resize(ng);
  rep.level_dev.resize(ng);
  for (int i = 0; i < ng; ++i) {
    double t = std::clamp(i / (ng - 1.0), 1e-6, 1.0 - 1e-6);
    int k;
    double l[3];
    qt_phys.locate(1.0 + 1e-7 * (Mc - 1.0), t, &k, l);
    cor.G0[i] = qt_phys.eval(qt.u, k, l);
    complexd zc;
    if (!qu.from_rect({Mc, i / (ng - 1.0)}, &zc))
      throw std::runtime_error("admissibility: boundary sampling failed");
    rep.level_dev[i] = zc.imag() - i / (ng - 1.0);
    zc -= complexd(1e-6, 0.0);
    qt_phys.locate(zc.real(), zc.imag(), &k, l);
    cor.G1[i] = qt_phys.eval(qt.u, k, l);
  }
  rep.level_dev.front() = 0.0;
  rep.level_dev.back() = 0.0;
  rep.strip = strip_interpolation(Mc, rep.M_tilde, cor.G0, cor.G1, ng);

  // Centered-difference dilatation over the active window, with a doubled
  // grid as convergence guard.  A fixed collar keeps stencils off the
  // boundary and identical between the two grids.
  double X = std::min(spec.T, M + 1.0);
  double collar = 0.01;
  auto grid_sup = [&](int n) {
    double worst = 0.0;
    double h = 0.5 * std::min(X / (n - 1.0), 1.0 / (n - 1.0));
    for (int iy = 0; iy < n; ++iy) {
      double y = iy / (n - 1.0);
      if (y < collar || y > 1 - collar) continue;
      for (int ix = 0; ix < n; ++ix) {
        double x = X * ix / (n - 1.0);
        if (x < collar) continue;
        if (x - h >= cor.guard) continue;  // identity zone, mu = 0
        complexd fx = (cor.apply({x + h, y}) - cor.apply({x - h, y})) / (2 * h);
        complexd fy = (cor.apply({x, y + h}) - cor.apply({x, y - h})) / (2 * h);
        complexd fz = 0.5 * (fx - complexd(0, 1) * fy);
        complexd fzb = 0.5 * (fx + complexd(0, 1) * fy);
        if (std::abs(fz) < 1e-12) continue;
        worst = std::max(worst, std::abs(fzb) / std::abs(fz));
      }
    }
    return worst;
  };
  rep.measured_sup_dilatation = grid_sup(256);
  rep.refined_sup_dilatation = grid_sup(512);

  // Leakage outside the support box: the corrector is the identity there.
  {
    double worst = 0.0;
    double h = 1e-4;
    for (int iy = 1; iy < 16; ++iy) {
      double y = iy / 16.0;
      for (int ix = 0; ix <= 64; ++ix) {
        double x = M + 0.02 + (spec.T - M - 0.04) * ix / 64.0;
        bool ok = true;
        for (const complexd& q :
             {complexd(x + h, y), complexd(x - h, y), complexd(x, y + h),
              complexd(x, y - h)})
          if (!point_in_polygon(q, spec.region.boundary)) ok = false;
        if (!ok) continue;
        complexd fx = (cor.apply({x + h, y}) - cor.apply({x - h, y})) / (2 * h);
        complexd fy = (cor.apply({x, y + h}) - cor.apply({x, y - h})) / (2 * h);
        complexd fz = 0.5 * (fx - complexd(0, 1) * fy);
        complexd fzb = 0.5 * (fx + complexd(0, 1) * fy);
        if (std::abs(fz) < 1e-12) continue;
        worst = std::max(worst, std::abs(fzb) / std::abs(fz));
      }
    }
    rep.support_leakage = worst;
  }

  // alpha composed with E must restrict to the identity on [0,1]^2.
  {
    TriLocator main_img = image_locator(qu);
    Eigen::VectorXd px = coord_field(qu.mesh, 0), py = coord_field(qu.mesh, 1);
    double worst = 0.0;
    for (int iy = 0; iy <= 32; ++iy)
      for (int ix = 0; ix <= 32; ++ix) {
        double wx = ix / 32.0, wy = iy / 32.0;
        int k;
        double l[3];
        main_img.locate(wx, wy, &k, l);
        complexd z(main_img.eval(px, k, l), main_img.eval(py, k, l));
        worst = std::max(worst, std::abs(cor.apply(z) - complexd(wx, wy)));
      }
    rep.corrector_identity_dev = worst;
  }
  {
    double worst = 0.0;
    for (int k = 0; k < 4; ++k) {
      complexd v = spec.region.boundary.vertices[spec.region.vertex_indices[k]];
      worst = std::max(worst, std::abs(cor.apply(v) - v));
    }
    rep.vertex_fix_dev = worst;
  }

  rep.fitted_C =
      rep.strip.sup_mu * (M - 1) * std::exp(kPi * (M - 1) / 2) / 2.0;
  rep.epsilon_bound_alt =
      2.0 * rep.fitted_C * std::exp(-kPi * (M - 1) / 2) / (M - 1);
  return rep;
}

double leftover_percentage(const ShapeSpec& spec) {
  double area = polygon_area(spec.region.boundary);
  return 1.0 - area / spec.T;
}

int M_for_eps(double eps) {
  if (!(eps > 0) || !(eps < 1))
    throw std::invalid_argument("M_for_eps: eps must lie in (0,1)");
  for (int M = 2; M <= 500; ++M)
    if (std::log(1.0 / eps) < kPi * (M - 1) / 2.0 + std::log(M - 1.0)) return M;
  throw std::invalid_argument("M_for_eps: eps too small");
}

double min_feasible_T(double eps, double a) {
  if (!(a > 0) || !(a < 1))
    throw std::invalid_argument("min_feasible_T: a must lie in (0,1)");
  return 4.0 * M_for_eps(eps) / (1.0 - a);
}

ShapeSpec shape_with_leftover(double eps, double a, double T) {
  if (!(a > 0) || !(a < 1))
    throw std::invalid_argument("shape_with_leftover: a must lie in (0,1)");
  int M = M_for_eps(eps);
  double minT = 4.0 * M / (1.0 - a);
  if (!(T > minT)) {
    std::ostringstream os;
    os << "shape_with_leftover: infeasible, need T > " << minT;
    throw InfeasibleShape(os.str(), minT);
  }
  double g, wt, wg;
  comb_widths(T, M, &g, &wt, &wg);
  double dmax = 0.995;
  if (8 * wt * dmax < a * T)
    throw std::runtime_error(
        "shape_with_leftover: leftover target beyond comb capacity");
  // Leftover area is monotone in the tooth depth; bisect on exact polygon
  // area.
  double lo = 0.0, hi = dmax;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    (8 * wt * mid / T < a ? lo : hi) = mid;
  }
  double depth = 0.5 * (lo + hi);
  Polyline g2;
  g2.vertices = {complexd(0.0, 1.0), complexd(T, 1.0)};
  ShapeSpec spec = shape_from_paths(T, comb_gamma1(T, M, depth), g2);
  double got = leftover_percentage(spec);
  if (std::abs(got - a) > 1e-3)
    throw std::runtime_error("shape_with_leftover: bisection failed");
  return spec;
}

std::pair<double, std::vector<ShapeSpec>> uniform_R_family(
    const std::vector<double>& T_list, double eps, double a) {
  if (T_list.empty())
    throw std::invalid_argument("uniform_R_family: empty T list");
  std::vector<ShapeSpec> specs;
  for (double T : T_list) specs.push_back(shape_with_leftover(eps, a, T));
  double R = 0.0;
  for (const auto& s : specs) R = std::max(R, s.R);

  for (auto& s : specs) {
    if (s.R >= R * (1.0 - 0.005)) continue;
    double T = s.T;
    auto eval = [&](double gap) {
      double q = 0.5 * (1.0 - gap);
      Polyline g1 = s.gamma1, g2 = s.gamma2;
      g1.vertices.emplace_back(T, q);
      g2.vertices.emplace_back(T, 1.0 - q);
      MeshOptions o;
      o.corner_passes = std::clamp(
          static_cast<int>(std::ceil(std::log2(T / gap))) + 3, 4, 44);
      return shape_from_paths(T, g1, g2, o);
    };
    double gap_lo = 1.0;  // untouched shape, modulus s.R < R
    double gap_hi = 0.25;
    ShapeSpec cand = eval(gap_hi);
    int tries = 0;
    while (cand.R < R) {
      gap_lo = gap_hi;
      gap_hi *= 0.2;
      // The modulus gains only ln(10)/pi per decade of gap, so large
      // modulus differences are out of geometric reach.
      if (gap_hi < 1e-7 || ++tries > 25)
        throw std::runtime_error(
            "uniform_R_family: required right-end gap below geometric "
            "resolution");
      cand = eval(gap_hi);
    }
    // Geometric bisection on the gap; the modulus grows like log(1/gap).
    for (int it = 0; it < 40 && std::abs(cand.R - R) > 0.005 * R; ++it) {
      double mid = std::sqrt(gap_lo * gap_hi);
      ShapeSpec trial = eval(mid);
      if (trial.R < R)
        gap_lo = mid;
      else
        gap_hi = mid;
      cand = trial;
    }
    if (std::abs(cand.R - R) > 0.01 * R)
      throw std::runtime_error("uniform_R_family: modulus matching failed");
    s = cand;
  }
  return {R, specs};
}

std::vector<StripInterp> dilatation_decay_family(
    const AdmissibilityReport& anchor, int M_lo, int M_hi) {
  if (anchor.strip.ny < 2 || anchor.strip.ts.empty())
    throw std::invalid_argument("dilatation_decay_family: empty anchor");
  if (M_lo < 2 || M_hi < M_lo)
    throw std::invalid_argument("dilatation_decay_family: bad range");
  if (anchor.level_dev.size() != anchor.strip.ts.size())
    throw std::invalid_argument("dilatation_decay_family: anchor lacks profile");
  double Ma = anchor.M_used, Mta = anchor.M_tilde;
  size_t n = anchor.strip.ts.size();
  std::vector<StripInterp> out;
  for (int M = M_lo; M <= M_hi; ++M) {
    double r1 = std::exp(-kPi * (M - Ma) / 2.0), r2 = r1 * r1;
    std::vector<double> g0(n), g1(n);
    for (size_t i = 0; i < n; ++i) {
      double t = anchor.strip.ts[i];
      g0[i] = t + (anchor.strip.G0[i] - t) * r2;
      g1[i] = t + anchor.level_dev[i] * r1 + (anchor.strip.G1[i] - t) * r2;
    }
    out.push_back(strip_interpolation(M, M + (Mta - Ma) * r1, g0, g1,
                                      anchor.strip.nx));
  }
  return out;
}

ShapeSpec decay_anchor_shape() {
  // Teeth start just past the containment block [0,4] of an M = 2
  // measurement, so the level-curve response at Re = 2 is strong.
  double T = 10.0, depth = 0.8, x = 4.05, wt = 0.55, wg = 0.15;
  Polyline g1;
  g1.vertices.emplace_back(0.0, 0.0);
  for (int j = 0; j < 8; ++j) {
    double xl = x + j * (wt + wg);
    g1.vertices.emplace_back(xl, 0.0);
    g1.vertices.emplace_back(xl, depth);
    g1.vertices.emplace_back(xl + wt, depth);
    g1.vertices.emplace_back(xl + wt, 0.0);
  }
  g1.vertices.emplace_back(T, 0.0);
  Polyline g2;
  g2.vertices = {complexd(0.0, 1.0), complexd(T, 1.0)};
  return shape_from_paths(T, g1, g2);
}

}  // namespace flexweld
