#include "flexweld/weld.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <cstdio>
#include <cstdlib>

#include "flexweld/dimension.hpp"
#include "tri_locator.hpp"

namespace flexweld {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_pos(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0 ? a + kTwoPi : a;
}

// Counterclockwise angular distance from a to b in (0, 2*pi].
double ccw_delta(double a, double b) {
  double d = wrap_pos(b - a);
  return d <= 1e-15 ? kTwoPi : d;
}

// Signed wrap into (-pi, pi].
double wrap_pm(double a) {
  a = wrap_pos(a);
  return a > kPi ? a - kTwoPi : a;
}

complexd centroid_of(const Polyline& p) {
  complexd c = 0;
  for (const complexd& v : p.vertices) c += v;
  return c / static_cast<double>(p.vertices.size());
}

// Point at arc-length fraction t in [0,1) along a closed polyline.
complexd point_at_fraction(const Polyline& p, double t) {
  const auto& v = p.vertices;
  size_t n = v.size();
  double total = 0;
  for (size_t i = 0; i < n; ++i) total += std::abs(v[(i + 1) % n] - v[i]);
  double want = wrap_pos(t * kTwoPi) / kTwoPi * total;
  for (size_t i = 0; i < n; ++i) {
    double e = std::abs(v[(i + 1) % n] - v[i]);
    if (want <= e || i + 1 == n) {
      double s = e > 0 ? want / e : 0.0;
      return v[i] + s * (v[(i + 1) % n] - v[i]);
    }
    want -= e;
  }
  return v[0];
}

// Periodic linear interpolation of a table sampled at uniform angles.
complexd interp_table(const std::vector<double>& thetas,
                      const std::vector<complexd>& vals, double theta) {
  size_t n = thetas.size();
  double step = kTwoPi / n;
  double pos = wrap_pos(theta) / step;
  size_t i0 = static_cast<size_t>(pos) % n;
  double frac = pos - std::floor(pos);
  return vals[i0] + frac * (vals[(i0 + 1) % n] - vals[i0]);
}

// Farthest (inner boundary) or nearest (outer boundary) positive intersection
// of the ray c + r e^{i phi} with the closed polyline.
bool ray_radius(const Polyline& p, const complexd& c, double phi, bool farthest,
                double* out) {
  complexd d(std::cos(phi), std::sin(phi));
  const auto& v = p.vertices;
  size_t n = v.size();
  bool found = false;
  double best = 0;
  for (size_t i = 0; i < n; ++i) {
    complexd a = v[i], b = v[(i + 1) % n];
    complexd e = b - a, w = a - c;
    double det = d.real() * (-e.imag()) - d.imag() * (-e.real());
    if (std::abs(det) < 1e-300) continue;
    double r = (w.real() * (-e.imag()) - w.imag() * (-e.real())) / det;
    double t = (d.real() * w.imag() - d.imag() * w.real()) / det;
    if (r <= 0 || t < -1e-12 || t > 1 + 1e-12) continue;
    if (!found || (farthest ? r > best : r < best)) {
      best = r;
      found = true;
    }
  }
  if (found) *out = best;
  return found;
}

struct FieldEval {
  detail::TriLocator loc;
  Eigen::VectorXd u;

  double at(const complexd& z) const {
    int k;
    double l[3];
    loc.locate(z.real(), z.imag(), &k, l);
    return loc.eval(u, k, l);
  }
};

Polyline downsample(const Polyline& p, size_t max_n) {
  if (p.vertices.size() <= max_n) return p;
  Polyline out;
  out.closed = p.closed;
  size_t stride = (p.vertices.size() + max_n - 1) / max_n;
  for (size_t i = 0; i < p.vertices.size(); i += stride)
    out.vertices.push_back(p.vertices[i]);
  return out;
}

void push_dedup(std::vector<complexd>& v, const complexd& z) {
  if (v.empty() || std::abs(v.back() - z) > 1e-11) v.push_back(z);
}

MeshOptions coarse_options() {
  MeshOptions opt;
  opt.target_divisions = 8;
  opt.corner_passes = 1;
  return opt;
}

}  // namespace

double IterationConfig::budget_K() const {
  double p = 1.0;
  for (double e : eps_seq) p *= 1.0 + e;
  return p;
}

void IterationConfig::validate() const {
  if (steps < 1 || steps > 8) throw std::invalid_argument("steps must be in [1,8]");
  if (samples < 64) throw std::invalid_argument("samples must be >= 64");
  if (!(target_ratio > 0 && target_ratio < 1))
    throw std::invalid_argument("target_ratio must lie in (0,1)");
  if (static_cast<int>(eps_seq.size()) < steps)
    throw std::invalid_argument("eps_seq shorter than steps");
  for (double e : eps_seq)
    if (!(e > 0) || !std::isfinite(e))
      throw std::invalid_argument("eps_seq entries must be positive");
  if (mode == WeldMode::positive_area) {
    if (static_cast<int>(a_seq.size()) < steps)
      throw std::invalid_argument("a_seq shorter than steps");
    for (double a : a_seq)
      if (!(a > 0 && a < 1))
        throw std::invalid_argument("a_seq entries must lie in (0,1)");
  }
  if (mode == WeldMode::dim_s && !(s > 1.0 && s < 2.0))
    throw std::invalid_argument("dim_s exponent must lie in (1,2)");
  if (!omega0.closed || !omega0_star.closed || omega0.vertices.size() < 3 ||
      omega0_star.vertices.size() < 3)
    throw std::invalid_argument("boundaries must be closed polylines");
  if (!N_schedule.empty() && static_cast<int>(N_schedule.size()) < steps)
    throw std::invalid_argument("N_schedule shorter than steps");
  for (int n : N_schedule)
    if (n < 4 || n > 64) throw std::invalid_argument("N_schedule entries in [4,64]");
}

Polyline IterationState::inner_boundary() const {
  Polyline p;
  p.vertices = f;
  p.closed = true;
  return p;
}

Polyline IterationState::outer_boundary() const {
  Polyline p;
  p.vertices = g;
  p.closed = true;
  return p;
}

complexd IterationState::g_at(double theta) const {
  return interp_table(thetas, g, theta);
}

complexd IterationState::g_comp(double theta) const {
  if (tilde_s.empty()) return g_at(h.lift(theta));
  double th = wrap_pos(theta);
  size_t m = tilde_s.size();
  size_t pos = static_cast<size_t>(
      std::upper_bound(tilde_s.begin(), tilde_s.end(), th) - tilde_s.begin());
  size_t hi = pos % m;
  size_t lo = (pos + m - 1) % m;
  double t0 = tilde_s[lo], t1 = tilde_s[hi];
  double den = wrap_pos(t1 - t0);
  if (den < 1e-15) return g[tilde_idx[lo]];
  double w = std::clamp(wrap_pos(th - t0) / den, 0.0, 1.0);
  const complexd& a = g[tilde_idx[lo]];
  const complexd& b = g[tilde_idx[hi]];
  return a + w * (b - a);
}

void IterationState::refresh_mismatch() {
  size_t n = thetas.size();
  mismatch.resize(n);
  sup_mismatch = 0;
  for (size_t i = 0; i < n; ++i) {
    mismatch[i] = std::abs(f[i] - g_comp(thetas[i]));
    sup_mismatch = std::max(sup_mismatch, mismatch[i]);
  }
  area = polygon_area(outer_boundary()) - polygon_area(inner_boundary());
}

IterationState init(const IterationConfig& config) {
  config.validate();
  // Closures must be disjoint with omega0 inside omega0_star.
  const auto& in = config.omega0;
  const auto& out = config.omega0_star;
  for (const complexd& v : in.vertices)
    if (!point_in_polygon(v, out))
      throw std::invalid_argument("init: omega0 not inside omega0_star");
  for (size_t i = 0; i < in.vertices.size(); ++i)
    for (size_t j = 0; j < out.vertices.size(); ++j)
      if (segments_intersect(in.vertices[i],
                             in.vertices[(i + 1) % in.vertices.size()],
                             out.vertices[j],
                             out.vertices[(j + 1) % out.vertices.size()]))
        throw std::invalid_argument("init: boundary closures overlap");

  IterationState st;
  st.h = config.h;
  st.step = 0;
  int n = config.samples;
  st.thetas.resize(n);
  st.f.resize(n);
  st.g.resize(n);
  for (int i = 0; i < n; ++i) {
    st.thetas[i] = kTwoPi * i / n;
    // Arc-length proportional boundary sampling for f_0 and g_0.
    st.f[i] = point_at_fraction(in, st.thetas[i] / kTwoPi);
    st.g[i] = point_at_fraction(out, st.thetas[i] / kTwoPi);
  }
  st.tilde.resize(n);
  std::vector<std::pair<double, size_t>> order(n);
  for (int i = 0; i < n; ++i) {
    double tl = st.h.inverse_lift(st.thetas[i]);
    st.tilde[i] = tl - kTwoPi * std::floor(tl / kTwoPi);
    order[i] = {st.tilde[i], static_cast<size_t>(i)};
  }
  std::sort(order.begin(), order.end());
  st.tilde_s.resize(n);
  st.tilde_idx.resize(n);
  for (int i = 0; i < n; ++i) {
    st.tilde_s[i] = order[i].first;
    st.tilde_idx[i] = order[i].second;
  }
  st.refresh_mismatch();
  return st;
}

FoliationSnapshot foliate(const IterationState& state,
                          const std::vector<Angle>& x_points) {
  // Full-resolution boundaries: downsampling shortcuts sharp notches and can
  // push the near-touching curves across each other.
  Polyline inner = downsample(state.inner_boundary(), 1024);
  Polyline outer = downsample(state.outer_boundary(), 1024);
  AnnulusField af = annulus_field(inner, outer, coarse_options());
  FieldEval fe;
  fe.loc = detail::physical_locator(af.mesh);
  fe.u = af.u;
  complexd c = centroid_of(inner);

  auto ray_level = [&](double phi, double level) {
    double rlo, rhi;
    if (!ray_radius(inner, c, phi, true, &rlo) ||
        !ray_radius(outer, c, phi, false, &rhi))
      throw std::runtime_error("foliate: annulus not star-shaped about centroid");
    for (int it = 0; it < 42; ++it) {
      double rm = 0.5 * (rlo + rhi);
      complexd z = c + std::polar(rm, phi);
      (fe.at(z) < level ? rlo : rhi) = rm;
    }
    return c + std::polar(0.5 * (rlo + rhi), phi);
  };

  FoliationSnapshot snap;
  const int nm = 400;
  snap.midcurve.closed = true;
  for (int j = 0; j < nm; ++j)
    snap.midcurve.vertices.push_back(ray_level(kTwoPi * j / nm, 0.5));

  // Leaf levels: only the vertices are guaranteed to sit inside the annulus
  // at their potential level, so the count must outresolve boundary lobes.
  const int m = 24;
  for (const Angle& x : x_points) {
    complexd a = interp_table(state.thetas, state.f, x.theta);
    complexd b = state.g_comp(x.theta);
    double alpha = std::arg(a - c);
    double beta = alpha + wrap_pm(std::arg(b - c) - alpha);
    Polyline leaf;
    leaf.vertices.push_back(a);
    complexd mid{};
    for (int j = 1; j < m; ++j) {
      double phi = alpha + (beta - alpha) * j / m;
      complexd p = ray_level(phi, static_cast<double>(j) / m);
      if (j == m / 2) {
        // Snap the midpoint to the nearest midcurve ray sample so the
        // quadrilateral's midcurve side joins the leaf without a zigzag.
        size_t idx = static_cast<size_t>(std::lround(
                         wrap_pos(phi) / (kTwoPi / nm))) %
                     static_cast<size_t>(nm);
        p = snap.midcurve.vertices[idx];
        mid = p;
      }
      leaf.vertices.push_back(p);
    }
    leaf.vertices.push_back(b);
    snap.angles.push_back(x.theta);
    snap.leaves.push_back(std::move(leaf));
    snap.midpoints.push_back(mid);
  }
  return snap;
}

std::vector<MarkedQuadrilateral> build_quads(const IterationState& state,
                                             const FoliationSnapshot& snapshot,
                                             std::vector<double>* moduli) {
  size_t K = snapshot.angles.size();
  if (K < 2) throw std::invalid_argument("build_quads: need at least 2 leaves");
  complexd c = centroid_of(snapshot.midcurve);
  size_t ns = state.thetas.size();
  double step = kTwoPi / ns;
  const int mid_idx =
      static_cast<int>(snapshot.leaves.front().vertices.size() - 1) / 2;

  std::vector<MarkedQuadrilateral> quads;
  if (moduli) moduli->clear();
  for (size_t k = 0; k < K; ++k) {
    size_t k1 = (k + 1) % K;
    double xa = snapshot.angles[k], xb = snapshot.angles[k1];
    const Polyline& la = snapshot.leaves[k];
    const Polyline& lb = snapshot.leaves[k1];

    std::vector<complexd> v;
    std::array<int, 4> vi{};
    // a1: lower half of leaf k, from f(x_k) up to y_k.
    vi[0] = 0;
    for (int j = 0; j <= mid_idx; ++j) push_dedup(v, la.vertices[j]);
    vi[1] = static_cast<int>(v.size()) - 1;
    // b1: midcurve segment from y_k to y_{k+1}, counterclockwise.  The
    // midpoints are snapped midcurve vertices, so walk the vertex ring
    // directly between them.
    size_t nmid = snapshot.midcurve.vertices.size();
    {
      auto nearest = [&](const complexd& p) {
        size_t best = 0;
        double bd = 1e300;
        for (size_t j = 0; j < nmid; ++j) {
          double d = std::abs(snapshot.midcurve.vertices[j] - p);
          if (d < bd) {
            bd = d;
            best = j;
          }
        }
        return best;
      };
      size_t ia = nearest(snapshot.midpoints[k]);
      size_t ib = nearest(snapshot.midpoints[k1]);
      for (size_t j = (ia + 1) % nmid; j != ib; j = (j + 1) % nmid)
        push_dedup(v, snapshot.midcurve.vertices[j]);
    }
    push_dedup(v, snapshot.midpoints[k1]);
    vi[2] = static_cast<int>(v.size()) - 1;
    // a2: lower half of leaf k+1, from y_{k+1} down to f(x_{k+1}).
    for (int j = mid_idx - 1; j >= 0; --j) push_dedup(v, lb.vertices[j]);
    vi[3] = static_cast<int>(v.size()) - 1;
    // b2: inner boundary arc from f(x_{k+1}) back to f(x_k), clockwise.
    double arc = ccw_delta(xa, xb);
    size_t i0 = static_cast<size_t>(std::ceil(wrap_pos(xa) / step));
    std::vector<complexd> fwd;
    for (size_t q = 0; q < ns; ++q) {
      size_t i = (i0 + q) % ns;
      if (wrap_pos(state.thetas[i] - xa) >= arc - 1e-12) break;
      fwd.push_back(state.f[i]);
    }
    for (auto it = fwd.rbegin(); it != fwd.rend(); ++it) push_dedup(v, *it);
    if (std::abs(v.back() - v.front()) < 1e-11) v.pop_back();

    MarkedQuadrilateral Q;
    Q.boundary.vertices = v;
    Q.boundary.closed = true;
    Q.vertex_indices = vi;
    try {
      Q.validate();
    } catch (const std::exception& e) {
      if (std::getenv("FLEXWELD_DEBUG")) {
        std::fprintf(stderr, "quad %zu invalid: %s\n", k, e.what());
        FILE* fp = std::fopen("/tmp/badquad.txt", "w");
        for (const complexd& p : v)
          std::fprintf(fp, "%.8f %.8f\n", p.real(), p.imag());
        std::fprintf(fp, "# vi %d %d %d %d\n", vi[0], vi[1], vi[2], vi[3]);
        std::fclose(fp);
      }
      throw;
    }
    quads.push_back(std::move(Q));
    if (moduli) moduli->push_back(quad_modulus(quads.back(), coarse_options()).modulus);
  }
  return quads;
}

namespace {

// Sector index: largest k with x_k <= theta counterclockwise.
size_t sector_of(const std::vector<double>& xs, double theta) {
  for (size_t k = 0; k < xs.size(); ++k) {
    double span = ccw_delta(xs[k], xs[(k + 1) % xs.size()]);
    if (wrap_pos(theta - xs[k]) < span) return k;
  }
  return 0;
}

bool midcurve_hit(const Polyline& mc, const complexd& c, double phi,
                  complexd* out) {
  double r;
  if (!ray_radius(mc, c, phi, false, &r)) return false;
  *out = c + std::polar(r, phi);
  return true;
}

}  // namespace

IterationState extend_step(const IterationState& state, const SlitDomain& sd,
                           const std::vector<ShapeSpec>& shapes,
                           const FoliationSnapshot& snapshot,
                           const std::vector<MarkedQuadrilateral>& quads,
                           StepMetrics* metrics) {
  if (shapes.empty()) throw std::invalid_argument("extend_step: no shapes");
  size_t K = quads.size();
  if (snapshot.angles.size() != K || sd.slit_angles.size() != K)
    throw std::invalid_argument("extend_step: sector/quad count mismatch");
  if (state.E_used.empty())
    throw std::logic_error("extend_step: no certificate set on the state");

  IterationState next = state;
  size_t n = state.thetas.size();
  next.f_target.assign(n, std::nullopt);
  next.g_target.assign(n, std::nullopt);

  // Shape and quadrilateral uniformizations.
  std::vector<QuadUniformization> shape_u;
  shape_u.reserve(shapes.size());
  for (const ShapeSpec& s : shapes)
    shape_u.push_back(quad_uniformize(s.region, coarse_options()));
  std::vector<QuadUniformization> qu;
  qu.reserve(K);
  for (const auto& Q : quads) qu.push_back(quad_uniformize(Q, coarse_options()));

  // Per-sector slit geometry: angular span and reference outer radius.
  std::vector<double> psi(K), dpsi(K), rbar(K, 1.0);
  for (size_t k = 0; k < K; ++k) {
    psi[k] = sd.slit_angles[k];
    dpsi[k] = ccw_delta(psi[k], sd.slit_angles[(k + 1) % K]);
  }
  for (const auto& [ang, w] : sd.boundary_map) {
    size_t k = sector_of(snapshot.angles, ang.theta);
    rbar[k] = std::max(rbar[k], std::abs(w));
  }
  std::vector<double> Rk(K);
  for (size_t k = 0; k < K; ++k)
    Rk[k] = std::log(std::max(rbar[k], 1.0 + 1e-9)) / dpsi[k];
  if (std::getenv("FLEXWELD_DEBUG")) {
    for (size_t k = 0; k < K; ++k)
      std::fprintf(stderr, "sector %zu: Rk=%.4f Mk=%.4f dpsi=%.4f rbar=%.4f\n",
                   k, Rk[k], qu[k].modulus, dpsi[k], rbar[k]);
  }

  // Composite W_k -> [0,R_k]x[0,1] -> shape -> Q_k in sector coordinates
  // (xi along the modulus direction, zeta across).  Both hand-offs are
  // right-aligned so the sigma_k end of the sector meets the sigma_k side of
  // Q_k; they are plain translations (conformal) whenever the moduli nest
  // (R_k <= R_shape and T_shape <= T_k) and compress only otherwise.
  // Returns false when a rectangle point falls outside the covered image of
  // the piecewise-linear uniformization (possible next to very jagged quad
  // boundaries); callers skip such stencil points rather than differencing a
  // garbage value.
  auto composite = [&](size_t k, double xi, double zeta, complexd* out) {
    const QuadUniformization& su = shape_u[k % shape_u.size()];
    const ShapeSpec& sp = shapes[k % shapes.size()];
    double Rs = su.modulus, Mk = qu[k].modulus;
    double ze = std::clamp(zeta, 1e-3, 1.0 - 1e-3);
    if (std::abs(Rs - sp.T) <= 0.05 * sp.T) {
      // Rectangle shape: its embedding acts as an identity block, so the
      // outer collar of the sector (the sub-rectangle of modulus T_k against
      // the outer boundary) translates conformally onto Q_k's rectangle.
      double vq = std::clamp(xi - (Rk[k] - Mk), 0.0, Mk * (1.0 - 1e-4));
      return qu[k].from_rect(complexd(vq, ze), out);
    }
    // General shape: right-aligned hand-offs, compressing when moduli force
    // it; the measured dilatation charges the mismatch to the ledger.
    double s1 = std::min(1.0, Rs / Rk[k]);
    double xs = std::clamp(Rs - (Rk[k] - xi) * s1, 0.0, Rs * (1.0 - 1e-4));
    complexd zs;
    if (!su.from_rect(complexd(xs, ze), &zs)) return false;
    double s2 = std::min(1.0, Mk / sp.T);
    double vq = std::clamp(Mk - (sp.T - zs.real()) * s2, 0.0, Mk * (1.0 - 1e-4));
    return qu[k].from_rect(
        complexd(vq, std::clamp(zs.imag(), 1e-3, 1.0 - 1e-3)), out);
  };

  // Targets sit on the midcurve, hit by a ray from the centroid whose angle
  // is a monotone remap of the sector coordinate into the certificate arc's
  // own angular window.  Confining the angle to the arc window keeps the
  // moved lobe away from the gap midpoints where the next step's leaves
  // anchor, and monotone angles keep the new boundary a radial graph (no
  // knots, star-shaped about the centroid).
  complexd c = centroid_of(snapshot.midcurve);
  std::vector<double> alo(K, 0.0), awid(K, 0.0);
  for (const Arc& a : state.E_used.arcs()) {
    size_t k = sector_of(snapshot.angles, a.midpoint().theta);
    complexd plo = interp_table(state.thetas, state.f, wrap_pos(a.lo.theta));
    complexd phi_p =
        interp_table(state.thetas, state.f, wrap_pos(a.lo.theta + a.length()));
    alo[k] = wrap_pos(std::arg(plo - c));
    awid[k] = ccw_delta(alo[k], wrap_pos(std::arg(phi_p - c)));
  }

  bool contained = true;
  auto zeta_of = [&](double th, size_t* kk) {
    size_t k = sector_of(snapshot.angles, th);
    *kk = k;
    auto [r, ang] = sd.boundary_polar(th);
    (void)r;
    return wrap_pos(ang - psi[k]) / dpsi[k];
  };
  auto window_hit = [&](size_t k, double zeta) {
    double phi = alo[k] + (0.05 + 0.9 * std::clamp(zeta, 0.0, 1.0)) * awid[k];
    complexd y;
    if (midcurve_hit(snapshot.midcurve, c, phi, &y)) return y;
    return snapshot.midpoints[k];
  };
  auto target_for = [&](double th) {
    size_t k;
    double zeta = zeta_of(th, &k);
    return window_hit(k, zeta);
  };

  // f-side targets with per-sector isotonic zeta (the conformal boundary
  // argument is monotone, but its sampled table can jitter at arc ends).
  {
    std::vector<double> zf(n, -1.0);
    std::vector<size_t> kf(n, 0);
    for (size_t i = 0; i < n; ++i) {
      double th = state.thetas[i];
      if (!state.E_used.contains(Angle(th))) continue;
      zf[i] = zeta_of(th, &kf[i]);
    }
    for (size_t i = 0; i < n; ++i) {
      if (zf[i] < 0.0) continue;
      size_t prev = (i + n - 1) % n;
      if (zf[prev] >= 0.0 && kf[prev] == kf[i] && zf[i] < zf[prev])
        zf[i] = zf[prev];
      next.f_target[i] = window_hit(kf[i], zf[i]);
    }
  }

  // g-side targets: the weld identifies g_{n+1}(h(x)) with f_{n+1}(x) on the
  // certificate set, so each moved g sample is routed through the same
  // composite at its pre-image angle.
  for (size_t j = 0; j < n; ++j) {
    double tilde = state.tilde[j];
    if (!state.E_used.contains(Angle(tilde))) continue;
    next.g_target[j] = target_for(tilde);
  }
  // Dilate the moved g-set by one sample at each image edge; otherwise the
  // interpolated g value next to an edge blends a moved and an unmoved sample
  // and the mismatch there barely contracts.  The extra sample is routed to
  // the composite at the nearest certificate-arc endpoint.
  {
    std::vector<char> border(n, 0);
    for (size_t j = 0; j < n; ++j) {
      if (next.g_target[j]) continue;
      if (next.g_target[(j + 1) % n] || next.g_target[(j + n - 1) % n])
        border[j] = 1;
    }
    for (size_t j = 0; j < n; ++j) {
      if (!border[j]) continue;
      double tilde = state.tilde[j];
      double bestd = 1e300, bestth = tilde;
      for (const Arc& a : state.E_used.arcs()) {
        double len = a.length();
        for (double end : {a.lo.theta + 1e-9 * len,
                           a.lo.theta + (1.0 - 1e-9) * len}) {
          double d = std::abs(wrap_pm(end - tilde));
          if (d < bestd) {
            bestd = d;
            bestth = wrap_pos(end);
          }
        }
      }
      next.g_target[j] = target_for(bestth);
    }
  }

  // Measured sup dilatation of the composite on a sector grid.
  double dil = 0.0;
  for (size_t k = 0; k < K; ++k) {
    // Sample inside the collar that actually maps onto Q_k.
    double depth = std::min(Rk[k], qu[k].modulus);
    double d = std::min(0.08, depth / 16.0);
    for (int gi = 1; gi <= 7; ++gi)
      for (int gj = 1; gj <= 3; ++gj) {
        double xi = Rk[k] - (0.15 + 0.7 * (gi - 1) / 6.0) * depth;
        double ze = 0.25 * gj;
        complexd c0, xp, xm, yp, ym;
        if (!composite(k, xi, ze, &c0) || !composite(k, xi + d, ze, &xp) ||
            !composite(k, xi - d, ze, &xm) || !composite(k, xi, ze + d, &yp) ||
            !composite(k, xi, ze - d, &ym))
          continue;
        {
          complexd qc = centroid_of(quads[k].boundary);
          if (!point_in_polygon(c0 + 0.03 * (qc - c0), quads[k].boundary))
            contained = false;
        }
        complexd hx = (xp - xm) / (2 * d);
        complexd hy = (yp - ym) / (2 * d);
        complexd fz = 0.5 * (hx - complexd(0, 1) * hy);
        complexd fzb = 0.5 * (hx + complexd(0, 1) * hy);
        if (std::abs(fz) > 1e-12) {
          double v = std::abs(fzb) / std::abs(fz);
          if (v > dil) {
            dil = v;
            if (std::getenv("FLEXWELD_DEBUG") && v > 0.3)
              std::fprintf(stderr,
                           "dil %.4f at k=%zu xi=%.4f ze=%.2f d=%.4f |fz|=%.3g "
                           "|fzb|=%.3g depth=%.4f Rk=%.4f Mk=%.4f\n",
                           v, k, xi, ze, d, std::abs(fz), std::abs(fzb), depth,
                           Rk[k], qu[k].modulus);
          }
        }
      }
  }
  dil = std::min(dil, 0.999);
  next.cum_K = state.cum_K * (1.0 + dil) / (1.0 - dil);

  if (metrics) {
    metrics->n = state.step + 1;
    metrics->dil_step = dil;
    metrics->K_step = (1.0 + dil) / (1.0 - dil);
    metrics->cum_K = next.cum_K;
    metrics->containment = contained;
    metrics->extension_dev = 0.0;  // unmoved samples are bitwise unchanged
  }
  return next;
}

namespace {

// Applies the pending targets with motion fraction t; mask (when non-null)
// freezes samples whose entry is false.
IterationState apply_motion(const IterationState& state, double t,
                            const std::vector<char>* mask_f,
                            const std::vector<char>* mask_g) {
  IterationState out = state;
  for (size_t i = 0; i < state.f.size(); ++i) {
    if (state.f_target[i] && (!mask_f || (*mask_f)[i]))
      out.f[i] = state.f[i] + t * (*state.f_target[i] - state.f[i]);
    if (state.g_target[i] && (!mask_g || (*mask_g)[i]))
      out.g[i] = state.g[i] + t * (*state.g_target[i] - state.g[i]);
  }
  return out;
}

double cert_sup_ratio(const IterationState& before, const IterationState& after) {
  double worst = 0.0;
  for (size_t i = 0; i < before.thetas.size(); ++i) {
    if (!before.E_used.contains(Angle(before.thetas[i]))) continue;
    if (before.mismatch[i] < 1e-12) continue;
    double lnew = std::abs(after.f[i] - after.g_comp(after.thetas[i]));
    worst = std::max(worst, lnew / before.mismatch[i]);
  }
  return worst;
}

void commit(IterationState& st, StepMetrics* metrics, double t, double ratio) {
  st.f_target.clear();
  st.g_target.clear();
  st.step += 1;
  st.refresh_mismatch();
  if (metrics) {
    metrics->shrink_t = t;
    metrics->mismatch_ratio = ratio;
    metrics->sup_mismatch = st.sup_mismatch;
    metrics->area = st.area;
  }
}

}  // namespace

IterationState shrink(const IterationState& state, double target_ratio,
                      StepMetrics* metrics) {
  if (state.f_target.empty() && state.g_target.empty())
    throw std::logic_error("shrink: extend_step has not produced targets");
  if (!(target_ratio > 0 && target_ratio < 1))
    throw std::invalid_argument("shrink: target_ratio must lie in (0,1)");

  double lo = 0.0, hi = 0.999, best = 1e300;
  {
    IterationState probe = apply_motion(state, hi, nullptr, nullptr);
    best = cert_sup_ratio(state, probe);
  }
  // A 2/3 request is accepted when 3/4 is achieved (slack factor 9/8).
  if (best > target_ratio * 9.0 / 8.0) {
    std::ostringstream os;
    os << "shrink: target ratio " << target_ratio
       << " unreachable; best achieved " << best;
    throw std::runtime_error(os.str());
  }
  if (best > target_ratio) {
    IterationState out = apply_motion(state, hi, nullptr, nullptr);
    commit(out, metrics, hi, best);
    return out;
  }
  for (int it = 0; it < 40; ++it) {
    double mid = 0.5 * (lo + hi);
    IterationState probe = apply_motion(state, mid, nullptr, nullptr);
    double r = cert_sup_ratio(state, probe);
    if (r <= target_ratio) {
      hi = mid;
      best = r;
    } else {
      lo = mid;
    }
    if (hi - lo < 1e-4) break;
  }
  IterationState out = apply_motion(state, hi, nullptr, nullptr);
  double achieved = cert_sup_ratio(state, out);
  commit(out, metrics, hi, achieved);
  return out;
}

namespace {

// positive_area: comb-patterned tooth masks (the sample-level counterpart of
// shape_with_leftover's 8 teeth) bisected on the leftover fraction until the
// annulus-area ratio matches a_n.
IterationState positive_area_shrink(const IterationState& state_in,
                                    const FoliationSnapshot& snapshot,
                                    double a_n, StepMetrics* metrics) {
  // The outer boundary contracts along its own rays toward the midcurve:
  // window-confined targets would leave the outer table without vertices
  // over most angles, and the resulting chords cut into the inner lobes.
  IterationState state = state_in;
  {
    complexd c = centroid_of(snapshot.midcurve);
    for (size_t j = 0; j < state.g.size(); ++j) {
      if (!state.g_target[j]) continue;
      complexd y;
      if (midcurve_hit(snapshot.midcurve, c, std::arg(state.g[j] - c), &y))
        state.g_target[j] = y;
    }
  }
  // Both sides stop well short of the midcurve, keeping the moved boundaries
  // separated from each other and from the next step's foliation leaves;
  // t closer to 1 lets a leaf graze a moved lobe.
  const double t = 0.7;
  size_t n = state.thetas.size();

  auto masks_for = [&](double ell) {
    std::vector<char> mf(n, 1), mg(n, 1);
    auto tooth = [&](double theta) {
      // Relative position inside its certificate arc, 8 tooth slots.
      for (const Arc& a : state.E_used.arcs()) {
        if (!a.contains(Angle(theta))) continue;
        double tau = wrap_pos(theta - a.lo.theta) / std::max(a.length(), 1e-12);
        // Freeze both ends of the arc and move only the centered remainder:
        // sub-resolution comb teeth would leave spikes the next step's
        // foliation cannot resolve, and a cliff at the arc end would sit
        // next to the gap midpoints where leaves anchor.
        return tau < 0.5 * ell || tau > 1.0 - 0.5 * ell;
      }
      return false;
    };
    for (size_t i = 0; i < n; ++i)
      if (tooth(state.thetas[i])) mf[i] = 0;
    // g teeth by position within each contiguous moved run: the preimages
    // h^{-1}(phi_j) pile up at arc endpoints, so a tilde-keyed comb would
    // leave most of the run moving at every leftover fraction.
    {
      std::vector<char> moved(n, 0);
      for (size_t j = 0; j < n; ++j) moved[j] = state.g_target[j].has_value();
      size_t start = 0;
      while (start < n && moved[start]) ++start;  // start off a run
      if (start == n) start = 0;
      size_t j = start;
      for (size_t seen = 0; seen < n;) {
        while (seen < n && !moved[j]) { j = (j + 1) % n; ++seen; }
        if (seen >= n) break;
        size_t run0 = j, len = 0;
        while (seen < n && moved[j]) { j = (j + 1) % n; ++seen; ++len; }
        for (size_t q = 0; q < len; ++q) {
          double tau = (q + 0.5) / len;
          if (tau < 0.5 * ell || tau > 1.0 - 0.5 * ell) mg[(run0 + q) % n] = 0;
        }
      }
    }
    return std::pair(mf, mg);
  };

  auto ratio_for = [&](double ell) {
    auto [mf, mg] = masks_for(ell);
    IterationState probe = apply_motion(state, t, &mf, &mg);
    double area = polygon_area(probe.outer_boundary()) -
                  polygon_area(probe.inner_boundary());
    return area / state.area;
  };

  if (std::getenv("FLEXWELD_DEBUG")) {
    for (double e : {0.0, 0.5, 0.9, 0.99, 0.999, 1.0}) {
      auto [mf, mg] = masks_for(e);
      int cf = 0, cg = 0;
      for (size_t i = 0; i < n; ++i) {
        if (state.f_target[i] && mf[i]) cf++;
        if (state.g_target[i] && mg[i]) cg++;
      }
      std::fprintf(stderr, "  ell=%.4f ratio=%.5f moving f=%d g=%d\n", e,
                   ratio_for(e), cf, cg);
    }
  }
  double lo = 0.0, hi = 1.0;
  double rlo = ratio_for(0.0);
  if (rlo > a_n + 0.01) {
    std::ostringstream os;
    os << "positive_area: cannot remove enough area; floor ratio " << rlo
       << " exceeds target " << a_n;
    throw std::runtime_error(os.str());
  }
  double ell = 0.5;
  for (int it = 0; it < 30; ++it) {
    ell = 0.5 * (lo + hi);
    double r = ratio_for(ell);
    if (std::abs(r - a_n) <= 0.005) break;
    (r < a_n ? lo : hi) = ell;
  }
  auto [mf, mg] = masks_for(ell);
  IterationState out = apply_motion(state, t, &mf, &mg);
  double achieved = cert_sup_ratio(state, out);
  commit(out, metrics, t, achieved);
  if (metrics) metrics->leftover_used = ell;
  return out;
}

ShapeSpec rectangle_shape(double T) {
  Polyline g1, g2;
  g1.vertices = {complexd(0, 0), complexd(T, 0)};
  g2.vertices = {complexd(0, 1), complexd(T, 1)};
  return shape_from_paths(T, g1, g2, coarse_options());
}

}  // namespace

CurveTrace run(const IterationConfig& config) {
  CurveTrace trace;
  trace.budget_K = config.budget_K();
  try {
    IterationState st = init(config);
    ShapeSpec rect = rectangle_shape(4.0);
    for (int nstep = 1; nstep <= config.steps; ++nstep) {
      int N = config.N_schedule.empty() ? 16 : config.N_schedule[nstep - 1];
      ArcSet E = build_E(N, config.A_cert,
                         config.cert.valid() ? &config.cert : nullptr);
      st.E_used = E;
      SlitMapConfig smc;
      smc.N = N;
      smc.A = std::max(config.A, N + 1.0);
      smc.M = N;
      SlitDomain sd = slit_map(E, smc);

      ArcSet gaps = arcset_complement(E);
      std::vector<Angle> x_points;
      for (const Arc& a : gaps.arcs()) x_points.push_back(a.midpoint());

      FoliationSnapshot snap = foliate(st, x_points);
      std::vector<MarkedQuadrilateral> quads = build_quads(st, snap);

      std::vector<ShapeSpec> shapes = {rect};
      StepMetrics m;
      if (config.mode == WeldMode::dim_s || config.mode == WeldMode::dim_1) {
        // Dimension variants route the step through a corridor tube: a short
        // two-square chain next to the exit edge keeps the auto-selected
        // corridor width meshable while the 2^{-n} covering budget tightens.
        double s_n =
            config.mode == WeldMode::dim_s ? config.s : 1.0 + 1.0 / nstep;
        double budget = std::pow(2.0, -nstep);
        std::vector<GridSquare> sq = {{complexd(3.0, 0.30), 0.4},
                                      {complexd(3.5, 0.30), 0.4}};
        ConnectResult cr = connect_squares(4.0, sq, s_n, budget);
        if (config.mode == WeldMode::dim_s) shapes = {cr.shape};
        m.covering_cost = cr.covering_cost;
        m.covering_budget = budget;
        m.covering_disks = static_cast<long long>(cr.covering.size());
      }
      IterationState st2 = extend_step(st, sd, shapes, snap, quads, &m);
      double eps_n = config.eps_seq[nstep - 1];
      if (m.K_step > (1.0 + eps_n) * 1.05) {
        std::ostringstream os;
        os << "step " << nstep << ": measured dilatation factor " << m.K_step
           << " exceeds allowance " << (1.0 + eps_n) * 1.05;
        throw std::runtime_error(os.str());
      }

      double area_before = st.area;
      switch (config.mode) {
        case WeldMode::positive_area:
          st = positive_area_shrink(st2, snap, config.a_seq[nstep - 1], &m);
          break;
        default:
          st = shrink(st2, config.target_ratio, &m);
          break;
      }
      m.area_ratio = st.area / area_before;
      if (std::getenv("FLEXWELD_DEBUG")) {
        Polyline ob = st.outer_boundary();
        int out_cnt = 0;
        double worst = 1e300;
        size_t wi = 0;
        for (size_t i = 0; i < st.f.size(); ++i) {
          if (!point_in_polygon(st.f[i], ob)) {
            out_cnt++;
            if (std::abs(st.f[i]) < worst) { worst = std::abs(st.f[i]); wi = i; }
          }
        }
        std::fprintf(stderr, "step %d: f outside outer: %d", nstep, out_cnt);
        if (out_cnt)
          std::fprintf(stderr, " e.g. i=%zu f=(%.3f,%.3f) theta=%.4f",
                       wi, st.f[wi].real(), st.f[wi].imag(), st.thetas[wi]);
        std::fprintf(stderr, "\n");
        if (out_cnt) {
          double fa = std::arg(st.f[wi]);
          for (size_t j = 0; j < st.g.size(); ++j) {
            double d = std::abs(wrap_pm(std::arg(st.g[j]) - fa));
            if (d < 0.08)
              std::fprintf(stderr, "  g[%zu] r=%.3f ang=%.4f tilde=%.4f\n", j,
                           std::abs(st.g[j]), std::arg(st.g[j]), st.tilde[j]);
          }
        }
      }

      if (m.covering_budget > 0.0 && m.covering_cost > m.covering_budget)
        throw std::runtime_error("covering budget violated");
      trace.steps.push_back(m);
    }
    FoliationSnapshot last = foliate(st, {});
    trace.final_curve = last.midcurve;
    trace.final_K = st.cum_K;
    trace.ok = true;
  } catch (const std::exception& e) {
    trace.ok = false;
    trace.error = e.what();
  }
  return trace;
}

double astala_bound(double K, double d) {
  if (!(K >= 1.0) || !(d > 0.0) || !(d <= 2.0))
    throw std::invalid_argument("astala_bound: need K >= 1 and d in (0,2]");
  return 2.0 * K * d / (2.0 + (K - 1.0) * d);
}

std::pair<double, double> astala_band(double mu_norm, double d, double C) {
  if (!(mu_norm >= 0.0 && mu_norm < 1.0) || !(d > 0.0) || !(C >= 0.0))
    throw std::invalid_argument("astala_band: need ||mu|| in [0,1), d > 0, C >= 0");
  double factor = 1.0 + C * mu_norm;
  return {d / factor, d * factor};
}

double covering_cost(const std::vector<Disk>& disks, double s) {
  if (disks.empty()) throw std::invalid_argument("covering_cost: empty covering");
  if (!(s > 0.0)) throw std::invalid_argument("covering_cost: s must be positive");
  double total = 0.0;
  for (const Disk& d : disks) {
    if (!(d.radius > 0.0))
      throw std::invalid_argument("covering_cost: non-positive radius");
    total += std::pow(d.radius, s);
  }
  return total;
}

}  // namespace flexweld
