#include "flexweld/slitmap.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flexweld {

namespace {

// Below this arc length the graded sub-panel quadrature falls under double
// rounding; arcs are treated as point masses with the analytic single-arc
// Robin constant -log(sin(len/4)).
constexpr double kTinyArc = 1e-9;

double arc_robin_analytic(double len) { return -std::log(std::sin(len / 4.0)); }

// Angular span of a panel lying on S^1, as angles in [0, 2*pi) (the arcs
// produced by build_E never wrap).
std::pair<double, double> panel_span(const Panel& p) {
  auto lift_near = [&](const complexd& z) {
    double t = std::arg(z);
    while (t < p.theta_mid - M_PI) t += kTwoPi;
    while (t > p.theta_mid + M_PI) t -= kTwoPi;
    return t;
  };
  double t0 = lift_near(p.a), t1 = lift_near(p.b);
  if (t0 > t1) std::swap(t0, t1);
  return {t0, t1};
}

double mass_below(const DiscreteMeasure& mu, double theta) {
  double m = 0.0;
  for (const Panel& p : mu.panels) {
    auto [t0, t1] = panel_span(p);
    if (theta >= t1)
      m += p.mass;
    else if (theta > t0)
      m += p.mass * (theta - t0) / (t1 - t0);
  }
  return m;
}

// Robin constant of N tiny arcs in the point-mass-plus-analytic-self model.
double robin_tiny(const std::vector<double>& centers, double ell) {
  int N = static_cast<int>(centers.size());
  Eigen::MatrixXd K(N + 1, N + 1);
  K.setZero();
  for (int i = 0; i < N; ++i) {
    K(i, i) = 2.0 * arc_robin_analytic(ell);
    for (int j = 0; j < N; ++j)
      if (j != i)
        K(i, j) = -2.0 * std::log(std::abs(std::polar(1.0, centers[i]) -
                                           std::polar(1.0, centers[j])));
    K(i, N) = K(N, i) = 1.0;
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + 1);
  rhs(N) = 1.0;
  Eigen::VectorXd sol = K.partialPivLu().solve(rhs);
  Eigen::VectorXd m = sol.head(N).cwiseMax(0.0);
  m /= m.sum();
  return 0.5 * m.dot(K.topLeftCorner(N, N) * m);
}

}  // namespace

void SlitMapConfig::validate() const {
  if (N < 8) throw std::invalid_argument("SlitMapConfig: N must be >= 8");
  if (!(A > N)) throw std::invalid_argument("SlitMapConfig: A must exceed N");
  if (M < 2) throw std::invalid_argument("SlitMapConfig: M must be >= 2");
  if (!(delta > 0.0 && delta < 0.1))
    throw std::invalid_argument("SlitMapConfig: delta must lie in (0, 0.1)");
  if (samples < 8 * N)
    throw std::invalid_argument("SlitMapConfig: samples too small for N");
}

ArcSet build_E(int N, double A_target, const LogSingularCertificate* h_cert) {
  if (N < 8) throw std::invalid_argument("build_E: N must be >= 8");
  double logN = std::log(static_cast<double>(N));
  if (!(A_target > logN + 0.05))
    throw std::invalid_argument("build_E: A_target infeasible for this N");

  double period = kTwoPi / N;
  // Arc centers: middle of each I_k, or aligned with a certificate arc that
  // falls inside I_k.
  std::vector<double> centers(N);
  for (int k = 0; k < N; ++k) centers[k] = (k + 0.5) * period;
  if (h_cert) {
    for (const Arc& a : h_cert->E.arcs()) {
      double m = a.midpoint().theta;
      int k = std::min(N - 1, static_cast<int>(m / period));
      double lo = k * period, hi = (k + 1) * period;
      centers[k] = std::clamp(m, lo + 0.05 * period, hi - 0.05 * period);
    }
  }

  // Whole-set Robin value induced by per-arc Robin constant A_target: the
  // cross energy of N near-uniform point groups contributes -log N / N.
  double target_cap = std::exp(-(A_target - logN) / N);

  auto make = [&](double ell) {
    std::vector<Arc> arcs;
    arcs.reserve(N);
    for (int k = 0; k < N; ++k)
      arcs.push_back({Angle(centers[k] - ell / 2), Angle(centers[k] + ell / 2)});
    if (ell < kTinyArc) return ArcSet::from_sorted_disjoint(std::move(arcs));
    return ArcSet::from_arcs(std::move(arcs));
  };
  auto cap_of = [&](double ell) {
    if (ell < kTinyArc) return std::exp(-robin_tiny(centers, ell));
    return capacity(make(ell), 8 * N).capacity;
  };

  double ell0 = std::min(4.0 * std::exp(-A_target), 0.45 * period);
  // Bracket the target: capacity is increasing in the common arc length.
  double lo = ell0, hi = ell0;
  double clo = cap_of(lo), chi = clo;
  for (int i = 0; i < 80 && clo > target_cap; ++i) {
    hi = lo;
    chi = clo;
    lo *= 0.25;
    if (lo < 1e-300)
      throw std::runtime_error("build_E: A_target infeasible (arcs underflow)");
    clo = cap_of(lo);
  }
  for (int i = 0; i < 80 && chi < target_cap; ++i) {
    lo = hi;
    clo = chi;
    hi = std::min(4.0 * hi, 0.98 * period);
    chi = cap_of(hi);
    if (hi >= 0.98 * period && chi < target_cap)
      throw std::runtime_error("build_E: A_target infeasible for this N");
  }
  double ell = std::sqrt(lo * hi), c = cap_of(ell);
  for (int i = 0; i < 60 && std::abs(c - target_cap) > 0.005 * target_cap; ++i) {
    if (c < target_cap)
      lo = ell;
    else
      hi = ell;
    ell = std::sqrt(lo * hi);
    c = cap_of(ell);
  }
  if (std::abs(c - target_cap) > 0.05 * target_cap)
    throw std::runtime_error("build_E: capacity tuner failed to reach the target");
  return make(ell);
}

complexd SlitDomain::interior(const complexd& z) const {
  if (std::abs(z) >= 1.0) throw std::invalid_argument("interior: |z| must be < 1");
  // phi(z) = z * exp(-2 * sum m_i Log(1 - conj(x_i) z)) / (1 + delta); the
  // principal branch is safe since 1 - conj(x_i) z stays off the cut for
  // |z| < 1.
  complexd s = 0.0;
  for (const Panel& p : mu.panels)
    s += p.mass * std::log(1.0 - std::conj(p.mid) * z);
  return z * std::exp(-2.0 * s) / (1.0 + cfg.delta);
}

std::pair<double, double> SlitDomain::boundary_polar(double theta) const {
  complexd x = std::polar(1.0, theta);
  Angle a(theta);
  double U;
  int own = -1;
  if (tiny_arcs) {
    const auto& arcs = E.arcs();
    for (size_t k = 0; k < arcs.size(); ++k)
      if (arcs[k].contains(a)) {
        own = static_cast<int>(k);
        break;
      }
  }
  if (own >= 0) {
    // Analytic self-potential of the arc's equilibrium measure plus the
    // point-mass cross terms.
    double g = mu.panels[own].mass * arc_robin[own];
    for (size_t j = 0; j < mu.panels.size(); ++j)
      if (static_cast<int>(j) != own)
        g -= mu.panels[j].mass * std::log(std::abs(x - mu.panels[j].mid));
    U = 2.0 * g;
  } else {
    U = 2.0 * potential_G(mu, x);
  }
  double ang = conj_anchor + kTwoPi * mass_below(mu, a.theta);
  return {std::exp(U) / (1.0 + cfg.delta), ang};
}

SlitDomain slit_map(const ArcSet& E, const SlitMapConfig& cfg) {
  cfg.validate();
  const auto& arcs = E.arcs();
  if (static_cast<int>(arcs.size()) != cfg.N)
    throw std::invalid_argument("slit_map: E must have exactly N arcs");

  SlitDomain sd;
  sd.cfg = cfg;
  sd.E = E;
  double min_len = 1e300;
  for (const Arc& a : arcs) min_len = std::min(min_len, a.length());
  sd.tiny_arcs = min_len < kTinyArc;

  // Per-arc equilibrium measures of mass 1/N, concatenated in arc order.
  const int panels_per_arc = 16;
  for (const Arc& a : arcs) {
    sd.arc_robin.push_back(arc_robin_analytic(a.length()));
    if (sd.tiny_arcs) {
      Panel p;
      p.a = a.lo.point();
      p.b = a.hi.point();
      p.theta_mid = a.midpoint().theta;
      p.mid = a.midpoint().point();
      p.mass = 1.0 / cfg.N;
      sd.mu.panels.push_back(p);
      sd.mu.total_mass += p.mass;
    } else {
      DiscreteMeasure mk =
          equilibrium_measure(ArcSet::from_arcs({a}), panels_per_arc, 1.0 / cfg.N);
      for (const Panel& p : mk.panels) sd.mu.panels.push_back(p);
      sd.mu.total_mass += mk.total_mass;
    }
  }
  double anchor_theta = arcs.front().midpoint().theta;
  sd.conj_anchor = anchor_theta - kTwoPi * mass_below(sd.mu, anchor_theta);

  // Sample angles: graded positions inside arcs, asymmetric uniform fill on
  // gaps.
  const int N = cfg.N;
  const int per_arc = 2 * panels_per_arc + 1;
  int per_gap = std::max(17, (cfg.samples - N * per_arc) / N);
  struct Sample {
    double theta, r, ang;
    int arc;
  };
  std::vector<Sample> samp;
  for (int k = 0; k < N; ++k) {
    const Arc& a = arcs[k];
    double lo = a.lo.theta;
    double len = a.length();
    for (int j = 0; j < per_arc; ++j) {
      double u = static_cast<double>(j) / (per_arc - 1);
      double g = u * u * (3 - 2 * u);
      double th = lo + g * len;
      auto [r, ang] = sd.boundary_polar(th);
      samp.push_back({th, r, ang, k});
    }
    double glo = a.hi.theta;
    double ghi = arcs[(k + 1) % N].lo.theta;
    if (ghi <= glo) ghi += kTwoPi;
    for (int j = 0; j < per_gap; ++j) {
      double th = glo + (ghi - glo) * (j + 0.61803) / per_gap;
      auto [r, ang] = sd.boundary_polar(th);
      samp.push_back({th, r, ang, -1});
    }
  }
  for (Sample& s : samp) s.theta = Angle(s.theta).theta;
  std::sort(samp.begin(), samp.end(),
            [](const Sample& a, const Sample& b) { return a.theta < b.theta; });

  // Monotonicity of the accumulated argument (up to the wrap at 2*pi).
  for (size_t i = 1; i < samp.size(); ++i)
    if (samp[i].ang < samp[i - 1].ang - 1e-12)
      throw std::runtime_error("slit_map: accumulated argument not monotone");

  for (const Sample& s : samp) {
    complexd w = std::polar(s.r, s.ang);
    sd.boundary_map.emplace_back(Angle(s.theta), w);
    if (s.arc >= 0) sd.outer_boundary.vertices.push_back(w);
    sd.inner_radius = sd.inner_radius == 0.0 ? s.r : std::min(sd.inner_radius, s.r);
    sd.outer_radius = std::max(sd.outer_radius, s.r);
  }
  sd.outer_boundary.closed = true;

  // One radial slit per gap: constant argument, radius from the flanks down
  // to the gap minimum of U.
  for (int k = 0; k < N; ++k) {
    const Arc& a = arcs[k];
    double glo = a.hi.theta;
    double ghi = arcs[(k + 1) % N].lo.theta;
    if (ghi <= glo) ghi += kTwoPi;
    double flank_b = sd.boundary_polar(glo).first;
    double flank_a = sd.boundary_polar(ghi).first;
    double ang = sd.boundary_polar(0.5 * (glo + ghi)).second;
    double tip_r = std::min(flank_b, flank_a);
    for (int j = 0; j < 4 * per_gap; ++j) {
      double th = glo + (ghi - glo) * (j + 0.5) / (4 * per_gap);
      tip_r = std::min(tip_r, sd.boundary_polar(th).first);
    }
    complexd tip = std::polar(tip_r, ang);
    sd.slits.push_back({{std::polar(std::max(flank_b, flank_a), ang), tip}, false});
    sd.tips.push_back(tip);
    sd.slit_angles.push_back(Angle(ang).theta);
    sd.slit_flank_before.push_back(flank_b);
    sd.slit_flank_after.push_back(flank_a);
  }
  return sd;
}

std::vector<complexd> marked_tips(SlitDomain& sd, int M, double delta) {
  if (M > static_cast<int>(sd.tips.size()))
    throw std::invalid_argument("marked_tips: fewer slits than M");
  std::vector<complexd> out;
  out.reserve(M);
  sd.marked_tips_cache.clear();
  for (int k = 0; k < M; ++k) {
    complexd target = std::polar(1.0, kTwoPi * k / M);
    int best = 0;
    double bd = 1e300;
    for (size_t j = 0; j < sd.tips.size(); ++j) {
      double d = std::abs(sd.tips[j] - target);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(j);
      }
    }
    if (bd > delta)
      throw std::runtime_error("marked_tips: tip distance exceeds delta");
    out.push_back(sd.tips[best]);
  }
  sd.marked_tips_cache = out;
  return out;
}

std::vector<SlitSector> sector_quads(const SlitDomain& sd) {
  if (sd.marked_tips_cache.empty())
    throw std::logic_error("sector_quads: marked tips not computed");
  const int M = static_cast<int>(sd.marked_tips_cache.size());
  const int S = static_cast<int>(sd.slit_angles.size());

  // Slit index of each marked tip.
  std::vector<int> midx(M);
  for (int k = 0; k < M; ++k) {
    int best = 0;
    double bd = 1e300;
    for (int j = 0; j < S; ++j) {
      double d = std::abs(sd.tips[j] - sd.marked_tips_cache[k]);
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    midx[k] = best;
  }

  std::vector<SlitSector> out;
  for (int k = 0; k < M; ++k) {
    int ja = midx[k], jb = midx[(k + 1) % M];
    double ta = sd.slit_angles[ja], tb = sd.slit_angles[jb];
    if (tb <= ta) tb += kTwoPi;
    // Any intermediate slit with tip below the unit circle pinches the
    // sector closed; reject such assemblies.
    for (int j = (ja + 1) % S; j != jb; j = (j + 1) % S)
      if (std::abs(sd.tips[j]) <= 1.0)
        throw std::runtime_error("sector_quads: assembled boundary not simple");

    Polyline p;
    p.closed = true;
    std::vector<int> vi(4);
    const int n_in = 24;
    vi[0] = 0;
    for (int i = 0; i <= n_in; ++i)  // inner circle arc, side a1
      p.vertices.push_back(std::polar(1.0, ta + (tb - ta) * i / n_in));
    vi[1] = static_cast<int>(p.vertices.size()) - 1;
    // Radial wall at tb up to the adjacent flank, side b1.
    p.vertices.push_back(std::polar(sd.slit_flank_before[jb], tb));
    vi[2] = static_cast<int>(p.vertices.size()) - 1;
    // Outer boundary between the slits, traversed with decreasing argument
    // (side a2), with keyhole spikes around intermediate slits.
    auto near_slit = [&](double ang) {
      for (double s : sd.slit_angles) {
        double d = std::abs(Angle(ang - s).theta);
        if (std::min(d, kTwoPi - d) < 1e-7) return true;
      }
      return false;
    };
    std::vector<complexd> chain;
    for (const auto& [th, w] : sd.boundary_map) {
      double ang = std::arg(w);
      while (ang < ta) ang += kTwoPi;
      if (ang > ta + 1e-9 && ang < tb - 1e-9 && std::abs(w) > 1.0 && !near_slit(ang))
        chain.push_back(w);
    }
    std::sort(chain.begin(), chain.end(), [&](const complexd& x, const complexd& y) {
      double ax = std::arg(x), ay = std::arg(y);
      while (ax < ta) ax += kTwoPi;
      while (ay < ta) ay += kTwoPi;
      return ax > ay;
    });
    for (int j = (ja + 1) % S; j != jb; j = (j + 1) % S) {
      // Spike down to the intermediate tip and back, slightly widened.
      double ts = sd.slit_angles[j];
      while (ts < ta) ts += kTwoPi;
      double w = 1e-3 * (tb - ta);
      double rt = std::abs(sd.tips[j]);
      std::vector<complexd> spiked;
      bool inserted = false;
      for (const complexd& z : chain) {
        double az = std::arg(z);
        while (az < ta) az += kTwoPi;
        if (!inserted && az < ts) {
          spiked.push_back(std::polar(sd.slit_flank_after[j], ts + w));
          spiked.push_back(std::polar(rt, ts));
          spiked.push_back(std::polar(sd.slit_flank_before[j], ts - w));
          inserted = true;
        }
        spiked.push_back(z);
      }
      chain = std::move(spiked);
    }
    for (const complexd& z : chain) p.vertices.push_back(z);
    p.vertices.push_back(std::polar(sd.slit_flank_after[ja], ta));
    vi[3] = static_cast<int>(p.vertices.size()) - 1;
    // Side b2 closes from vi[3] back to vi[0] along the wall at ta.

    SlitSector sec;
    sec.quad = {p, {vi[0], vi[1], vi[2], vi[3]}};
    sec.quad.validate();
    sec.modulus = quad_modulus(sec.quad).modulus;
    // Distances in the unit-total-length normalization of the circle, so the
    // chordal tip distance is divided by 2*pi.
    double d = std::abs(sd.marked_tips_cache[(k + 1) % M] - sd.marked_tips_cache[k]) /
               kTwoPi;
    sec.target = M_PI * sd.cfg.N * d / sd.cfg.A;
    sec.ratio = sec.modulus / sec.target;
    out.push_back(std::move(sec));
  }
  return out;
}

}  // namespace flexweld
