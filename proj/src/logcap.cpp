#include "flexweld/logcap.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace flexweld {

namespace {

// Graded subdivision of [0,1]: clusters nodes at both ends (smoothstep).
double grade(double u) { return u * u * (3.0 - 2.0 * u); }

void append_arc_panels(std::vector<Panel>& out, const Arc& arc, int n) {
  double len = arc.length();
  for (int j = 0; j < n; ++j) {
    double t0 = arc.lo.theta + len * grade(double(j) / n);
    double t1 = arc.lo.theta + len * grade(double(j + 1) / n);
    double tm = 0.5 * (t0 + t1);
    Panel p;
    p.a = complexd(std::cos(t0), std::sin(t0));
    p.b = complexd(std::cos(t1), std::sin(t1));
    p.mid = complexd(std::cos(tm), std::sin(tm));
    p.theta_mid = tm;
    out.push_back(p);
  }
}

Eigen::MatrixXd energy_matrix(const std::vector<Panel>& panels) {
  int n = static_cast<int>(panels.size());
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i) {
    double ell = std::abs(panels[i].b - panels[i].a);
    ell = std::max(ell, 1e-300);
    A(i, i) = std::log(1.0 / ell) + 1.5;
    for (int j = i + 1; j < n; ++j) {
      double d = std::abs(panels[i].mid - panels[j].mid);
      double v = std::log(1.0 / std::max(d, 1e-300));
      A(i, j) = v;
      A(j, i) = v;
    }
  }
  return A;
}

// Euclidean projection onto {w >= 0, sum w = mass}.
void project_simplex(Eigen::VectorXd& w, double mass) {
  int n = static_cast<int>(w.size());
  std::vector<double> u(w.data(), w.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0, tau = 0;
  int k = 0;
  for (int i = 0; i < n; ++i) {
    css += u[i];
    double t = (css - mass) / (i + 1);
    if (u[i] - t > 0) {
      tau = t;
      k = i + 1;
    }
  }
  (void)k;
  for (int i = 0; i < n; ++i) w[i] = std::max(0.0, w[i] - tau);
}

}  // namespace

std::vector<Panel> panelize_arcset(const ArcSet& E, int total_panels) {
  std::vector<Panel> out;
  if (E.is_full()) {
    Arc full{Angle(0.0), Angle(kTwoPi - kArcTol)};
    // Uniform panels for the full circle (no endpoints to resolve).
    int n = std::max(total_panels, 8);
    for (int j = 0; j < n; ++j) {
      double t0 = kTwoPi * j / n, t1 = kTwoPi * (j + 1) / n;
      double tm = 0.5 * (t0 + t1);
      Panel p;
      p.a = complexd(std::cos(t0), std::sin(t0));
      p.b = complexd(std::cos(t1), std::sin(t1));
      p.mid = complexd(std::cos(tm), std::sin(tm));
      p.theta_mid = tm;
      out.push_back(p);
    }
    return out;
  }
  double total = E.total_length();
  if (total <= 0) return out;
  int narcs = static_cast<int>(E.arcs().size());
  for (const auto& arc : E.arcs()) {
    int n = std::max(4, static_cast<int>(std::lround(
                            total_panels * arc.length() / total)));
    (void)narcs;
    append_arc_panels(out, arc, n);
  }
  return out;
}

std::vector<Panel> panelize_segment(const complexd& a, const complexd& b, int n) {
  std::vector<Panel> out;
  for (int j = 0; j < n; ++j) {
    double t0 = grade(double(j) / n), t1 = grade(double(j + 1) / n);
    Panel p;
    p.a = a + (b - a) * t0;
    p.b = a + (b - a) * t1;
    p.mid = 0.5 * (p.a + p.b);
    out.push_back(p);
  }
  return out;
}

double panel_robin_constant(const std::vector<Panel>& panels,
                            std::vector<double>* masses_out,
                            std::vector<double>* energy_history) {
  int n = static_cast<int>(panels.size());
  if (n == 0) throw std::invalid_argument("empty panel set");
  Eigen::MatrixXd A = energy_matrix(panels);

  // Warm start: equality-constrained minimizer (A w = lambda 1, sum w = 1),
  // projected onto the simplex.
  Eigen::VectorXd w;
  {
    Eigen::MatrixXd K(n + 1, n + 1);
    K.setZero();
    K.topLeftCorner(n, n) = 2.0 * A;
    K.topRightCorner(n, 1).setConstant(-1.0);
    K.bottomLeftCorner(1, n).setConstant(1.0);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs(n) = 1.0;
    Eigen::VectorXd sol = K.partialPivLu().solve(rhs);
    w = sol.head(n);
    project_simplex(w, 1.0);
  }

  // Projected gradient with backtracking (monotone), KKT stop.
  double L = (2.0 * A).cwiseAbs().rowwise().sum().maxCoeff();  // Gershgorin
  double step = 1.0 / std::max(L, 1e-12);
  double energy = w.dot(A * w);
  if (energy_history) energy_history->push_back(energy);
  const int max_iter = 100000;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd g = 2.0 * (A * w);
    // KKT residual on the simplex.
    double lam = 0;
    double act = 0;
    for (int i = 0; i < n; ++i)
      if (w[i] > 1e-14) {
        lam += g[i] * w[i];
        act += w[i];
      }
    lam /= std::max(act, 1e-300);
    double kkt = 0;
    for (int i = 0; i < n; ++i) {
      if (w[i] > 1e-14)
        kkt = std::max(kkt, std::abs(g[i] - lam));
      else
        kkt = std::max(kkt, std::max(0.0, lam - g[i]));
    }
    if (kkt <= 1e-8 * std::max(1.0, std::abs(lam))) break;

    double s = step;
    bool moved = false;
    for (int bt = 0; bt < 40; ++bt) {
      Eigen::VectorXd cand = w - s * g;
      project_simplex(cand, 1.0);
      double e2 = cand.dot(A * cand);
      if (e2 <= energy + 1e-18) {
        double rel = (energy - e2) / std::max(std::abs(energy), 1e-300);
        w = cand;
        energy = e2;
        moved = true;
        if (energy_history) energy_history->push_back(energy);
        if (rel < 1e-12 && kkt <= 1e-6 * std::max(1.0, std::abs(lam))) it = max_iter;
        break;
      }
      s *= 0.5;
    }
    if (!moved) break;
  }
  if (masses_out) {
    masses_out->assign(w.data(), w.data() + n);
  }
  return energy;
}

DiscreteMeasure equilibrium_measure(const ArcSet& E, int panels_per_arc,
                                    double mass,
                                    std::vector<double>* energy_history) {
  if (E.empty()) throw std::invalid_argument("equilibrium_measure: empty set");
  if (panels_per_arc < 4)
    throw std::invalid_argument("equilibrium_measure: panels_per_arc < 4");
  int narcs = E.is_full() ? 1 : static_cast<int>(E.arcs().size());
  std::vector<Panel> panels = panelize_arcset(E, panels_per_arc * narcs);
  std::vector<double> masses;
  std::vector<double> hist;
  panel_robin_constant(panels, &masses, &hist);
  if (energy_history) *energy_history = hist;
  DiscreteMeasure mu;
  mu.total_mass = mass;
  for (size_t i = 0; i < panels.size(); ++i) {
    Panel p = panels[i];
    p.mass = masses[i] * mass;
    mu.panels.push_back(p);
  }
  return mu;
}

namespace {
// Fixed extrapolation order for the two-resolution Richardson step, frozen
// from a resolution study on the segment and half-circle oracles.
constexpr double kRichardsonP = 1.0;

double richardson(double coarse, double fine) {
  double f = std::pow(2.0, kRichardsonP);
  return (f * fine - coarse) / (f - 1.0);
}
}  // namespace

CapacityReport capacity(const ArcSet& E, int base_panels) {
  CapacityReport r;
  if (E.empty()) {
    r.robin = std::numeric_limits<double>::infinity();
    r.capacity = 0.0;
    return r;
  }
  int narcs = E.is_full() ? 1 : static_cast<int>(E.arcs().size());
  int total = std::max(base_panels, 6 * narcs);
  auto coarse_p = panelize_arcset(E, total);
  auto fine_p = panelize_arcset(E, 2 * total);
  std::vector<double> hist;
  double g1 = panel_robin_constant(coarse_p, nullptr, nullptr);
  double g2 = panel_robin_constant(fine_p, nullptr, &hist);
  r.robin = richardson(g1, g2);
  r.capacity = std::exp(-r.robin);
  r.energy_history = std::move(hist);
  r.panel_count = static_cast<int>(fine_p.size());
  return r;
}

double capacity_segment(const complexd& a, const complexd& b, int base_panels) {
  if (std::abs(a - b) == 0.0)
    throw std::invalid_argument("capacity_segment: degenerate segment");
  auto coarse = panelize_segment(a, b, base_panels);
  auto fine = panelize_segment(a, b, 2 * base_panels);
  double g1 = panel_robin_constant(coarse, nullptr, nullptr);
  double g2 = panel_robin_constant(fine, nullptr, nullptr);
  return std::exp(-richardson(g1, g2));
}

double potential_G(const DiscreteMeasure& mu, const complexd& z) {
  double s = 0;
  for (const auto& p : mu.panels) {
    double ell = std::abs(p.b - p.a);
    double d = std::abs(p.mid - z);
    if (d < 0.5 * ell) {
      // Nearest-panel regularization: mean potential of a uniform panel over
      // itself evaluated at its midpoint, log(2/ell) + 1.
      s += p.mass * (std::log(2.0 / std::max(ell, 1e-300)) + 1.0);
    } else {
      s += p.mass * std::log(1.0 / d);
    }
  }
  return s;
}

double potential_U(const DiscreteMeasure& mu, const complexd& z) {
  if (std::abs(z) == 0.0) throw std::invalid_argument("potential_U: z = 0");
  complexd zr = complexd(1.0, 0.0) / std::conj(z);
  return potential_G(mu, z) + potential_G(mu, zr);
}

std::vector<std::pair<Arc, double>> conjugate_increments(
    const DiscreteMeasure& mu, const ArcSet& E) {
  std::vector<std::pair<Arc, double>> out;
  for (const auto& arc : E.arcs()) {
    double m = 0;
    for (const auto& p : mu.panels)
      if (arc.contains(Angle(p.theta_mid))) m += p.mass;
    out.push_back({arc, kTwoPi * m});
  }
  return out;
}

namespace {

struct TwoConfigs {
  ArcSet E;
  CircleHomeo h;
};

// E: m arcs of total length Ltot centered at 2*pi*k/m (jittered); the image
// configuration F is the same pattern offset by half a period.  h maps each E
// arc affinely onto the long gap between consecutive F arcs and each E gap
// onto the short F arc it straddles.
TwoConfigs interleaved_config(int m, double Ltot, uint64_t seed) {
  double ell = Ltot / m;
  double period = kTwoPi / m;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jit(-period / 8.0, period / 8.0);
  std::vector<double> centers(m), image_centers(m);
  for (int k = 0; k < m; ++k) {
    centers[k] = period * k + (m > 1 ? jit(rng) : 0.0);
    image_centers[k] = period * (k + 0.5);
  }
  std::vector<Arc> Earcs;
  std::vector<std::pair<double, double>> bp;
  for (int k = 0; k < m; ++k) {
    double a0 = centers[k] - ell / 2, a1 = centers[k] + ell / 2;
    Earcs.push_back({Angle(a0), Angle(a1)});
    // E arc k maps onto the gap (d_{k-1} + ell/2, d_k - ell/2).
    double b0 = image_centers[k] - period + ell / 2;
    double b1 = image_centers[k] - ell / 2;
    bp.push_back({a0, b0});
    bp.push_back({a1, b1});
    (void)b1;
  }
  // Normalize breakpoint angles into [0, 2pi) with a consistent lift.
  std::vector<std::pair<double, double>> norm;
  for (auto [x, y] : bp) {
    double shift = std::floor(x / kTwoPi) * kTwoPi;
    norm.push_back({x - shift, y - shift});
  }
  std::sort(norm.begin(), norm.end());
  TwoConfigs tc{ArcSet::from_arcs(Earcs), CircleHomeo::from_breakpoints(norm)};
  return tc;
}

}  // namespace

LogSingularResult make_log_singular_homeo(int level, uint64_t seed) {
  if (level < 1) throw std::invalid_argument("level must be >= 1");
  int m = 1 << std::min(level, 6);
  double Ltot = std::pow(4.0, -level);
  // Strictly tighter target than 1/level so certificate capacities are
  // non-increasing across levels (halving target per level).
  double target = std::min(1.0 / level, 0.26 * std::pow(2.0, 1 - level));
  for (int attempt = 0; attempt < 64; ++attempt) {
    if (Ltot / m < 1e-9) {
      // Arc lengths at the representable floor: fall back to fewer arcs so
      // the certificate capacities can still reach 1/level.
      if (m > 2) {
        m /= 2;
        Ltot = std::pow(4.0, -level);
        continue;
      }
      throw std::runtime_error(
          "make_log_singular_homeo: infeasible level for the resolution");
    }
    TwoConfigs tc = interleaved_config(m, Ltot, seed + attempt);
    ArcSet comp = arcset_complement(tc.E);
    ArcSet image = homeo_image(tc.h, comp);
    double capE = capacity(tc.E).capacity;
    double capI = capacity(image).capacity;
    LogSingularCertificate cert{level, tc.E, capE, capI};
    if (capE <= target && capI <= target && cert.valid()) return {tc.h, cert};
    Ltot /= 4.0;
  }
  throw std::runtime_error("make_log_singular_homeo: no certificate found");
}

std::optional<LogSingularCertificate> verify_log_singular(const CircleHomeo& h,
                                                          int level) {
  // Candidate E: union of breakpoint intervals where h expands (slope > tau).
  const auto& bp = h.breakpoints();
  size_t n = bp.size();
  for (double tau : {1.0, 2.0, 0.5}) {
    std::vector<Arc> cand;
    for (size_t i = 0; i < n; ++i) {
      double x0 = bp[i].first, y0 = bp[i].second;
      double x1, y1;
      if (i + 1 < n) {
        x1 = bp[i + 1].first;
        y1 = bp[i + 1].second;
      } else {
        x1 = bp[0].first + kTwoPi;
        y1 = bp[0].second + kTwoPi;
      }
      double slope = (y1 - y0) / (x1 - x0);
      if (slope > tau) cand.push_back({Angle(x0), Angle(x1)});
    }
    if (cand.empty()) continue;
    ArcSet E = ArcSet::from_arcs(cand);
    if (E.is_full()) continue;
    ArcSet image = homeo_image(h, arcset_complement(E));
    double capE = capacity(E).capacity;
    double capI = image.empty() ? 0.0 : capacity(image).capacity;
    LogSingularCertificate cert{level, E, capE, capI};
    if (cert.valid()) return cert;
  }
  return std::nullopt;
}

std::pair<ArcSet, double> far_set_capacity(
    const std::vector<std::pair<Angle, complexd>>& boundary_samples,
    double base_distance, double R) {
  if (R < 1.0) throw std::invalid_argument("far_set_capacity: R < 1");
  if (base_distance <= 0)
    throw std::invalid_argument("far_set_capacity: base_distance <= 0");
  // Sort samples by angle, mark exceedances, and merge consecutive marked
  // samples into arcs padded by half the sample spacing.
  std::vector<std::pair<double, bool>> marked;
  for (const auto& [a, f] : boundary_samples)
    marked.push_back({a.theta, std::abs(f) >= R * base_distance});
  std::sort(marked.begin(), marked.end());
  size_t n = marked.size();
  if (n == 0) return {ArcSet{}, 0.0};
  std::vector<Arc> arcs;
  for (size_t i = 0; i < n; ++i) {
    if (!marked[i].second) continue;
    double prev = marked[(i + n - 1) % n].first;
    double next = marked[(i + 1) % n].first;
    double lo = marked[i].first - 0.5 * std::fmod(marked[i].first - prev + kTwoPi, kTwoPi);
    double hi = marked[i].first + 0.5 * std::fmod(next - marked[i].first + kTwoPi, kTwoPi);
    arcs.push_back({Angle(lo), Angle(hi)});
  }
  ArcSet E = ArcSet::from_arcs(arcs);
  if (E.empty()) return {E, 0.0};
  return {E, capacity(E).capacity};
}

}  // namespace flexweld
