#include "flexweld/dimension.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_set>

namespace flexweld {

namespace {


double side_for_n(double s, int n) {
  return std::pow(4.0 * n * std::pow(2.0, s / 2.0), -1.0 / s);
}

int grid_k(int n) {
  int k = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  while (k * k < n) ++k;
  return k;
}

// Distance from point to axis-aligned square.
double square_distance(const complexd& p, const GridSquare& q) {
  double dx = std::max({q.lo.real() - p.real(), 0.0, p.real() - q.lo.real() - q.side});
  double dy = std::max({q.lo.imag() - p.imag(), 0.0, p.imag() - q.lo.imag() - q.side});
  return std::hypot(dx, dy);
}

struct LinearFit {
  double slope = 0.0, intercept = 0.0, r2 = 1.0;
};

LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  size_t n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  LinearFit f;
  double den = n * sxx - sx * sx;
  if (den == 0) return f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_tot = syy - sy * sy / n;
  double ss_res = 0;
  for (size_t i = 0; i < n; ++i) {
    double e = ys[i] - (f.slope * xs[i] + f.intercept);
    ss_res += e * e;
  }
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

uint64_t box_key(long long ix, long long iy) {
  return (static_cast<uint64_t>(ix + (1ll << 30)) << 32) |
         static_cast<uint64_t>(iy + (1ll << 30));
}

size_t count_boxes(const std::vector<GridSquare>& squares, double delta) {
  std::unordered_set<uint64_t> boxes;
  boxes.reserve(squares.size() * 4);
  for (const GridSquare& q : squares) {
    long long ix0 = static_cast<long long>(std::floor(q.lo.real() / delta));
    long long ix1 = static_cast<long long>(std::floor((q.lo.real() + q.side) / delta));
    long long iy0 = static_cast<long long>(std::floor(q.lo.imag() / delta));
    long long iy1 = static_cast<long long>(std::floor((q.lo.imag() + q.side) / delta));
    for (long long ix = ix0; ix <= ix1; ++ix)
      for (long long iy = iy0; iy <= iy1; ++iy) boxes.insert(box_key(ix, iy));
  }
  return boxes.size();
}

BoxDimResult fit_box_counts(std::vector<double> scales, std::vector<double> counts) {
  std::vector<double> xs, ys, sc, ct;
  for (size_t i = 0; i < scales.size(); ++i) {
    if (counts[i] <= 0) continue;
    xs.push_back(std::log(1.0 / scales[i]));
    ys.push_back(std::log(counts[i]));
    sc.push_back(scales[i]);
    ct.push_back(counts[i]);
  }
  if (xs.size() < 2)
    throw std::runtime_error("box_dim: fewer than 2 nonempty scales");
  LinearFit f = fit_line(xs, ys);
  BoxDimResult r;
  r.estimate = f.slope;
  r.fit_r2 = f.r2;
  r.scale = std::move(sc);
  r.count = std::move(ct);
  return r;
}

bool rects_overlap(double ax0, double ay0, double ax1, double ay1,
                   double bx0, double by0, double bx1, double by1) {
  return ax0 < bx1 && bx0 < ax1 && ay0 < by1 && by0 < ay1;
}

}  // namespace

SAdditiveLayout s_additive_squares(double s, int n_min, uint64_t seed) {
  if (!(s > 1.0 && s < 2.0))
    throw std::invalid_argument("s_additive_squares: s must lie in (1,2)");
  if (n_min < 1) throw std::invalid_argument("s_additive_squares: n_min < 1");
  int n = n_min;
  double x = 0.0;
  for (;; ++n) {
    if (n > 5'000'000)
      throw std::runtime_error("s_additive_squares: no feasible n under cap");
    x = side_for_n(s, n);
    if (n * x * x > 1.0 / 25.0) continue;           // anchors cannot hold them
    if (grid_k(n) * x >= 0.2) continue;             // grid does not fit
    break;
  }
  SAdditiveLayout lay;
  lay.s = s;
  lay.n = n;
  lay.x = x;
  lay.seed = seed;
  lay.density = 25.0 / (4.0 * std::pow(2.0, s / 2.0)) * std::pow(x, 2.0 - s);
  lay.anchors = {complexd(0.2, 0.2), complexd(0.6, 0.2), complexd(0.2, 0.6),
                 complexd(0.6, 0.6)};
  int k = grid_k(n);
  double pitch = 0.2 / k;
  lay.nominal_gap = pitch - x;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jit(-lay.nominal_gap / 4.0,
                                             lay.nominal_gap / 4.0);
  lay.placements.reserve(4 * static_cast<size_t>(n));
  for (int m = 0; m < 4; ++m) {
    for (int c = 0; c < n; ++c) {
      int j = c / k, i = c % k;  // row-major within the anchor grid
      complexd lo = lay.anchors[m] +
                    complexd(i * pitch + (pitch - x) / 2.0 + jit(rng),
                             j * pitch + (pitch - x) / 2.0 + jit(rng));
      lay.placements.push_back({lo, x});
    }
  }
  return lay;
}

SeparationReport separation_check(const SAdditiveLayout& layout, int trials,
                                  uint64_t seed) {
  SeparationReport rep;
  rep.trials = trials;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double x = layout.x, s = layout.s;
  double dqs = std::pow(std::sqrt(2.0) * x, s);
  const int nbins = 6;
  double lr0 = std::log(x), lr1 = std::log(1.0);
  std::vector<double> bin_max(nbins, 0.0);
  std::vector<double> lsig_x, lsig_y;
  for (int t = 0; t < trials; ++t) {
    double r = std::exp(lr0 + (lr1 - lr0) * uni(rng));
    complexd c(uni(rng), uni(rng));
    int hits = 0;
    for (const GridSquare& q : layout.placements)
      if (square_distance(c, q) <= r) ++hits;
    double sig = hits * dqs;
    double ratio = sig / std::pow(r, s);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    int b = std::min(nbins - 1, static_cast<int>((std::log(r) - lr0) /
                                                 (lr1 - lr0) * nbins));
    bin_max[b] = std::max(bin_max[b], ratio);
    if (sig > 0) {
      lsig_x.push_back(std::log(r));
      lsig_y.push_back(std::log(sig));
    }
  }
  rep.fitted_const = rep.max_ratio;
  std::vector<double> bx, by;
  for (int b = 0; b < nbins; ++b) {
    if (bin_max[b] <= 0) continue;
    bx.push_back(lr0 + (b + 0.5) * (lr1 - lr0) / nbins);
    by.push_back(std::log(bin_max[b]));
  }
  rep.ratio_slope = bx.size() >= 2 ? fit_line(bx, by).slope : 0.0;
  rep.sigma_slope = lsig_x.size() >= 2 ? fit_line(lsig_x, lsig_y).slope : 0.0;
  rep.pass = rep.ratio_slope <= 0.05;
  return rep;
}

SquareTree mattila_build(double s, int depth, int n_min, uint64_t seed) {
  if (depth < 0 || depth > 5)
    throw std::invalid_argument("mattila_build: depth must lie in [0,5]");
  SquareTree t;
  t.layout = s_additive_squares(s, n_min, seed);
  t.depth = depth;
  t.branching = 4 * t.layout.n;
  t.ratio = std::sqrt(2.0) * t.layout.x;
  t.additivity_dev =
      std::abs(t.branching * std::pow(t.ratio, s) - 1.0);
  t.decreasing = t.ratio < 1.0;
  // Pattern containment: the rescaled configuration square (side sqrt(2)
  // times the parent side, centered) keeps every placement inside the parent.
  double off = (1.0 - std::sqrt(2.0)) / 2.0;
  t.containment = true;
  for (const GridSquare& p : t.layout.placements) {
    double x0 = off + std::sqrt(2.0) * p.lo.real();
    double y0 = off + std::sqrt(2.0) * p.lo.imag();
    double x1 = x0 + std::sqrt(2.0) * p.side;
    double y1 = y0 + std::sqrt(2.0) * p.side;
    if (x0 < 0 || y0 < 0 || x1 > 1 || y1 > 1) t.containment = false;
  }
  const double budget = 4e6;
  t.levels.push_back({GridSquare{complexd(0.0, 0.0), 1.0}});
  t.materialized_depth = 0;
  double count = 1.0;
  for (int k = 1; k <= depth; ++k) {
    count *= t.branching;
    if (count > budget) break;
    const auto& parents = t.levels.back();
    std::vector<GridSquare> children;
    children.reserve(parents.size() * t.layout.placements.size());
    for (const GridSquare& par : parents) {
      double d = std::sqrt(2.0) * par.side;  // configuration side
      complexd origin = par.lo + complexd(par.side - d, par.side - d) * 0.5;
      for (const GridSquare& p : t.layout.placements)
        children.push_back({origin + d * p.lo, d * p.side});
    }
    t.levels.push_back(std::move(children));
    t.materialized_depth = k;
  }
  t.level_diameter.resize(depth + 1);
  for (int k = 0; k <= depth; ++k)
    t.level_diameter[k] = std::sqrt(2.0) * std::pow(t.ratio, k);
  // Explicit child-in-parent check on the first materialized level.
  if (t.materialized_depth >= 1)
    for (const GridSquare& q : t.levels[1])
      if (q.lo.real() < 0 || q.lo.imag() < 0 || q.lo.real() + q.side > 1 ||
          q.lo.imag() + q.side > 1)
        t.containment = false;
  return t;
}

TreeMeasure natural_measure(const SquareTree& tree) {
  TreeMeasure mu;
  mu.s = tree.layout.s;
  mu.depth = tree.depth;
  mu.branch_mass = 1.0 / tree.branching;
  mu.level_mass.resize(tree.depth + 1);
  for (int k = 0; k <= tree.depth; ++k)
    mu.level_mass[k] = std::pow(mu.branch_mass, k);
  return mu;
}

namespace {

// mu(D) via tree traversal down the materialized levels: nodes outside D
// contribute 0, nodes inside contribute their whole mass, straddling nodes
// recurse; at the deepest materialized level straddling nodes count fully
// (an upper bound accurate to a constant once their side is below r).
double measure_of_disk(const SquareTree& t, const TreeMeasure& mu,
                       const complexd& c, double r, int level, size_t index) {
  const GridSquare& q = t.levels[level][index];
  if (square_distance(c, q) > r) return 0.0;
  double corner = std::hypot(
      std::max(std::abs(q.lo.real() - c.real()),
               std::abs(q.lo.real() + q.side - c.real())),
      std::max(std::abs(q.lo.imag() - c.imag()),
               std::abs(q.lo.imag() + q.side - c.imag())));
  if (corner <= r || level == t.materialized_depth || q.side <= r * 0.25)
    return mu.level_mass[level];
  double m = 0.0;
  size_t base = index * t.branching;
  for (int j = 0; j < t.branching; ++j)
    m += measure_of_disk(t, mu, c, r, level + 1, base + j);
  return m;
}

}  // namespace

FrostmanReport frostman_check(const SquareTree& tree, const TreeMeasure& mu,
                              int trials, uint64_t seed) {
  FrostmanReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  int deepest = tree.materialized_depth;
  // Radii below ~4x the finest materialized side cannot be resolved: a
  // straddling node then contributes its whole mass and inflates the sup.
  double min_r = 4.0 * std::pow(tree.ratio, deepest);
  const auto& leaves = tree.levels[deepest];
  for (double r = 0.5; r >= min_r; r *= 0.5) {
    double sup = 0.0;
    for (int t = 0; t < trials; ++t) {
      const GridSquare& q = leaves[static_cast<size_t>(uni(rng) * leaves.size()) %
                                   leaves.size()];
      complexd c = q.lo + complexd(q.side / 2.0, q.side / 2.0) +
                   complexd((uni(rng) - 0.5) * r, (uni(rng) - 0.5) * r);
      double m = measure_of_disk(tree, mu, c, r, 0, 0);
      sup = std::max(sup, m / std::pow(r, mu.s));
    }
    rep.scale.push_back(r);
    rep.sup_ratio.push_back(sup);
  }
  rep.pass = rep.scale.size() >= 2;
  for (size_t i = 1; i < rep.sup_ratio.size(); ++i) {
    double ratio = rep.sup_ratio[i] / rep.sup_ratio[i - 1];
    rep.max_adjacent_ratio =
        std::max({rep.max_adjacent_ratio, ratio, 1.0 / ratio});
    if (ratio < 0.5 || ratio > 2.0) rep.pass = false;
  }
  return rep;
}

BoxDimResult box_dim(const std::vector<complexd>& points,
                     const std::vector<double>& scales) {
  if (scales.size() < 4)
    throw std::invalid_argument("box_dim: need at least 4 scales");
  std::vector<double> counts;
  for (double d : scales) {
    std::unordered_set<uint64_t> boxes;
    boxes.reserve(points.size());
    for (const complexd& p : points)
      boxes.insert(box_key(static_cast<long long>(std::floor(p.real() / d)),
                           static_cast<long long>(std::floor(p.imag() / d))));
    counts.push_back(static_cast<double>(boxes.size()));
  }
  return fit_box_counts(scales, counts);
}

BoxDimResult box_dim(const std::vector<GridSquare>& squares,
                     const std::vector<double>& scales) {
  if (scales.size() < 4)
    throw std::invalid_argument("box_dim: need at least 4 scales");
  std::vector<double> counts;
  for (double d : scales)
    counts.push_back(static_cast<double>(count_boxes(squares, d)));
  return fit_box_counts(scales, counts);
}

BoxDimResult tree_box_dim(const SquareTree& tree) {
  if (tree.depth < 2)
    throw std::invalid_argument("tree_box_dim: need depth >= 2");
  std::vector<double> scales, counts;
  int mat = tree.materialized_depth;
  double base = mat >= 1
                    ? static_cast<double>(count_boxes(
                          tree.levels[mat], std::pow(tree.ratio, mat)))
                    : 1.0;
  for (int k = 1; k <= tree.depth; ++k) {
    double delta = std::pow(tree.ratio, k);
    double c;
    if (k <= mat) {
      c = static_cast<double>(count_boxes(tree.levels[k], delta));
    } else {
      // Virtual levels: every materialized-depth node carries a congruent
      // copy of the pattern, so counts renormalize by the branching factor.
      c = base * std::pow(static_cast<double>(tree.branching), k - mat);
    }
    scales.push_back(delta);
    counts.push_back(c);
  }
  return fit_box_counts(scales, counts);
}

ConnectResult connect_squares(double T, const std::vector<GridSquare>& squares,
                              double s, double delta, double width) {
  if (squares.size() < 2)
    throw std::invalid_argument("connect_squares: need at least 2 squares");
  if (!(delta > 0)) throw std::invalid_argument("connect_squares: delta <= 0");
  std::vector<GridSquare> sq = squares;
  std::sort(sq.begin(), sq.end(), [](const GridSquare& a, const GridSquare& b) {
    return a.lo.real() < b.lo.real();
  });
  double min_side = sq.front().side, min_gap = T;
  double total_len = 0.0;
  for (size_t i = 0; i + 1 < sq.size(); ++i) {
    min_side = std::min(min_side, sq[i + 1].side);
    double gap = sq[i + 1].lo.real() - (sq[i].lo.real() + sq[i].side);
    if (gap <= 0)
      throw std::runtime_error(
          "connect_squares: unroutable corridor (congestion): squares overlap "
          "in x");
    min_gap = std::min(min_gap, gap);
    double dy = (sq[i + 1].lo.imag() + sq[i + 1].side / 2.0) -
                (sq[i].lo.imag() + sq[i].side / 2.0);
    total_len += gap + std::abs(dy);
  }
  double exit_len = T - (sq.back().lo.real() + sq.back().side);
  if (exit_len <= 0)
    throw std::invalid_argument("connect_squares: last square touches x = T");
  total_len += exit_len;

  double w = width > 0 ? width : min_side / 8.0;
  w = std::min({w, min_side / 4.0, min_gap / 4.0});
  auto cost_for = [&](double ww) {
    double segs = std::ceil(total_len / ww) + 2.0 * sq.size();
    return segs * std::pow(ww, s);
  };
  if (width <= 0) {
    while (cost_for(w) > delta) {
      w /= 2.0;
      if (w < 1e-7)
        throw std::runtime_error(
            "connect_squares: covering budget unreachable above width floor");
    }
  }

  ConnectResult res;
  res.width = w;

  auto center_y = [](const GridSquare& q) { return q.lo.imag() + q.side / 2.0; };

  // Corridor rectangles (H-V-H) and congestion check.
  for (size_t i = 0; i + 1 < sq.size(); ++i) {
    double y0 = center_y(sq[i]), y1 = center_y(sq[i + 1]);
    double xr = sq[i].lo.real() + sq[i].side;
    double xl = sq[i + 1].lo.real();
    double xm = (xr + xl) / 2.0;
    std::vector<std::array<double, 4>> rects;
    if (std::abs(y1 - y0) <= w / 4.0) {
      rects.push_back({xr, std::min(y0, y1) - w / 2, xl, std::max(y0, y1) + w / 2});
    } else {
      rects.push_back({xr, y0 - w / 2, xm + w / 2, y0 + w / 2});
      rects.push_back({xm - w / 2, std::min(y0, y1) - w / 2, xm + w / 2,
                       std::max(y0, y1) + w / 2});
      rects.push_back({xm - w / 2, y1 - w / 2, xl, y1 + w / 2});
    }
    for (const auto& r : rects)
      for (size_t j = 0; j < sq.size(); ++j) {
        if (j == i || j == i + 1) continue;
        if (rects_overlap(r[0], r[1], r[2], r[3], sq[j].lo.real(),
                          sq[j].lo.imag(), sq[j].lo.real() + sq[j].side,
                          sq[j].lo.imag() + sq[j].side))
          throw std::runtime_error(
              "connect_squares: unroutable corridor (congestion)");
      }
    res.corridors.push_back(std::move(rects));
  }
  // Exit corridor to the right edge.
  {
    double y = center_y(sq.back());
    res.corridors.push_back(
        {{{sq.back().lo.real() + sq.back().side, y - w / 2, T, y + w / 2}}});
  }

  // Disk covering of the corridor spines: radius w, spacing w covers the
  // width-w tube (max distance to a spine sample is w/sqrt(2)).
  for (const auto& corr : res.corridors)
    for (const auto& r : corr) {
      double cx = (r[0] + r[2]) / 2.0, cy = (r[1] + r[3]) / 2.0;
      bool horizontal = (r[2] - r[0]) >= (r[3] - r[1]);
      double len = horizontal ? r[2] - r[0] : r[3] - r[1];
      int m = std::max(1, static_cast<int>(std::ceil(len / w)));
      for (int j = 0; j <= m; ++j) {
        double t = len * (m ? static_cast<double>(j) / m : 0.5) - len / 2.0;
        res.covering.push_back(
            {horizontal ? complexd(cx + t, cy) : complexd(cx, cy + t), w});
      }
    }
  for (const Disk& d : res.covering)
    res.covering_cost += std::pow(d.radius, s);

  // Tube boundary as two x-monotone rectilinear paths.
  Polyline g1, g2;
  g1.vertices.push_back(complexd(0.0, 0.0));
  g2.vertices.push_back(complexd(0.0, 1.0));
  for (size_t i = 0; i < sq.size(); ++i) {
    double yc = center_y(sq[i]);
    double xl = sq[i].lo.real(), xr = xl + sq[i].side;
    double yb = sq[i].lo.imag(), yt = yb + sq[i].side;
    g1.vertices.push_back(complexd(xl, yc - w / 2));
    g1.vertices.push_back(complexd(xl, yb));
    g1.vertices.push_back(complexd(xr, yb));
    g1.vertices.push_back(complexd(xr, yc - w / 2));
    g2.vertices.push_back(complexd(xl, yc + w / 2));
    g2.vertices.push_back(complexd(xl, yt));
    g2.vertices.push_back(complexd(xr, yt));
    g2.vertices.push_back(complexd(xr, yc + w / 2));
    if (i + 1 < sq.size()) {
      double y1 = center_y(sq[i + 1]);
      double xm = (xr + sq[i + 1].lo.real()) / 2.0;
      if (std::abs(y1 - yc) > w / 4.0) {
        double lo_off = y1 > yc ? w / 2 : -w / 2;  // offset side of the bend
        g1.vertices.push_back(complexd(xm + lo_off, yc - w / 2));
        g1.vertices.push_back(complexd(xm + lo_off, y1 - w / 2));
        g2.vertices.push_back(complexd(xm - lo_off, yc + w / 2));
        g2.vertices.push_back(complexd(xm - lo_off, y1 + w / 2));
      }
    }
  }
  double y_exit = center_y(sq.back());
  g1.vertices.push_back(complexd(T, y_exit - w / 2));
  g2.vertices.push_back(complexd(T, y_exit + w / 2));

  MeshOptions opt;
  opt.target_divisions = 12;
  res.shape = shape_from_paths(T, g1, g2, opt);
  return res;
}

}  // namespace flexweld
