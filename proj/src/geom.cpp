#include "flexweld/geom.hpp"

#include <algorithm>
#include <cmath>

namespace flexweld {

Angle::Angle(double t) {
  theta = std::fmod(t, kTwoPi);
  if (theta < 0) theta += kTwoPi;
  if (theta >= kTwoPi) theta = 0.0;
}

double Arc::length() const {
  double d = hi.theta - lo.theta;
  if (d <= 0) d += kTwoPi;
  return d;
}

bool Arc::contains(const Angle& a) const {
  double d = a.theta - lo.theta;
  if (d < 0) d += kTwoPi;
  return d <= length() + kArcTol;
}

Angle Arc::midpoint() const { return Angle(lo.theta + 0.5 * length()); }

ArcSet ArcSet::full_circle() {
  ArcSet s;
  s.full_ = true;
  return s;
}

ArcSet ArcSet::from_arcs(std::vector<Arc> in) {
  // Drop non-positive arcs, sort by lo, merge overlaps/near-contacts.
  std::vector<Arc> arcs;
  for (const auto& a : in)
    if (a.length() > kArcTol) arcs.push_back(a);
  if (arcs.empty()) return ArcSet{};
  std::sort(arcs.begin(), arcs.end(),
            [](const Arc& a, const Arc& b) { return a.lo.theta < b.lo.theta; });

  // Unfold into [lo, lo+len] intervals on the line starting from the first lo.
  std::vector<std::pair<double, double>> iv;
  for (const auto& a : arcs) iv.push_back({a.lo.theta, a.lo.theta + a.length()});

  std::vector<std::pair<double, double>> merged;
  for (const auto& p : iv) {
    if (!merged.empty() && p.first <= merged.back().second + kArcTol)
      merged.back().second = std::max(merged.back().second, p.second);
    else
      merged.push_back(p);
  }
  // Wraparound: last interval may reach past 2*pi into the first.
  if (merged.size() > 1 && merged.back().second >= kTwoPi + merged.front().first - kArcTol) {
    merged.front().first = merged.back().first - kTwoPi;
    merged.front().second = std::max(merged.front().second,
                                     merged.back().second - kTwoPi);
    merged.pop_back();
  }
  double total = 0;
  for (const auto& p : merged) total += p.second - p.first;
  if (total >= kTwoPi - kArcTol) return full_circle();

  ArcSet s;
  for (const auto& p : merged)
    s.arcs_.push_back({Angle(p.first), Angle(p.second)});
  return s;
}

ArcSet ArcSet::from_sorted_disjoint(std::vector<Arc> arcs) {
  for (size_t i = 0; i < arcs.size(); ++i) {
    if (arcs[i].length() <= 0)
      throw std::invalid_argument("from_sorted_disjoint: non-positive arc");
    if (i > 0 && arcs[i].lo.theta <= arcs[i - 1].hi.theta)
      throw std::invalid_argument("from_sorted_disjoint: arcs not sorted disjoint");
  }
  ArcSet s;
  s.arcs_ = std::move(arcs);
  return s;
}

double ArcSet::total_length() const {
  if (full_) return kTwoPi;
  double t = 0;
  for (const auto& a : arcs_) t += a.length();
  return t;
}

bool ArcSet::contains(const Angle& a) const {
  if (full_) return true;
  for (const auto& arc : arcs_)
    if (arc.contains(a)) return true;
  return false;
}

ArcSet arcset_complement(const ArcSet& E) {
  if (E.is_full()) return ArcSet{};
  if (E.empty()) return ArcSet::full_circle();
  // Gaps between consecutive his and los (arcs are sorted and disjoint).
  const auto& arcs = E.arcs();
  std::vector<Arc> gaps;
  for (size_t i = 0; i < arcs.size(); ++i) {
    const Arc& cur = arcs[i];
    const Arc& nxt = arcs[(i + 1) % arcs.size()];
    double lo = cur.hi.theta;
    double hi = nxt.lo.theta;
    double d = hi - lo;
    if (d < 0) d += kTwoPi;
    if (d > kArcTol) gaps.push_back({Angle(lo), Angle(hi)});
  }
  return ArcSet::from_arcs(gaps);
}

CircleHomeo CircleHomeo::from_breakpoints(
    std::vector<std::pair<double, double>> bp) {
  if (bp.empty()) throw std::invalid_argument("empty breakpoint table");
  std::sort(bp.begin(), bp.end());
  for (size_t i = 1; i < bp.size(); ++i) {
    if (bp[i].first <= bp[i - 1].first + kArcTol ||
        bp[i].second <= bp[i - 1].second + kArcTol)
      throw std::invalid_argument("breakpoints not strictly increasing");
  }
  if (bp.front().first < 0 || bp.back().first >= kTwoPi)
    throw std::invalid_argument("breakpoint angles must lie in [0, 2pi)");
  if (bp.back().second - bp.front().second >= kTwoPi - kArcTol)
    throw std::invalid_argument("lift increases by >= 2pi within one period");
  CircleHomeo h;
  h.bp_ = std::move(bp);
  return h;
}

CircleHomeo CircleHomeo::identity() {
  return from_breakpoints({{0.0, 0.0}, {kTwoPi / 2, kTwoPi / 2}});
}

CircleHomeo CircleHomeo::rotation(double alpha) {
  return from_breakpoints({{0.0, alpha}, {kTwoPi / 2, alpha + kTwoPi / 2}});
}

double CircleHomeo::lift(double theta) const {
  // Reduce to the fundamental period [bp.front.first, bp.front.first + 2pi).
  double base = bp_.front().first;
  double k = std::floor((theta - base) / kTwoPi);
  double t = theta - k * kTwoPi;
  // Find segment; the last segment wraps to (bp.front.first+2pi,
  // bp.front.second+2pi).
  size_t i = 0;
  while (i + 1 < bp_.size() && bp_[i + 1].first <= t) ++i;
  double x0 = bp_[i].first, y0 = bp_[i].second;
  double x1, y1;
  if (i + 1 < bp_.size()) {
    x1 = bp_[i + 1].first;
    y1 = bp_[i + 1].second;
  } else {
    x1 = bp_.front().first + kTwoPi;
    y1 = bp_.front().second + kTwoPi;
  }
  double y = y0 + (t - x0) / (x1 - x0) * (y1 - y0);
  return y + k * kTwoPi;
}

Angle CircleHomeo::operator()(const Angle& a) const { return Angle(lift(a.theta)); }

double CircleHomeo::inverse_lift(double y) const {
  double base = bp_.front().second;
  double k = std::floor((y - base) / kTwoPi);
  double t = y - k * kTwoPi;
  size_t i = 0;
  while (i + 1 < bp_.size() && bp_[i + 1].second <= t) ++i;
  double x0 = bp_[i].first, y0 = bp_[i].second;
  double x1, y1;
  if (i + 1 < bp_.size()) {
    x1 = bp_[i + 1].first;
    y1 = bp_[i + 1].second;
  } else {
    x1 = bp_.front().first + kTwoPi;
    y1 = bp_.front().second + kTwoPi;
  }
  double x = x0 + (t - y0) / (y1 - y0) * (x1 - x0);
  return x + k * kTwoPi;
}

CircleHomeo CircleHomeo::inverse() const {
  std::vector<std::pair<double, double>> bp;
  for (const auto& [x, y] : bp_) {
    double yy = std::fmod(y, kTwoPi);
    if (yy < 0) yy += kTwoPi;
    bp.push_back({yy, inverse_lift(yy)});
  }
  return from_breakpoints(std::move(bp));
}

CircleHomeo CircleHomeo::compose_with(const CircleHomeo& inner) const {
  // Breakpoints of the composition: inner's breakpoints plus preimages of
  // this homeo's breakpoints under inner.
  std::vector<double> xs;
  for (const auto& [x, y] : inner.bp_) xs.push_back(x);
  for (const auto& [x, y] : bp_) {
    double t = std::fmod(inner.inverse_lift(x), kTwoPi);
    if (t < 0) t += kTwoPi;
    xs.push_back(t);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(),
                       [](double a, double b) { return b - a < kArcTol; }),
           xs.end());
  std::vector<std::pair<double, double>> bp;
  for (double x : xs) bp.push_back({x, lift(inner.lift(x))});
  return from_breakpoints(std::move(bp));
}

ArcSet homeo_image(const CircleHomeo& h, const ArcSet& E) {
  if (E.is_full()) return ArcSet::full_circle();
  std::vector<Arc> out;
  for (const auto& a : E.arcs()) {
    double lo = h.lift(a.lo.theta);
    double hi = h.lift(a.lo.theta + a.length());
    out.push_back({Angle(lo), Angle(hi)});
  }
  return ArcSet::from_arcs(std::move(out));
}

double Polyline::length() const {
  double s = 0;
  for (size_t i = 0; i + 1 < vertices.size(); ++i)
    s += std::abs(vertices[i + 1] - vertices[i]);
  if (closed && vertices.size() > 1) s += std::abs(vertices.front() - vertices.back());
  return s;
}

namespace {
double cross(const complexd& o, const complexd& a, const complexd& b) {
  return (a.real() - o.real()) * (b.imag() - o.imag()) -
         (a.imag() - o.imag()) * (b.real() - o.real());
}
}  // namespace

bool segments_intersect(const complexd& a, const complexd& b,
                        const complexd& c, const complexd& d) {
  double d1 = cross(c, d, a), d2 = cross(c, d, b);
  double d3 = cross(a, b, c), d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  auto on = [](const complexd& p, const complexd& q, const complexd& r) {
    return std::abs(cross(p, q, r)) < 1e-15 &&
           std::min(p.real(), q.real()) - 1e-15 <= r.real() &&
           r.real() <= std::max(p.real(), q.real()) + 1e-15 &&
           std::min(p.imag(), q.imag()) - 1e-15 <= r.imag() &&
           r.imag() <= std::max(p.imag(), q.imag()) + 1e-15;
  };
  if (std::abs(d1) < 1e-15 && on(c, d, a)) return true;
  if (std::abs(d2) < 1e-15 && on(c, d, b)) return true;
  if (std::abs(d3) < 1e-15 && on(a, b, c)) return true;
  if (std::abs(d4) < 1e-15 && on(a, b, d)) return true;
  return false;
}

bool Polyline::is_simple() const {
  size_t n = vertices.size();
  if (n < 2) return false;
  size_t m = closed ? n : n - 1;
  auto seg = [&](size_t i) {
    return std::pair<complexd, complexd>{vertices[i], vertices[(i + 1) % n]};
  };
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = i + 1; j < m; ++j) {
      bool adjacent = (j == i + 1) || (closed && i == 0 && j == m - 1);
      if (adjacent) continue;
      auto [a, b] = seg(i);
      auto [c, d] = seg(j);
      if (segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

double polygon_area(const Polyline& p) {
  if (!p.closed || p.vertices.size() < 3)
    throw std::invalid_argument("polygon_area requires a closed polygon");
  double s = 0;
  size_t n = p.vertices.size();
  for (size_t i = 0; i < n; ++i) {
    const auto& a = p.vertices[i];
    const auto& b = p.vertices[(i + 1) % n];
    s += a.real() * b.imag() - b.real() * a.imag();
  }
  return std::abs(s) / 2.0;
}

bool point_in_polygon(const complexd& z, const Polyline& p) {
  // Ray casting to the right.
  bool in = false;
  size_t n = p.vertices.size();
  for (size_t i = 0; i < n; ++i) {
    const auto& a = p.vertices[i];
    const auto& b = p.vertices[(i + 1) % n];
    if ((a.imag() > z.imag()) != (b.imag() > z.imag())) {
      double x = a.real() + (z.imag() - a.imag()) / (b.imag() - a.imag()) *
                                (b.real() - a.real());
      if (x > z.real()) in = !in;
    }
  }
  return in;
}

std::vector<complexd> MarkedQuadrilateral::side(int s) const {
  const auto& v = boundary.vertices;
  int n = static_cast<int>(v.size());
  int i0 = vertex_indices[s];
  int i1 = vertex_indices[(s + 1) % 4];
  std::vector<complexd> out;
  for (int i = i0;; i = (i + 1) % n) {
    out.push_back(v[i]);
    if (i == i1) break;
  }
  return out;
}

void MarkedQuadrilateral::validate() const {
  if (!boundary.closed) throw std::invalid_argument("quad boundary must be closed");
  if (!boundary.is_simple())
    throw std::invalid_argument("quad boundary self-intersects");
  int n = static_cast<int>(boundary.vertices.size());
  for (int i = 0; i < 4; ++i) {
    if (vertex_indices[i] < 0 || vertex_indices[i] >= n)
      throw std::invalid_argument("marked vertex index out of range");
    if (i > 0 && vertex_indices[i] == vertex_indices[i - 1])
      throw std::invalid_argument("degenerate marked side");
  }
  for (int s = 0; s < 4; ++s) {
    auto chain = side(s);
    double len = 0;
    for (size_t i = 0; i + 1 < chain.size(); ++i)
      len += std::abs(chain[i + 1] - chain[i]);
    if (len < 1e-9 * boundary.length())
      throw std::invalid_argument("near-degenerate marked side");
  }
}

}  // namespace flexweld
