#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexweld {

using complexd = std::complex<double>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kArcTol = 1e-12;

// Normalized angle in [0, 2*pi).
struct Angle {
  double theta = 0.0;

  Angle() = default;
  explicit Angle(double t);
  complexd point() const { return {std::cos(theta), std::sin(theta)}; }
};

struct Arc {
  Angle lo, hi;  // closed arc from lo counterclockwise to hi
  double length() const;
  bool contains(const Angle& a) const;
  Angle midpoint() const;
};

// Finite disjoint union of closed arcs on the unit circle, sorted by lo with
// at most one wraparound arc.  A full-circle set is flagged explicitly.
class ArcSet {
 public:
  ArcSet() = default;
  static ArcSet full_circle();
  // Normalizes: merges arcs overlapping or closer than kArcTol, sorts.
  static ArcSet from_arcs(std::vector<Arc> arcs);
  // Trusts the input: sorted, pairwise disjoint, no wraparound.  Keeps arcs
  // shorter than kArcTol instead of dropping them.
  static ArcSet from_sorted_disjoint(std::vector<Arc> arcs);

  const std::vector<Arc>& arcs() const { return arcs_; }
  bool is_full() const { return full_; }
  bool empty() const { return !full_ && arcs_.empty(); }
  double total_length() const;
  bool contains(const Angle& a) const;

 private:
  std::vector<Arc> arcs_;
  bool full_ = false;
};

ArcSet arcset_complement(const ArcSet& E);

// Orientation-preserving circle homeomorphism as a monotone breakpoint table
// with the lift convention h(theta + 2*pi) = h(theta) + 2*pi.  Piecewise
// linear between breakpoints.
class CircleHomeo {
 public:
  // Breakpoints (theta, lift) with theta in [0, 2*pi), strictly increasing in
  // both coordinates; the lift at theta_0 + 2*pi is lift_0 + 2*pi.
  static CircleHomeo from_breakpoints(std::vector<std::pair<double, double>> bp);
  static CircleHomeo identity();
  static CircleHomeo rotation(double alpha);

  double lift(double theta) const;          // defined for all real theta
  Angle operator()(const Angle& a) const;   // image on the circle
  double inverse_lift(double y) const;
  CircleHomeo inverse() const;
  CircleHomeo compose_with(const CircleHomeo& inner) const;  // this ∘ inner

  const std::vector<std::pair<double, double>>& breakpoints() const {
    return bp_;
  }

 private:
  std::vector<std::pair<double, double>> bp_;  // (theta, lift), theta in [0,2pi)
};

ArcSet homeo_image(const CircleHomeo& h, const ArcSet& E);

struct Polyline {
  std::vector<complexd> vertices;
  bool closed = false;

  double length() const;
  bool is_simple() const;  // O(n^2) segment intersection test
};

double polygon_area(const Polyline& p);  // shoelace, positive; requires closed

// Point-in-polygon by winding (closed polyline assumed simple).
bool point_in_polygon(const complexd& z, const Polyline& p);

// Jordan polyline with 4 marked vertices in counterclockwise order.  Sides in
// cyclic order starting at vertex_indices[0]: a1, b1, a2, b2.
struct MarkedQuadrilateral {
  Polyline boundary;              // closed
  std::array<int, 4> vertex_indices{};

  // Vertex chain of side s (0=a1,1=b1,2=a2,3=b2), endpoints included.
  std::vector<complexd> side(int s) const;
  void validate() const;
};

struct Disk {
  complexd center;
  double radius = 0.0;
};

// Segment intersection helper shared by simplicity tests.
bool segments_intersect(const complexd& a, const complexd& b,
                        const complexd& c, const complexd& d);

}  // namespace flexweld
