#pragma once

#include <vector>

#include "flexweld/geom.hpp"
#include "flexweld/logcap.hpp"
#include "flexweld/modulus.hpp"

namespace flexweld {

struct SlitMapConfig {
  int N = 16;          // number of partition arcs I_k
  double A = 17.0;     // per-arc Robin constant target, A > N
  int M = 16;          // number of marked slit tips
  double delta = 0.01; // normalization: map divided by (1 + delta)
  int samples = 2048;  // boundary sample count

  void validate() const;
};

// Image of the unit disk under exp(U + i*conj U) / (1 + delta): a near-disk
// Jordan domain with one radial slit per complementary gap of E.
struct SlitDomain {
  SlitMapConfig cfg;
  ArcSet E;
  DiscreteMeasure mu;  // union of per-arc equilibrium measures, total mass 1

  std::vector<std::pair<Angle, complexd>> boundary_map;  // angle on S^1 -> phi
  Polyline outer_boundary;          // image of E (closed)
  std::vector<Polyline> slits;      // radial slits, outer end first
  std::vector<complexd> tips;       // inner slit endpoints
  std::vector<double> slit_angles;  // constant argument per slit
  std::vector<double> slit_flank_before, slit_flank_after;  // outer radii
  std::vector<complexd> marked_tips_cache;
  double inner_radius = 0.0, outer_radius = 0.0;
  bool tiny_arcs = false;         // arcs below quadrature resolution
  std::vector<double> arc_robin;  // analytic per-arc Robin constants
  double conj_anchor = 0.0;

  // Interior evaluation of the map (|z| < 1).
  complexd interior(const complexd& z) const;
  // Boundary data at an arbitrary angle: (radius, argument) of phi.
  std::pair<double, double> boundary_polar(double theta) const;
};

// E = union of one closed sub-arc per I_k, centered per arc (or aligned with
// the certificate set when given), lengths tuned by bisection so that the
// capacity of E matches exp(-(A_target - log N)/N), the whole-set Robin value
// induced by per-arc Robin constant A_target.
ArcSet build_E(int N, double A_target, const LogSingularCertificate* h_cert = nullptr);

SlitDomain slit_map(const ArcSet& E, const SlitMapConfig& cfg);

// Selects M slit tips nearest the M-th roots of unity; throws if any
// distance exceeds delta or fewer than M slits exist.
std::vector<complexd> marked_tips(SlitDomain& sd, int M, double delta);

struct SlitSector {
  MarkedQuadrilateral quad;  // a1 = inner circle arc, a2 = outer boundary
  double modulus = 0.0;      // quad_modulus of the arc-joining family
  double target = 0.0;       // pi*N*d(x_k, x_{k+1})/A, d in unit-length units
  double ratio = 0.0;
};

std::vector<SlitSector> sector_quads(const SlitDomain& sd);

}  // namespace flexweld
