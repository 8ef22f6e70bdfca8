#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "flexweld/geom.hpp"
#include "flexweld/modulus.hpp"

namespace flexweld {

// Conformal-embedding shape inside [0,T]x[0,1]: the region between two
// disjoint simple paths gamma1 (from 0 to p1 on {T}x[0,1]) and gamma2 (from i
// to p2 above p1), marked as a quadrilateral with a1 = gamma1.
struct ShapeSpec {
  double T = 0.0;
  Polyline gamma1, gamma2;
  double R = 0.0;  // quad modulus; equals T for the full rectangle
  MarkedQuadrilateral region;
};

// Strip interpolation G(x+iy) between boundary data G0 at x=1 and G1 at x=M,
// with closed-form partials and dilatation on a grid over [1,M]x[0,1].
struct StripInterp {
  double M = 0.0, M_tilde = 0.0;
  std::vector<double> ts, G0, G1;  // uniform samples on [0,1]
  int nx = 0, ny = 0;
  std::vector<complexd> value;  // row-major: value[iy*nx+ix]
  std::vector<double> ux, vx, vy;  // u_y vanishes identically
  std::vector<complexd> mu;
  double sup_mu = 0.0;
};

struct AdmissibilityReport {
  double M = 0.0;
  double M_used = 0.0;     // sub-strip cutoff actually used (<= M)
  double M_tilde = 0.0;    // modulus of the corrected sub-strip
  double epsilon_bound = 0.0;      // e^{-pi(M-1)/2} / M
  double epsilon_bound_alt = 0.0;  // 2 C e^{-pi(M-1)/2} / (M-1)
  double fitted_C = 0.0;
  double measured_sup_dilatation = 0.0;  // 256x256 centered differences
  double refined_sup_dilatation = 0.0;   // doubled grid, convergence guard
  double corrector_identity_dev = 0.0;   // sup |alpha(E(w)) - w| on [0,1]^2
  double vertex_fix_dev = 0.0;           // worst motion of the 4 quad-vertices
  double support_leakage = 0.0;          // measured |mu| outside support_box
  std::array<double, 4> support_box{};   // {x_lo, x_hi, y_lo, y_hi}
  std::vector<double> level_dev;  // Im E(Mc+it) - t: right-end level-curve
                                  // deviation profile, the shape's response
                                  // mode used to anchor decay families
  StripInterp strip;
};

ShapeSpec shape_from_paths(double T, Polyline gamma1, Polyline gamma2,
                           MeshOptions opt = {});

StripInterp strip_interpolation(double M, double M_tilde,
                                const std::vector<double>& G0,
                                const std::vector<double>& G1, int nx = 65);

AdmissibilityReport admissibility(const ShapeSpec& spec, double M,
                                  MeshOptions opt = {});

double leftover_percentage(const ShapeSpec& spec);

// Least integer M >= 2 with log(1/eps) < pi(M-1)/2 + log(M-1).
int M_for_eps(double eps);

// Feasibility threshold 4 M(eps) / (1 - a).
double min_feasible_T(double eps, double a);

struct InfeasibleShape : std::invalid_argument {
  double min_T = 0.0;
  InfeasibleShape(const std::string& msg, double t)
      : std::invalid_argument(msg), min_T(t) {}
};

// Comb shape: identity block on [0,2M]x[0,1] followed by 8 axis-aligned
// teeth whose depth is bisected until the leftover percentage equals a.
ShapeSpec shape_with_leftover(double eps, double a, double T);

// Builds per-T comb shapes, then raises each modulus to the family maximum
// by bisecting the right-end vertex gap.
std::pair<double, std::vector<ShapeSpec>> uniform_R_family(
    const std::vector<double>& T_list, double eps, double a);

// Family of strip interpolations for M = M_lo..M_hi built from one measured
// shape: the anchor's deviations are transported by the strip
// harmonic-measure law, with the measured level-curve profile and M_tilde
// offset carried at rate e^{-pi dM/2} and the interior-cancelled boundary
// data at e^{-pi dM}.
std::vector<StripInterp> dilatation_decay_family(
    const AdmissibilityReport& anchor, int M_lo, int M_hi);

// Reference comb whose teeth sit close to the measurement window, so the
// measured level-curve deviation is far above mesh noise; used to anchor
// decay families at M = 2.
ShapeSpec decay_anchor_shape();

}  // namespace flexweld
