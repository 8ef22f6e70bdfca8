#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flexweld/geom.hpp"
#include "flexweld/logcap.hpp"
#include "flexweld/modulus.hpp"
#include "flexweld/shapes.hpp"
#include "flexweld/slitmap.hpp"

namespace flexweld {

enum class WeldMode { plain, positive_area, dim_s, dim_1 };

struct IterationConfig {
  CircleHomeo h = CircleHomeo::identity();
  LogSingularCertificate cert;
  Polyline omega0, omega0_star;  // closed boundaries, inner then outer
  std::vector<double> eps_seq;   // per-step dilatation allowances
  WeldMode mode = WeldMode::plain;
  std::vector<double> a_seq;     // positive_area targets in (0,1)
  double s = 1.5;                // dim_s exponent
  int steps = 3;
  std::vector<int> N_schedule;   // per-step partition size (default 16)
  int samples = 1024;            // boundary table size
  double A = 17.0;               // slit-map Robin parameter (must exceed N)
  double A_cert = 3.5;           // Robin target for the step's arc set; small
                                 // values give substantial arcs to move
  double target_ratio = 2.0 / 3.0;
  uint64_t seed = 1;

  double budget_K() const;  // prod (1 + eps_n)
  void validate() const;
};

// Leaves join f_n(x) to g_n(h(x)) through the annulus; midpoints sit on the
// u = 1/2 level of the annulus potential by construction.
struct FoliationSnapshot {
  std::vector<double> angles;      // the x-points
  std::vector<Polyline> leaves;
  std::vector<complexd> midpoints;
  Polyline midcurve;               // closed u = 1/2 level curve
};

struct StepMetrics {
  int n = 0;
  double sup_mismatch = 0.0;
  double mismatch_ratio = 0.0;   // per-step sup ratio on the certificate set
  double area = 0.0;
  double area_ratio = 0.0;
  double dil_step = 0.0;         // measured sup |mu| of the step composite
  double K_step = 0.0;           // (1 + dil)/(1 - dil)
  double cum_K = 0.0;
  double extension_dev = 0.0;    // sup |f_{n+1} - f_n| off the moved set
  bool containment = true;       // psi(W_k) inside Q_k for all k
  double shrink_t = 0.0;
  double leftover_used = 0.0;    // positive_area tooth fraction
  double covering_cost = 0.0;    // dim modes
  double covering_budget = 0.0;
  long long covering_disks = 0;
};

struct IterationState {
  int step = 0;
  std::vector<double> thetas;     // uniform sample angles
  std::vector<complexd> f, g;     // boundary tables at thetas
  std::vector<double> mismatch;   // |f(x) - g(h(x))| per sample
  double sup_mismatch = 0.0;
  double area = 0.0;
  double cum_K = 1.0;
  ArcSet E_used;
  CircleHomeo h = CircleHomeo::identity();
  // Pending extension targets produced by extend_step, consumed by shrink.
  std::vector<std::optional<complexd>> f_target, g_target;

  // Preimage table tilde_j = h^{-1}(theta_j) and its sorted order, fixed at
  // init; g_comp evaluates g(h(theta)) with preimage-weighted interpolation,
  // which stays accurate where h^{-1} is nearly flat.
  std::vector<double> tilde;
  std::vector<double> tilde_s;
  std::vector<size_t> tilde_idx;

  Polyline inner_boundary() const;  // closed polyline of the f table
  Polyline outer_boundary() const;
  complexd g_at(double theta) const;  // periodic linear interpolation
  complexd g_comp(double theta) const;  // g(h(theta))
  void refresh_mismatch();
};

struct CurveTrace {
  std::vector<StepMetrics> steps;
  Polyline final_curve;  // midcurve of the last annulus
  double budget_K = 0.0;
  double final_K = 0.0;
  bool ok = false;
  std::string error;
};

IterationState init(const IterationConfig& config);

FoliationSnapshot foliate(const IterationState& state,
                          const std::vector<Angle>& x_points);

// Q_k bounded by the inner-boundary arc, the lower half-leaves and the
// midcurve segment; marked with a1 = the leaf (so the modulus grows as the
// spacing shrinks).  Moduli are attached through `moduli` when requested.
std::vector<MarkedQuadrilateral> build_quads(const IterationState& state,
                                             const FoliationSnapshot& snapshot,
                                             std::vector<double>* moduli = nullptr);

// Computes extension targets: every certificate-set sample is routed through
// its slit-domain sector, the (rectangular) shape and the quadrilateral
// uniformization onto the midcurve side of Q_k.  Appends the measured
// composite dilatation to the ledger; boundary tables move only in shrink.
IterationState extend_step(const IterationState& state, const SlitDomain& sd,
                           const std::vector<ShapeSpec>& shapes,
                           const FoliationSnapshot& snapshot,
                           const std::vector<MarkedQuadrilateral>& quads,
                           StepMetrics* metrics = nullptr);

// Bisects the motion fraction t until leaf lengths on the certificate set
// shrink to <= target_ratio, then commits the motion to both tables.
IterationState shrink(const IterationState& state, double target_ratio,
                      StepMetrics* metrics = nullptr);

CurveTrace run(const IterationConfig& config);

// 2 K d / (2 + (K - 1) d).
double astala_bound(double K, double d);
// Small-dilatation band (1 + C ||mu||)^{+-1} * d.
std::pair<double, double> astala_band(double mu_norm, double d, double C);

double covering_cost(const std::vector<Disk>& disks, double s);

}  // namespace flexweld
