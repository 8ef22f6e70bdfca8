#pragma once

#include <cstdint>
#include <vector>

#include "flexweld/geom.hpp"
#include "flexweld/shapes.hpp"

namespace flexweld {

// Axis-aligned square given by its lower-left corner and side.
struct GridSquare {
  complexd lo;
  double side = 0.0;
};

// Equal squares of side x, n per anchor, with 4 n (sqrt(2) x)^s = 1 and
// nearest-neighbor distances comparable to x^{s/2}.  The four anchor squares
// have side 1/5 with mutual and boundary gaps 1/5 inside the unit square.
struct SAdditiveLayout {
  double s = 0.0;
  int n = 0;
  double x = 0.0;  // placement side
  double density = 0.0;   // P(s) = (25 / (4 * 2^{s/2})) x^{2-s}
  double nominal_gap = 0.0;  // grid pitch minus x inside an anchor
  std::array<complexd, 4> anchors{};  // lower-left corners, side 1/5
  std::vector<GridSquare> placements;  // 4 n squares
  uint64_t seed = 0;
};

// Least n >= n_min whose side x = (4 n 2^{s/2})^{-1/s} satisfies both
// n x^2 <= 1/25 and grid realizability ceil(sqrt(n)) * x <= 1/5, with a
// seeded jittered-grid placement.
SAdditiveLayout s_additive_squares(double s, int n_min, uint64_t seed = 1);

struct SeparationReport {
  int trials = 0;
  double max_ratio = 0.0;     // max over disks of sum d(Q)^s / r^s
  double fitted_const = 0.0;  // recorded constant (= max_ratio)
  double ratio_slope = 0.0;   // log-log slope of per-bin max ratio vs r
  double sigma_slope = 0.0;   // log-log slope of sum d(Q)^s vs r
  bool pass = false;          // ratio_slope <= 0.05
};

SeparationReport separation_check(const SAdditiveLayout& layout, int trials,
                                  uint64_t seed);

// Nested squares: every node carries the same layout pattern rescaled by the
// node diameter, so child diameters satisfy sum d^s = d(parent)^s exactly.
// Levels are materialized only while the node count stays under a budget;
// deeper levels are virtual and reached through the similarity ratio.
struct SquareTree {
  SAdditiveLayout layout;
  int depth = 0;          // requested depth K
  int branching = 0;      // 4 n
  double ratio = 0.0;     // per-level side ratio sqrt(2) x
  int materialized_depth = 0;
  std::vector<std::vector<GridSquare>> levels;  // levels[0] = root
  std::vector<double> level_diameter;           // d_k, k = 0..K
  // Condition report: children inside parents; level max diameters strictly
  // decreasing; worst relative deviation of sum d(child)^s from d(parent)^s.
  bool containment = false;
  bool decreasing = false;
  double additivity_dev = 0.0;
};

SquareTree mattila_build(double s, int depth, int n_min, uint64_t seed = 1);

// Mass 1 at the root, split equally among the (congruent) children, i.e. in
// proportion d^s; leaf mass (4n)^{-K} is proportional to d(leaf)^s.
struct TreeMeasure {
  double s = 0.0;
  int depth = 0;
  double branch_mass = 0.0;  // child/parent mass ratio = 1/(4n)
  std::vector<double> level_mass;  // mass of one node per level
};

TreeMeasure natural_measure(const SquareTree& tree);

struct FrostmanReport {
  std::vector<double> scale;      // dyadic disk radii
  std::vector<double> sup_ratio;  // per-scale sup of mu(D) / r^s
  double max_adjacent_ratio = 0.0;  // stability across scales
  bool pass = false;                // adjacent sup ratios within [1/2, 2]
};

FrostmanReport frostman_check(const SquareTree& tree, const TreeMeasure& mu,
                              int trials, uint64_t seed);

struct BoxDimResult {
  double estimate = 0.0;
  double fit_r2 = 0.0;
  std::vector<double> scale;
  std::vector<double> count;  // occupied grid boxes (double: virtual levels
                              // renormalize counts beyond materialization)
};

BoxDimResult box_dim(const std::vector<complexd>& points,
                     const std::vector<double>& scales);
BoxDimResult box_dim(const std::vector<GridSquare>& squares,
                     const std::vector<double>& scales);
// Scales r^1..r^K; counts at virtual levels use the per-node self-similarity.
BoxDimResult tree_box_dim(const SquareTree& tree);

// Thin axis-aligned corridors joining an x-sorted chain of squares, a disk
// covering of the corridors with sum r^s <= delta, and the resulting tube
// presented as a shape in [0,T]x[0,1].
struct ConnectResult {
  double width = 0.0;
  // One corridor per consecutive pair; each is 1-3 axis-aligned rectangles
  // {x0, y0, x1, y1} tracing an H-V-H route of the given width.
  std::vector<std::vector<std::array<double, 4>>> corridors;
  std::vector<Disk> covering;
  double covering_cost = 0.0;
  ShapeSpec shape;
};

ConnectResult connect_squares(double T, const std::vector<GridSquare>& squares,
                              double s, double delta, double width = 0.0);

}  // namespace flexweld
