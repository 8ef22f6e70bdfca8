#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <vector>

#include "flexweld/geom.hpp"

namespace flexweld {

// Triangle mesh of a polygonal domain.  Boundary edges carry integer labels
// (side ids) used for boundary conditions; labels survive refinement.
struct Mesh {
  std::vector<Eigen::Vector2d> p;
  std::vector<std::array<int, 3>> tri;  // counterclockwise
  std::map<std::pair<int, int>, int> bedge;  // sorted vertex pair -> label

  int boundary_label(int a, int b) const {
    auto it = bedge.find(std::minmax(a, b));
    return it == bedge.end() ? -1 : it->second;
  }
};

// Ear-clipping triangulation of a (weakly) simple polygon given as vertices
// in counterclockwise order with one label per edge (edge i joins vertex i to
// i+1).  Repeated vertex indices (keyhole bridges) are allowed.
Mesh triangulate_polygon(const std::vector<Eigen::Vector2d>& poly,
                         const std::vector<int>& edge_labels);

// Keyhole construction: outer counterclockwise, inner clockwise hole.
// Returns the spliced polygon and labels (outer edges labeled outer_label,
// inner edges inner_label, bridge edges label -1 i.e. interior).
Mesh triangulate_with_hole(const std::vector<Eigen::Vector2d>& outer,
                           const std::vector<Eigen::Vector2d>& inner_ccw,
                           int outer_label, int inner_label);

// Conforming refinement: split every triangle into four.
Mesh refine_uniform(const Mesh& m);

// Longest-edge (Rivara) bisection of triangles near the given points: a
// triangle is split when its centroid lies within radius and its longest
// edge exceeds radius/2 (so repeated calls with shrinking radius grade the
// mesh instead of re-splitting it); conforming closure included.
Mesh refine_near(const Mesh& m, const std::vector<Eigen::Vector2d>& pts,
                 double radius);

// Interior Lawson flips toward Delaunay followed by interior smoothing.
void improve_mesh(Mesh& m, int passes = 2);

struct FemResult {
  Eigen::VectorXd u;
  double energy = 0.0;
};

// P1 Laplace solve.  dirichlet maps boundary label -> prescribed value; all
// other labels are natural (Neumann).  Deterministic ordering.
FemResult solve_laplace(const Mesh& m, const std::map<int, double>& dirichlet);

// Least-squares harmonic conjugate of u (gradient rotated by -90 degrees),
// anchored so v(anchor_vertex) = 0.  Also reports the rotated-gradient
// mismatch residual (L2 over triangles, relative).
std::pair<Eigen::VectorXd, double> harmonic_conjugate(const Mesh& m,
                                                      const Eigen::VectorXd& u,
                                                      int anchor_vertex);

// Piecewise-linear evaluation of nodal field u at point z; returns false if z
// lies in no triangle.
bool eval_field(const Mesh& m, const Eigen::VectorXd& u, const Eigen::Vector2d& z,
                double* out);

double mesh_max_edge(const Mesh& m);

}  // namespace flexweld
