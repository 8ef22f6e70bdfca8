#pragma once

#include <Eigen/Dense>

#include "flexweld/geom.hpp"
#include "flexweld/mesh.hpp"

namespace flexweld {

struct ModulusReport {
  double modulus = 0.0;
  double mesh_sizes[2] = {0.0, 0.0};
  bool extrapolated = false;
  double estimated_error = 0.0;
};

struct MeshOptions {
  int target_divisions = 12;   // coarse mesh target: diam / target_divisions
  int corner_passes = 2;       // graded bisection rounds near marked vertices
  int max_uniform = 7;
};

// Modulus of the quadrilateral: Dirichlet energy of the potential with u=0 on
// side a1, u=1 on side a2, natural on b-sides; Richardson-extrapolated over
// two meshes.  Convention: rectangle [0,M]x[0,1] with a-sides horizontal
// returns M.
ModulusReport quad_modulus(const MarkedQuadrilateral& Q, MeshOptions opt = {});

struct QuadUniformization {
  double modulus = 0.0;
  Mesh mesh;
  Eigen::VectorXd u;  // in [0,1], 0 on a1
  Eigen::VectorXd v;  // in [0,M], 0 on b2
  double conj_residual = 0.0;

  bool to_rect(const complexd& z, complexd* w) const;    // domain -> [0,M]x[0,1]
  bool from_rect(const complexd& w, complexd* z) const;  // rectangle -> domain
  std::vector<std::pair<complexd, complexd>> boundary_table(int samples) const;
};

QuadUniformization quad_uniformize(const MarkedQuadrilateral& Q,
                                   MeshOptions opt = {});

ModulusReport annulus_modulus(const Polyline& inner, const Polyline& outer,
                              MeshOptions opt = {});

// Harmonic solve on a ring domain: u=0 on inner, u=1 on outer.
struct AnnulusField {
  Mesh mesh;
  Eigen::VectorXd u;
  double energy = 0.0;
};
AnnulusField annulus_field(const Polyline& inner, const Polyline& outer,
                           MeshOptions opt = {});

double rect_harmonic_measure(double L);

struct RulesReport {
  double serial_equality_dev = 0.0;   // worst |lambda - (l1+l2)| / lambda
  double serial_wiggly_margin = 0.0;  // min (lambda - (l1+l2)) for wiggly cuts
  double parallel_margin = 0.0;       // min (M - (M1+M2)) / M
  bool pass = false;
};
RulesReport modulus_rules_check(uint64_t seed);

}  // namespace flexweld
