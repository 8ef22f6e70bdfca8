#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "flexweld/geom.hpp"

namespace flexweld {

// One quadrature panel of a discrete measure: a short segment or circular arc
// carrying nonnegative mass.  The kernel uses the midpoint; the self-energy
// uses the chord length.
struct Panel {
  complexd a, b;       // endpoints (chord)
  complexd mid;        // midpoint on the supporting geometry
  double mass = 0.0;
  double theta_mid = 0.0;  // midpoint angle when the panel lies on S^1
};

struct DiscreteMeasure {
  std::vector<Panel> panels;
  double total_mass = 0.0;
};

struct CapacityReport {
  double robin = 0.0;     // gamma(E)
  double capacity = 0.0;  // exp(-gamma)
  std::vector<double> energy_history;
  int panel_count = 0;
};

struct LogSingularCertificate {
  int n = 0;
  ArcSet E;
  double cap_E = 0.0;
  double cap_image_complement = 0.0;
  bool valid() const { return cap_E <= 1.0 / n && cap_image_complement <= 1.0 / n; }
};

// Panelization helpers.  Arc panels are graded toward endpoints (smoothstep)
// so the endpoint density singularity of equilibrium measures stays resolved.
std::vector<Panel> panelize_arcset(const ArcSet& E, int total_panels);
std::vector<Panel> panelize_segment(const complexd& a, const complexd& b, int n);

// Minimizes the discretized logarithmic energy over nonnegative panel masses
// summing to `mass`.  Returns the measure; `energy_history` (if given)
// receives the per-iteration energies of the projected-gradient polish.
DiscreteMeasure equilibrium_measure(const ArcSet& E, int panels_per_arc,
                                    double mass,
                                    std::vector<double>* energy_history = nullptr);

// Energy minimum for an arbitrary panel geometry with unit mass.
double panel_robin_constant(const std::vector<Panel>& panels,
                            std::vector<double>* masses_out = nullptr,
                            std::vector<double>* energy_history = nullptr);

// Robin constant / capacity of an ArcSet, Richardson-extrapolated over two
// panel resolutions (ratio 2).
CapacityReport capacity(const ArcSet& E, int base_panels = 96);

double capacity_segment(const complexd& a, const complexd& b, int base_panels = 128);

double potential_G(const DiscreteMeasure& mu, const complexd& z);
double potential_U(const DiscreteMeasure& mu, const complexd& z);

// Per-component increments of the conjugate function: 2*pi*mu(I) per arc of E.
std::vector<std::pair<Arc, double>> conjugate_increments(const DiscreteMeasure& mu,
                                                         const ArcSet& E);

struct LogSingularResult {
  CircleHomeo h;
  LogSingularCertificate cert;
};

LogSingularResult make_log_singular_homeo(int level, uint64_t seed);

// Searches slope-aligned candidate sets for a certificate at the given level.
std::optional<LogSingularCertificate> verify_log_singular(const CircleHomeo& h,
                                                          int level);

// E_R = {angles with |f| >= R * base_distance} as an ArcSet plus its capacity.
std::pair<ArcSet, double> far_set_capacity(
    const std::vector<std::pair<Angle, complexd>>& boundary_samples,
    double base_distance, double R);

}  // namespace flexweld
