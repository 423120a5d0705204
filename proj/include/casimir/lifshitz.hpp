#ifndef CASIMIR_LIFSHITZ_HPP
#define CASIMIR_LIFSHITZ_HPP

#include "casimir/optics.hpp"

namespace casimir {

struct GeometryConfig {
  double sphere_radius_m = 95.65e-6;
  double temperature_K = 300.0;
  double roughness_m = 1.0e-9;

  void validate() const;
};

struct LifshitzSettings {
  double rel_tol = 1e-6;
  double xi_cutoff_factor = 40.0;   // outer truncation of t = 2 xi z / c
  double p_cutoff_exponent = 40.0;  // inner truncation of y = p t (exponent of e^-y)
  double t_min = 1e-8;              // lower edge; [0, t_min] sliver bounded analytically

  void validate() const;
};

struct ForceResult {
  double force_N = 0.0;
  double achieved_rel_tol = 0.0;
};

// Ideal-conductor parallel-plate pressure, -pi^2 hbar c / (240 z^4).
double ideal_plate_pressure(double z_m);

// Ideal-conductor sphere-plate force, -pi^3 hbar c R / (360 z^3).
double ideal_sphere_force(double sphere_radius_m, double z_m);

// Finite-conductivity sphere-plate force from the zero-temperature Lifshitz
// double integral over imaginary frequency and the radial wave variable, with
// eps(i xi) supplied by `perm`. Attractive forces come out negative.
ForceResult lifshitz_sphere_force(const ImagFreqPermittivity& perm,
                                  double sphere_radius_m, double z_m,
                                  const LifshitzSettings& settings = {});

}  // namespace casimir

#endif
