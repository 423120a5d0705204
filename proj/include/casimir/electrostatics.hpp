#ifndef CASIMIR_ELECTROSTATICS_HPP
#define CASIMIR_ELECTROSTATICS_HPP

#include <cstdint>

namespace casimir {

struct ElectrostaticConfig {
  double sphere_radius_m = 95.65e-6;
  double v1 = 0.0;  // plate voltage
  double v2 = 0.0;  // sphere (residual) voltage
  double series_rel_tol = 1e-12;
  std::int64_t n_max = 1'000'000;

  void validate() const;
};

// alpha = arccosh(1 + z/R), evaluated through log1p for small gaps.
double sphere_plane_alpha(double z_m, double sphere_radius_m);

// Exact sphere-plane force from the image-charge series
//   F = 2 pi eps0 (V1-V2)^2 Sum_{n>=1} csch(n a) [coth(a) - n coth(n a)],
// negative (attractive) for any V1 != V2; exactly zero when V1 == V2.
// The n = 1 term vanishes identically and every later term is <= 0.
double sphere_plane_force(const ElectrostaticConfig& cfg, double z_m);

// Leading small-gap asymptote -pi eps0 R (V1-V2)^2 / z; independent check of
// the series for z/R -> 0.
double sphere_plane_force_asymptotic(const ElectrostaticConfig& cfg, double z_m);

}  // namespace casimir

#endif
