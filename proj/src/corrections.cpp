#include "casimir/corrections.hpp"

#include "casimir/errors.hpp"
#include "casimir/units.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace casimir {

ThermalSpec ThermalSpec::at(double temperature_K, double z_m) {
  if (!(temperature_K >= 0)) throw ValidationError("temperature must be >= 0");
  if (!(z_m > 0)) throw ValidationError("separation must be > 0");
  ThermalSpec s;
  s.temperature_K = temperature_K;
  s.eta = units::k_boltzmann * temperature_K * z_m / (units::hbar * units::c);
  const double e3 = s.eta * s.eta * s.eta;
  s.f_eta = (units::zeta3 / (2.0 * std::numbers::pi)) * e3 -
            (std::numbers::pi * std::numbers::pi / 45.0) * e3 * s.eta;
  return s;
}

double roughness_factor(double amplitude_m, double z_m) {
  if (!(z_m > 0)) throw ValidationError("roughness_factor: z must be > 0");
  if (!(amplitude_m >= 0)) throw ValidationError("roughness_factor: A must be >= 0");
  const double ratio = amplitude_m / z_m;
  if (ratio >= 0.3)
    throw ValidationError("roughness_factor: A/z = " + std::to_string(ratio) +
                          " outside the perturbative window (requires A/z < 0.3)");
  return 1.0 + 6.0 * ratio * ratio;
}

double temperature_factor(double temperature_K, double z_m) {
  const ThermalSpec s = ThermalSpec::at(temperature_K, z_m);
  if (s.eta >= 1.0)
    throw ValidationError("temperature_factor: eta = " + std::to_string(s.eta) +
                          " outside the small-eta expansion (requires eta < 1)");
  return 1.0 + (720.0 / (std::numbers::pi * std::numbers::pi)) * s.f_eta;
}

double corrected_force(double base_force_N, double amplitude_m,
                       double temperature_K, double z_m) {
  return base_force_N * roughness_factor(amplitude_m, z_m) *
         temperature_factor(temperature_K, z_m);
}

}  // namespace casimir
