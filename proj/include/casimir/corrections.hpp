#ifndef CASIMIR_CORRECTIONS_HPP
#define CASIMIR_CORRECTIONS_HPP

namespace casimir {

struct RoughnessSpec {
  double amplitude_m = 0.0;
};

// Reduced temperature variable eta = k_B T z / (hbar c)
// (0.131e-3 per nm of separation at T = 300 K) and the thermal shape
// f(eta) = (zeta(3)/2pi) eta^3 - (pi^2/45) eta^4.
struct ThermalSpec {
  double temperature_K;
  double eta;
  double f_eta;

  static ThermalSpec at(double temperature_K, double z_m);
};

// Stochastic-roughness multiplier 1 + 6 (A/z)^2. Perturbative: requires
// A/z < 0.3 and throws ValidationError beyond that.
double roughness_factor(double amplitude_m, double z_m);

// Finite-temperature multiplier 1 + (720/pi^2) f(eta). Low-temperature /
// short-distance expansion: requires eta < 1.
double temperature_factor(double temperature_K, double z_m);

// base * roughness_factor * temperature_factor; preserves sign.
double corrected_force(double base_force_N, double amplitude_m,
                       double temperature_K, double z_m);

}  // namespace casimir

#endif
