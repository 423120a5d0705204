#ifndef CASIMIR_UNITS_HPP
#define CASIMIR_UNITS_HPP

#include "casimir/errors.hpp"

#include <cmath>

namespace casimir {

// Physical constants, CODATA 2018. SI units throughout the library;
// electron-volts appear only at ingestion and CLI boundaries.
struct PhysicalConstants {
  double hbar;             // J s
  double c;                // m / s
  double k_boltzmann;      // J / K
  double eps0;             // F / m
  double zeta3;            // Riemann zeta(3)
  double ev_to_joule;      // J / eV
  double ev_to_rad_per_s;  // (rad/s) / eV
};

constexpr PhysicalConstants codata2018() {
  constexpr double h = 6.62607015e-34;         // J s, exact
  constexpr double hbar = 1.054571817e-34;     // J s, h/(2 pi) rounded
  constexpr double e = 1.602176634e-19;        // C, exact
  return PhysicalConstants{
      hbar,
      2.99792458e8,            // exact
      1.380649e-23,            // exact
      8.8541878128e-12,
      1.2020569031595943,
      e,
      e / hbar,
  };
  (void)h;
}

namespace units {

inline constexpr PhysicalConstants k = codata2018();

inline constexpr double hbar = k.hbar;
inline constexpr double c = k.c;
inline constexpr double k_boltzmann = k.k_boltzmann;
inline constexpr double eps0 = k.eps0;
inline constexpr double zeta3 = k.zeta3;
inline constexpr double ev_to_joule = k.ev_to_joule;
inline constexpr double ev_to_rad_per_s = k.ev_to_rad_per_s;

inline double energy_ev_to_angular_frequency(double e_ev) {
  if (!std::isfinite(e_ev)) throw ValidationError("photon energy must be finite");
  return e_ev * ev_to_rad_per_s;
}

inline double angular_frequency_to_energy_ev(double omega) {
  if (!std::isfinite(omega)) throw ValidationError("angular frequency must be finite");
  return omega / ev_to_rad_per_s;
}

}  // namespace units
}  // namespace casimir

#endif
