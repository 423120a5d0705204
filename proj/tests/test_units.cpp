#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "casimir/units.hpp"

#include <cmath>

using namespace casimir;

TEST_CASE("physical constants are positive and internally consistent") {
  constexpr PhysicalConstants k = codata2018();
  CHECK(k.hbar > 0);
  CHECK(k.c > 0);
  CHECK(k.k_boltzmann > 0);
  CHECK(k.eps0 > 0);
  CHECK(k.zeta3 > 0);
  CHECK(k.ev_to_joule > 0);
  CHECK(k.ev_to_rad_per_s > 0);

  // zeta(3) = 1.202 to three decimals
  CHECK(std::round(k.zeta3 * 1000.0) == doctest::Approx(1202.0));

  // exact internal consistency of the eV bridges
  CHECK(k.ev_to_rad_per_s == k.ev_to_joule / k.hbar);
}

TEST_CASE("energy_ev_to_angular_frequency") {
  CHECK(units::energy_ev_to_angular_frequency(0.0) == 0.0);

  // oracle: e / hbar with CODATA values, independent arithmetic
  const double one_ev = units::energy_ev_to_angular_frequency(1.0);
  CHECK(one_ev == doctest::Approx(1.602176634e-19 / 1.054571817e-34).epsilon(1e-12));
  CHECK(one_ev == doctest::Approx(1.519267e15).epsilon(1e-6));

  // linearity
  CHECK(units::energy_ev_to_angular_frequency(11.5) == doctest::Approx(11.5 * one_ev));
  // sign preserved
  CHECK(units::energy_ev_to_angular_frequency(-2.0) == doctest::Approx(-2.0 * one_ev));

  CHECK_THROWS_AS(units::energy_ev_to_angular_frequency(
                      std::numeric_limits<double>::infinity()),
                  ValidationError);
}

TEST_CASE("round trip eV <-> rad/s is identity to 1e-12 relative") {
  for (double e : {1e-6, 0.125, 1.0, 11.5, 9919.0, 1e6}) {
    const double w = units::energy_ev_to_angular_frequency(e);
    CHECK(units::angular_frequency_to_energy_ev(w) == doctest::Approx(e).epsilon(1e-12));
  }
}

TEST_CASE("pi^3 hbar c reproducible to 6 significant figures") {
  const double pi3 = M_PI * M_PI * M_PI;
  CHECK(pi3 * units::hbar * units::c ==
        doctest::Approx(9.80271738e-25).epsilon(1e-6));
}
