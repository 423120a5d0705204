#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "casimir/lifshitz.hpp"
#include "casimir/synth_materials.hpp"

#include <cmath>

using namespace casimir;

namespace {
constexpr double kR = 95.65e-6;
}

TEST_CASE("ideal plate pressure") {
  // closed form with CODATA constants, frozen independent arithmetic
  CHECK(ideal_plate_pressure(100e-9) ==
        doctest::Approx(-13.0012577).epsilon(1e-7));
  // quartic scaling
  CHECK(ideal_plate_pressure(200e-9) ==
        doctest::Approx(ideal_plate_pressure(100e-9) / 16.0).epsilon(1e-14));
  // scaling oracle from the 100 nm value
  CHECK(ideal_plate_pressure(1e-6) == doctest::Approx(-1.30012577e-3).epsilon(1e-7));
  CHECK_THROWS_AS(ideal_plate_pressure(0.0), ValidationError);
}

TEST_CASE("ideal sphere force") {
  CHECK(ideal_sphere_force(kR, 100e-9) ==
        doctest::Approx(-2.60452755e-10).epsilon(1e-7));
  // cubic scaling, linearity in R
  CHECK(ideal_sphere_force(kR, 200e-9) ==
        doctest::Approx(ideal_sphere_force(kR, 100e-9) / 8.0).epsilon(1e-14));
  CHECK(ideal_sphere_force(2 * kR, 100e-9) ==
        doctest::Approx(2.0 * ideal_sphere_force(kR, 100e-9)).epsilon(1e-14));
  CHECK_THROWS_AS(ideal_sphere_force(-kR, 100e-9), ValidationError);
  CHECK_THROWS_AS(ideal_sphere_force(kR, 0.0), ValidationError);
}

TEST_CASE("vacuum permittivity gives exactly zero force") {
  const auto vac = make_permittivity(MaterialRecipe::make_constant(1.0));
  const auto r = lifshitz_sphere_force(vac, kR, 100e-9);
  CHECK(r.force_N == 0.0);
}

TEST_CASE("perfect-conductor proxy approaches the ideal closed form") {
  const auto proxy = make_permittivity(MaterialRecipe::make_proxy(1e8));
  for (double z : {62e-9, 100e-9, 200e-9, 350e-9}) {
    const auto r = lifshitz_sphere_force(proxy, kR, z);
    const double ideal = ideal_sphere_force(kR, z);
    CHECK(r.force_N < 0.0);
    CHECK(r.force_N / ideal == doctest::Approx(1.0).epsilon(0.01));
    CHECK(r.achieved_rel_tol <= 1e-6);
  }
}

TEST_CASE("gold Drude force: weaker than ideal, ratio rising with z") {
  const auto gold =
      make_permittivity(MaterialRecipe::make_drude(11.5, 0.05), {1e-6, 1e4, 220});
  double prev_ratio = 0.0;
  for (double z : {62e-9, 100e-9, 200e-9, 350e-9}) {
    const auto r = lifshitz_sphere_force(gold, kR, z);
    const double ideal = ideal_sphere_force(kR, z);
    CHECK(r.force_N < 0.0);
    CHECK(std::abs(r.force_N) < std::abs(ideal));
    const double ratio = r.force_N / ideal;
    CHECK(ratio > prev_ratio);
    prev_ratio = ratio;
  }
}

TEST_CASE("gold forces at the paper's separations have the observed scale") {
  // The Fig. 5 theory curve sits near -0.45 nN at the closest separation; the
  // pure Drude model lands in the same range.
  const auto gold =
      make_permittivity(MaterialRecipe::make_drude(11.5, 0.05), {1e-6, 1e4, 220});
  const auto f62 = lifshitz_sphere_force(gold, kR, 62e-9);
  CHECK(f62.force_N < -3.5e-10);
  CHECK(f62.force_N > -6.5e-10);
}

TEST_CASE("force magnitude strictly decreasing in separation") {
  const auto gold =
      make_permittivity(MaterialRecipe::make_drude(11.5, 0.05), {1e-6, 1e4, 220});
  double prev = -1.0;  // sentinel: |F| of previous, start large
  for (double z : {62e-9, 90e-9, 140e-9, 220e-9, 350e-9}) {
    const double f = lifshitz_sphere_force(gold, kR, z).force_N;
    if (prev > 0.0) CHECK(std::abs(f) < prev);
    prev = std::abs(f);
  }
}

TEST_CASE("pointwise larger permittivity gives a larger force magnitude") {
  const auto lo = make_permittivity(MaterialRecipe::make_constant(10.0));
  const auto hi = make_permittivity(MaterialRecipe::make_constant(1000.0));
  for (double z : {62e-9, 350e-9}) {
    CHECK(std::abs(lifshitz_sphere_force(hi, kR, z).force_N) >
          std::abs(lifshitz_sphere_force(lo, kR, z).force_N));
  }
}

TEST_CASE("dimensional check: z enters the kernel only through the exponent") {
  // for a constant permittivity the dimensionless integrand is z-independent,
  // so F(z) * z^3 must be a constant
  const auto proxy = make_permittivity(MaterialRecipe::make_proxy(1e8));
  const double ref =
      lifshitz_sphere_force(proxy, kR, 100e-9).force_N * std::pow(100e-9, 3);
  for (double z : {62e-9, 177e-9, 350e-9}) {
    const double v = lifshitz_sphere_force(proxy, kR, z).force_N * z * z * z;
    CHECK(v == doctest::Approx(ref).epsilon(1e-6));
  }
}

TEST_CASE("achieved tolerance is reported and respects the request") {
  const auto gold =
      make_permittivity(MaterialRecipe::make_drude(11.5, 0.05), {1e-6, 1e4, 220});
  LifshitzSettings s;
  s.rel_tol = 1e-7;
  const auto r = lifshitz_sphere_force(gold, kR, 100e-9, s);
  CHECK(r.achieved_rel_tol <= 1e-7);
  CHECK(r.achieved_rel_tol > 0.0);
}

TEST_CASE("settings validation") {
  LifshitzSettings s;
  s.rel_tol = 0.5;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = LifshitzSettings{};
  s.t_min = 0.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  const auto vac = make_permittivity(MaterialRecipe::make_constant(1.0));
  CHECK_THROWS_AS(lifshitz_sphere_force(vac, kR, -1e-9), ValidationError);
}
