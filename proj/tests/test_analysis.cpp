#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "casimir/analysis.hpp"
#include "casimir/synth_materials.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace casimir;

namespace {

constexpr double kR = 95.65e-6;

ForceCurve make_curve(const std::vector<double>& z, const std::vector<double>& f) {
  ForceCurve c;
  for (std::size_t i = 0; i < z.size(); ++i)
    c.points.push_back({z[i], f[i], std::nullopt});
  return c;
}

TheoryModel vacuum_theory() {
  GeometryConfig g;
  g.sphere_radius_m = kR;
  g.roughness_m = 0.0;
  g.temperature_K = 0.0;
  TheoryModel m(make_permittivity(MaterialRecipe::make_constant(1.0)), g);
  m.build_cache(5e-9, 6e-6);
  return m;
}

}  // namespace

TEST_CASE("force curve CSV round trip") {
  ForceCurve c;
  c.points = {{62e-9, -4.5e-10, 1.9e-11}, {100e-9, -1.5e-10, 1.2e-11}};
  std::ostringstream os;
  write_force_curve(c, os);
  std::istringstream is(os.str());
  const auto back = load_force_curve(is, "rt");
  REQUIRE(back.points.size() == 2);
  CHECK(back.points[0].z_m == doctest::Approx(62e-9).epsilon(1e-14));
  CHECK(back.points[0].force_N == doctest::Approx(-4.5e-10).epsilon(1e-14));
  CHECK(*back.points[1].sigma_N == doctest::Approx(1.2e-11).epsilon(1e-14));
}

TEST_CASE("resample: exact on piecewise-linear data, error outside range") {
  const auto c = make_curve({1e-9, 2e-9, 4e-9}, {1.0, 3.0, 7.0});
  const auto r = resample(c, {1.5e-9, 3e-9});
  CHECK(r.points[0].force_N == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.points[1].force_N == doctest::Approx(5.0).epsilon(1e-12));
  CHECK_THROWS_AS(resample(c, {0.5e-9}), AlignmentError);
  CHECK_THROWS_AS(resample(c, {5e-9}), AlignmentError);
}

TEST_CASE("average_scans") {
  SUBCASE("two identical scans: mean = input, std = 0") {
    const auto c = make_curve({1e-9, 2e-9}, {5.0, -3.0});
    const auto avg = average_scans({c, c});
    CHECK(avg.points[0].force_N == 5.0);
    CHECK(*avg.points[0].sigma_N == 0.0);
    CHECK(*avg.points[1].sigma_N == 0.0);
  }
  SUBCASE("mean is permutation-invariant") {
    const auto a = make_curve({1e-9, 2e-9}, {1.0, 2.0});
    const auto b = make_curve({1e-9, 2e-9}, {3.0, -1.0});
    const auto c = make_curve({1e-9, 2e-9}, {-2.0, 0.5});
    const auto m1 = average_scans({a, b, c});
    const auto m2 = average_scans({c, a, b});
    for (int i = 0; i < 2; ++i) {
      CHECK(m1.points[i].force_N == doctest::Approx(m2.points[i].force_N).epsilon(1e-15));
      CHECK(*m1.points[i].sigma_N == doctest::Approx(*m2.points[i].sigma_N).epsilon(1e-15));
    }
  }
  SUBCASE("30 noisy scans reproduce the injected per-point std") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 19e-12);
    std::vector<double> z(50);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = (62.0 + i) * 1e-9;
    std::vector<ForceCurve> scans;
    for (int s = 0; s < 30; ++s) {
      std::vector<double> f(z.size());
      for (auto& v : f) v = -4.5e-10 + noise(rng);
      scans.push_back(make_curve(z, f));
    }
    const auto avg = average_scans(scans);
    double mean_std = 0.0;
    for (const auto& p : avg.points) mean_std += *p.sigma_N;
    mean_std /= static_cast<double>(avg.points.size());
    CHECK(mean_std == doctest::Approx(19e-12).epsilon(0.1));
  }
  SUBCASE("grid mismatch raises AlignmentError") {
    const auto a = make_curve({1e-9, 2e-9}, {1.0, 2.0});
    const auto b = make_curve({1e-9, 2.5e-9}, {1.0, 2.0});
    CHECK_THROWS_AS(average_scans({a, b}), AlignmentError);
    const auto c = make_curve({1e-9, 2e-9, 3e-9}, {1.0, 2.0, 3.0});
    CHECK_THROWS_AS(average_scans({a, c}), AlignmentError);
  }
  SUBCASE("fewer than two scans is insufficient") {
    const auto a = make_curve({1e-9, 2e-9}, {1.0, 2.0});
    CHECK_THROWS_AS(average_scans({a}), InsufficientDataError);
  }
}

TEST_CASE("subtract_electrostatic") {
  ElectrostaticConfig cfg;
  cfg.sphere_radius_m = kR;

  SUBCASE("V1 == V2 leaves the curve unchanged") {
    cfg.v1 = cfg.v2 = 0.1;
    const auto c = make_curve({62e-9, 100e-9}, {-4.5e-10, -1.5e-10});
    const auto out = subtract_electrostatic(c, cfg);
    CHECK(out.points[0].force_N == -4.5e-10);
    CHECK(out.points[1].force_N == -1.5e-10);
  }
  SUBCASE("3 mV residual at 62 nm subtracts ~0.39 pN, below 0.1% of 450 pN") {
    cfg.v1 = 0.0;
    cfg.v2 = 3e-3;
    const auto c = make_curve({62e-9}, {-4.5e-10});
    const auto out = subtract_electrostatic(c, cfg);
    const double delta = out.points[0].force_N - c.points[0].force_N;
    CHECK(delta == doctest::Approx(3.854807430298e-13).epsilon(1e-6));
    CHECK(std::abs(delta) < 1e-3 * 4.5e-10);
  }
  SUBCASE("subtract then add back is the identity") {
    cfg.v1 = 0.0;
    cfg.v2 = 3e-3;
    const auto c = make_curve({62e-9, 200e-9}, {-4.5e-10, -2.4e-11});
    auto out = subtract_electrostatic(c, cfg);
    for (auto& p : out.points) p.force_N += sphere_plane_force(cfg, p.z_m);
    CHECK(out.points[0].force_N == doctest::Approx(c.points[0].force_N).epsilon(1e-15));
    CHECK(out.points[1].force_N == doctest::Approx(c.points[1].force_N).epsilon(1e-15));
  }
}

TEST_CASE("rms_deviation") {
  SUBCASE("identical curves give sigma = 0") {
    const auto c = make_curve({1e-9, 2e-9, 3e-9}, {-1.0, -2.0, -3.0});
    const auto r = rms_deviation(c, c, 1);
    CHECK(r.sigma_rms_N == 0.0);
    CHECK(r.n_points == 3);
  }
  SUBCASE("constant 1 pN offset gives sigma = 1 pN") {
    const auto a = make_curve({1e-9, 2e-9}, {-1e-10, -2e-10});
    const auto b = make_curve({1e-9, 2e-9}, {-1e-10 + 1e-12, -2e-10 + 1e-12});
    CHECK(rms_deviation(a, b, 1).sigma_rms_N == doctest::Approx(1e-12).epsilon(1e-12));
  }
  SUBCASE("translation-detecting: offset delta changes sigma^2 by delta^2") {
    const auto a = make_curve({1e-9, 2e-9, 3e-9}, {-1e-10, -2e-10, -3e-10});
    auto b = a;
    const double delta = 2.5e-12;
    for (auto& p : b.points) p.force_N += delta;
    const double s2 = std::pow(rms_deviation(a, b, 1).sigma_rms_N, 2);
    CHECK(s2 == doctest::Approx(delta * delta).epsilon(1e-12));
  }
  SUBCASE("alignment errors") {
    const auto a = make_curve({1e-9, 2e-9}, {1.0, 2.0});
    const auto b = make_curve({1e-9, 2.00001e-9}, {1.0, 2.0});
    CHECK_THROWS_AS(rms_deviation(a, b, 1), AlignmentError);
  }
}

TEST_CASE("synthetic experiment generator") {
  const auto theory = vacuum_theory();
  SyntheticSpec spec;
  spec.casimir_scan_count = 3;
  spec.casimir_points = 120;
  spec.calib_contact_points = 60;
  spec.calib_near_points = 80;
  spec.calib_far_points = 80;
  spec.residual_points = 60;
  spec.noise_force_N = 19e-12;

  SUBCASE("deterministic: same seed gives byte-identical scans") {
    const auto a = generate_synthetic_experiment(theory, spec, 123);
    const auto b = generate_synthetic_experiment(theory, spec, 123);
    REQUIRE(a.casimir_scans.size() == b.casimir_scans.size());
    for (std::size_t s = 0; s < a.casimir_scans.size(); ++s) {
      std::ostringstream oa, ob;
      write_scan(a.casimir_scans[s], oa);
      write_scan(b.casimir_scans[s], ob);
      CHECK(oa.str() == ob.str());
    }
    std::ostringstream oa, ob;
    write_scan(a.residual_plus, oa);
    write_scan(b.residual_plus, ob);
    CHECK(oa.str() == ob.str());
  }

  SUBCASE("different seeds differ") {
    const auto a = generate_synthetic_experiment(theory, spec, 123);
    const auto b = generate_synthetic_experiment(theory, spec, 124);
    std::ostringstream oa, ob;
    write_scan(a.casimir_scans[0], oa);
    write_scan(b.casimir_scans[0], ob);
    CHECK(oa.str() != ob.str());
  }

  SUBCASE("requested scan counts are honored") {
    const auto a = generate_synthetic_experiment(theory, spec, 5);
    CHECK(a.casimir_scans.size() == 3);
    CHECK(a.electrostatic_scans.size() == 3);  // three default voltages
    for (const auto& s : a.electrostatic_scans) CHECK(s.applied_voltage_V.has_value());
  }

  SUBCASE("infeasible truth is rejected") {
    SyntheticSpec bad = spec;
    bad.casimir_z_min_m = -1e-9;
    CHECK_THROWS_AS(generate_synthetic_experiment(theory, bad, 1), ValidationError);
  }
}

TEST_CASE("analyze_experiment: zero-noise chain against truth parameters") {
  const auto theory = vacuum_theory();
  SyntheticSpec spec;
  spec.casimir_scan_count = 3;
  spec.casimir_points = 150;
  spec.noise_force_N = 0.0;
  const auto exp = generate_synthetic_experiment(theory, spec, 9);

  ElectrostaticConfig residual;
  residual.sphere_radius_m = kR;
  residual.v1 = 0.0;
  residual.v2 = spec.truth.v2;

  const auto result = analyze_experiment(
      exp.casimir_scans, HysteresisModel{}, spec.truth.m_per_signal, spec.truth.z0_m,
      spec.truth.force_per_signal, residual, theory, spec.casimir_points);

  // vacuum theory: measured force is the residual electrostatic background
  // only, which the subtraction removes exactly (grids coincide at zero noise)
  CHECK(result.report.sigma_rms_N < 1e-18);
  CHECK(result.report.n_points == static_cast<std::size_t>(spec.casimir_points));
  CHECK(result.report.scan_count == 3);
}
