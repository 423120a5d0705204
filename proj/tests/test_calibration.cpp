#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "casimir/analysis.hpp"
#include "casimir/calibration.hpp"
#include "casimir/electrostatics.hpp"
#include "casimir/synth_materials.hpp"
#include "casimir/theory.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace casimir;

namespace {

constexpr double kR = 95.65e-6;

// vacuum theory: isolates the electrostatic calibration chain
TheoryModel vacuum_theory() {
  GeometryConfig g;
  g.sphere_radius_m = kR;
  g.roughness_m = 0.0;
  g.temperature_K = 0.0;
  TheoryModel m(make_permittivity(MaterialRecipe::make_constant(1.0)), g);
  m.build_cache(5e-9, 6e-6);
  return m;
}

SyntheticSpec quick_spec() {
  SyntheticSpec spec;
  spec.casimir_scan_count = 2;
  spec.casimir_points = 200;
  spec.calib_contact_points = 100;
  spec.calib_near_points = 160;
  spec.calib_far_points = 160;
  spec.residual_points = 120;
  spec.noise_force_N = 0.0;
  return spec;
}

}  // namespace

TEST_CASE("separation formula") {
  // undeflected cantilever
  CHECK(separation(100e-9, 0.0, 8.9e-9, 32.7e-9) ==
        doctest::Approx(132.7e-9).epsilon(1e-14));
  // paper-scale example: 32.7 + 100 - 1.0 * 8.9 = 123.8 nm
  CHECK(separation(100e-9, 1.0, 8.9e-9, 32.7e-9) ==
        doctest::Approx(123.8e-9).epsilon(1e-12));
  // affinity in z_piezo
  const double base = separation(100e-9, 0.5, 8.9e-9, 32.7e-9);
  CHECK(separation(150e-9, 0.5, 8.9e-9, 32.7e-9) ==
        doctest::Approx(base + 50e-9).epsilon(1e-12));
  // interpenetration guard
  CHECK_THROWS_AS(separation(0.0, 10.0, 8.9e-9, 32.7e-9), ValidationError);
  CHECK_THROWS_AS(separation(100e-9, 0.0, -1e-9, 32.7e-9), ValidationError);
}

TEST_CASE("hysteresis model") {
  SUBCASE("identity leaves scans unchanged") {
    ApproachScan scan;
    for (int i = 0; i < 20; ++i)
      scan.samples.push_back({i * 1e-9, 0.1 * i});
    const auto out = apply_hysteresis(HysteresisModel{}, scan);
    for (std::size_t i = 0; i < scan.samples.size(); ++i)
      CHECK(out.samples[i].z_piezo_m == scan.samples[i].z_piezo_m);
  }
  SUBCASE("1% linear correction scales every extension") {
    HysteresisModel h;
    h.coeffs = {1.01};
    ApproachScan scan;
    for (int i = 0; i < 20; ++i) scan.samples.push_back({(i + 1) * 1e-9, 0.0});
    const auto out = apply_hysteresis(h, scan);
    for (std::size_t i = 0; i < scan.samples.size(); ++i)
      CHECK(out.samples[i].z_piezo_m ==
            doctest::Approx(1.01 * scan.samples[i].z_piezo_m).epsilon(1e-14));
  }
  SUBCASE("correction beyond the 5% guard is rejected") {
    HysteresisModel h;
    h.coeffs = {1.0, 0.1e9};  // quadratic: +10% at 1 nm... grows with extension
    ApproachScan scan;
    for (int i = 0; i < 20; ++i) scan.samples.push_back({(i + 1) * 1e-9, 0.0});
    CHECK_THROWS_AS(apply_hysteresis(h, scan), ValidationError);
  }
  SUBCASE("inversion round trip") {
    HysteresisModel h;
    h.coeffs = {1.01, 2e6};
    for (double x : {1e-9, 5e-8, 2e-6})
      CHECK(h.apply(h.invert(x)) == doctest::Approx(x).epsilon(1e-12));
  }
  SUBCASE("JSON parsing") {
    const auto h = parse_hysteresis_model(
        R"({"coeffs": [1.005, 300.0], "label": "interferometer 2026-03"})");
    CHECK(h.coeffs.size() == 2);
    CHECK(h.coeffs[0] == 1.005);
    CHECK(h.provenance == "interferometer 2026-03");
    CHECK_THROWS_AS(parse_hysteresis_model("{}"), ConfigError);
    CHECK_THROWS_AS(parse_hysteresis_model("not json"), ConfigError);
  }
}

TEST_CASE("scan CSV round trip with voltage comment") {
  ApproachScan scan;
  scan.applied_voltage_V = 0.256;
  for (int i = 0; i < 20; ++i)
    scan.samples.push_back({(i * 3.7 - 5.0) * 1e-9, std::sin(i * 0.3)});
  std::ostringstream os;
  write_scan(scan, os);
  std::istringstream is(os.str());
  const auto back = load_scan(is, "roundtrip");
  REQUIRE(back.samples.size() == scan.samples.size());
  CHECK(*back.applied_voltage_V == 0.256);
  for (std::size_t i = 0; i < scan.samples.size(); ++i) {
    CHECK(back.samples[i].z_piezo_m ==
          doctest::Approx(scan.samples[i].z_piezo_m).epsilon(1e-15));
    CHECK(back.samples[i].signal ==
          doctest::Approx(scan.samples[i].signal).epsilon(1e-15));
  }
}

TEST_CASE("scan validation") {
  ApproachScan s;
  for (int i = 0; i < 10; ++i) s.samples.push_back({i * 1e-9, 0.0});
  CHECK_THROWS_AS(s.validate(), ValidationError);  // too few samples
  for (int i = 10; i < 20; ++i) s.samples.push_back({i * 1e-9, 0.0});
  CHECK_NOTHROW(s.validate());
  s.samples[5].z_piezo_m = s.samples[4].z_piezo_m;  // not strictly monotone
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("deflection coefficient from vertices") {
  SUBCASE("two-point slope") {
    const std::vector<VertexPoint> v{{0.1, 0.0, 0.0}, {0.2, 8.9e-9, 1.0}};
    const auto cal = fit_deflection_coefficient(v);
    CHECK(cal.m_per_signal == doctest::Approx(8.9e-9).epsilon(1e-14));
    CHECK(cal.m_uncertainty == 0.0);
  }
  SUBCASE("three collinear vertices recover the slope exactly") {
    std::vector<VertexPoint> v;
    for (double s : {0.77, 1.33, 2.13})
      v.push_back({0.0, s * 8.9e-9 + 3e-9, s});
    const auto cal = fit_deflection_coefficient(v);
    CHECK(cal.m_per_signal == doctest::Approx(8.9e-9).epsilon(1e-12));
  }
  SUBCASE("slope invariant under constant signal offset") {
    std::vector<VertexPoint> v1, v2;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> jitter(0.0, 0.05e-9);
    for (double s : {0.5, 1.1, 1.9, 2.6}) {
      const double zp = s * 8.9e-9 + jitter(rng);
      v1.push_back({0.0, zp, s});
      v2.push_back({0.0, zp, s + 7.5});
    }
    CHECK(fit_deflection_coefficient(v1).m_per_signal ==
          doctest::Approx(fit_deflection_coefficient(v2).m_per_signal).epsilon(1e-12));
  }
  SUBCASE("monte-carlo jitter matching the paper noise recovers m within 0.3") {
    std::mt19937_64 rng(99);
    // vertex scatter consistent with 19 pN signal noise through the fits
    std::normal_distribution<double> zp_noise(0.0, 0.15e-9);
    int ok = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
      std::vector<VertexPoint> v;
      for (double s : {0.77, 1.33, 2.13})
        v.push_back({0.0, s * 8.9e-9 + zp_noise(rng), s});
      const double m = fit_deflection_coefficient(v).m_per_signal;
      if (std::abs(m - 8.9e-9) <= 0.3e-9) ++ok;
    }
    CHECK(ok >= static_cast<int>(0.9 * trials));
  }
  SUBCASE("error paths") {
    CHECK_THROWS_AS(fit_deflection_coefficient({{0.1, 0.0, 0.0}}),
                    InsufficientDataError);
    const std::vector<VertexPoint> degenerate{{0.1, 0.0, 1.0}, {0.2, 8.9e-9, 1.0}};
    CHECK_THROWS_AS(fit_deflection_coefficient(degenerate), NumericError);
  }
}

TEST_CASE("contact vertex detection on synthetic electrostatic scans") {
  const auto theory = vacuum_theory();
  auto spec = quick_spec();

  SUBCASE("noise-free vertex is recovered to sub-sample precision") {
    const auto exp = generate_synthetic_experiment(theory, spec, 7);
    for (const auto& scan : exp.electrostatic_scans) {
      const auto v = find_contact_vertex(scan);
      // truth: the vertex sits on the contact line z_piezo = m * signal
      const double expect_zp = spec.truth.m_per_signal * v.signal;
      CHECK(std::abs(v.z_piezo_m - expect_zp) < 2e-12);  // 0.002 nm
    }
  }

  SUBCASE("noisy vertex detection stays within a nanometer") {
    spec.noise_force_N = 19e-12;
    const auto exp = generate_synthetic_experiment(theory, spec, 11);
    for (const auto& scan : exp.electrostatic_scans) {
      const auto v = find_contact_vertex(scan);
      const double expect_zp = spec.truth.m_per_signal * v.signal;
      CHECK(std::abs(v.z_piezo_m - expect_zp) < 1e-9);
    }
  }

  SUBCASE("scan without a contact region is rejected") {
    const auto exp = generate_synthetic_experiment(theory, spec, 7);
    // casimir scans have no region 1
    CHECK_THROWS_AS(find_contact_vertex(exp.casimir_scans.front()),
                    InsufficientDataError);
  }
}

TEST_CASE("contact separation fit: noise-free round trip") {
  const auto theory = vacuum_theory();
  const auto spec = quick_spec();
  const auto exp = generate_synthetic_experiment(theory, spec, 21);

  ContactFitOptions opt;
  opt.v2 = spec.truth.v2;  // fixed, as measured separately
  opt.z0_init = 25e-9;
  opt.scale_init = -3e-9;
  const auto fit = fit_contact_separation(exp.electrostatic_scans,
                                          spec.truth.m_per_signal, kR,
                                          nullptr, opt);
  CHECK(fit.ensemble.z0_m == doctest::Approx(spec.truth.z0_m).epsilon(1e-4));
  CHECK(std::abs(fit.ensemble.z0_m - spec.truth.z0_m) < 1e-12);  // 1e-3 nm
  CHECK(fit.force_per_signal ==
        doctest::Approx(spec.truth.force_per_signal).epsilon(1e-6));
  CHECK(fit.warnings.empty());
  for (const auto& f : fit.per_scan) CHECK(f.chi2 < 1e-10);
}

TEST_CASE("contact separation fit: zero-signal scan is rejected") {
  ApproachScan dead;
  dead.applied_voltage_V = 0.2;
  for (int i = 0; i < 40; ++i) dead.samples.push_back({i * 1e-9, 0.0});
  CHECK_THROWS_AS(
      fit_contact_separation({dead}, 8.9e-9, kR, nullptr, ContactFitOptions{}),
      InsufficientDataError);
}

TEST_CASE("chi2 is a local minimum in z0") {
  const auto theory = vacuum_theory();
  auto spec = quick_spec();
  spec.noise_force_N = 19e-12;
  const auto exp = generate_synthetic_experiment(theory, spec, 31);

  ContactFitOptions opt;
  opt.v2 = spec.truth.v2;
  opt.sigma_force_N = 19e-12;
  const auto fit = fit_contact_separation({exp.electrostatic_scans[0]},
                                          spec.truth.m_per_signal, kR, nullptr, opt);
  const double z0_hat = fit.per_scan[0].z0_m;
  const double s_hat = fit.per_scan[0].force_per_signal;

  // recompute chi2 on the same samples at perturbed z0
  const auto& scan = exp.electrostatic_scans[0];
  const auto v = find_contact_vertex(scan);
  auto chi2_at = [&](double z0) {
    ElectrostaticConfig cfg;
    cfg.sphere_radius_m = kR;
    cfg.v1 = *scan.applied_voltage_V;
    cfg.v2 = spec.truth.v2;
    double acc = 0.0;
    for (std::size_t i = v.split_index; i < scan.samples.size(); ++i) {
      const auto& s = scan.samples[i];
      double z = z0 + s.z_piezo_m - s.signal * spec.truth.m_per_signal;
      if (z < 5e-11) z = 5e-11;
      const double r = (s_hat * s.signal - sphere_plane_force(cfg, z)) / 19e-12;
      acc += r * r;
    }
    return acc;
  };
  const double at_hat = chi2_at(z0_hat);
  CHECK(at_hat <= chi2_at(z0_hat + 1e-9));
  CHECK(at_hat <= chi2_at(z0_hat - 1e-9));
}

TEST_CASE("residual potential estimation") {
  const auto theory = vacuum_theory();

  SUBCASE("noise-free round trip at 3 mV") {
    const auto exp = generate_synthetic_experiment(theory, quick_spec(), 41);
    const auto r = estimate_residual_potential(exp.residual_plus, exp.residual_minus,
                                               kR, 8.9e-9, 32.7e-9);
    CHECK(r.v2 == doctest::Approx(3e-3).epsilon(1e-6));
  }

  SUBCASE("V2 = 0 truth gives zero within the noise floor") {
    auto spec = quick_spec();
    spec.truth.v2 = 0.0;
    spec.noise_force_N = 19e-12;
    const auto exp = generate_synthetic_experiment(theory, spec, 43);
    const auto r = estimate_residual_potential(exp.residual_plus, exp.residual_minus,
                                               kR, 8.9e-9, 32.7e-9);
    CHECK(std::abs(r.v2) < 5e-4);  // well under a millivolt
  }

  SUBCASE("identical +/- magnitudes give exactly zero") {
    auto spec = quick_spec();
    spec.truth.v2 = 0.0;
    const auto exp = generate_synthetic_experiment(theory, spec, 44);
    const auto r = estimate_residual_potential(exp.residual_plus, exp.residual_minus,
                                               kR, 8.9e-9, 32.7e-9);
    CHECK(r.v2 == 0.0);
  }

  SUBCASE("swapping the scan labels leaves V2 unchanged") {
    auto spec = quick_spec();
    spec.noise_force_N = 19e-12;
    const auto exp = generate_synthetic_experiment(theory, spec, 47);
    const auto a = estimate_residual_potential(exp.residual_plus, exp.residual_minus,
                                               kR, 8.9e-9, 32.7e-9);
    const auto b = estimate_residual_potential(exp.residual_minus, exp.residual_plus,
                                               kR, 8.9e-9, 32.7e-9);
    CHECK(a.v2 == b.v2);
  }

  SUBCASE("scans at too-small separation are rejected") {
    // hand-built pair sitting at ~100-150 nm, far below the 10 z0 bound
    ApproachScan plus, minus;
    plus.applied_voltage_V = 3.0;
    minus.applied_voltage_V = -3.0;
    for (int i = 0; i < 20; ++i) {
      plus.samples.push_back({(70.0 + 4.0 * i) * 1e-9, 0.1});
      minus.samples.push_back({(70.0 + 4.0 * i) * 1e-9, 0.1});
    }
    CHECK_THROWS_AS(
        estimate_residual_potential(plus, minus, kR, 8.9e-9, 32.7e-9),
        ValidationError);
  }
}

TEST_CASE("full calibration chain, zero noise: simultaneous recovery") {
  const auto theory = vacuum_theory();
  const auto spec = quick_spec();
  const auto exp = generate_synthetic_experiment(theory, spec, 77);

  CalibrationInputs in;
  in.electrostatic_scans = exp.electrostatic_scans;
  in.residual_pair = {exp.residual_plus, exp.residual_minus};
  in.sphere_radius_m = kR;
  in.fit_options.z0_init = 25e-9;
  in.fit_options.scale_init = -3e-9;
  const auto cal = run_calibration(in);

  // tolerances: 1e-3 nm/unit, 1e-3 nm, 1e-3 mV, 1e-6 relative force scale
  CHECK(std::abs(cal.signal.m_per_signal - spec.truth.m_per_signal) < 1e-12);
  CHECK(std::abs(cal.result.z0_m - spec.truth.z0_m) < 1e-12);
  CHECK(std::abs(cal.result.v2 - spec.truth.v2) < 1e-6);
  CHECK(std::abs(cal.signal.force_per_signal - spec.truth.force_per_signal) /
            std::abs(spec.truth.force_per_signal) <
        1e-6);
}
