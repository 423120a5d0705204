// casimir: Lifshitz-theory sphere-plate force pipeline.
//   theory    - tabulate the corrected theory force over a z grid
//   synth     - generate a synthetic experiment (scan CSV bundle)
//   calibrate - vertices -> m, +/-V pair -> V2, chi2 fit -> z0 and force scale
//   analyze   - average scans, subtract the residual background, report sigma

#include <CLI11.hpp>
#include <json.hpp>

#include "casimir/analysis.hpp"
#include "casimir/calibration.hpp"
#include "casimir/errors.hpp"
#include "casimir/kernels.hpp"
#include "casimir/synth_materials.hpp"
#include "casimir/theory.hpp"
#include "casimir/units.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace casimir;

namespace {

constexpr const char* kToolVersion = "casimir 0.1.0";

// exit codes: 0 ok, 2 config/io, 3 insufficient data, 4 alignment, 5 numeric
constexpr int kExitConfig = 2;
constexpr int kExitInsufficient = 3;
constexpr int kExitAlignment = 4;
constexpr int kExitNumeric = 5;

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Tool {
  json config;
  std::string config_hash;
  fs::path config_dir;
  fs::path out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  std::optional<double> tolerance_override;

  void load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    try {
      in >> config;
    } catch (const std::exception& e) {
      throw ConfigError("config JSON: " + std::string(e.what()));
    }
    config_hash = fnv1a_hex(config.dump());
    config_dir = fs::path(path).parent_path();
  }

  fs::path resolve(const std::string& p) const {
    fs::path path(p);
    if (path.is_absolute() || fs::exists(path)) return path;
    return config_dir / path;
  }

  std::string provenance_comment() const {
    return "# config_hash=" + config_hash + " tool=" + kToolVersion + "\n";
  }

  void attach_provenance(json& j) const {
    j["_provenance"] = {{"config_hash", config_hash}, {"tool_version", kToolVersion}};
  }

  // temp-then-rename so partially written outputs never appear
  void write_file(const fs::path& name, const std::string& content) const {
    fs::create_directories(out_dir);
    const fs::path final_path = out_dir / name;
    const fs::path tmp = final_path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw ConfigError("cannot write: " + tmp.string());
      out << content;
    }
    fs::rename(tmp, final_path);
  }

  std::uint64_t seed() const {
    if (seed_override) return *seed_override;
    return config.value("seed", std::uint64_t{12345});
  }

  GeometryConfig geometry() const {
    GeometryConfig g;
    const json j = config.value("geometry", json::object());
    g.sphere_radius_m = j.value("sphere_radius_um", 95.65) * 1e-6;
    g.roughness_m = j.value("roughness_nm", 1.0) * 1e-9;
    g.temperature_K = j.value("temperature_K", 300.0);
    g.validate();
    return g;
  }

  LifshitzSettings lifshitz_settings() const {
    LifshitzSettings s;
    const json j = config.value("lifshitz", json::object());
    s.rel_tol = j.value("rel_tol", 1e-6);
    s.xi_cutoff_factor = j.value("xi_cutoff_factor", 40.0);
    s.p_cutoff_exponent = j.value("p_cutoff_exponent", 40.0);
    if (tolerance_override) s.rel_tol = *tolerance_override;
    s.validate();
    return s;
  }

  GridSpec material_grid(const json& m) const {
    GridSpec g;
    const json j = m.value("grid", json::object());
    g.xi_min_ev = j.value("xi_min_ev", 1e-6);
    g.xi_max_ev = j.value("xi_max_ev", 1e4);
    g.count = j.value("points", 220);
    g.validate();
    return g;
  }

  std::string material_label() const {
    const json m = config.value("material", json::object());
    const std::string kind = m.value("kind", "drude");
    if (kind == "table") return "table:" + m.value("dielectric_csv", std::string());
    if (kind == "drude")
      return "drude(omega_p=" + std::to_string(m.value("omega_p_ev", 11.5)) +
             "eV, gamma=" + std::to_string(m.value("gamma_ev", 0.05)) + "eV)";
    return kind + "(eps=" + std::to_string(m.value("eps", 1e8)) + ")";
  }

  ImagFreqPermittivity permittivity() const {
    const json m = config.value("material", json::object());
    const std::string kind = m.value("kind", "drude");
    if (kind == "constant")
      return make_permittivity(MaterialRecipe::make_constant(m.value("eps", 1.0)));
    if (kind == "proxy")
      return make_permittivity(MaterialRecipe::make_proxy(m.value("eps", 1e8)));
    if (kind == "drude") {
      const auto recipe = MaterialRecipe::make_drude(m.value("omega_p_ev", 11.5),
                                                     m.value("gamma_ev", 0.05));
      return make_permittivity(recipe, material_grid(m));
    }
    if (kind == "table") {
      if (!m.contains("dielectric_csv"))
        throw ConfigError("material.kind=table requires material.dielectric_csv");
      const fs::path path = resolve(m["dielectric_csv"].get<std::string>());
      const auto table = load_dielectric_table(path);
      std::optional<DrudeParams> drude;
      if (m.contains("omega_p_ev") || m.contains("gamma_ev")) {
        drude = DrudeParams{m.value("omega_p_ev", 11.5), m.value("gamma_ev", 0.05)};
        if (!drude->physical_metal_regime())
          std::cerr << "warning: gamma >= omega_p (outside the physical metal regime)\n";
      }
      return build_permittivity(table, drude, material_grid(m));
    }
    throw ConfigError("unknown material.kind: " + kind);
  }

  std::vector<double> z_grid() const {
    const json j = config.value("z_grid", json::object());
    const double lo = j.value("min_nm", 62.0) * 1e-9;
    const double hi = j.value("max_nm", 350.0) * 1e-9;
    const int n = j.value("points", 145);
    const std::string spacing = j.value("spacing", "linear");
    if (!(lo > 0) || !(hi > lo) || n < 2)
      throw ConfigError("z_grid: need 0 < min < max and points >= 2");
    std::vector<double> z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double f = static_cast<double>(i) / static_cast<double>(n - 1);
      z[static_cast<std::size_t>(i)] =
          spacing == "log" ? lo * std::exp(f * std::log(hi / lo)) : lo + f * (hi - lo);
    }
    return z;
  }

  TheoryModel theory_model() const {
    return TheoryModel(permittivity(), geometry(), lifshitz_settings());
  }

  SyntheticSpec synth_spec() const {
    const json s = config.value("synth", json::object());
    SyntheticSpec spec;
    const json t = s.value("truth", json::object());
    spec.truth.m_per_signal = t.value("m_nm_per_unit", 8.9) * 1e-9;
    spec.truth.z0_m = t.value("z0_nm", 32.7) * 1e-9;
    spec.truth.v2 = t.value("v2_mV", 3.0) * 1e-3;
    spec.truth.force_per_signal = t.value("force_per_signal", -5e-9);
    spec.noise_force_N = s.value("noise_force_pN", 19.0) * 1e-12;
    spec.casimir_scan_count = s.value("casimir_scans", 30);
    const json zj = config.value("z_grid", json::object());
    spec.casimir_z_min_m = zj.value("min_nm", 62.0) * 1e-9;
    spec.casimir_z_max_m = zj.value("max_nm", 350.0) * 1e-9;
    spec.casimir_points = zj.value("points", 2583);
    if (s.contains("calibration_voltages"))
      spec.calibration_voltages = s["calibration_voltages"].get<std::vector<double>>();
    spec.residual_voltage = s.value("residual_voltage", 3.0);
    if (s.contains("hysteresis_model"))
      spec.hysteresis = load_hysteresis_model(resolve(s["hysteresis_model"]));
    return spec;
  }

  HysteresisModel hysteresis_from(const json& section) const {
    if (section.contains("hysteresis_model"))
      return load_hysteresis_model(resolve(section["hysteresis_model"]));
    return HysteresisModel{};
  }
};

std::string scan_to_string(const Tool& tool, const ApproachScan& scan) {
  std::ostringstream os;
  os << tool.provenance_comment();
  write_scan(scan, os);
  return os.str();
}

int cmd_theory(const Tool& tool) {
  const auto model = tool.theory_model();
  const auto grid = tool.z_grid();
  const auto settings = tool.lifshitz_settings();
  const auto geom = tool.geometry();

  std::ostringstream os;
  os << tool.provenance_comment();
  os << "# material=" << tool.material_label() << "\n";
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "# rel_tol=%g xi_cutoff=%g R_um=%.6g A_nm=%.6g T_K=%.6g\n",
                settings.rel_tol, settings.xi_cutoff_factor,
                geom.sphere_radius_m * 1e6, geom.roughness_m * 1e9,
                geom.temperature_K);
  os << buf;
  ForceCurve curve;
  curve.label = "theory";
  for (double z : grid) curve.points.push_back({z, model.force(z), std::nullopt});
  write_force_curve(curve, os);
  tool.write_file("theory_curve.csv", os.str());
  std::cout << "wrote " << (tool.out_dir / "theory_curve.csv").string() << " ("
            << grid.size() << " points)\n";
  return 0;
}

int cmd_synth(const Tool& tool) {
  auto model = tool.theory_model();
  const auto spec = tool.synth_spec();
  const double lo = std::min(spec.truth.z0_m * 0.8, spec.casimir_z_min_m);
  const double hi = std::max(spec.residual_z_max_m * 1.1, spec.calib_z_max_m);
  model.build_cache(lo, hi);

  const auto exp = generate_synthetic_experiment(model, spec, tool.seed());

  json manifest;
  manifest["casimir_scans"] = json::array();
  manifest["electrostatic_scans"] = json::array();
  int idx = 0;
  for (const auto& scan : exp.casimir_scans) {
    char name[64];
    std::snprintf(name, sizeof name, "casimir_scan_%03d.csv", idx++);
    tool.write_file(name, scan_to_string(tool, scan));
    manifest["casimir_scans"].push_back(name);
  }
  idx = 0;
  for (const auto& scan : exp.electrostatic_scans) {
    char name[64];
    std::snprintf(name, sizeof name, "es_scan_%d.csv", idx++);
    tool.write_file(name, scan_to_string(tool, scan));
    manifest["electrostatic_scans"].push_back(name);
  }
  tool.write_file("residual_plus.csv", scan_to_string(tool, exp.residual_plus));
  tool.write_file("residual_minus.csv", scan_to_string(tool, exp.residual_minus));
  manifest["residual_scans"] = {"residual_plus.csv", "residual_minus.csv"};
  manifest["seed"] = tool.seed();
  tool.attach_provenance(manifest);
  tool.write_file("synth_manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << exp.casimir_scans.size() << " casimir scans, "
            << exp.electrostatic_scans.size()
            << " electrostatic scans and the residual pair to "
            << tool.out_dir.string() << "\n";
  return 0;
}

int cmd_calibrate(const Tool& tool) {
  const json c = tool.config.value("calibration", json::object());
  if (!c.contains("scans") || !c["scans"].is_array() || c["scans"].empty())
    throw ConfigError("calibration.scans: need at least one electrostatic scan");

  CalibrationInputs in;
  in.sphere_radius_m = tool.geometry().sphere_radius_m;
  in.hysteresis = tool.hysteresis_from(c);
  for (const auto& p : c["scans"])
    in.electrostatic_scans.push_back(load_scan(tool.resolve(p.get<std::string>())));
  if (c.contains("residual_scans")) {
    const auto pair = c["residual_scans"].get<std::vector<std::string>>();
    if (pair.size() != 2)
      throw ConfigError("calibration.residual_scans: expected [plus, minus]");
    in.residual_pair = {load_scan(tool.resolve(pair[0])), load_scan(tool.resolve(pair[1]))};
  }
  in.fit_options.z0_init = c.value("z0_init_nm", 30.0) * 1e-9;
  in.fit_options.scale_init = c.value("scale_init_N_per_unit", -4e-9);
  in.fit_options.fit_v2 = c.value("fit_v2", false);
  in.fit_options.v2 = c.value("v2_mV", 0.0) * 1e-3;
  in.fit_options.sigma_force_N = c.value("sigma_force_pN", 0.0) * 1e-12;

  TheoryModel model = tool.theory_model();
  if (c.value("include_casimir_model", true)) {
    model.build_cache(5e-9, 4e-6);
    in.casimir_force = [&model](double z) { return model.force_cached(z); };
  }

  const FullCalibration cal = run_calibration(in);

  json out;
  out["m_nm_per_unit"] = cal.signal.m_per_signal * 1e9;
  out["m_uncertainty_nm_per_unit"] = cal.signal.m_uncertainty * 1e9;
  out["force_per_signal_N_per_unit"] = cal.signal.force_per_signal;
  out["z0_nm"] = cal.result.z0_m * 1e9;
  out["z0_uncertainty_nm"] = cal.result.z0_uncertainty_m * 1e9;
  out["v2_mV"] = cal.result.v2 * 1e3;
  out["v2_uncertainty_mV"] = cal.result.v2_uncertainty * 1e3;
  out["chi2"] = cal.result.chi2;
  out["dof"] = cal.result.dof;
  out["vertices"] = json::array();
  for (const auto& v : cal.vertices)
    out["vertices"].push_back({{"V1", v.applied_voltage_V},
                               {"z_piezo_nm", v.z_piezo_m * 1e9},
                               {"signal", v.signal}});
  out["per_voltage"] = json::array();
  for (const auto& f : cal.per_scan)
    out["per_voltage"].push_back({{"V1", f.applied_voltage_V},
                                  {"z0_nm", f.z0_m * 1e9},
                                  {"z0_stderr_nm", f.z0_stderr_m * 1e9},
                                  {"force_per_signal_N_per_unit", f.force_per_signal},
                                  {"chi2", f.chi2},
                                  {"dof", f.dof},
                                  {"samples_used", f.samples_used}});
  out["warnings"] = cal.warnings;
  tool.attach_provenance(out);
  tool.write_file("calibration.json", out.dump(2) + "\n");
  for (const auto& w : cal.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "m = " << cal.signal.m_per_signal * 1e9 << " +- "
            << cal.signal.m_uncertainty * 1e9 << " nm/unit, z0 = "
            << cal.result.z0_m * 1e9 << " +- " << cal.result.z0_uncertainty_m * 1e9
            << " nm, V2 = " << cal.result.v2 * 1e3 << " mV\n";
  return 0;
}

int cmd_analyze(const Tool& tool) {
  const json a = tool.config.value("analyze", json::object());
  if (!a.contains("scans") || !a["scans"].is_array() || a["scans"].size() < 2)
    throw ConfigError("analyze.scans: need at least two casimir scans");

  std::vector<ApproachScan> scans;
  for (const auto& p : a["scans"])
    scans.push_back(load_scan(tool.resolve(p.get<std::string>())));

  double m, z0, fps, v2;
  if (a.contains("calibration_json")) {
    std::ifstream in(tool.resolve(a["calibration_json"].get<std::string>()));
    if (!in) throw ConfigError("cannot open calibration json");
    json cal;
    in >> cal;
    m = cal.at("m_nm_per_unit").get<double>() * 1e-9;
    z0 = cal.at("z0_nm").get<double>() * 1e-9;
    fps = cal.at("force_per_signal_N_per_unit").get<double>();
    v2 = cal.at("v2_mV").get<double>() * 1e-3;
  } else {
    if (!a.contains("m_nm_per_unit") || !a.contains("z0_nm") ||
        !a.contains("force_per_signal"))
      throw ConfigError(
          "analyze: provide calibration_json or m_nm_per_unit/z0_nm/force_per_signal");
    m = a["m_nm_per_unit"].get<double>() * 1e-9;
    z0 = a["z0_nm"].get<double>() * 1e-9;
    fps = a["force_per_signal"].get<double>();
    v2 = a.value("v2_mV", 0.0) * 1e-3;
  }

  TheoryModel model = tool.theory_model();
  model.build_cache(std::max(z0 * 0.5, 5e-9), 6e-6);

  ElectrostaticConfig residual;
  residual.sphere_radius_m = tool.geometry().sphere_radius_m;
  residual.v1 = 0.0;
  residual.v2 = v2;

  const auto result =
      analyze_experiment(scans, tool.hysteresis_from(a), m, z0, fps, residual, model,
                         a.value("grid_points", 0));

  std::ostringstream avg;
  avg << tool.provenance_comment();
  avg << "# " << result.experiment_avg.label << "\n";
  write_force_curve(result.experiment_avg, avg);
  tool.write_file("experiment_avg.csv", avg.str());

  std::ostringstream res;
  res << tool.provenance_comment();
  write_force_curve(result.residuals, res);
  tool.write_file("residuals.csv", res.str());

  json report = json::parse(precision_report_to_json(result.report));
  tool.attach_provenance(report);
  tool.write_file("precision.json", report.dump(2) + "\n");

  std::cout << "sigma_rms = " << result.report.sigma_rms_N * 1e12
            << " pN over " << result.report.n_points << " points, precision ratio = "
            << result.report.precision_ratio << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Casimir force pipeline: Lifshitz theory, electrostatic "
               "calibration and precision statistics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::string kernel = "auto";
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;

  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--tolerance", tolerance, "override the Lifshitz relative tolerance");
  app.add_option("--kernel", kernel, "kernel backend: auto|scalar|avx2");

  auto* c_theory = app.add_subcommand("theory", "tabulate the corrected theory force");
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic experiment");
  auto* c_cal = app.add_subcommand("calibrate", "run the calibration chain on scans");
  auto* c_ana = app.add_subcommand("analyze", "average scans and report precision");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!kernels::set_backend(kernel))
      throw ConfigError("kernel backend not available: " + kernel);

    Tool tool;
    tool.load_config(config_path);
    tool.out_dir = out_dir;
    tool.seed_override = seed;
    tool.tolerance_override = tolerance;

    if (c_theory->parsed()) return cmd_theory(tool);
    if (c_synth->parsed()) return cmd_synth(tool);
    if (c_cal->parsed()) return cmd_calibrate(tool);
    if (c_ana->parsed()) return cmd_analyze(tool);
    throw ConfigError("no subcommand");
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InsufficientDataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInsufficient;
  } catch (const AlignmentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAlignment;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
