#include "casimir/analysis.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace casimir {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    v[static_cast<std::size_t>(i)] =
        a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

std::vector<double> logspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  const double lr = std::log(b / a);
  for (int i = 0; i < n; ++i)
    v[static_cast<std::size_t>(i)] =
        a * std::exp(lr * static_cast<double>(i) / static_cast<double>(n - 1));
  return v;
}

}  // namespace

void ForceCurve::validate() const {
  if (points.empty()) throw ValidationError("force curve: no points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i > 0 && !(points[i].z_m > points[i - 1].z_m))
      throw ValidationError("force curve: z must be strictly increasing");
    if (points[i].sigma_N && !(*points[i].sigma_N >= 0))
      throw ValidationError("force curve: sigma must be >= 0");
  }
}

bool ForceCurve::has_sigma() const {
  return !points.empty() &&
         std::all_of(points.begin(), points.end(),
                     [](const CurvePoint& p) { return p.sigma_N.has_value(); });
}

std::vector<double> ForceCurve::z_grid() const {
  std::vector<double> z(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) z[i] = points[i].z_m;
  return z;
}

ForceCurve load_force_curve(std::istream& in, std::string label) {
  ForceCurve c;
  c.label = std::move(label);
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  bool with_sigma = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!header_seen) {
      if (t == "z_nm,force_pN") {
        with_sigma = false;
      } else if (t == "z_nm,force_pN,sigma_pN") {
        with_sigma = true;
      } else {
        throw ConfigError("force curve CSV: unexpected header '" + t + "'");
      }
      header_seen = true;
      continue;
    }
    std::stringstream ss(t);
    std::string f;
    std::vector<double> vals;
    try {
      while (std::getline(ss, f, ',')) vals.push_back(std::stod(trim(f)));
    } catch (const std::exception&) {
      throw ConfigError("force curve CSV: bad number on line " + std::to_string(line_no));
    }
    if (vals.size() != (with_sigma ? 3u : 2u))
      throw ConfigError("force curve CSV: wrong field count on line " +
                        std::to_string(line_no));
    CurvePoint p;
    p.z_m = vals[0] * 1e-9;
    p.force_N = vals[1] * 1e-12;
    if (with_sigma) p.sigma_N = vals[2] * 1e-12;
    c.points.push_back(p);
  }
  if (!header_seen) throw ConfigError("force curve CSV: missing header");
  c.validate();
  return c;
}

ForceCurve load_force_curve(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open force curve: " + path.string());
  return load_force_curve(in, path.filename().string());
}

void write_force_curve(const ForceCurve& curve, std::ostream& out) {
  const bool with_sigma = curve.has_sigma();
  out << (with_sigma ? "z_nm,force_pN,sigma_pN\n" : "z_nm,force_pN\n");
  char buf[120];
  for (const auto& p : curve.points) {
    if (with_sigma)
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.z_m * 1e9,
                    p.force_N * 1e12, *p.sigma_N * 1e12);
    else
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.z_m * 1e9, p.force_N * 1e12);
    out << buf;
  }
}

ForceCurve resample(const ForceCurve& curve, const std::vector<double>& z_grid) {
  curve.validate();
  if (z_grid.empty()) throw AlignmentError("resample: empty target grid");
  if (z_grid.front() < curve.points.front().z_m ||
      z_grid.back() > curve.points.back().z_m)
    throw AlignmentError("resample: target grid [" +
                         std::to_string(z_grid.front() * 1e9) + ", " +
                         std::to_string(z_grid.back() * 1e9) +
                         "] nm extends beyond the curve");

  ForceCurve out;
  out.label = curve.label;
  out.points.reserve(z_grid.size());
  std::size_t j = 0;
  for (double z : z_grid) {
    while (j + 2 < curve.points.size() && curve.points[j + 1].z_m < z) ++j;
    const auto& a = curve.points[j];
    const auto& b = curve.points[j + 1];
    const double t = (z - a.z_m) / (b.z_m - a.z_m);
    CurvePoint p;
    p.z_m = z;
    p.force_N = a.force_N + t * (b.force_N - a.force_N);
    if (a.sigma_N && b.sigma_N) p.sigma_N = *a.sigma_N + t * (*b.sigma_N - *a.sigma_N);
    out.points.push_back(p);
  }
  return out;
}

ForceCurve average_scans(const std::vector<ForceCurve>& scans) {
  if (scans.size() < 2)
    throw InsufficientDataError("average_scans: need at least 2 scans");
  const std::size_t n = scans.front().points.size();
  for (const auto& s : scans) {
    s.validate();
    if (s.points.size() != n)
      throw AlignmentError("average_scans: scans have different grid sizes");
    for (std::size_t i = 0; i < n; ++i) {
      const double za = scans.front().points[i].z_m;
      const double zb = s.points[i].z_m;
      if (std::abs(zb - za) > 1e-9 * std::max(std::abs(za), 1e-30))
        throw AlignmentError("average_scans: scans are not on a common z grid");
    }
  }

  ForceCurve out;
  out.label = "average of " + std::to_string(scans.size()) + " scans";
  out.points.resize(n);
  const double ns = static_cast<double>(scans.size());
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (const auto& s : scans) mean += s.points[i].force_N;
    mean /= ns;
    double var = 0.0;
    for (const auto& s : scans) {
      const double d = s.points[i].force_N - mean;
      var += d * d;
    }
    var /= (ns - 1.0);
    out.points[i] = {scans.front().points[i].z_m, mean, std::sqrt(var)};
  }
  return out;
}

ForceCurve subtract_electrostatic(const ForceCurve& curve,
                                  const ElectrostaticConfig& cfg) {
  curve.validate();
  ForceCurve out = curve;
  for (auto& p : out.points) p.force_N -= sphere_plane_force(cfg, p.z_m);
  return out;
}

PrecisionReport rms_deviation(const ForceCurve& theory, const ForceCurve& experiment,
                              std::size_t scan_count) {
  theory.validate();
  experiment.validate();
  if (theory.points.size() != experiment.points.size() || theory.points.empty())
    throw AlignmentError("rms_deviation: curves are not on a common grid");
  double ss = 0.0;
  double max_abs = 0.0;
  for (std::size_t i = 0; i < theory.points.size(); ++i) {
    if (std::abs(theory.points[i].z_m - experiment.points[i].z_m) >
        1e-9 * std::max(std::abs(theory.points[i].z_m), 1e-30))
      throw AlignmentError("rms_deviation: z grids differ at index " + std::to_string(i));
    const double d = theory.points[i].force_N - experiment.points[i].force_N;
    ss += d * d;
    max_abs = std::max(max_abs, std::abs(experiment.points[i].force_N));
  }
  PrecisionReport r;
  r.n_points = theory.points.size();
  r.sigma_rms_N = std::sqrt(ss / static_cast<double>(r.n_points));
  r.scan_count = scan_count;
  r.per_point_std_N = experiment.points.front().sigma_N.value_or(0.0);
  r.precision_ratio = max_abs > 0 ? r.sigma_rms_N / max_abs : 0.0;
  r.z_min_m = experiment.points.front().z_m;
  r.z_max_m = experiment.points.back().z_m;
  return r;
}

std::string precision_report_to_json(const PrecisionReport& r) {
  nlohmann::json j;
  j["sigma_rms_pN"] = r.sigma_rms_N * 1e12;
  j["n_points"] = r.n_points;
  j["per_point_std_pN"] = r.per_point_std_N * 1e12;
  j["scan_count"] = r.scan_count;
  j["precision_ratio"] = r.precision_ratio;
  j["z_min_nm"] = r.z_min_m * 1e9;
  j["z_max_nm"] = r.z_max_m * 1e9;
  return j.dump(2);
}

// ----- synthetic experiment -------------------------------------------------

namespace {

// Noise-free scan skeleton: true separations -> (z_piezo, signal).
ApproachScan skeleton_from_z(const std::vector<double>& z_true,
                             const std::vector<double>& force_N,
                             const CalibrationTruth& truth) {
  ApproachScan scan;
  scan.samples.reserve(z_true.size());
  for (std::size_t i = 0; i < z_true.size(); ++i) {
    if (!(z_true[i] > 0))
      throw ValidationError("synthetic scan: non-positive separation requested");
    const double sig = force_N[i] / truth.force_per_signal;
    const double zp = z_true[i] - truth.z0_m + sig * truth.m_per_signal;
    scan.samples.push_back({zp, sig});
  }
  return scan;
}

void add_signal_noise(ApproachScan& scan, double sigma_signal, std::mt19937_64& rng) {
  if (sigma_signal <= 0) return;
  std::normal_distribution<double> gauss(0.0, sigma_signal);
  for (auto& s : scan.samples) s.signal += gauss(rng);
}

void distort_hysteresis(ApproachScan& scan, const HysteresisModel& h) {
  if (h.is_identity()) return;
  for (auto& s : scan.samples) s.z_piezo_m = h.invert(s.z_piezo_m);
}

}  // namespace

SyntheticExperiment generate_synthetic_experiment(const TheoryModel& theory,
                                                  const SyntheticSpec& spec,
                                                  std::uint64_t seed) {
  if (!(spec.noise_force_N >= 0))
    throw ValidationError("synthetic spec: noise must be >= 0");
  const CalibrationTruth& truth = spec.truth;
  if (!(truth.m_per_signal > 0) || truth.force_per_signal == 0.0)
    throw ValidationError("synthetic spec: bad calibration truth");

  const double R = theory.geometry().sphere_radius_m;
  const double sigma_signal = spec.noise_force_N / std::abs(truth.force_per_signal);
  std::mt19937_64 rng(seed);

  SyntheticExperiment out;

  // --- Casimir scans (grounded plate; only the residual potential acts)
  {
    ElectrostaticConfig es;
    es.sphere_radius_m = R;
    es.v1 = 0.0;
    es.v2 = truth.v2;
    const auto z = linspace(spec.casimir_z_min_m, spec.casimir_z_max_m,
                            spec.casimir_points);
    std::vector<double> force(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
      force[i] = theory.force_cached(z[i]) + sphere_plane_force(es, z[i]);
    const ApproachScan base = skeleton_from_z(z, force, truth);
    for (int k = 0; k < spec.casimir_scan_count; ++k) {
      ApproachScan s = base;
      s.metadata = "synthetic casimir scan " + std::to_string(k);
      add_signal_noise(s, sigma_signal, rng);
      distort_hysteresis(s, spec.hysteresis);
      s.validate();
      out.casimir_scans.push_back(std::move(s));
    }
  }

  // --- electrostatic calibration scans with a contact region
  for (double v1 : spec.calibration_voltages) {
    ElectrostaticConfig es;
    es.sphere_radius_m = R;
    es.v1 = v1;
    es.v2 = truth.v2;

    // free region: contact (z0) out to calib_z_max
    std::vector<double> z;
    const auto near = linspace(truth.z0_m, truth.z0_m + 60e-9, spec.calib_near_points);
    const auto far = logspace(truth.z0_m + 60e-9, spec.calib_z_max_m,
                              spec.calib_far_points + 1);
    z.insert(z.end(), near.begin(), near.end());
    z.insert(z.end(), far.begin() + 1, far.end());
    std::vector<double> force(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
      force[i] = sphere_plane_force(es, z[i]) + theory.force_cached(z[i]);
    ApproachScan free_part = skeleton_from_z(z, force, truth);

    // contact region: straight line signal = z_piezo / m ending at the vertex
    const double vertex_zp = free_part.samples.front().z_piezo_m;
    ApproachScan scan;
    const auto zp_contact =
        linspace(vertex_zp - spec.calib_contact_depth_m, vertex_zp,
                 spec.calib_contact_points + 1);
    for (std::size_t i = 0; i + 1 < zp_contact.size(); ++i)
      scan.samples.push_back({zp_contact[i], zp_contact[i] / truth.m_per_signal});
    scan.samples.insert(scan.samples.end(), free_part.samples.begin(),
                        free_part.samples.end());
    scan.applied_voltage_V = v1;
    scan.metadata = "synthetic electrostatic scan V1=" + std::to_string(v1);
    add_signal_noise(scan, sigma_signal, rng);
    distort_hysteresis(scan, spec.hysteresis);
    scan.validate();
    out.electrostatic_scans.push_back(std::move(scan));
  }

  // --- +/-V pair at large separation for the residual potential
  for (int pass = 0; pass < 2; ++pass) {
    const double v1 = pass == 0 ? spec.residual_voltage : -spec.residual_voltage;
    ElectrostaticConfig es;
    es.sphere_radius_m = R;
    es.v1 = v1;
    es.v2 = truth.v2;
    const auto z =
        linspace(spec.residual_z_min_m, spec.residual_z_max_m, spec.residual_points);
    std::vector<double> force(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
      force[i] = sphere_plane_force(es, z[i]) + theory.force_cached(z[i]);
    ApproachScan scan = skeleton_from_z(z, force, truth);
    scan.applied_voltage_V = v1;
    scan.metadata = pass == 0 ? "synthetic residual scan +V" : "synthetic residual scan -V";
    add_signal_noise(scan, sigma_signal, rng);
    distort_hysteresis(scan, spec.hysteresis);
    scan.validate();
    (pass == 0 ? out.residual_plus : out.residual_minus) = std::move(scan);
  }

  return out;
}

AnalysisResult analyze_experiment(const std::vector<ApproachScan>& casimir_scans,
                                  const HysteresisModel& hysteresis,
                                  double m_per_signal, double z0_m,
                                  double force_per_signal,
                                  const ElectrostaticConfig& residual_cfg,
                                  const TheoryModel& theory, int grid_points) {
  if (casimir_scans.size() < 2)
    throw InsufficientDataError("analysis: need at least 2 scans to average");
  if (!(m_per_signal > 0) || force_per_signal == 0.0)
    throw ValidationError("analysis: bad calibration parameters");

  // calibrated per-scan curves
  std::vector<ForceCurve> curves;
  curves.reserve(casimir_scans.size());
  for (const auto& raw : casimir_scans) {
    const ApproachScan scan = apply_hysteresis(hysteresis, raw);
    ForceCurve c;
    c.label = scan.metadata;
    c.points.reserve(scan.samples.size());
    for (const auto& s : scan.samples) {
      const double z = separation(s.z_piezo_m, s.signal, m_per_signal, z0_m);
      c.points.push_back({z, s.signal * force_per_signal, std::nullopt});
    }
    std::sort(c.points.begin(), c.points.end(),
              [](const CurvePoint& a, const CurvePoint& b) { return a.z_m < b.z_m; });
    c.points.erase(std::unique(c.points.begin(), c.points.end(),
                               [](const CurvePoint& a, const CurvePoint& b) {
                                 return a.z_m == b.z_m;
                               }),
                   c.points.end());
    curves.push_back(std::move(c));
  }

  // common grid: intersection of scan ranges
  double lo = curves.front().points.front().z_m;
  double hi = curves.front().points.back().z_m;
  for (const auto& c : curves) {
    lo = std::max(lo, c.points.front().z_m);
    hi = std::min(hi, c.points.back().z_m);
  }
  if (!(hi > lo)) throw AlignmentError("analysis: scans do not overlap in z");
  const int n = grid_points > 0 ? grid_points
                                : static_cast<int>(curves.front().points.size());
  const auto grid = linspace(lo, hi, n);

  std::vector<ForceCurve> resampled;
  resampled.reserve(curves.size());
  for (const auto& c : curves) resampled.push_back(resample(c, grid));

  AnalysisResult out;
  const ForceCurve averaged = average_scans(resampled);
  out.experiment_avg = subtract_electrostatic(averaged, residual_cfg);
  // metadata only: the roughness-limited averaging adds ~+-1 nm of separation
  // uncertainty which is reported, never applied
  out.experiment_avg.label =
      "experiment (averaging adds ~+-1 nm separation uncertainty)";

  out.theory.label = "theory";
  out.theory.points.reserve(grid.size());
  for (double z : grid)
    out.theory.points.push_back({z, theory.force_cached(z), std::nullopt});

  out.residuals.label = "theory - experiment";
  out.residuals.points.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    out.residuals.points.push_back(
        {grid[i],
         out.theory.points[i].force_N - out.experiment_avg.points[i].force_N,
         out.experiment_avg.points[i].sigma_N});

  out.report = rms_deviation(out.theory, out.experiment_avg, casimir_scans.size());
  return out;
}

}  // namespace casimir
