#include "casimir/calibration.hpp"

#include "casimir/electrostatics.hpp"
#include "casimir/levmar.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace casimir {

namespace {

constexpr double kZFloor = 5e-11;  // 0.05 nm: fit-model clamp against z <= 0

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct LineFit {
  double intercept, slope, sse;
};

// least-squares line through points [lo, hi]; x, y pre-scaled by the caller
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 std::size_t lo, std::size_t hi) {
  const double n = static_cast<double>(hi - lo + 1);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = lo; i <= hi; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (den <= 0)
    return {0.0, 0.0, std::numeric_limits<double>::infinity()};
  const double slope = (n * sxy - sx * sy) / den;
  const double intercept = (sy - slope * sx) / n;
  double sse = syy - intercept * sy - slope * sxy;
  return {intercept, slope, std::max(sse, 0.0)};
}

struct QuadFit {
  double c0, c1, c2, sse;
};

// quadratic about x_center: y = c0 + c1 (x - x_center) + c2 (x - x_center)^2
QuadFit fit_quadratic(const std::vector<double>& x, const std::vector<double>& y,
                      std::size_t lo, std::size_t hi, double x_center) {
  double s[5] = {0, 0, 0, 0, 0};
  double b[3] = {0, 0, 0};
  double syy = 0;
  for (std::size_t i = lo; i <= hi; ++i) {
    const double u = x[i] - x_center;
    const double u2 = u * u;
    s[0] += 1;
    s[1] += u;
    s[2] += u2;
    s[3] += u2 * u;
    s[4] += u2 * u2;
    b[0] += y[i];
    b[1] += y[i] * u;
    b[2] += y[i] * u2;
    syy += y[i] * y[i];
  }
  // 3x3 normal equations, Gaussian elimination with partial pivoting
  double a[3][4] = {{s[0], s[1], s[2], b[0]},
                    {s[1], s[2], s[3], b[1]},
                    {s[2], s[3], s[4], b[2]}};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    if (a[col][col] == 0.0)
      return {0, 0, 0, std::numeric_limits<double>::infinity()};
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
    }
  }
  const double c0 = a[0][3] / a[0][0];
  const double c1 = a[1][3] / a[1][1];
  const double c2 = a[2][3] / a[2][2];
  const double sse = std::max(
      syy - (c0 * b[0] + c1 * b[1] + c2 * b[2]), 0.0);
  return {c0, c1, c2, sse};
}

}  // namespace

void ApproachScan::validate() const {
  if (samples.size() < 16)
    throw ValidationError("approach scan needs at least 16 samples, got " +
                          std::to_string(samples.size()));
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].z_piezo_m > samples[i - 1].z_piezo_m))
      throw ValidationError("approach scan: z_piezo must be strictly monotone");
}

ApproachScan load_scan(std::istream& in, std::string metadata) {
  ApproachScan scan;
  scan.metadata = std::move(metadata);
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const auto pos = t.find("V1=");
      if (pos != std::string::npos) {
        try {
          scan.applied_voltage_V = std::stod(t.substr(pos + 3));
        } catch (const std::exception&) {
          throw ConfigError("scan CSV: bad V1 comment on line " + std::to_string(line_no));
        }
      }
      continue;
    }
    if (!header_seen) {
      if (t != "z_piezo_nm,signal")
        throw ConfigError("scan CSV: expected header 'z_piezo_nm,signal', got '" + t + "'");
      header_seen = true;
      continue;
    }
    std::stringstream ss(t);
    std::string f1, f2;
    if (!std::getline(ss, f1, ',') || !std::getline(ss, f2))
      throw ConfigError("scan CSV: expected 2 fields on line " + std::to_string(line_no));
    try {
      scan.samples.push_back({std::stod(trim(f1)) * 1e-9, std::stod(trim(f2))});
    } catch (const std::exception&) {
      throw ConfigError("scan CSV: bad number on line " + std::to_string(line_no));
    }
  }
  if (!header_seen) throw ConfigError("scan CSV: missing header");
  if (scan.samples.size() >= 2 &&
      scan.samples.front().z_piezo_m > scan.samples.back().z_piezo_m)
    std::reverse(scan.samples.begin(), scan.samples.end());
  scan.validate();
  return scan;
}

ApproachScan load_scan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scan file: " + path.string());
  return load_scan(in, path.filename().string());
}

void write_scan(const ApproachScan& scan, std::ostream& out) {
  char buf[80];
  if (scan.applied_voltage_V) {
    std::snprintf(buf, sizeof buf, "# V1=%.17g\n", *scan.applied_voltage_V);
    out << buf;
  }
  out << "z_piezo_nm,signal\n";
  for (const auto& s : scan.samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.z_piezo_m * 1e9, s.signal);
    out << buf;
  }
}

double HysteresisModel::apply(double extension_m) const {
  double acc = 0.0;
  double xp = extension_m;
  for (double c : coeffs) {
    acc += c * xp;
    xp *= extension_m;
  }
  return acc;
}

bool HysteresisModel::is_identity() const {
  if (coeffs.empty()) return true;
  if (coeffs[0] != 1.0) return false;
  return std::all_of(coeffs.begin() + 1, coeffs.end(), [](double c) { return c == 0.0; });
}

double HysteresisModel::invert(double corrected_m) const {
  if (is_identity()) return corrected_m;
  double x = corrected_m;  // correction is small, so this is a good start
  for (int it = 0; it < 64; ++it) {
    double f = apply(x) - corrected_m;
    double df = 0.0;
    double xp = 1.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      df += coeffs[k] * static_cast<double>(k + 1) * xp;
      xp *= x;
    }
    if (df == 0.0) break;
    const double step = f / df;
    x -= step;
    if (std::abs(step) < 1e-18 + 1e-15 * std::abs(x)) return x;
  }
  throw NumericError("hysteresis inversion did not converge");
}

HysteresisModel parse_hysteresis_model(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("hysteresis model JSON: ") + e.what());
  }
  HysteresisModel m;
  if (!j.contains("coeffs") || !j["coeffs"].is_array() || j["coeffs"].empty())
    throw ConfigError("hysteresis model JSON: 'coeffs' array required");
  m.coeffs = j["coeffs"].get<std::vector<double>>();
  m.provenance = j.value("label", std::string("unlabeled"));
  return m;
}

HysteresisModel load_hysteresis_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open hysteresis model: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_hysteresis_model(ss.str());
}

ApproachScan apply_hysteresis(const HysteresisModel& model, const ApproachScan& scan) {
  scan.validate();
  ApproachScan out = scan;
  for (auto& s : out.samples) {
    const double corrected = model.apply(s.z_piezo_m);
    const double mag = std::abs(s.z_piezo_m);
    if (mag > 1e-12 && std::abs(corrected - s.z_piezo_m) > 0.05 * mag)
      throw ValidationError(
          "hysteresis correction exceeds 5% of the extension at z_piezo = " +
          std::to_string(s.z_piezo_m * 1e9) + " nm");
    s.z_piezo_m = corrected;
  }
  for (std::size_t i = 1; i < out.samples.size(); ++i)
    if (!(out.samples[i].z_piezo_m > out.samples[i - 1].z_piezo_m))
      throw ValidationError("hysteresis correction destroyed scan monotonicity");
  return out;
}

double separation(double z_piezo_m, double signal, double m_per_signal, double z0_m) {
  if (!(m_per_signal > 0)) throw ValidationError("separation: m must be > 0");
  const double z = z0_m + z_piezo_m - signal * m_per_signal;
  if (!(z > 0))
    throw ValidationError("separation: computed z = " + std::to_string(z * 1e9) +
                          " nm is non-positive (surfaces would interpenetrate)");
  return z;
}

ContactVertex find_contact_vertex(const ApproachScan& scan,
                                  const ContactVertexOptions& opt) {
  scan.validate();
  const std::size_t n = scan.samples.size();
  const std::size_t K = opt.right_window;
  if (n < opt.min_left + K + 2)
    throw InsufficientDataError("scan too short for vertex detection");

  // scale to O(1) coordinates for conditioning
  const double x0 = scan.samples.front().z_piezo_m;
  const double xs = scan.samples.back().z_piezo_m - x0;
  double ymin = scan.samples[0].signal, ymax = ymin;
  for (const auto& s : scan.samples) {
    ymin = std::min(ymin, s.signal);
    ymax = std::max(ymax, s.signal);
  }
  const double ys = std::max(ymax - ymin, 1e-300);

  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = (scan.samples[i].z_piezo_m - x0) / xs;
    y[i] = (scan.samples[i].signal - ymin) / ys;
  }

  // Grow the contact line from the front of the scan until the data departs
  // from it for several consecutive samples. The scan is required to start
  // inside the contact region.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  std::size_t count = 0;
  auto push = [&](std::size_t i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
    ++count;
  };
  for (std::size_t i = 0; i < opt.min_left; ++i) push(i);

  const std::size_t last_candidate = n - K - 1;
  std::size_t depart = 0;
  std::size_t misses = 0;
  bool found = false;
  for (std::size_t j = opt.min_left; j <= last_candidate; ++j) {
    const double nn = static_cast<double>(count);
    const double den = nn * sxx - sx * sx;
    const double slope = (nn * sxy - sx * sy) / den;
    const double intercept = (sy - slope * sx) / nn;
    const double sse = std::max(syy - intercept * sy - slope * sxy, 0.0);
    const double sdev =
        std::max(std::sqrt(sse / std::max(nn - 2.0, 1.0)), 1e-7);
    const double resid = std::abs(y[j] - (intercept + slope * x[j]));
    if (resid > 8.0 * sdev) {
      if (misses == 0) depart = j;
      if (++misses >= 3) {
        found = true;
        break;
      }
    } else {
      misses = 0;
      push(j);
    }
  }
  if (!found)
    throw InsufficientDataError(
        "no contact vertex: scan never departs from the contact line");

  // Local two-segment least-squares split. The right window must contain all
  // three departure-evidence samples, otherwise a split whose window only
  // clips the kink's edge can tie the true split's cost.
  const std::size_t lo =
      std::max(opt.min_left, depart + 2 > K ? depart + 2 - K : opt.min_left);
  const std::size_t hi = std::min(depart + 2, last_candidate);
  std::size_t best = lo;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t j = lo; j <= hi; ++j) {
    const double cost =
        fit_line(x, y, 0, j).sse + fit_quadratic(x, y, j, j + K, x[j]).sse;
    if (cost < best_cost) {
      best_cost = cost;
      best = j;
    }
  }

  const LineFit left = fit_line(x, y, 0, best);
  const QuadFit right = fit_quadratic(x, y, best, best + K, x[best]);

  // both slopes evaluated at the split
  const double contrast = std::abs(left.slope - right.c1) /
                          std::max({std::abs(left.slope), std::abs(right.c1), 1e-12});
  if (contrast < opt.min_slope_contrast)
    throw InsufficientDataError(
        "no contact vertex: contact line and approach curve are not distinct "
        "(slope contrast " + std::to_string(contrast) + ")");

  // Essentially exact data: the split sample lies on the contact line and is
  // itself the vertex. Noisy data gets sub-sample refinement instead.
  const double n_line = static_cast<double>(best + 1);
  const double s_line =
      std::sqrt(left.sse / std::max(n_line - 2.0, 1.0));
  if (s_line < 1e-6) {
    ContactVertex v;
    v.z_piezo_m = x0 + x[best] * xs;
    v.signal = ymin + (left.intercept + left.slope * x[best]) * ys;
    v.split_index = best;
    return v;
  }

  // intersection of the contact line with the local quadratic, in coordinates
  // centered on the split sample: c2 u^2 + (c1 - bL) u + (c0 - L(x_best)) = 0
  const double A = right.c2;
  const double B = right.c1 - left.slope;
  const double C = right.c0 - (left.intercept + left.slope * x[best]);
  double uv = 0.0;
  bool solved = false;
  if (std::abs(A) < 1e-12 * std::max(std::abs(B), 1.0)) {
    if (B != 0.0) {
      uv = -C / B;
      solved = true;
    }
  } else {
    const double disc = B * B - 4.0 * A * C;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double r1 = (-B + sq) / (2.0 * A);
      const double r2 = (-B - sq) / (2.0 * A);
      uv = std::abs(r1) < std::abs(r2) ? r1 : r2;
      solved = true;
    }
  }
  const double window = x[best + K] - x[best];
  if (!solved || std::abs(uv) > 2.0 * window) uv = 0.0;

  const double xv = x[best] + uv;
  ContactVertex v;
  v.z_piezo_m = x0 + xv * xs;
  v.signal = ymin + (left.intercept + left.slope * xv) * ys;
  v.split_index = best;
  return v;
}

SignalCalibration fit_deflection_coefficient(const std::vector<VertexPoint>& vertices) {
  if (vertices.size() < 2)
    throw InsufficientDataError("fit_deflection_coefficient: need >= 2 vertices, got " +
                                std::to_string(vertices.size()));
  const double n = static_cast<double>(vertices.size());
  double sx = 0, sy = 0;
  for (const auto& v : vertices) {
    sx += v.signal;
    sy += v.z_piezo_m;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& v : vertices) {
    const double dx = v.signal - mx;
    const double dy = v.z_piezo_m - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0)
    throw NumericError("fit_deflection_coefficient: vertices share one signal value "
                       "(singular fit)");
  const double slope = sxy / sxx;
  if (!(slope > 0))
    throw NumericError("fit_deflection_coefficient: non-positive slope " +
                       std::to_string(slope));
  double stderr_slope = 0.0;
  if (vertices.size() > 2) {
    const double sse = std::max(syy - slope * sxy, 0.0);
    stderr_slope = std::sqrt(sse / (n - 2.0) / sxx);
  }
  return SignalCalibration{slope, stderr_slope, 0.0};
}

namespace {

ScanFit fit_one_scan(const ApproachScan& scan, double m_per_signal,
                     double sphere_radius_m,
                     const std::function<double(double)>& casimir_force,
                     const ContactFitOptions& opt,
                     std::vector<std::string>& warnings) {
  scan.validate();
  if (!scan.applied_voltage_V)
    throw ConfigError("contact fit: scan '" + scan.metadata +
                      "' has no applied voltage");
  const double v1 = *scan.applied_voltage_V;

  double max_sig = 0.0;
  for (const auto& s : scan.samples) max_sig = std::max(max_sig, std::abs(s.signal));
  if (max_sig == 0.0)
    throw InsufficientDataError("contact fit: zero-signal scan (no force to fit)");

  std::size_t first = 0;
  if (opt.detect_vertex) {
    const ContactVertex v = find_contact_vertex(scan);
    first = v.split_index;
  }
  std::vector<double> zp, sig;
  for (std::size_t i = first; i < scan.samples.size(); ++i) {
    zp.push_back(scan.samples[i].z_piezo_m);
    sig.push_back(scan.samples[i].signal);
  }
  if (zp.size() < 8)
    throw InsufficientDataError("contact fit: too few free-approach samples");

  const double sigma = opt.sigma_force_N > 0 ? opt.sigma_force_N : 1.0;
  ElectrostaticConfig es;
  es.sphere_radius_m = sphere_radius_m;
  es.v1 = v1;
  es.series_rel_tol = opt.series_rel_tol;

  const bool fit_v2 = opt.fit_v2;
  auto residual = [&](const std::vector<double>& p, std::vector<double>& r) {
    const double z0 = p[0];
    const double scale = p[1];
    ElectrostaticConfig cfg = es;
    cfg.v2 = fit_v2 ? p[2] : opt.v2;
    for (std::size_t i = 0; i < zp.size(); ++i) {
      double z = z0 + zp[i] - sig[i] * m_per_signal;
      if (z < kZFloor) z = kZFloor;
      double model = sphere_plane_force(cfg, z);
      if (casimir_force) model += casimir_force(z);
      r[i] = (scale * sig[i] - model) / sigma;
    }
  };

  LmOptions lm;
  lm.max_iterations = 400;
  std::vector<double> init{opt.z0_init, opt.scale_init};
  lm.step_tol = {1e-13, 1e-8 * std::abs(opt.scale_init)};   // 1e-4 nm in z0
  lm.fd_step = {1e-12, 1e-6 * std::abs(opt.scale_init)};
  if (fit_v2) {
    init.push_back(opt.v2);
    lm.step_tol.push_back(1e-5);  // 0.01 mV
    lm.fd_step.push_back(1e-6);
  }

  LmResult res;
  try {
    res = fit_least_squares(residual, init, zp.size(), lm);
  } catch (const NumericError& e) {
    throw NumericError("contact fit failed for scan '" + scan.metadata +
                           "' (V1 = " + std::to_string(v1) + " V): " + e.what(),
                       e.best_estimate(), e.achieved_tolerance());
  }

  ScanFit fit;
  fit.applied_voltage_V = v1;
  fit.z0_m = res.params[0];
  fit.z0_stderr_m = res.param_stderr[0];
  fit.force_per_signal = res.params[1];
  fit.v2 = fit_v2 ? res.params[2] : opt.v2;
  fit.chi2 = res.chi2;
  fit.dof = res.dof;
  fit.samples_used = zp.size();
  if (!(fit.z0_m > 0) || fit.z0_m > 200e-9)
    warnings.push_back("suspicious contact fit: z0 = " +
                       std::to_string(fit.z0_m * 1e9) + " nm for scan '" +
                       scan.metadata + "'");
  return fit;
}

}  // namespace

ContactFit fit_contact_separation(
    const std::vector<ApproachScan>& scans, double m_per_signal,
    double sphere_radius_m, const std::function<double(double)>& casimir_force,
    const ContactFitOptions& opt) {
  if (scans.empty())
    throw InsufficientDataError("contact fit: no scans provided");
  if (!(m_per_signal > 0))
    throw ValidationError("contact fit: deflection coefficient must be > 0");

  ContactFit out;
  for (const auto& scan : scans)
    out.per_scan.push_back(fit_one_scan(scan, m_per_signal, sphere_radius_m,
                                        casimir_force, opt, out.warnings));

  const double n = static_cast<double>(out.per_scan.size());
  double z0_sum = 0, scale_sum = 0, v2_sum = 0, chi2_sum = 0;
  int dof_sum = 0;
  for (const auto& f : out.per_scan) {
    z0_sum += f.z0_m;
    scale_sum += f.force_per_signal;
    v2_sum += f.v2;
    chi2_sum += f.chi2;
    dof_sum += f.dof;
  }
  const double z0_mean = z0_sum / n;
  const double scale_mean = scale_sum / n;
  const double v2_mean = v2_sum / n;

  double z0_var = 0, scale_var = 0, v2_var = 0;
  if (out.per_scan.size() > 1) {
    for (const auto& f : out.per_scan) {
      z0_var += (f.z0_m - z0_mean) * (f.z0_m - z0_mean);
      scale_var += (f.force_per_signal - scale_mean) * (f.force_per_signal - scale_mean);
      v2_var += (f.v2 - v2_mean) * (f.v2 - v2_mean);
    }
    z0_var /= (n - 1.0);
    scale_var /= (n - 1.0);
    v2_var /= (n - 1.0);
  }

  out.ensemble.z0_m = z0_mean;
  out.ensemble.z0_uncertainty_m =
      out.per_scan.size() > 1 ? std::sqrt(z0_var) : out.per_scan.front().z0_stderr_m;
  out.ensemble.v2 = v2_mean;
  out.ensemble.v2_uncertainty = std::sqrt(v2_var);
  out.ensemble.chi2 = chi2_sum;
  out.ensemble.dof = std::max(dof_sum, 1);
  out.force_per_signal = scale_mean;
  out.force_per_signal_spread = std::sqrt(scale_var);
  return out;
}

ResidualPotential estimate_residual_potential(const ApproachScan& scan_plus,
                                              const ApproachScan& scan_minus,
                                              double sphere_radius_m,
                                              double m_per_signal, double z0_m) {
  scan_plus.validate();
  scan_minus.validate();
  if (!scan_plus.applied_voltage_V || !scan_minus.applied_voltage_V)
    throw ConfigError("residual potential: both scans need applied voltages");
  // label order does not matter: sort by voltage sign
  if (*scan_plus.applied_voltage_V < 0)
    return estimate_residual_potential(scan_minus, scan_plus, sphere_radius_m,
                                       m_per_signal, z0_m);
  const double vp = *scan_plus.applied_voltage_V;
  const double vm = *scan_minus.applied_voltage_V;
  if (!(vp > 0) || !(vm < 0) || std::abs(vp + vm) > 1e-9 * std::abs(vp))
    throw ConfigError("residual potential: scans must hold +V and -V of equal magnitude");

  ElectrostaticConfig unit;
  unit.sphere_radius_m = sphere_radius_m;
  unit.v1 = 1.0;
  unit.v2 = 0.0;

  const double z_min_ok = 10.0 * std::max(z0_m, 1e-9);
  std::vector<double> shape, sig;
  std::vector<int> sign;  // +1 for the +V scan, -1 for the -V scan
  for (const auto* scan : {&scan_plus, &scan_minus}) {
    for (const auto& s : scan->samples) {
      const double z = z0_m + s.z_piezo_m - s.signal * m_per_signal;
      if (!(z >= z_min_ok))
        throw ValidationError(
            "residual potential: separation " + std::to_string(z * 1e9) +
            " nm is below the large-distance validity bound (10 z0)");
      shape.push_back(sphere_plane_force(unit, z));  // force per (V1-V2)^2
      sig.push_back(s.signal);
      sign.push_back(scan == &scan_plus ? +1 : -1);
    }
  }

  // amplitude initial guess: the exact conditional least squares at v2 = 0,
  // so a perfectly symmetric pair starts (and stays) at its minimum
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < sig.size(); ++i) {
    const double v = sign[i] > 0 ? vp : vm;
    const double g = shape[i] * v * v;
    num += sig[i] * g;
    den += g * g;
  }
  const double amp0 = num / den;

  auto residual = [&](const std::vector<double>& p, std::vector<double>& r) {
    const double v2 = p[0];
    const double amp = p[1];
    for (std::size_t i = 0; i < sig.size(); ++i) {
      const double v = sign[i] > 0 ? vp : vm;
      const double dv = v - v2;
      r[i] = sig[i] - amp * shape[i] * dv * dv;
    }
  };

  LmOptions lm;
  lm.step_tol = {1e-8, 1e-10 * std::max(std::abs(amp0), 1e-30)};
  lm.fd_step = {1e-6, 1e-6 * std::max(std::abs(amp0), 1e-30)};
  const LmResult res = fit_least_squares(residual, {0.0, amp0}, sig.size(), lm);
  return ResidualPotential{res.params[0], res.param_stderr[0]};
}

FullCalibration run_calibration(const CalibrationInputs& inputs) {
  if (inputs.electrostatic_scans.empty())
    throw InsufficientDataError("calibration: no electrostatic scans");

  FullCalibration out;

  std::vector<ApproachScan> scans;
  scans.reserve(inputs.electrostatic_scans.size());
  for (const auto& s : inputs.electrostatic_scans)
    scans.push_back(apply_hysteresis(inputs.hysteresis, s));

  for (const auto& s : scans) {
    if (!s.applied_voltage_V)
      throw ConfigError("calibration: electrostatic scan '" + s.metadata +
                        "' has no applied voltage");
    const ContactVertex v = find_contact_vertex(s);
    out.vertices.push_back({*s.applied_voltage_V, v.z_piezo_m, v.signal});
  }

  out.signal = fit_deflection_coefficient(out.vertices);

  ContactFitOptions opt = inputs.fit_options;
  std::optional<ResidualPotential> residual;
  if (inputs.residual_pair) {
    auto plus = apply_hysteresis(inputs.hysteresis, inputs.residual_pair->first);
    auto minus = apply_hysteresis(inputs.hysteresis, inputs.residual_pair->second);
    residual = estimate_residual_potential(plus, minus, inputs.sphere_radius_m,
                                           out.signal.m_per_signal, opt.z0_init);
    if (!opt.fit_v2) opt.v2 = residual->v2;
  }

  ContactFit fit = fit_contact_separation(scans, out.signal.m_per_signal,
                                          inputs.sphere_radius_m,
                                          inputs.casimir_force, opt);
  out.result = fit.ensemble;
  out.per_scan = std::move(fit.per_scan);
  out.warnings = std::move(fit.warnings);
  out.signal.force_per_signal = fit.force_per_signal;
  if (residual && !opt.fit_v2) {
    out.result.v2 = residual->v2;
    out.result.v2_uncertainty = residual->v2_stderr;
  }
  return out;
}

}  // namespace casimir
