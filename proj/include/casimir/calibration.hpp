#ifndef CASIMIR_CALIBRATION_HPP
#define CASIMIR_CALIBRATION_HPP

#include "casimir/errors.hpp"

#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace casimir {

struct ScanSample {
  double z_piezo_m;  // plate retraction from the contact position
  double signal;     // photodiode difference signal; positive under attraction
};

// One approach sweep. Samples are kept strictly increasing in z_piezo
// (loaders reverse descending input).
struct ApproachScan {
  std::vector<ScanSample> samples;
  std::optional<double> applied_voltage_V;  // plate voltage, absent when grounded
  std::string metadata;

  void validate() const;  // >= 16 samples, strictly increasing z_piezo
};

// CSV format: header `z_piezo_nm,signal`; optional `# V1=<volts>` comment.
ApproachScan load_scan(std::istream& in, std::string metadata);
ApproachScan load_scan(const std::filesystem::path& path);
void write_scan(const ApproachScan& scan, std::ostream& out);

// Piezo correction polynomial: corrected = c1 x + c2 x^2 + ... (identity by
// default). Corrections beyond 5% of the extension trip the guard.
struct HysteresisModel {
  std::vector<double> coeffs{1.0};
  std::string provenance = "identity";

  double apply(double extension_m) const;
  double invert(double corrected_m) const;  // Newton; used by the generator
  bool is_identity() const;
};

// JSON: { "coeffs": [c1, c2, ...], "label": "..." }
HysteresisModel parse_hysteresis_model(const std::string& json_text);
HysteresisModel load_hysteresis_model(const std::filesystem::path& path);

ApproachScan apply_hysteresis(const HysteresisModel& model, const ApproachScan& scan);

// Absolute separation z = z0 + z_piezo - signal * m. With attractive forces
// (positive signal) the deflection term reduces the separation.
double separation(double z_piezo_m, double signal, double m_per_signal, double z0_m);

// Contact vertex of a raw scan: region 1 (contact) is a straight line in
// (z_piezo, signal); the vertex is found by a two-segment least-squares split
// (line left, local quadratic right) refined to the intersection point.
struct ContactVertexOptions {
  std::size_t right_window = 14;  // samples in the local quadratic
  std::size_t min_left = 8;       // minimum contact-line samples
  double min_slope_contrast = 0.25;
};

struct ContactVertex {
  double z_piezo_m;
  double signal;
  std::size_t split_index;
};

ContactVertex find_contact_vertex(const ApproachScan& scan,
                                  const ContactVertexOptions& opt = {});

struct VertexPoint {
  double applied_voltage_V;
  double z_piezo_m;
  double signal;
};

struct SignalCalibration {
  double m_per_signal;      // m per unit signal
  double m_uncertainty;     // standard error of the fitted slope
  double force_per_signal;  // N per unit signal, filled by the chi2 fit
};

// m = least-squares slope of z_piezo against signal through the vertices
// (with intercept, so a constant signal offset does not bias the slope).
SignalCalibration fit_deflection_coefficient(const std::vector<VertexPoint>& vertices);

struct CalibrationResult {
  double z0_m = 0.0;
  double z0_uncertainty_m = 0.0;
  double v2 = 0.0;
  double v2_uncertainty = 0.0;
  double chi2 = 0.0;
  int dof = 0;
};

struct ContactFitOptions {
  double z0_init = 30e-9;
  double scale_init = -4e-9;   // force_per_signal initial guess, N per unit
  bool fit_v2 = false;         // co-fit V2 instead of holding it fixed
  double v2 = 0.0;             // fixed sphere potential when fit_v2 is false
  double sigma_force_N = 0.0;  // per-point sigma; 0 -> unweighted
  bool detect_vertex = true;   // drop contact-region samples before fitting
  double series_rel_tol = 1e-12;
};

struct ScanFit {
  double applied_voltage_V;
  double z0_m;
  double z0_stderr_m;
  double force_per_signal;
  double v2;
  double chi2;
  int dof;
  std::size_t samples_used;
};

struct ContactFit {
  CalibrationResult ensemble;
  double force_per_signal = 0.0;
  double force_per_signal_spread = 0.0;
  std::vector<ScanFit> per_scan;
  std::vector<std::string> warnings;
};

// chi2 fit of the contact separation z0 (plus the signal->force scale, plus
// optionally V2) against the Eq. 4 + Casimir total-force model, one fit per
// electrostatic scan, then ensemble mean and spread.
ContactFit fit_contact_separation(
    const std::vector<ApproachScan>& scans, double m_per_signal,
    double sphere_radius_m, const std::function<double(double)>& casimir_force,
    const ContactFitOptions& opt = {});

struct ResidualPotential {
  double v2 = 0.0;
  double v2_stderr = 0.0;
};

// V2 from a +V/-V scan pair taken at large separation: F is proportional to
// (V1-V2)^2, so the +/- asymmetry isolates V2 (with the signal->force scale
// as a nuisance amplitude).
ResidualPotential estimate_residual_potential(const ApproachScan& scan_plus,
                                              const ApproachScan& scan_minus,
                                              double sphere_radius_m,
                                              double m_per_signal, double z0_m);

// Full calibration chain: vertices -> m; residual pair -> V2; chi2 -> z0 and
// force scale. Mirrors the narrative order of the measurement.
struct CalibrationInputs {
  std::vector<ApproachScan> electrostatic_scans;
  std::optional<std::pair<ApproachScan, ApproachScan>> residual_pair;
  HysteresisModel hysteresis;
  double sphere_radius_m = 95.65e-6;
  std::function<double(double)> casimir_force;  // may be empty
  ContactFitOptions fit_options;
};

struct FullCalibration {
  SignalCalibration signal;
  CalibrationResult result;
  std::vector<ScanFit> per_scan;
  std::vector<VertexPoint> vertices;
  std::vector<std::string> warnings;
};

FullCalibration run_calibration(const CalibrationInputs& inputs);

}  // namespace casimir

#endif
