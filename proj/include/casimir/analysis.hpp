#ifndef CASIMIR_ANALYSIS_HPP
#define CASIMIR_ANALYSIS_HPP

#include "casimir/calibration.hpp"
#include "casimir/electrostatics.hpp"
#include "casimir/theory.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace casimir {

struct CurvePoint {
  double z_m;
  double force_N;
  std::optional<double> sigma_N;
};

// Force (measured or predicted) against absolute surface separation.
struct ForceCurve {
  std::vector<CurvePoint> points;
  std::string label;

  void validate() const;  // strictly increasing z, sigma >= 0 where present
  bool has_sigma() const;
  std::vector<double> z_grid() const;
};

// CSV: `z_nm,force_pN[,sigma_pN]`, '#' comments skipped.
ForceCurve load_force_curve(std::istream& in, std::string label);
ForceCurve load_force_curve(const std::filesystem::path& path);
void write_force_curve(const ForceCurve& curve, std::ostream& out);

// Linear-in-z monotone resampling onto a target grid; the grid must lie
// inside the curve's range (no extrapolation).
ForceCurve resample(const ForceCurve& curve, const std::vector<double>& z_grid);

// Pointwise mean and sample standard deviation across scans sharing one grid.
ForceCurve average_scans(const std::vector<ForceCurve>& scans);

// Subtract the Eq. 4 electrostatic force (residual-potential background).
ForceCurve subtract_electrostatic(const ForceCurve& curve,
                                  const ElectrostaticConfig& cfg);

struct PrecisionReport {
  double sigma_rms_N = 0.0;      // sqrt(sum (F_th - F_exp)^2 / N)
  std::size_t n_points = 0;
  double per_point_std_N = 0.0;  // experiment sigma at the closest separation
  std::size_t scan_count = 0;
  double precision_ratio = 0.0;  // sigma_rms / max |F_exp|
  double z_min_m = 0.0;
  double z_max_m = 0.0;
};

PrecisionReport rms_deviation(const ForceCurve& theory, const ForceCurve& experiment,
                              std::size_t scan_count);

std::string precision_report_to_json(const PrecisionReport& report);

// ----- synthetic experiment ------------------------------------------------

struct CalibrationTruth {
  double m_per_signal = 8.9e-9;      // m per unit signal
  double z0_m = 32.7e-9;
  double v2 = 3e-3;                  // residual sphere potential, V
  double force_per_signal = -5e-9;   // N per unit signal (negative: attraction
                                     // shows up as positive signal)
};

struct SyntheticSpec {
  CalibrationTruth truth;
  double noise_force_N = 19e-12;

  int casimir_scan_count = 30;
  double casimir_z_min_m = 62e-9;
  double casimir_z_max_m = 350e-9;
  int casimir_points = 2583;

  std::vector<double> calibration_voltages{0.256, 0.202, 0.154};
  double calib_z_max_m = 2e-6;
  double calib_contact_depth_m = 25e-9;  // region-1 extent past the vertex
  int calib_contact_points = 120;
  int calib_near_points = 240;           // first 60 nm past contact
  int calib_far_points = 240;

  double residual_voltage = 3.0;
  double residual_z_min_m = 3.2e-6;
  double residual_z_max_m = 5.0e-6;
  int residual_points = 200;

  HysteresisModel hysteresis;  // identity unless configured
};

struct SyntheticExperiment {
  std::vector<ApproachScan> casimir_scans;        // grounded plate (V1 = 0)
  std::vector<ApproachScan> electrostatic_scans;  // one per calibration voltage
  ApproachScan residual_plus;
  ApproachScan residual_minus;
};

// Inverts the measurement pipeline: pick true separations, evaluate the total
// force (theory Casimir + Eq. 4 electrostatic at the truth V2), convert to
// photodiode signal, run the deflection relation backwards to get z_piezo,
// add Gaussian signal noise, and optionally distort with a hysteresis model.
// Deterministic for a given seed.
SyntheticExperiment generate_synthetic_experiment(const TheoryModel& theory,
                                                  const SyntheticSpec& spec,
                                                  std::uint64_t seed);

// ----- analysis pipeline ----------------------------------------------------

struct AnalysisResult {
  ForceCurve experiment_avg;  // averaged, electrostatic-subtracted
  ForceCurve theory;          // theory on the same grid
  ForceCurve residuals;       // theory - experiment
  PrecisionReport report;
};

// Calibrated-scan averaging, background subtraction and the sigma statistic.
// grid_points = 0 derives the point count from the first scan.
AnalysisResult analyze_experiment(const std::vector<ApproachScan>& casimir_scans,
                                  const HysteresisModel& hysteresis,
                                  double m_per_signal, double z0_m,
                                  double force_per_signal,
                                  const ElectrostaticConfig& residual_cfg,
                                  const TheoryModel& theory, int grid_points = 0);

}  // namespace casimir

#endif
