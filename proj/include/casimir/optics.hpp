#ifndef CASIMIR_OPTICS_HPP
#define CASIMIR_OPTICS_HPP

#include "casimir/detail/pchip.hpp"
#include "casimir/errors.hpp"

#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace casimir {

struct DielectricRow {
  double omega_ev;  // photon energy
  double eps2;      // imaginary part of the permittivity at that energy
};

// Tabulated eps''(omega). Rows are kept sorted strictly increasing in energy;
// between rows eps'' is interpolated linearly in log-log (linear fallback when
// a zero value makes the log undefined); outside the table it is zero.
class DielectricTable {
 public:
  static DielectricTable from_rows(std::vector<DielectricRow> rows,
                                   std::string source_label);

  double eps2_at(double omega_ev) const;
  double min_energy_ev() const { return rows_.front().omega_ev; }
  double max_energy_ev() const { return rows_.back().omega_ev; }
  const std::vector<DielectricRow>& rows() const { return rows_; }
  const std::string& source_label() const { return label_; }

 private:
  std::vector<DielectricRow> rows_;
  std::vector<double> log_omega_;
  std::vector<double> log_eps2_;  // NaN where eps2 == 0
  std::string label_;
};

// CSV format: header `energy_eV,eps2` or `energy_eV,n,k`; '#' comment lines
// skipped; for n,k input eps2 = 2 n k row-wise.
DielectricTable load_dielectric_table(std::istream& in, std::string source_label);
DielectricTable load_dielectric_table(const std::filesystem::path& path);

struct DrudeParams {
  double omega_p_ev = 11.5;  // plasma frequency
  double gamma_ev = 0.05;    // relaxation frequency

  void validate() const;
  // gamma < omega_p is the physical metal regime; callers may warn otherwise.
  bool physical_metal_regime() const { return gamma_ev < omega_p_ev; }
};

// eps(i xi) = 1 + omega_p^2 / (xi^2 + gamma xi), xi in eV. xi must be > 0.
double drude_eps_imag_axis(const DrudeParams& p, double xi_ev);

// Real-axis absorption of the Drude model: eps''(w) = wp^2 g / (w (w^2 + g^2)).
double drude_eps2_real_axis(const DrudeParams& p, double omega_ev);

struct KkOptions {
  double rel_tol = 1e-8;
  int max_panels = 4000;
};

// eps(i xi) = 1 + (2/pi) Int_0^inf w eps''(w) / (w^2 + xi^2) dw, with eps''
// taken from the table over its range, from the analytic Drude form below the
// table's lowest energy (when drude is provided), and zero above the table.
double kk_to_imaginary_axis(const DielectricTable& table,
                            const std::optional<DrudeParams>& drude,
                            double xi_ev, const KkOptions& opt = {});

struct GridSpec {
  double xi_min_ev = 1e-4;
  double xi_max_ev = 1e4;
  int count = 200;

  void validate() const;
};

// Sampled eps(i xi) on a log grid with monotone-cubic log-log interpolation.
// Queries outside the grid fall through to the extension function (the direct
// transform the cache was built from).
class ImagFreqPermittivity {
 public:
  using ExtendFn = std::function<double(double)>;

  static ImagFreqPermittivity constant(double eps_value);
  static ImagFreqPermittivity from_samples(std::vector<double> xi_grid_ev,
                                           std::vector<double> eps_values,
                                           ExtendFn extend,
                                           bool require_decreasing);

  double at_ev(double xi_ev) const;
  double at_angular(double omega_rad_per_s) const;

  bool is_constant() const { return constant_.has_value(); }
  const std::vector<double>& grid_ev() const { return grid_; }
  const std::vector<double>& values() const { return values_; }

 private:
  ImagFreqPermittivity() = default;

  std::optional<double> constant_;
  std::vector<double> grid_;
  std::vector<double> values_;
  detail::Pchip interp_;   // on (ln xi, ln(eps-1)), or (ln xi, eps) fallback
  bool log_values_ = true;
  ExtendFn extend_;
};

ImagFreqPermittivity build_permittivity(const DielectricTable& table,
                                        const std::optional<DrudeParams>& drude,
                                        const GridSpec& grid,
                                        const KkOptions& opt = {});

}  // namespace casimir

#endif
