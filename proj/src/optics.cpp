#include "casimir/optics.hpp"

#include "casimir/quadrature.hpp"
#include "casimir/units.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace casimir {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  return out;
}

double parse_double(const std::string& s, int line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("dielectric CSV: bad number '" + s + "' on line " +
                      std::to_string(line_no));
  }
}

}  // namespace

DielectricTable DielectricTable::from_rows(std::vector<DielectricRow> rows,
                                           std::string source_label) {
  if (rows.size() < 2)
    throw ValidationError("dielectric table needs at least 2 rows, got " +
                          std::to_string(rows.size()));
  std::sort(rows.begin(), rows.end(),
            [](const DielectricRow& a, const DielectricRow& b) {
              return a.omega_ev < b.omega_ev;
            });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!(rows[i].omega_ev > 0) || !std::isfinite(rows[i].omega_ev))
      throw ValidationError("dielectric table: photon energies must be positive");
    if (rows[i].eps2 < 0 || !std::isfinite(rows[i].eps2))
      throw ValidationError("dielectric table: eps2 must be >= 0 (passive medium)");
    if (i > 0 && rows[i].omega_ev == rows[i - 1].omega_ev)
      throw ValidationError("dielectric table: duplicate energy " +
                            std::to_string(rows[i].omega_ev) + " eV");
  }

  DielectricTable t;
  t.rows_ = std::move(rows);
  t.label_ = std::move(source_label);
  t.log_omega_.reserve(t.rows_.size());
  t.log_eps2_.reserve(t.rows_.size());
  for (const auto& r : t.rows_) {
    t.log_omega_.push_back(std::log(r.omega_ev));
    t.log_eps2_.push_back(r.eps2 > 0 ? std::log(r.eps2)
                                     : std::numeric_limits<double>::quiet_NaN());
  }
  return t;
}

double DielectricTable::eps2_at(double omega_ev) const {
  if (omega_ev <= rows_.front().omega_ev) {
    return omega_ev == rows_.front().omega_ev ? rows_.front().eps2 : 0.0;
  }
  if (omega_ev >= rows_.back().omega_ev) {
    return omega_ev == rows_.back().omega_ev ? rows_.back().eps2 : 0.0;
  }
  const auto it = std::upper_bound(
      rows_.begin(), rows_.end(), omega_ev,
      [](double w, const DielectricRow& r) { return w < r.omega_ev; });
  const std::size_t i = static_cast<std::size_t>(it - rows_.begin()) - 1;

  const double e0 = rows_[i].eps2;
  const double e1 = rows_[i + 1].eps2;
  if (e0 > 0 && e1 > 0) {
    const double t = (std::log(omega_ev) - log_omega_[i]) /
                     (log_omega_[i + 1] - log_omega_[i]);
    return std::exp(log_eps2_[i] + t * (log_eps2_[i + 1] - log_eps2_[i]));
  }
  // zero endpoint: plain linear interpolation
  const double t = (omega_ev - rows_[i].omega_ev) /
                   (rows_[i + 1].omega_ev - rows_[i].omega_ev);
  return e0 + t * (e1 - e0);
}

DielectricTable load_dielectric_table(std::istream& in, std::string source_label) {
  std::vector<DielectricRow> rows;
  std::string line;
  int line_no = 0;
  enum class Layout { unknown, eps2, nk } layout = Layout::unknown;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split_csv(t);
    if (layout == Layout::unknown) {
      if (fields.size() == 2 && fields[0] == "energy_eV" && fields[1] == "eps2") {
        layout = Layout::eps2;
        continue;
      }
      if (fields.size() == 3 && fields[0] == "energy_eV" && fields[1] == "n" &&
          fields[2] == "k") {
        layout = Layout::nk;
        continue;
      }
      throw ConfigError(
          "dielectric CSV: expected header 'energy_eV,eps2' or 'energy_eV,n,k', "
          "got '" + t + "' on line " + std::to_string(line_no));
    }
    if (layout == Layout::eps2) {
      if (fields.size() != 2)
        throw ConfigError("dielectric CSV: expected 2 fields on line " +
                          std::to_string(line_no));
      rows.push_back({parse_double(fields[0], line_no), parse_double(fields[1], line_no)});
    } else {
      if (fields.size() != 3)
        throw ConfigError("dielectric CSV: expected 3 fields on line " +
                          std::to_string(line_no));
      const double n = parse_double(fields[1], line_no);
      const double k = parse_double(fields[2], line_no);
      rows.push_back({parse_double(fields[0], line_no), 2.0 * n * k});
    }
  }
  if (layout == Layout::unknown)
    throw ConfigError("dielectric CSV: missing header line");
  return DielectricTable::from_rows(std::move(rows), std::move(source_label));
}

DielectricTable load_dielectric_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dielectric file: " + path.string());
  return load_dielectric_table(in, path.filename().string());
}

void DrudeParams::validate() const {
  if (!(omega_p_ev > 0) || !(gamma_ev > 0))
    throw ValidationError("Drude parameters must be positive");
}

double drude_eps_imag_axis(const DrudeParams& p, double xi_ev) {
  p.validate();
  if (!(xi_ev > 0))
    throw ValidationError("drude_eps_imag_axis: xi must be > 0 (static limit is a pole)");
  return 1.0 + p.omega_p_ev * p.omega_p_ev / (xi_ev * xi_ev + p.gamma_ev * xi_ev);
}

double drude_eps2_real_axis(const DrudeParams& p, double omega_ev) {
  p.validate();
  if (!(omega_ev > 0)) throw ValidationError("drude_eps2_real_axis: omega must be > 0");
  return p.omega_p_ev * p.omega_p_ev * p.gamma_ev /
         (omega_ev * (omega_ev * omega_ev + p.gamma_ev * p.gamma_ev));
}

double kk_to_imaginary_axis(const DielectricTable& table,
                            const std::optional<DrudeParams>& drude,
                            double xi_ev, const KkOptions& opt) {
  if (!(xi_ev > 0)) throw ValidationError("kk_to_imaginary_axis: xi must be > 0");

  const double xi2 = xi_ev * xi_ev;
  quad::Options qopt{opt.rel_tol, 0.0, opt.max_panels};

  // Table range, substituted u = w/(w+xi) to concentrate nodes near w ~ xi.
  auto table_part = [&](const double* u, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      const double om = xi_ev * u[i] / (1.0 - u[i]);
      const double jac = xi_ev / ((1.0 - u[i]) * (1.0 - u[i]));
      out[i] = om * table.eps2_at(om) / (om * om + xi2) * jac;
    }
  };
  const double wa = table.min_energy_ev();
  const double wb = table.max_energy_ev();
  const double ua = wa / (wa + xi_ev);
  const double ub = wb / (wb + xi_ev);

  double integral = 0.0;
  if (ua < 0.5 && 0.5 < ub) {  // split at w == xi
    integral += quad::integrate(table_part, ua, 0.5, qopt).value;
    integral += quad::integrate(table_part, 0.5, ub, qopt).value;
  } else {
    integral += quad::integrate(table_part, ua, ub, qopt).value;
  }

  if (drude) {
    drude->validate();
    // Below-table Drude contribution; the integrand
    // wp^2 g / ((w^2 + g^2)(w^2 + xi^2)) is bounded at w = 0.
    const double wp2g = drude->omega_p_ev * drude->omega_p_ev * drude->gamma_ev;
    const double g2 = drude->gamma_ev * drude->gamma_ev;
    auto low_part = [&](double w) { return wp2g / ((w * w + g2) * (w * w + xi2)); };
    integral += quad::integrate_scalar(low_part, 0.0, wa, qopt).value;
  }

  const double eps = 1.0 + (2.0 / std::numbers::pi) * integral;
  return eps < 1.0 ? 1.0 : eps;  // tiny negative quadrature noise guard
}

void GridSpec::validate() const {
  if (!(xi_min_ev > 0) || !(xi_max_ev > xi_min_ev) || count < 16)
    throw ValidationError(
        "permittivity grid spec: need xi_min > 0, xi_max > xi_min, count >= 16");
}

ImagFreqPermittivity ImagFreqPermittivity::constant(double eps_value) {
  if (!(eps_value >= 1.0))
    throw ValidationError("constant permittivity must be >= 1");
  ImagFreqPermittivity p;
  p.constant_ = eps_value;
  return p;
}

ImagFreqPermittivity ImagFreqPermittivity::from_samples(
    std::vector<double> xi_grid_ev, std::vector<double> eps_values,
    ExtendFn extend, bool require_decreasing) {
  if (xi_grid_ev.size() != eps_values.size() || xi_grid_ev.size() < 2)
    throw ValidationError("permittivity samples: need matching arrays, >= 2 points");
  for (double e : eps_values)
    if (!(e >= 1.0) || !std::isfinite(e))
      throw ValidationError("permittivity samples must be finite and >= 1");
  if (require_decreasing) {
    for (std::size_t i = 1; i < eps_values.size(); ++i)
      if (!(eps_values[i] < eps_values[i - 1]))
        throw ValidationError(
            "permittivity samples must be strictly decreasing in xi");
  }

  ImagFreqPermittivity p;
  const double spread =
      *std::max_element(eps_values.begin(), eps_values.end()) -
      *std::min_element(eps_values.begin(), eps_values.end());
  if (spread == 0.0) {
    p.constant_ = eps_values.front();
    return p;
  }

  std::vector<double> lx(xi_grid_ev.size());
  for (std::size_t i = 0; i < xi_grid_ev.size(); ++i) {
    if (!(xi_grid_ev[i] > 0))
      throw ValidationError("permittivity grid: xi must be > 0");
    lx[i] = std::log(xi_grid_ev[i]);
  }

  p.log_values_ = std::all_of(eps_values.begin(), eps_values.end(),
                              [](double e) { return e > 1.0; });
  std::vector<double> ly(eps_values.size());
  for (std::size_t i = 0; i < eps_values.size(); ++i)
    ly[i] = p.log_values_ ? std::log(eps_values[i] - 1.0) : eps_values[i];

  p.interp_ = detail::Pchip(lx, ly);
  p.grid_ = std::move(xi_grid_ev);
  p.values_ = std::move(eps_values);
  p.extend_ = std::move(extend);
  return p;
}

double ImagFreqPermittivity::at_ev(double xi_ev) const {
  if (!(xi_ev > 0)) throw ValidationError("permittivity query: xi must be > 0");
  if (constant_) return *constant_;
  if (xi_ev < grid_.front() || xi_ev > grid_.back()) {
    if (extend_) return extend_(xi_ev);
    // fall through: shape-preserving endpoint extrapolation
  }
  const double y = interp_(std::log(xi_ev));
  return log_values_ ? 1.0 + std::exp(y) : y;
}

double ImagFreqPermittivity::at_angular(double omega_rad_per_s) const {
  return at_ev(omega_rad_per_s / units::ev_to_rad_per_s);
}

ImagFreqPermittivity build_permittivity(const DielectricTable& table,
                                        const std::optional<DrudeParams>& drude,
                                        const GridSpec& grid, const KkOptions& opt) {
  grid.validate();
  std::vector<double> xs(static_cast<std::size_t>(grid.count));
  std::vector<double> es(xs.size());
  const double lr = std::log(grid.xi_max_ev / grid.xi_min_ev);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(xs.size() - 1);
    xs[i] = grid.xi_min_ev * std::exp(f * lr);
    es[i] = kk_to_imaginary_axis(table, drude, xs[i], opt);
  }

  const bool nontrivial = es.front() > 1.0;
  auto extend = [table, drude, opt](double xi) {
    return kk_to_imaginary_axis(table, drude, xi, opt);
  };
  return ImagFreqPermittivity::from_samples(std::move(xs), std::move(es),
                                            std::move(extend), nontrivial);
}

}  // namespace casimir
