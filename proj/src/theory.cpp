#include "casimir/theory.hpp"

#include <cmath>
#include <vector>

namespace casimir {

TheoryModel::TheoryModel(ImagFreqPermittivity perm, GeometryConfig geometry,
                         LifshitzSettings settings)
    : perm_(std::move(perm)), geometry_(geometry), settings_(settings) {
  geometry_.validate();
  settings_.validate();
}

double TheoryModel::force(double z_m) const {
  const double base =
      lifshitz_sphere_force(perm_, geometry_.sphere_radius_m, z_m, settings_).force_N;
  return corrected_force(base, geometry_.roughness_m, geometry_.temperature_K, z_m);
}

void TheoryModel::build_cache(double z_min_m, double z_max_m, int points) {
  if (!(z_min_m > 0) || !(z_max_m > z_min_m) || points < 16)
    throw ValidationError("theory cache: need 0 < z_min < z_max and >= 16 points");

  std::vector<double> lx(static_cast<std::size_t>(points));
  std::vector<double> ly(lx.size());
  const double lr = std::log(z_max_m / z_min_m);
  bool all_zero = true;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double z =
        z_min_m * std::exp(lr * static_cast<double>(i) / static_cast<double>(points - 1));
    const double f = force(z);
    if (f != 0.0) all_zero = false;
    if (!(f < 0.0) && f != 0.0)
      throw NumericError("theory cache: non-attractive force at z = " + std::to_string(z));
    lx[i] = std::log(z);
    ly[i] = f == 0.0 ? 0.0 : std::log(-f);
  }
  if (all_zero) {
    zero_force_ = true;
    cache_.reset();
  } else {
    cache_ = detail::Pchip(lx, ly);
  }
  cache_lo_ = z_min_m;
  cache_hi_ = z_max_m;
}

double TheoryModel::force_cached(double z_m) const {
  if (zero_force_) return 0.0;
  if (cache_ && z_m >= cache_lo_ && z_m <= cache_hi_)
    return -std::exp((*cache_)(std::log(z_m)));
  return force(z_m);
}

}  // namespace casimir
