#ifndef CASIMIR_THEORY_HPP
#define CASIMIR_THEORY_HPP

#include "casimir/corrections.hpp"
#include "casimir/detail/pchip.hpp"
#include "casimir/lifshitz.hpp"

#include <optional>

namespace casimir {

// Complete theory force: Lifshitz sphere-plate force with the roughness and
// temperature multipliers from the geometry config. An optional log-log
// monotone-cubic cache serves the fitting and synthesis pipelines, which
// query the same smooth curve thousands of times.
class TheoryModel {
 public:
  TheoryModel(ImagFreqPermittivity perm, GeometryConfig geometry,
              LifshitzSettings settings = {});

  // Direct evaluation (one double quadrature per call).
  double force(double z_m) const;

  // Sample `points` log-spaced separations and interpolate between them.
  void build_cache(double z_min_m, double z_max_m, int points = 280);
  bool has_cache() const { return cache_.has_value() || zero_force_; }

  // Cached evaluation; falls back to direct evaluation outside the cache.
  double force_cached(double z_m) const;

  const GeometryConfig& geometry() const { return geometry_; }
  const LifshitzSettings& settings() const { return settings_; }
  const ImagFreqPermittivity& permittivity() const { return perm_; }

 private:
  ImagFreqPermittivity perm_;
  GeometryConfig geometry_;
  LifshitzSettings settings_;
  std::optional<detail::Pchip> cache_;  // (ln z, ln(-F))
  bool zero_force_ = false;
  double cache_lo_ = 0.0, cache_hi_ = 0.0;
};

}  // namespace casimir

#endif
