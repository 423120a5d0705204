#ifndef CASIMIR_SYNTH_MATERIALS_HPP
#define CASIMIR_SYNTH_MATERIALS_HPP

#include "casimir/optics.hpp"

namespace casimir {

// Analytic material generators used as test oracles for the Lifshitz engine.
struct MaterialRecipe {
  enum class Kind { drude, constant, perfect_conductor_proxy };

  Kind kind = Kind::drude;
  DrudeParams drude{};          // drude
  double eps_const = 1.0;       // constant (>= 1)
  double proxy_eps = 1e8;       // perfect-conductor proxy (>= 1e6)

  void validate() const;

  static MaterialRecipe make_drude(double omega_p_ev, double gamma_ev);
  static MaterialRecipe make_constant(double eps);
  static MaterialRecipe make_proxy(double eps = 1e8);
};

// Real-axis absorption table for recipes that have one (drude). Constant and
// proxy recipes have no absorption spectrum; asking for a table is an error.
DielectricTable synthesize_table(const MaterialRecipe& recipe, const GridSpec& grid);

// Permittivity cache for any recipe. Drude samples its closed form directly
// (bypassing the KK transform); constant/proxy produce constant caches.
ImagFreqPermittivity make_permittivity(const MaterialRecipe& recipe,
                                       const GridSpec& grid = {});

}  // namespace casimir

#endif
