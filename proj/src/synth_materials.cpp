#include "casimir/synth_materials.hpp"

#include <cmath>
#include <vector>

namespace casimir {

void MaterialRecipe::validate() const {
  switch (kind) {
    case Kind::drude:
      drude.validate();
      return;
    case Kind::constant:
      if (!(eps_const >= 1.0))
        throw ConfigError("constant material recipe requires eps >= 1");
      return;
    case Kind::perfect_conductor_proxy:
      if (!(proxy_eps >= 1e6))
        throw ConfigError("perfect-conductor proxy requires eps >= 1e6");
      return;
  }
  throw ConfigError("unknown material recipe kind");
}

MaterialRecipe MaterialRecipe::make_drude(double omega_p_ev, double gamma_ev) {
  MaterialRecipe r;
  r.kind = Kind::drude;
  r.drude = DrudeParams{omega_p_ev, gamma_ev};
  r.validate();
  return r;
}

MaterialRecipe MaterialRecipe::make_constant(double eps) {
  MaterialRecipe r;
  r.kind = Kind::constant;
  r.eps_const = eps;
  r.validate();
  return r;
}

MaterialRecipe MaterialRecipe::make_proxy(double eps) {
  MaterialRecipe r;
  r.kind = Kind::perfect_conductor_proxy;
  r.proxy_eps = eps;
  r.validate();
  return r;
}

DielectricTable synthesize_table(const MaterialRecipe& recipe, const GridSpec& grid) {
  recipe.validate();
  grid.validate();
  if (recipe.kind != MaterialRecipe::Kind::drude)
    throw ConfigError(
        "synthesize_table: only the drude recipe has a real-axis absorption table");

  std::vector<DielectricRow> rows;
  rows.reserve(static_cast<std::size_t>(grid.count));
  const double lr = std::log(grid.xi_max_ev / grid.xi_min_ev);
  for (int i = 0; i < grid.count; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(grid.count - 1);
    const double w = grid.xi_min_ev * std::exp(f * lr);
    rows.push_back({w, drude_eps2_real_axis(recipe.drude, w)});
  }
  return DielectricTable::from_rows(std::move(rows), "synthetic drude");
}

ImagFreqPermittivity make_permittivity(const MaterialRecipe& recipe,
                                       const GridSpec& grid) {
  recipe.validate();
  switch (recipe.kind) {
    case MaterialRecipe::Kind::constant:
      return ImagFreqPermittivity::constant(recipe.eps_const);
    case MaterialRecipe::Kind::perfect_conductor_proxy:
      return ImagFreqPermittivity::constant(recipe.proxy_eps);
    case MaterialRecipe::Kind::drude:
      break;
  }
  grid.validate();
  const DrudeParams d = recipe.drude;
  std::vector<double> xs(static_cast<std::size_t>(grid.count));
  std::vector<double> es(xs.size());
  const double lr = std::log(grid.xi_max_ev / grid.xi_min_ev);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(xs.size() - 1);
    xs[i] = grid.xi_min_ev * std::exp(f * lr);
    es[i] = drude_eps_imag_axis(d, xs[i]);
  }
  auto extend = [d](double xi) { return drude_eps_imag_axis(d, xi); };
  return ImagFreqPermittivity::from_samples(std::move(xs), std::move(es),
                                            std::move(extend), true);
}

}  // namespace casimir
